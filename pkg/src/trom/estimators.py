"""Scikit-learn style facade over the compression and reduced-basis pipeline.

Estimator parameters are configuration only; ``fit`` consumes the snapshot
tensor (plus the parameter sampling for the tensor formats) and stores
results in trailing-underscore attributes. ``transform`` maps parameter
queries to local reduced-basis coordinates; ``predict`` runs the projected
time stepper and lifts the result.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .decomp import cp_als, cp_rank_sweep, hosvd, tt_svd
from .dynsys import (
    Trajectory,
    crank_nicolson,
    project_local,
    project_universal,
)
from .errors import InvalidInput
from .rom import (
    UniversalBasis,
    local_basis,
    offline_cp,
    offline_hosvd,
    offline_tt,
    pod_basis,
)
from .sampling import CartesianGrid, general_vector, lagrange_vectors, load_sampling
from .tensor import unfold
from .validation import check_alpha_array, check_positive, check_tensor

__all__ = ["CpTrom", "HosvdTrom", "TtTrom", "PodRom"]


class _TensorRomBase(BaseEstimator):
    """Shared fit/query machinery; subclasses supply the compression step."""

    def __init__(self, eps=1e-6, n=None, p=2, q=None):
        self.eps = eps
        self.n = n
        self.p = p
        self.q = q

    def _compress(self, phi):  # pragma: no cover - abstract
        raise NotImplementedError

    def fit(self, X, y=None, sampling=None):
        """Compress the snapshot tensor and split off the online payload.

        ``X`` is the snapshot tensor (space first, time last, one mode per
        parameter axis in between, or a single sample mode). ``sampling`` is
        the grid or scattered sample set the parameter modes refer to; it may
        be a sampling object, a dict, or a JSON path.
        """
        phi = check_tensor(X, min_order=3)
        if sampling is None:
            raise InvalidInput("tensor reduced models need the parameter sampling")
        if isinstance(sampling, (str, dict)) or hasattr(sampling, "read"):
            sampling = load_sampling(sampling)
        expected = (
            sampling.axis_sizes
            if isinstance(sampling, CartesianGrid)
            else (sampling.size,)
        )
        if phi.dims[1:-1] != tuple(expected):
            raise InvalidInput(
                f"parameter modes {phi.dims[1:-1]} do not match sampling {tuple(expected)}"
            )
        decomposition = self._compress(phi)
        basis, payload = self._offline(decomposition)
        self.sampling_ = sampling
        self.decomposition_ = decomposition
        self.basis_ = basis
        self.payload_ = payload
        self.rel_error_ = decomposition.rel_error
        self.n_time_ = phi.dims[-1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "payload_"):
            raise NotFittedError(
                f"{type(self).__name__} is not fitted; call fit first"
            )

    def _vectors(self, alpha):
        if isinstance(self.sampling_, CartesianGrid):
            return lagrange_vectors(self.sampling_, alpha, self.p)
        q = self.q
        if q is None:
            q = min(self.sampling_.size, 2 * (self.sampling_.box.dimension + 1))
        return general_vector(self.sampling_, alpha, q)

    def _budget(self):
        return self.n if self.n is not None else self.basis_.reduced_dim

    def local_basis(self, alpha, n=None):
        """Parameter-specific reduced basis coordinates for one query."""
        self._check_fitted()
        e = self._vectors(np.asarray(alpha, dtype=np.float64))
        return local_basis(self.payload_, e, int(n if n is not None else self._budget()))

    def transform(self, alphas):
        """Stack local-basis coordinate matrices, one per parameter row."""
        self._check_fitted()
        a = check_alpha_array(alphas, self.sampling_.box.dimension)
        n = int(self._budget())
        out = np.empty((a.shape[0], self.basis_.reduced_dim, n))
        for i, alpha in enumerate(a):
            out[i] = self.local_basis(alpha, n).coords
        return out

    def fit_transform(self, X, y=None, alphas=None, sampling=None):
        self.fit(X, y=y, sampling=sampling)
        if alphas is None:
            raise InvalidInput("fit_transform needs the parameter queries")
        return self.transform(alphas)

    def predict(self, alphas, family, dt, n_steps):
        """Two-stage reduced solve at each parameter, lifted to full space."""
        self._check_fitted()
        a = check_alpha_array(alphas, self.sampling_.box.dimension)
        dt = check_positive(dt, "dt")
        n_steps = check_positive(n_steps, "n_steps", integer=True)
        rs = project_universal(family, self.basis_)
        out = []
        for alpha in a:
            lb = self.local_basis(alpha)
            rs_loc = project_local(rs, lb)
            red = crank_nicolson(rs_loc.system, alpha, dt, n_steps)
            out.append(Trajectory(red.times, rs_loc.lifting @ red.states))
        return out


class CpTrom(_TensorRomBase):
    """Canonical-format tensor reduced model.

    ``rank`` fixes the number of terms directly; otherwise ranks are swept
    until the fit reaches ``eps`` or ``max_rank`` is hit.
    """

    def __init__(self, eps=1e-6, n=None, p=2, q=None, rank=None,
                 max_rank=None, restarts=1, random_state=None):
        super().__init__(eps=eps, n=n, p=p, q=q)
        self.rank = rank
        self.max_rank = max_rank
        self.restarts = restarts
        self.random_state = random_state

    def _compress(self, phi):
        if self.rank is not None:
            return cp_als(phi, int(self.rank), restarts=self.restarts,
                          random_state=self.random_state)
        return cp_rank_sweep(phi, self.eps, max_rank=self.max_rank,
                             restarts=self.restarts,
                             random_state=self.random_state)

    _offline = staticmethod(offline_cp)


class HosvdTrom(_TensorRomBase):
    """Tucker-format tensor reduced model (accuracy-driven truncation)."""

    _offline = staticmethod(offline_hosvd)

    def _compress(self, phi):
        return hosvd(phi, eps=self.eps)


class TtTrom(_TensorRomBase):
    """Tensor-train-format tensor reduced model."""

    _offline = staticmethod(offline_tt)

    def _compress(self, phi):
        return tt_svd(phi, self.eps)


class PodRom(BaseEstimator):
    """Single-basis POD baseline.

    One global basis from the first-mode unfolding; ``transform`` projects
    state columns to reduced coordinates, ``predict`` solves the projected
    system at given parameters.
    """

    def __init__(self, n=10):
        self.n = n

    def fit(self, X, y=None, sampling=None):
        phi = check_tensor(X, min_order=2)
        n = check_positive(self.n, "n", integer=True)
        self.basis_ = UniversalBasis(u=pod_basis(phi, n), source_format="pod")
        self.singular_values_ = np.linalg.svd(
            unfold(phi, 0), compute_uv=False
        )
        return self

    def _check_fitted(self):
        if not hasattr(self, "basis_"):
            raise NotFittedError("PodRom is not fitted; call fit first")

    def transform(self, states):
        self._check_fitted()
        s = np.asarray(states, dtype=np.float64)
        return self.basis_.u.T @ s

    def inverse_transform(self, coords):
        self._check_fitted()
        return self.basis_.u @ np.asarray(coords, dtype=np.float64)

    def predict(self, alphas, family, dt, n_steps):
        self._check_fitted()
        a = np.atleast_2d(np.asarray(alphas, dtype=np.float64))
        rs = project_universal(family, self.basis_)
        out = []
        for alpha in a:
            red = crank_nicolson(rs.system, alpha, float(dt), int(n_steps))
            out.append(Trajectory(red.times, rs.lifting @ red.states))
        return out
