"""Tensor compressors: CP via alternating least squares, Tucker via
successively truncated SVDs of unfoldings, tensor train via TT-SVD.

All three produce a compressed approximation of a snapshot tensor whose
first mode is space and last mode is time; modes are processed in that
order (space, then parameters, then time).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.linalg import khatri_rao

from .errors import (
    AlsDiverged,
    DimensionMismatch,
    InvalidInput,
    InvalidRank,
    InvalidTolerance,
    OverflowRisk,
)
from .tensor import DenseTensor, frobenius_norm, refold, unfold

__all__ = [
    "CpDecomposition",
    "TuckerDecomposition",
    "TtDecomposition",
    "cp_als",
    "cp_rank_sweep",
    "cp_from_slices",
    "hosvd",
    "tt_svd",
    "reconstruct",
]

# Dense materialization guard for reconstruct().
MAX_DENSE_ELEMENTS = 1 << 27


@dataclass(frozen=True)
class CpDecomposition:
    """Sum of rank-one terms: columns r of the factors form term r."""

    u_factors: np.ndarray               # M x R (space mode)
    sigma_factors: list                 # per parameter axis, n_i x R
    v_factors: np.ndarray               # N x R (time mode)
    rel_error: float = np.nan           # achieved relative fit error

    def __post_init__(self):
        r = self.u_factors.shape[1]
        for f in [self.u_factors, *self.sigma_factors, self.v_factors]:
            if f.ndim != 2 or f.shape[1] != r:
                raise DimensionMismatch("all CP factors need the same column count")
            if not np.all(np.isfinite(f)):
                raise InvalidInput("CP factor entries must be finite")

    @property
    def rank(self) -> int:
        return self.u_factors.shape[1]

    @property
    def dims(self) -> tuple:
        return (
            self.u_factors.shape[0],
            *(s.shape[0] for s in self.sigma_factors),
            self.v_factors.shape[0],
        )

    @property
    def factors(self) -> list:
        return [self.u_factors, *self.sigma_factors, self.v_factors]


@dataclass(frozen=True)
class TuckerDecomposition:
    """Core tensor with an orthonormal factor per mode.

    The parameter-axis factors are kept row-orthonormal (shape rank x axis
    size) so that applying them to an interpolation vector lands directly in
    core coordinates.
    """

    core: DenseTensor                   # (M~, n~_1..n~_D, N~)
    u: np.ndarray                       # M x M~
    s_factors: list                     # per parameter axis, n~_i x n_i
    v: np.ndarray                       # N x N~
    rel_error: float = np.nan
    mode_residuals: tuple = field(default=())   # per-mode truncation tails

    def __post_init__(self):
        expected = (
            self.u.shape[1],
            *(s.shape[0] for s in self.s_factors),
            self.v.shape[1],
        )
        if self.core.dims != expected:
            raise DimensionMismatch(
                f"core dims {self.core.dims} do not match factor ranks {expected}"
            )

    @property
    def ranks(self) -> tuple:
        return self.core.dims

    @property
    def dims(self) -> tuple:
        return (
            self.u.shape[0],
            *(s.shape[1] for s in self.s_factors),
            self.v.shape[0],
        )


@dataclass(frozen=True)
class TtDecomposition:
    """Tensor train with an orthonormal leading factor.

    ``carriages[i]`` has shape (r_i, n_i, r_{i+1}). The trailing factor v has
    mutually orthogonal but not unit columns; their norms are ``w_scale``.
    """

    u: np.ndarray                       # M x r_1
    carriages: list                     # per parameter axis, order-3 DenseTensor
    v: np.ndarray                       # N x r_{D+1}
    w_scale: np.ndarray                 # length r_{D+1}, positive
    rel_error: float = np.nan
    mode_residuals: tuple = field(default=())

    def __post_init__(self):
        chain = self.u.shape[1]
        for c in self.carriages:
            if c.order != 3:
                raise DimensionMismatch("carriages must be order-3 tensors")
            if c.dims[0] != chain:
                raise DimensionMismatch("carriage chain ranks do not line up")
            chain = c.dims[2]
        if self.v.shape[1] != chain:
            raise DimensionMismatch("trailing factor does not close the chain")
        if self.w_scale.shape != (chain,) or np.any(self.w_scale <= 0):
            raise InvalidInput("w_scale must be positive, one entry per chain rank")

    @property
    def ranks(self) -> tuple:
        return (self.u.shape[1], *(c.dims[2] for c in self.carriages))

    @property
    def dims(self) -> tuple:
        return (
            self.u.shape[0],
            *(c.dims[1] for c in self.carriages),
            self.v.shape[0],
        )


# -- CP / alternating least squares -------------------------------------------

def _khatri_rao_skip(factors, skip):
    picked = [f for j, f in enumerate(factors) if j != skip]
    return reduce(khatri_rao, picked)


def _cp_fit_pieces(phi_last_unfold, factors):
    """Squared fit via Gram identities, reusing the last-mode solve products."""
    last = len(factors) - 1
    kr = _khatri_rao_skip(factors, last)
    cross = phi_last_unfold @ kr
    gram = np.ones((factors[0].shape[1],) * 2)
    for j in range(last):
        gram *= factors[j].T @ factors[j]
    model_sq = float(np.sum((factors[last].T @ factors[last]) * gram))
    inner = float(np.sum(factors[last] * cross))
    return model_sq, inner


def cp_als(
    phi: DenseTensor,
    rank: int,
    max_sweeps: int = 200,
    rel_change_tol: float = 1e-10,
    restarts: int = 1,
    random_state=None,
) -> CpDecomposition:
    """Fit a rank-``rank`` CP decomposition by alternating least squares.

    Runs ``restarts`` independent Gaussian initializations and keeps the best
    fit. There is no accuracy mode: the achievable error is only known after
    the fact, so callers wanting a target error sweep ranks (see
    :func:`cp_rank_sweep`).

    Parameters
    ----------
    phi : DenseTensor
        Tensor of order >= 2; first mode is space, last mode is time.
    rank : int
        Number of rank-one terms; must not exceed the first-mode size.
    max_sweeps : int
        Per-restart cap on full update sweeps.
    rel_change_tol : float
        Stop when the relative fit error changes less than this between
        sweeps.
    restarts : int
        Number of random initializations.
    random_state : int or numpy Generator, optional
        Seed for reproducible initializations.

    Returns
    -------
    CpDecomposition
        Best factors found; ``rel_error`` carries the achieved relative fit.
    """
    if rank < 1:
        raise InvalidRank("rank must be >= 1")
    if rank > phi.dims[0]:
        raise InvalidRank(
            f"rank {rank} exceeds first-mode size {phi.dims[0]}"
        )
    if phi.order < 2:
        raise InvalidRank("CP needs at least two modes")
    if restarts < 1:
        raise InvalidInput("restarts must be >= 1")
    rng = np.random.default_rng(random_state)
    norm_phi = frobenius_norm(phi)
    if norm_phi == 0.0:
        zero = [np.zeros((d, rank)) for d in phi.dims]
        return CpDecomposition(zero[0], zero[1:-1], zero[-1], rel_error=0.0)

    m = phi.order
    unfoldings = [unfold(phi, k) for k in range(m)]
    best = None
    diverged = 0
    for _ in range(restarts):
        factors = [rng.standard_normal((d, rank)) for d in phi.dims]
        prev_err = np.inf
        err = np.inf
        try:
            for _sweep in range(max_sweeps):
                for k in range(m):
                    gram = np.ones((rank, rank))
                    for j in range(m):
                        if j != k:
                            gram *= factors[j].T @ factors[j]
                    kr = _khatri_rao_skip(factors, k)
                    sol = unfoldings[k] @ kr @ np.linalg.pinv(gram)
                    if not np.all(np.isfinite(sol)):
                        raise AlsDiverged("non-finite factor update")
                    factors[k] = sol
                # absorb column norms into the time factor to stop drift
                scale = np.ones(rank)
                for k in range(m - 1):
                    norms = np.linalg.norm(factors[k], axis=0)
                    norms[norms == 0] = 1.0
                    factors[k] = factors[k] / norms
                    scale *= norms
                factors[-1] = factors[-1] * scale
                model_sq, inner = _cp_fit_pieces(unfoldings[-1], factors)
                err_sq = max(norm_phi**2 - 2.0 * inner + model_sq, 0.0)
                err = np.sqrt(err_sq) / norm_phi
                if abs(prev_err - err) < rel_change_tol:
                    break
                prev_err = err
        except AlsDiverged:
            diverged += 1
            continue
        if best is None or err < best[0]:
            best = (err, factors)
    if best is None:
        raise AlsDiverged(f"all {diverged} restarts produced non-finite factors")
    err, factors = best
    return CpDecomposition(
        u_factors=factors[0],
        sigma_factors=factors[1:-1],
        v_factors=factors[-1],
        rel_error=float(err),
    )


def cp_rank_sweep(
    phi: DenseTensor,
    eps: float,
    max_rank: int | None = None,
    rank_step: int = 1,
    random_state=None,
    **als_options,
) -> CpDecomposition:
    """Increase the CP rank until the relative fit error drops to ``eps``.

    Returns the first decomposition meeting the target, or the best one found
    if the rank budget runs out.
    """
    if eps <= 0:
        raise InvalidTolerance("eps must be > 0")
    cap = phi.dims[0] if max_rank is None else min(max_rank, phi.dims[0])
    best = None
    for r in range(1, cap + 1, rank_step):
        d = cp_als(phi, rank=r, random_state=random_state, **als_options)
        if best is None or d.rel_error < best.rel_error:
            best = d
        if best.rel_error <= eps:
            return best
    return best


def cp_from_slices(phi: DenseTensor, sv_cutoff: float = 1e-15) -> CpDecomposition:
    """Exact CP decomposition of an order-3 tensor by per-slice SVD.

    Each middle-mode slice contributes its SVD triples as rank-one terms with
    an indicator middle factor, so the result reproduces the tensor to
    rounding error. Useful when a certified near-exact CP form is needed and
    ALS cannot promise one.
    """
    if phi.order != 3:
        raise DimensionMismatch("slice construction applies to order-3 tensors")
    m_dim, k_dim, n_dim = phi.dims
    us, ss, vs = [], [], []
    for j in range(k_dim):
        u, s, vt = np.linalg.svd(phi.array[:, j, :], full_matrices=False)
        keep = s > (sv_cutoff * s[0] if s[0] > 0 else np.inf)
        for i in np.flatnonzero(keep):
            us.append(u[:, i] * s[i])
            e = np.zeros(k_dim)
            e[j] = 1.0
            ss.append(e)
            vs.append(vt[i, :])
    if not us:
        return CpDecomposition(
            np.zeros((m_dim, 1)), [np.zeros((k_dim, 1))], np.zeros((n_dim, 1)),
            rel_error=0.0,
        )
    if len(us) > m_dim:
        raise InvalidRank(
            f"slice construction needs rank {len(us)} > first-mode size {m_dim}"
        )
    d = CpDecomposition(
        u_factors=np.column_stack(us),
        sigma_factors=[np.column_stack(ss)],
        v_factors=np.column_stack(vs),
    )
    err = frobenius_norm(
        DenseTensor(reconstruct(d).array - phi.array)
    ) / max(frobenius_norm(phi), 1e-300)
    object.__setattr__(d, "rel_error", float(err))
    return d


# -- Tucker / successively truncated SVDs --------------------------------------

def hosvd(
    phi: DenseTensor,
    eps: float | None = None,
    ranks=None,
) -> TuckerDecomposition:
    """Tucker decomposition by successive truncated SVDs of unfoldings.

    Exactly one of ``eps`` and ``ranks`` must be given. Accuracy mode
    truncates each mode at threshold ``eps * ||phi|| / sqrt(order)``, which
    guarantees a total relative error of at most ``eps``; the recorded
    per-mode residuals also bound the error by sqrt of their squared sum.

    Parameters
    ----------
    phi : DenseTensor
        Tensor of order >= 2.
    eps : float, optional
        Relative Frobenius accuracy target (> 0).
    ranks : sequence of int, optional
        Prescribed rank per mode, each within [1, mode size].
    """
    if (eps is None) == (ranks is None):
        raise InvalidInput("pass exactly one of eps= or ranks=")
    m = phi.order
    if eps is not None and eps <= 0:
        raise InvalidTolerance("eps must be > 0")
    if ranks is not None:
        ranks = tuple(int(r) for r in ranks)
        if len(ranks) != m:
            raise InvalidRank(f"need {m} ranks, got {len(ranks)}")
        for r, d in zip(ranks, phi.dims):
            if not 1 <= r <= d:
                raise InvalidRank(f"rank {r} outside [1, {d}]")
    norm_phi = frobenius_norm(phi)
    per_mode_tol = None if eps is None else eps * norm_phi / np.sqrt(m)

    current = phi
    factors = []
    residuals = []
    for k in range(m):
        mat = unfold(current, k)
        u, s, _ = np.linalg.svd(mat, full_matrices=False)
        if ranks is not None:
            r = min(ranks[k], s.shape[0])
        else:
            tail = np.concatenate([np.cumsum((s**2)[::-1])[::-1], [0.0]])
            r = int(np.searchsorted(-tail, -(per_mode_tol**2) * (1 + 1e-15)))
            r = max(r, 1)
        residuals.append(float(np.sqrt(np.sum(s[r:] ** 2))))
        uk = u[:, :r]
        # deterministic orientation, as in truncated_svd
        for j in range(uk.shape[1]):
            i = int(np.argmax(np.abs(uk[:, j])))
            if uk[i, j] < 0:
                uk[:, j] = -uk[:, j]
        factors.append(uk)
        done = tuple(f.shape[1] for f in factors)
        current = refold(uk.T @ mat, k, done + current.dims[k + 1:])
    achieved = np.sqrt(np.sum(np.square(residuals)))
    rel = achieved / norm_phi if norm_phi > 0 else 0.0
    return TuckerDecomposition(
        core=current,
        u=factors[0],
        s_factors=[f.T.copy() for f in factors[1:-1]],
        v=factors[-1],
        rel_error=float(rel),
        mode_residuals=tuple(residuals),
    )


# -- tensor train --------------------------------------------------------------

def tt_svd(phi: DenseTensor, eps: float) -> TtDecomposition:
    """Tensor-train decomposition with prescribed relative accuracy.

    Sweeps left to right, splitting off one mode per truncated SVD at
    threshold ``eps * ||phi|| / sqrt(order - 1)``. The leading factor has
    orthonormal columns; the trailing factor's columns are mutually
    orthogonal with norms returned in ``w_scale``.
    """
    if eps <= 0:
        raise InvalidTolerance("eps must be > 0")
    if phi.order < 3:
        raise DimensionMismatch("tensor train needs order >= 3")
    m = phi.order
    dims = phi.dims
    norm_phi = frobenius_norm(phi)
    if norm_phi == 0.0:
        raise InvalidInput("cannot train-decompose the zero tensor")
    tol = eps * norm_phi / np.sqrt(m - 1)

    residuals = []
    pieces = []
    rank_prev = 1
    remainder = phi.array.reshape(dims[0], -1)
    for k in range(m - 1):
        rows = rank_prev * dims[k] if k > 0 else dims[0]
        mat = remainder.reshape(rows, -1)
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
        tail = np.concatenate([np.cumsum((s**2)[::-1])[::-1], [0.0]])
        r = int(np.searchsorted(-tail, -(tol**2) * (1 + 1e-15)))
        r = max(r, 1)
        residuals.append(float(np.sqrt(np.sum(s[r:] ** 2))))
        pieces.append((u[:, :r], rank_prev))
        remainder = s[:r, None] * vt[:r, :]
        rank_prev = r

    u0, _ = pieces[0]
    carriages = []
    for k in range(1, m - 1):
        uk, rk = pieces[k]
        carriages.append(DenseTensor(uk.reshape(rk, dims[k], uk.shape[1])))
    # remainder is r_{D+1} x N with orthogonal rows scaled by the last
    # singular values
    v = remainder.T.copy()
    w = np.linalg.norm(v, axis=0)
    achieved = np.sqrt(np.sum(np.square(residuals)))
    return TtDecomposition(
        u=u0,
        carriages=carriages,
        v=v,
        w_scale=w,
        rel_error=float(achieved / norm_phi),
        mode_residuals=tuple(residuals),
    )


# -- dense reconstruction -------------------------------------------------------

def reconstruct(d, max_elements: int = MAX_DENSE_ELEMENTS) -> DenseTensor:
    """Materialize the dense tensor a decomposition represents.

    Intended for testing and small problems; refuses to allocate more than
    ``max_elements`` entries.
    """
    dims = d.dims
    count = int(np.prod(dims, dtype=np.int64))
    if count > max_elements:
        raise OverflowRisk(f"{count} elements exceed the cap {max_elements}")
    if isinstance(d, CpDecomposition):
        kr = reduce(khatri_rao, d.factors[1:])
        return DenseTensor((d.factors[0] @ kr.T).reshape(dims))
    if isinstance(d, TuckerDecomposition):
        out = d.core.array
        out = np.tensordot(d.u, out, axes=([1], [0]))
        for i, s in enumerate(d.s_factors):
            out = np.moveaxis(np.tensordot(s.T, out, axes=([1], [i + 1])), 0, i + 1)
        out = np.moveaxis(np.tensordot(d.v, out, axes=([1], [d.core.order - 1])), 0, -1)
        return DenseTensor(out)
    if isinstance(d, TtDecomposition):
        cur = d.u
        for c in d.carriages:
            r_in, n, r_out = c.dims
            cur = cur.reshape(-1, r_in) @ c.array.reshape(r_in, n * r_out)
            cur = cur.reshape(-1, r_out)
        return DenseTensor((cur @ d.v.T).reshape(dims))
    raise InvalidInput(f"not a decomposition: {type(d).__name__}")
