"""Offline/online pipeline: universal basis extraction, online payloads,
parameter-specific core matrices, and local reduced bases.

Offline, a compressed snapshot tensor yields one orthonormal universal basis
(kept out of the online stage) plus a small payload. Online, interpolation
vectors turn the payload into a parameter-specific core matrix whose SVD
gives the coordinates of the local reduced basis inside the universal one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decomp import CpDecomposition, TtDecomposition, TuckerDecomposition, reconstruct
from .errors import (
    DimensionMismatch,
    InvalidInput,
    InvalidRank,
    RankBudgetExceeded,
)
from .linalg import _fix_svd_signs, thin_qr, truncated_svd
from .sampling import InterpVectors
from .tensor import DenseTensor, kmode_product, unfold

__all__ = [
    "UniversalBasis",
    "OnlinePayloadCP",
    "OnlinePayloadHOSVD",
    "OnlinePayloadTT",
    "LocalBasis",
    "offline_cp",
    "offline_hosvd",
    "offline_tt",
    "core_matrix",
    "local_basis",
    "pod_basis",
    "extract_dense",
]


@dataclass(frozen=True)
class UniversalBasis:
    """Orthonormal columns spanning the first-mode fiber space of the
    compressed tensor; stays offline."""

    u: np.ndarray
    source_format: str  # "cp" | "hosvd" | "tt"

    @property
    def reduced_dim(self) -> int:
        return self.u.shape[1]


@dataclass(frozen=True)
class OnlinePayloadCP:
    """Triangular QR factors plus the parameter-axis factors.

    ``r_v`` is square upper-triangular when the rank fits the time mode;
    with more terms than time steps it is the raw N x R time factor instead
    (the trailing orthogonal factor degenerates to the identity).
    """

    r_u: np.ndarray
    r_v: np.ndarray
    sigma_factors: list

    @property
    def rank(self) -> int:
        return self.r_u.shape[0]

    @property
    def axis_sizes(self) -> tuple:
        return tuple(s.shape[0] for s in self.sigma_factors)

    @property
    def entry_count(self) -> int:
        def tri(k):
            return k * (k + 1) // 2

        n = tri(self.r_u.shape[0])
        if self.r_v.shape[0] == self.r_v.shape[1]:
            n += tri(self.r_v.shape[0])
        else:
            n += self.r_v.size
        return n + sum(s.size for s in self.sigma_factors)


@dataclass(frozen=True)
class OnlinePayloadHOSVD:
    core: DenseTensor
    s_factors: list

    @property
    def axis_sizes(self) -> tuple:
        return tuple(s.shape[1] for s in self.s_factors)

    @property
    def entry_count(self) -> int:
        return int(np.prod(self.core.dims, dtype=np.int64)) + sum(
            s.size for s in self.s_factors
        )


@dataclass(frozen=True)
class OnlinePayloadTT:
    carriages: list
    w_scale: np.ndarray

    @property
    def axis_sizes(self) -> tuple:
        return tuple(c.dims[1] for c in self.carriages)

    @property
    def entry_count(self) -> int:
        return self.w_scale.size + sum(
            int(np.prod(c.dims, dtype=np.int64)) for c in self.carriages
        )


@dataclass(frozen=True)
class LocalBasis:
    """Coordinates of the parameter-specific reduced basis in the universal
    space, with the full singular-value list of the core matrix."""

    coords: np.ndarray            # T_r x n, orthonormal columns
    singular_values: np.ndarray   # all values, nonincreasing
    n: int
    numerical_rank: int
    padded: bool                  # True when n exceeds the numerical rank


def offline_cp(d: CpDecomposition):
    """Split a CP decomposition into universal basis and online payload."""
    if d.rank > d.u_factors.shape[0]:
        raise InvalidRank("CP rank exceeds the spatial dimension")
    qr_u = thin_qr(d.u_factors)
    if d.rank > d.v_factors.shape[0]:
        # more terms than time steps: the trailing orthogonal factor becomes
        # the identity and the raw N x R time factor rides along instead
        r_v = d.v_factors.copy()
    else:
        qr_v = thin_qr(d.v_factors)
        r_v = qr_v.r
    basis = UniversalBasis(u=qr_u.q, source_format="cp")
    payload = OnlinePayloadCP(
        r_u=qr_u.r,
        r_v=r_v,
        sigma_factors=[s.copy() for s in d.sigma_factors],
    )
    return basis, payload


def offline_hosvd(d: TuckerDecomposition):
    """Universal basis is the spatial factor; core and parameter factors go
    online. The time factor stays offline (diagnostics only)."""
    basis = UniversalBasis(u=d.u.copy(), source_format="hosvd")
    payload = OnlinePayloadHOSVD(
        core=d.core, s_factors=[s.copy() for s in d.s_factors]
    )
    return basis, payload


def offline_tt(d: TtDecomposition):
    """Universal basis is the leading carriage; the chain and column scales
    go online. The trailing factor stays offline."""
    basis = UniversalBasis(u=d.u.copy(), source_format="tt")
    payload = OnlinePayloadTT(
        carriages=list(d.carriages), w_scale=d.w_scale.copy()
    )
    return basis, payload


def _check_vectors(payload, e: InterpVectors):
    sizes = payload.axis_sizes
    if len(e.vectors) != len(sizes):
        raise DimensionMismatch(
            f"{len(e.vectors)} weight vectors for {len(sizes)} parameter axes"
        )
    for i, (v, n) in enumerate(zip(e.vectors, sizes)):
        if v.shape != (n,):
            raise DimensionMismatch(
                f"axis {i}: weight length {v.shape[0]} != axis size {n}"
            )


def core_matrix(payload, e: InterpVectors) -> np.ndarray:
    """Assemble the parameter-specific core matrix from an online payload.

    The scattered-sampling case is the single-axis case: one weight vector
    over all K samples.
    """
    if not isinstance(
        payload, (OnlinePayloadCP, OnlinePayloadHOSVD, OnlinePayloadTT)
    ):
        raise InvalidInput(f"not an online payload: {type(payload).__name__}")
    _check_vectors(payload, e)
    if isinstance(payload, OnlinePayloadCP):
        scales = np.ones(payload.rank)
        for s, v in zip(payload.sigma_factors, e.vectors):
            scales *= s.T @ v
        return (payload.r_u * scales) @ payload.r_v.T
    if isinstance(payload, OnlinePayloadHOSVD):
        out = payload.core.array
        for s, v in zip(payload.s_factors, e.vectors):
            out = np.tensordot(out, s @ v, axes=([1], [0]))
        return out
    out = None
    for c, v in zip(payload.carriages, e.vectors):
        mat = np.tensordot(c.array, v, axes=([1], [0]))
        out = mat if out is None else out @ mat
    return out


def local_basis(payload, e: InterpVectors, n: int) -> LocalBasis:
    """SVD the core matrix and keep the first n left singular vectors.

    All singular values are returned (they equal those of the extracted
    snapshot approximation and feed the error diagnostics). If n exceeds the
    numerical rank of the core, the extra columns come from the SVD's
    orthonormal completion and the result is flagged ``padded``.
    """
    c = core_matrix(payload, e)
    if isinstance(payload, OnlinePayloadTT):
        c = c * payload.w_scale[None, :]
    budget = min(c.shape)
    if not 1 <= n <= budget:
        raise RankBudgetExceeded(f"n={n} outside [1, {budget}] for this payload")
    u, s, vt = np.linalg.svd(c, full_matrices=False)
    u, _ = _fix_svd_signs(u, vt)
    cutoff = 1e-14 * s[0] if s.size and s[0] > 0 else 0.0
    num_rank = int(np.sum(s > cutoff))
    return LocalBasis(
        coords=u[:, :n].copy(),
        singular_values=s.copy(),
        n=n,
        numerical_rank=num_rank,
        padded=bool(n > num_rank),
    )


def pod_basis(phi: DenseTensor, n: int) -> np.ndarray:
    """First n left singular vectors of the first-mode unfolding: one global
    basis shared by every parameter."""
    mat = unfold(phi, 0)
    if not 1 <= n <= min(mat.shape):
        raise InvalidRank(f"n={n} outside [1, {min(mat.shape)}]")
    return truncated_svd(mat, rank=n).left


def extract_dense(phi_or_decomp, e: InterpVectors) -> np.ndarray:
    """Contract the parameter modes with the weight vectors, yielding the
    space-by-time snapshot matrix (approximation) for one parameter.

    Accepts a raw snapshot tensor or any decomposition (materialized first;
    meant as the slow reference route for tests and diagnostics).
    """
    t = phi_or_decomp
    if isinstance(t, (CpDecomposition, TuckerDecomposition, TtDecomposition)):
        t = reconstruct(t)
    if not isinstance(t, DenseTensor):
        raise InvalidInput(f"cannot extract from {type(t).__name__}")
    if len(e.vectors) != t.order - 2:
        raise DimensionMismatch(
            f"{len(e.vectors)} weight vectors for order-{t.order} tensor"
        )
    out = t
    for v in e.vectors:
        out = kmode_product(out, v, 1)
    return out.array
