"""Dense matrix kernels: truncated SVD, thin QR, weighted min-norm solve."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateNeighborhood,
    InvalidDimension,
    InvalidInput,
    InvalidRank,
    InvalidTolerance,
)

__all__ = ["SvdResult", "QrResult", "truncated_svd", "thin_qr", "weighted_minnorm_solve"]


@dataclass(frozen=True)
class SvdResult:
    left: np.ndarray          # M x r, orthonormal columns
    singular_values: np.ndarray  # length r, nonincreasing
    right: np.ndarray         # N x r, orthonormal columns

    @property
    def rank(self) -> int:
        return self.singular_values.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular_values) @ self.right.T


@dataclass(frozen=True)
class QrResult:
    q: np.ndarray  # orthonormal columns
    r: np.ndarray  # upper triangular, nonnegative diagonal


def _check_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidDimension(f"expected a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix entries must be finite")
    return a


def _fix_svd_signs(u: np.ndarray, vt: np.ndarray):
    # Deterministic orientation: the largest-magnitude entry of each left
    # singular vector (lowest index on ties) is made positive.
    for j in range(u.shape[1]):
        col = u[:, j]
        i = int(np.argmax(np.abs(col)))
        if col[i] < 0:
            u[:, j] = -col
            vt[j, :] = -vt[j, :]
    return u, vt


def truncated_svd(a, rank: int | None = None, tol: float | None = None) -> SvdResult:
    """Best low-rank factors of a dense matrix.

    Exactly one of ``rank`` and ``tol`` must be given. Rank mode keeps the
    leading ``rank`` triples. Tolerance mode keeps the smallest r whose
    discarded tail satisfies ||a - a_r||_F <= tol.

    Returns
    -------
    SvdResult
        Factors with a deterministic sign convention so repeated runs on the
        same input agree bitwise.
    """
    a = _check_matrix(a)
    if (rank is None) == (tol is None):
        raise InvalidInput("pass exactly one of rank= or tol=")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if rank is not None:
        if not 1 <= rank <= min(a.shape):
            raise InvalidRank(f"rank {rank} not in 1..{min(a.shape)}")
        r = int(rank)
    else:
        if tol < 0:
            raise InvalidTolerance("tolerance must be >= 0")
        # tail[r] = ||a - a_r||_F^2 when keeping r triples
        tail = np.concatenate([np.cumsum((s ** 2)[::-1])[::-1], [0.0]])
        r = int(np.searchsorted(-tail, -(tol ** 2) * (1 + 1e-15)))
    u, vt = _fix_svd_signs(u[:, :r].copy(), vt[:r, :].copy())
    return SvdResult(left=u, singular_values=s[:r].copy(), right=vt.T.copy())


def thin_qr(a) -> QrResult:
    """Thin QR with a nonnegative diagonal of R.

    Requires at least as many rows as columns; rank-deficient input is fine.
    """
    a = _check_matrix(a)
    m, n = a.shape
    if m < n:
        raise InvalidDimension(f"thin QR needs rows >= cols, got {m}x{n}")
    q, r = np.linalg.qr(a)
    flip = np.diag(r) < 0
    q[:, flip] = -q[:, flip]
    r[flip, :] = -r[flip, :]
    return QrResult(q=q, r=r)


def weighted_minnorm_solve(x, d_weights, rhs) -> np.ndarray:
    """Solve the distance-weighted minimum-norm fitting problem.

    Computes a = W * pinv(X W) * rhs with W = diag(1/d_k), favoring weight on
    the nearest samples. With X of shape (D+1) x q and full row rank, the
    result satisfies X a == rhs.

    Raises
    ------
    DegenerateNeighborhood
        If X (equivalently X W) has row rank below D+1.
    """
    x = _check_matrix(x)
    d = np.asarray(d_weights, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if d.ndim != 1 or d.shape[0] != x.shape[1]:
        raise InvalidDimension("one distance per sample column required")
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise InvalidInput("distances must be positive and finite")
    if rhs.shape != (x.shape[0],):
        raise InvalidDimension(f"rhs length {rhs.shape} != row count {x.shape[0]}")
    if x.shape[1] < x.shape[0]:
        raise InvalidDimension("need at least D+1 samples")

    w = 1.0 / d
    xw = x * w  # scales column k by w_k
    u, s, vt = np.linalg.svd(xw, full_matrices=False)
    cutoff = max(xw.shape) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    effective = int(np.sum(s > cutoff))
    if effective < x.shape[0]:
        raise DegenerateNeighborhood(
            f"neighborhood spans rank {effective} < {x.shape[0]}"
        )
    # full row rank established, so every singular value clears the cutoff
    pinv_applied = vt.T @ ((u.T @ rhs) / s)
    return w * pinv_applied
