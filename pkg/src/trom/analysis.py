"""Error metrics, a-priori diagnostic terms, compression accounting, and the
out-of-sample gain study that compares the tensor reduced models against the
single-basis POD baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .decomp import cp_rank_sweep, hosvd, tt_svd
from .dynsys import (
    AffineSystem,
    Trajectory,
    crank_nicolson,
    generate_snapshots,
    project_local,
    project_universal,
)
from .errors import (
    DimensionMismatch,
    InvalidInput,
    InvalidRanks,
    TromError,
    ZeroDenominator,
)
from .rom import (
    LocalBasis,
    UniversalBasis,
    extract_dense,
    local_basis,
    offline_cp,
    offline_hosvd,
    offline_tt,
    pod_basis,
)
from .sampling import CartesianGrid, InterpVectors, general_vector, lagrange_vectors
from .tensor import DenseTensor

__all__ = [
    "ErrorReport",
    "CompressionReport",
    "EstimateTerms",
    "StudyRecord",
    "subspace_residual",
    "representation_error",
    "insample_prediction_error",
    "sampled_prediction_error",
    "estimate_terms",
    "compression_report",
    "solution_error",
    "gain_study",
]


# -- basic residual metrics ------------------------------------------------------


def _basis_matrix(basis) -> np.ndarray:
    """Accept a plain matrix, a UniversalBasis, or a (universal, local) pair
    and return the combined orthonormal basis as a dense matrix."""
    if isinstance(basis, np.ndarray):
        return basis
    if isinstance(basis, UniversalBasis):
        return basis.u
    if isinstance(basis, tuple) and len(basis) == 2:
        u, coords = basis
        u = u.u if isinstance(u, UniversalBasis) else np.asarray(u)
        if coords is None:
            return u
        w = coords.coords if isinstance(coords, LocalBasis) else np.asarray(coords)
        if u.shape[1] != w.shape[0]:
            raise DimensionMismatch(
                f"universal width {u.shape[1]} != coordinate rows {w.shape[0]}"
            )
        return u @ w
    raise InvalidInput("basis must be a matrix, a UniversalBasis, or a pair")


def subspace_residual(basis, snapshots: np.ndarray) -> float:
    """Squared Frobenius distance of the columns from the basis span,
    ``||(I - Z Z^T) S||_F^2``, computed without forming the projector."""
    z = _basis_matrix(basis)
    s = np.asarray(snapshots, dtype=np.float64)
    if s.ndim != 2 or z.shape[0] != s.shape[0]:
        raise DimensionMismatch(
            f"basis has {z.shape[0]} rows, snapshots {np.shape(snapshots)}"
        )
    resid = s - z @ (z.T @ s)
    return float(np.sum(resid * resid))


def representation_error(
    phi_raw: DenseTensor, basis, e: InterpVectors, squared: bool = True
) -> float:
    """Mean squared distance of one parameter's true snapshots from the span
    of the reduced basis.

    Extracts the space-by-time snapshot matrix for the parameter encoded by
    ``e`` from the raw (uncompressed) tensor and returns
    ``(1/(N M)) ||(I - Z Z^T) Psi||_F^2``, or its square root when
    ``squared`` is False.
    """
    snapshots = extract_dense(phi_raw, e)
    m, n_time = snapshots.shape
    val = subspace_residual(basis, snapshots) / (n_time * m)
    return val if squared else float(np.sqrt(val))


def insample_prediction_error(phi_raw: DenseTensor, basis, vector_sets) -> float:
    """Root mean squared representation error over the training samples.

    ``vector_sets`` holds one InterpVectors per training parameter (position
    vectors for every grid point, typically); the result carries the
    ``1/(M N K)`` scaling with K the number of samples.
    """
    sets = list(vector_sets)
    if not sets:
        raise InvalidInput("need at least one parameter to aggregate over")
    total = 0.0
    m = n_time = None
    for e in sets:
        snapshots = extract_dense(phi_raw, e)
        m, n_time = snapshots.shape
        total += subspace_residual(basis, snapshots)
    return float(np.sqrt(total / (m * n_time * len(sets))))


def sampled_prediction_error(basis, snapshot_matrices) -> float:
    """Same aggregate as insample_prediction_error, but over explicitly
    supplied true snapshot matrices (out-of-sample parameters)."""
    mats = list(snapshot_matrices)
    if not mats:
        raise InvalidInput("need at least one snapshot matrix")
    total = 0.0
    m = n_time = None
    for s in mats:
        m, n_time = np.shape(s)
        total += subspace_residual(basis, s)
    return float(np.sqrt(total / (m * n_time * len(mats))))


# -- a-priori estimate diagnostics ----------------------------------------------


@dataclass(frozen=True)
class EstimateTerms:
    """The addends of the representation-error estimate, reported separately.

    The compression addend is given in two variants because the published
    estimate and its derivation scale the tensor norm differently (linear vs
    squared); callers can compare against either. The interpolation addend is
    a scaffold: the grid-step power without its unknown constant prefactor.
    """

    compression_norm_linear: float
    compression_norm_squared: float
    svd_tail: float
    interpolation_scaffold: float
    n: int
    delta: float
    p: int
    c_e: float
    general: bool


def estimate_terms(
    eps_achieved: float,
    norm_phi: float,
    singular_values,
    n: int,
    delta: float,
    p: int,
    c_e: float = 1.0,
    d: int = 1,
    m_space: int = 1,
    n_time: int = 1,
    general: bool = False,
) -> EstimateTerms:
    """Evaluate the three addends of the a-priori representation estimate.

    ``singular_values`` must be the complete list from the core matrix SVD so
    the tail sum past ``n`` is exact. For scattered (non-grid) sampling the
    estimate has interpolation order one and a single extraction factor, so
    ``general=True`` switches the exponents accordingly.
    """
    s = np.asarray(singular_values, dtype=np.float64)
    if n > s.size:
        raise InvalidInput(f"n={n} exceeds the {s.size} singular values given")
    scale = 1.0 / (n_time * m_space)
    growth = c_e ** 2 if general else c_e ** (2 * d)
    front = growth * eps_achieved**2 * scale
    tail = float(np.sum(s[n:] ** 2)) * scale
    scaffold = float(delta**2 if general else delta ** (2 * p))
    return EstimateTerms(
        compression_norm_linear=front * norm_phi,
        compression_norm_squared=front * norm_phi**2,
        svd_tail=tail,
        interpolation_scaffold=scaffold,
        n=int(n),
        delta=float(delta),
        p=int(p),
        c_e=float(c_e),
        general=bool(general),
    )


# -- compression accounting ------------------------------------------------------


@dataclass(frozen=True)
class CompressionReport:
    """Exact element counts for a compressed format and the resulting
    compression factor, kept as a rational."""

    format: str
    ranks: tuple
    tensor_entries: int
    payload_entries: int

    @property
    def compression_factor(self) -> Fraction:
        return Fraction(self.tensor_entries, self.payload_entries)


def compression_report(
    fmt: str,
    ranks,
    axis_sizes,
    m: int,
    n_time: int,
    k: int | None = None,
) -> CompressionReport:
    """Count the online payload entries for a format by its closed formula.

    ``axis_sizes`` holds the parameter-grid axis lengths for Cartesian
    sampling; pass ``k`` (and an empty ``axis_sizes``) for scattered sampling
    with K parameter points. The stored-tensor count is M*K*N with K the
    total number of parameter samples.
    """
    ranks = tuple(int(r) for r in np.atleast_1d(ranks))
    sizes = tuple(int(s) for s in axis_sizes)
    if any(r < 1 for r in ranks):
        raise InvalidRanks("ranks must be positive")
    general = k is not None and not sizes
    if not general and not sizes:
        raise InvalidRanks("need axis sizes for grid sampling or k for scattered")
    k_total = int(k) if general else int(np.prod(sizes, dtype=np.int64))
    tensor_entries = m * k_total * n_time

    if fmt == "cp":
        if len(ranks) != 1:
            raise InvalidRanks("cp takes a single rank")
        r = ranks[0]
        if general:
            payload = r * (k_total + r + 1)
        else:
            payload = r * (sum(sizes) + r + 1)
    elif fmt == "hosvd":
        if general:
            if len(ranks) != 3:
                raise InvalidRanks("scattered hosvd ranks are [m~, k~, n~]")
            m_r, k_r, n_r = ranks
            payload = n_r * m_r * k_r + k_r * k_total
        else:
            if len(ranks) != len(sizes) + 2:
                raise InvalidRanks(
                    f"hosvd needs {len(sizes) + 2} ranks, got {len(ranks)}"
                )
            core = int(np.prod(ranks, dtype=np.int64))
            payload = core + sum(r * s for r, s in zip(ranks[1:-1], sizes))
    elif fmt == "tt":
        if general:
            if len(ranks) != 2:
                raise InvalidRanks("scattered tt ranks are [r1~, r2~]")
            r1, r2 = ranks
            payload = r2 + r1 * k_total * r2
        else:
            if len(ranks) != len(sizes) + 1:
                raise InvalidRanks(
                    f"tt needs {len(sizes) + 1} ranks, got {len(ranks)}"
                )
            payload = ranks[-1] + sum(
                ranks[i] * sizes[i] * ranks[i + 1] for i in range(len(sizes))
            )
    else:
        raise InvalidRanks(f"unknown format {fmt!r}")
    return CompressionReport(
        format=fmt,
        ranks=ranks,
        tensor_entries=int(tensor_entries),
        payload_entries=int(payload),
    )


# -- trajectory comparison -------------------------------------------------------


def solution_error(w_trom: Trajectory, w_true: Trajectory) -> float:
    """Relative worst-over-time l2 state error.

    Discrete form of the relative L-infinity-in-time, L2-in-space metric:
    the largest column error norm divided by the largest true column norm.
    """
    if w_trom.states.shape != w_true.states.shape:
        raise DimensionMismatch(
            f"trajectory shapes differ: {w_trom.states.shape} vs {w_true.states.shape}"
        )
    if not np.allclose(w_trom.times, w_true.times):
        raise InvalidInput("trajectories use different time grids")
    true_norms = np.linalg.norm(w_true.states, axis=0)
    denom = float(true_norms.max())
    if denom == 0.0:
        raise ZeroDenominator("true trajectory is identically zero")
    err_norms = np.linalg.norm(w_trom.states - w_true.states, axis=0)
    return float(err_norms.max()) / denom


# -- out-of-sample gain study ----------------------------------------------------


@dataclass(frozen=True)
class StudyRecord:
    alpha: tuple
    format: str
    n: int
    eps: float
    representation_error: float
    solution_error_linf_l2: float
    pod_error: float
    gain: float


@dataclass(frozen=True)
class ErrorReport:
    """Per-parameter study records plus per-configuration gain aggregates."""

    records: tuple
    seed: int
    failures: tuple = ()

    def aggregates(self) -> list:
        """Mean/min/std of the gain for each (format, n, eps) group, in
        first-appearance order."""
        groups: dict = {}
        for rec in self.records:
            # NaN eps (the POD rows) must land in one group, not one per record
            eps_key = None if np.isnan(rec.eps) else float(rec.eps)
            key = (rec.format, rec.n, eps_key)
            groups.setdefault(key, []).append(rec.gain)
        out = []
        for (fmt, n, eps), gains in groups.items():
            g = np.asarray(gains)
            out.append(
                {
                    "format": fmt,
                    "n": n,
                    "eps": eps,
                    "count": int(g.size),
                    "mean": float(g.mean()),
                    "min": float(g.min()),
                    "std": float(g.std()),
                }
            )
        return out


def _interp_vectors(sampling, alpha, p: int, q: int) -> InterpVectors:
    if isinstance(sampling, CartesianGrid):
        return lagrange_vectors(sampling, alpha, p)
    return general_vector(sampling, alpha, q)


def _compress(phi, fmt, eps, cp_max_rank, seed):
    if fmt == "hosvd":
        return offline_hosvd(hosvd(phi, eps=eps))
    if fmt == "tt":
        return offline_tt(tt_svd(phi, eps))
    if fmt == "cp":
        d = cp_rank_sweep(
            phi, eps, max_rank=cp_max_rank, rank_step=2, random_state=seed
        )
        return offline_cp(d)
    raise InvalidInput(f"unknown format {fmt!r}")


def gain_study(
    family: AffineSystem,
    sampling,
    formats,
    n_values,
    eps_values,
    n_random: int,
    seed: int,
    dt: float,
    n_steps: int,
    p: int = 2,
    q: int | None = None,
    cp_max_rank: int | None = None,
    phi: DenseTensor | None = None,
) -> ErrorReport:
    """Compare reduced models against the POD baseline at random parameters.

    Builds (or reuses) the snapshot tensor, compresses it once per format and
    accuracy target, then for each of ``n_random`` parameters drawn uniformly
    from the sampling box: solves the full model, the POD reduced model, and
    each tensor reduced model, recording relative solution errors and the
    POD/TROM gain. Failures of individual work items are collected in the
    report and do not stop the study.
    """
    if phi is None:
        phi = generate_snapshots(family, sampling, dt, n_steps)
    box = sampling.box
    if q is None:
        q = min(getattr(sampling, "size", box.dimension + 1), 2 * (box.dimension + 1))
    rng = np.random.default_rng(seed)
    alphas = box.sample(n_random, rng)

    compressed = {}
    failures = []
    for eps in eps_values:
        for fmt in formats:
            try:
                basis, payload = _compress(phi, fmt, eps, cp_max_rank, seed)
                compressed[(fmt, eps)] = (
                    payload,
                    project_universal(family, basis),
                    basis,
                )
            except TromError as exc:
                failures.append((fmt, None, f"compression at eps={eps}: {exc}"))

    pod_systems = {}
    for n in n_values:
        u_pod = UniversalBasis(u=pod_basis(phi, n), source_format="pod")
        pod_systems[n] = (project_universal(family, u_pod), u_pod)

    m = family.state_dim
    records = []
    for alpha in alphas:
        key = tuple(float(a) for a in alpha)
        try:
            truth = crank_nicolson(family, alpha, dt, n_steps)
        except TromError as exc:
            failures.append(("truth", key, str(exc)))
            continue
        for n in n_values:
            rs_pod, u_pod = pod_systems[n]
            try:
                red = crank_nicolson(rs_pod.system, alpha, dt, n_steps)
                lifted = Trajectory(red.times, rs_pod.lifting @ red.states)
                pod_err = solution_error(lifted, truth)
                pod_repr = subspace_residual(u_pod.u, truth.states) / (
                    m * truth.steps
                )
            except TromError as exc:
                failures.append(("pod", key, str(exc)))
                continue
            records.append(
                StudyRecord(
                    alpha=key,
                    format="pod",
                    n=n,
                    eps=float("nan"),
                    representation_error=pod_repr,
                    solution_error_linf_l2=pod_err,
                    pod_error=pod_err,
                    gain=1.0,
                )
            )
            for (fmt, eps), (payload, rs_univ, basis) in compressed.items():
                try:
                    e = _interp_vectors(sampling, alpha, p, q)
                    lb = local_basis(payload, e, n)
                    rs_loc = project_local(rs_univ, lb)
                    red = crank_nicolson(rs_loc.system, alpha, dt, n_steps)
                    lifted = Trajectory(red.times, rs_loc.lifting @ red.states)
                    err = solution_error(lifted, truth)
                    repr_err = subspace_residual(
                        (basis, lb), truth.states
                    ) / (m * truth.steps)
                except TromError as exc:
                    failures.append((fmt, key, str(exc)))
                    continue
                records.append(
                    StudyRecord(
                        alpha=key,
                        format=fmt,
                        n=n,
                        eps=float(eps),
                        representation_error=repr_err,
                        solution_error_linf_l2=err,
                        pod_error=pod_err,
                        gain=pod_err / err if err > 0 else float("inf"),
                    )
                )
    return ErrorReport(records=tuple(records), seed=int(seed), failures=tuple(failures))
