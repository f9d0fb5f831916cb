"""Parameter-affine linear dynamical systems and their reduced versions.

A system is M u_t + sum_i f_i(alpha) A_i u = sum_j c_j(alpha) g_j with a
symmetric positive-definite mass matrix; the coefficient functions keep the
offline/online projection split exact. Includes the Crank-Nicolson
integrator, Galerkin projection onto universal and local bases, and two
built-in finite-difference model families on the unit square.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import (
    DimensionMismatch,
    InvalidGrid,
    InvalidInput,
    NumericalError,
    SingularStep,
)
from .rom import LocalBasis, UniversalBasis
from .sampling import CartesianGrid, GeneralSampling
from .tensor import DenseTensor

__all__ = [
    "AffineSystem",
    "Trajectory",
    "ReducedSystem",
    "crank_nicolson",
    "project_universal",
    "project_local",
    "reconstruct_states",
    "build_heat_model",
    "build_advdiff_model",
    "generate_snapshots",
]


@dataclass(frozen=True)
class AffineSystem:
    """Linear system with affine parameter dependence.

    ``terms`` and ``forcings`` pair a scalar coefficient function of the
    parameter vector with a constant matrix or vector, so evaluating the
    operator at any parameter is a weighted sum of precomputed pieces.
    """

    mass: np.ndarray
    terms: list        # (coefficient: alpha -> float, matrix M x M)
    forcings: list     # (coefficient: alpha -> float, vector length M)
    initial_state: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        m = mass.shape[0]
        if mass.shape != (m, m):
            raise DimensionMismatch("mass matrix must be square")
        if not np.allclose(mass, mass.T, atol=1e-12 * max(1.0, np.abs(mass).max())):
            raise InvalidInput("mass matrix must be symmetric")
        try:
            np.linalg.cholesky(mass)
        except np.linalg.LinAlgError as exc:
            raise InvalidInput("mass matrix must be positive definite") from exc
        for _, a in self.terms:
            if np.shape(a) != (m, m):
                raise DimensionMismatch("term matrices must match the mass matrix")
        for _, g in self.forcings:
            if np.shape(g) != (m,):
                raise DimensionMismatch("forcing vectors must match the state size")
        if np.shape(self.initial_state) != (m,):
            raise DimensionMismatch("initial state must match the state size")
        object.__setattr__(self, "mass", mass)

    @property
    def state_dim(self) -> int:
        return self.mass.shape[0]

    def operator(self, alpha) -> np.ndarray:
        out = np.zeros_like(self.mass)
        for coeff, a in self.terms:
            out += float(coeff(alpha)) * a
        return out

    def forcing(self, alpha) -> np.ndarray:
        out = np.zeros(self.state_dim)
        for coeff, g in self.forcings:
            out += float(coeff(alpha)) * g
        return out


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped state columns; column k is the state at ``times[k]``."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        s = np.asarray(self.states, dtype=np.float64)
        if t.ndim != 1 or s.ndim != 2 or s.shape[1] != t.size:
            raise DimensionMismatch("states must have one column per time")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise InvalidInput("times must strictly increase")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)

    @property
    def steps(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class ReducedSystem:
    """A Galerkin-projected system plus the lifting back to full space."""

    system: AffineSystem
    stage: str          # "universal" | "local"
    lifting: np.ndarray  # full-dim x reduced-dim


def crank_nicolson(sys: AffineSystem, alpha, dt: float, n_steps: int) -> Trajectory:
    """March the system with the trapezoidal (Crank-Nicolson) rule.

    Returns states at t_k = k dt for k = 1..n_steps; the initial state is
    not included in the trajectory.
    """
    if dt <= 0:
        raise InvalidInput("dt must be positive")
    if n_steps < 1:
        raise InvalidInput("need at least one step")
    a = sys.operator(alpha)
    g = sys.forcing(alpha)
    b_plus = sys.mass / dt + 0.5 * a
    b_minus = sys.mass / dt - 0.5 * a
    try:
        lu = lu_factor(b_plus)
    except np.linalg.LinAlgError as exc:
        raise SingularStep("implicit step matrix is singular") from exc
    states = np.empty((sys.state_dim, n_steps))
    u = np.asarray(sys.initial_state, dtype=np.float64).copy()
    for k in range(n_steps):
        u = lu_solve(lu, b_minus @ u + g)
        if not np.all(np.isfinite(u)):
            raise SingularStep(f"non-finite state at step {k + 1}")
        states[:, k] = u
    times = dt * np.arange(1, n_steps + 1)
    return Trajectory(times=times, states=states)


def project_universal(sys: AffineSystem, basis: UniversalBasis) -> ReducedSystem:
    """Project every matrix and vector onto the universal basis once,
    keeping the coefficient functions untouched."""
    u = basis.u
    if u.shape[0] != sys.state_dim:
        raise DimensionMismatch(
            f"basis rows {u.shape[0]} != state dimension {sys.state_dim}"
        )
    reduced = AffineSystem(
        mass=u.T @ sys.mass @ u,
        terms=[(c, u.T @ a @ u) for c, a in sys.terms],
        forcings=[(c, u.T @ g) for c, g in sys.forcings],
        initial_state=u.T @ sys.initial_state,
    )
    return ReducedSystem(system=reduced, stage="universal", lifting=u)


def project_local(rs: ReducedSystem, lb: LocalBasis) -> ReducedSystem:
    """Second projection stage, onto the parameter-specific coordinates."""
    if rs.stage != "universal":
        raise InvalidInput("local projection applies to a universal-stage system")
    w = lb.coords
    if w.shape[0] != rs.system.state_dim:
        raise DimensionMismatch(
            f"coords rows {w.shape[0]} != reduced dimension {rs.system.state_dim}"
        )
    reduced = AffineSystem(
        mass=w.T @ rs.system.mass @ w,
        terms=[(c, w.T @ a @ w) for c, a in rs.system.terms],
        forcings=[(c, w.T @ g) for c, g in rs.system.forcings],
        initial_state=w.T @ rs.system.initial_state,
    )
    return ReducedSystem(system=reduced, stage="local", lifting=rs.lifting @ w)


def reconstruct_states(
    traj: Trajectory, basis: UniversalBasis, lb: LocalBasis | None = None
) -> Trajectory:
    """Lift a reduced trajectory back to the full space."""
    z = basis.u if lb is None else basis.u @ lb.coords
    if z.shape[1] != traj.states.shape[0]:
        raise DimensionMismatch(
            f"lifting expects {z.shape[1]} rows, trajectory has {traj.states.shape[0]}"
        )
    return Trajectory(times=traj.times.copy(), states=z @ traj.states)


# -- built-in finite-difference models ------------------------------------------
#
# Both families live on the unit square with cell-centered unknowns; the mass
# matrix is the identity scaled by cell area, and every boundary effect is
# first-order in h so the operator stays affine in the parameters.


def _pick(i: int):
    def coeff(alpha):
        return float(np.asarray(alpha).reshape(-1)[i])

    return coeff


def _one(alpha):
    return 1.0


def _cell_index(nx):
    def idx(i, j):
        return i * nx + j  # j runs along x and varies fastest

    return idx


def build_heat_model(nx: int, ny: int, box) -> AffineSystem:
    """Heat equation on the unit square with convective boundary sides.

    The first parameter is the film (Biot) coefficient on the left side with
    outside temperature 1; parameters 2..4, when the box provides them, are
    outside temperatures on the bottom, top and right sides with film
    coefficient 1/2. Sides without a parameter are insulated. Between one and
    four parameters are supported; the initial state is zero.
    """
    if nx < 3 or ny < 3:
        raise InvalidGrid("need at least a 3x3 cell grid")
    d = box.dimension
    if not 1 <= d <= 4:
        raise InvalidInput("heat model supports boxes of dimension 1..4")
    hx, hy = 1.0 / nx, 1.0 / ny
    m = nx * ny
    idx = _cell_index(nx)

    k_mat = np.zeros((m, m))
    for i in range(ny):
        for j in range(nx):
            c = idx(i, j)
            for di, dj, w in ((0, 1, hy / hx), (0, -1, hy / hx),
                              (1, 0, hx / hy), (-1, 0, hx / hy)):
                ii, jj = i + di, j + dj
                if 0 <= ii < ny and 0 <= jj < nx:
                    k_mat[c, c] += w
                    k_mat[c, idx(ii, jj)] -= w

    # left side: film coefficient alpha_1, outside temperature 1
    q1 = np.zeros((m, m))
    g1 = np.zeros(m)
    for i in range(ny):
        c = idx(i, 0)
        q1[c, c] += hy
        g1[c] += hy

    terms = [(_one, k_mat), (_pick(0), q1)]
    forcings = [(_pick(0), g1)]

    # bottom, top, right sides: film coefficient 1/2, outside temperature
    # alpha_2..alpha_4 while the box provides them; insulated otherwise
    sides = []
    sides.append([(idx(0, j), hx) for j in range(nx)])          # bottom
    sides.append([(idx(ny - 1, j), hx) for j in range(nx)])     # top
    sides.append([(idx(i, nx - 1), hy) for i in range(ny)])     # right
    for axis, cells in enumerate(sides[: d - 1], start=1):
        g = np.zeros(m)
        for c, face in cells:
            k_mat[c, c] += 0.5 * face
            g[c] += 0.5 * face
        forcings.append((_pick(axis), g))

    return AffineSystem(
        mass=(hx * hy) * np.eye(m),
        terms=terms,
        forcings=forcings,
        initial_state=np.zeros(m),
    )


def _advection_matrix(eta_x, eta_y, nx, ny, upwind: bool) -> np.ndarray:
    """Discretize (eta . grad u) * cell_area for a fixed velocity field.

    Mirror ghost cells realize the zero-flux boundary. Central differences by
    default; the upwind variant picks the one-sided difference by the sign of
    the local velocity component, decided per field at build time so the
    operator stays parameter-affine.
    """
    hx, hy = 1.0 / nx, 1.0 / ny
    area = hx * hy
    m = nx * ny
    idx = _cell_index(nx)
    a = np.zeros((m, m))
    for i in range(ny):
        for j in range(nx):
            c = idx(i, j)
            ex = eta_x[i, j]
            ey = eta_y[i, j]
            jm, jp = max(j - 1, 0), min(j + 1, nx - 1)
            im, ip = max(i - 1, 0), min(i + 1, ny - 1)
            if upwind:
                if ex >= 0:
                    a[c, c] += area * ex / hx
                    a[c, idx(i, jm)] -= area * ex / hx
                else:
                    a[c, idx(i, jp)] += area * ex / hx
                    a[c, c] -= area * ex / hx
                if ey >= 0:
                    a[c, c] += area * ey / hy
                    a[c, idx(im, j)] -= area * ey / hy
                else:
                    a[c, idx(ip, j)] += area * ey / hy
                    a[c, c] -= area * ey / hy
            else:
                a[c, idx(i, jp)] += area * ex / (2 * hx)
                a[c, idx(i, jm)] -= area * ex / (2 * hx)
                a[c, idx(ip, j)] += area * ey / (2 * hy)
                a[c, idx(im, j)] -= area * ey / (2 * hy)
    return a


def build_advdiff_model(nx: int, ny: int, nu: float, box) -> AffineSystem:
    """Advection-diffusion on the unit square with a rotating advection field.

    The velocity is a unit vector at angle alpha_9 plus a divergence-free
    perturbation: the scaled rotated gradient of an 8-term cosine polynomial
    whose coefficients are alpha_1..alpha_8. Affinity comes from treating
    cos(alpha_9), sin(alpha_9) and alpha_1..alpha_8 as the ten coefficient
    functions. Zero-flux boundary, Gaussian source of width 0.05 centered at
    (0.25, 0.25), zero initial state.
    """
    if box.dimension != 9:
        raise InvalidInput("advection-diffusion model expects a 9-axis box")
    if nu <= 0:
        raise InvalidInput("diffusion coefficient must be positive")
    hx, hy = 1.0 / nx, 1.0 / ny
    sigma_s = 0.05
    if max(hx, hy) > sigma_s:
        raise InvalidGrid(
            f"grid step {max(hx, hy):.3g} cannot resolve source width {sigma_s}"
        )
    m = nx * ny
    idx = _cell_index(nx)
    area = hx * hy

    xc = (np.arange(nx) + 0.5) * hx
    yc = (np.arange(ny) + 0.5) * hy
    xg, yg = np.meshgrid(xc, yc)  # index [i, j] -> (x=xg, y=yg)

    # zero-flux diffusion: interior faces only
    diff = np.zeros((m, m))
    for i in range(ny):
        for j in range(nx):
            c = idx(i, j)
            for di, dj, w in ((0, 1, hy / hx), (0, -1, hy / hx),
                              (1, 0, hx / hy), (-1, 0, hx / hy)):
                ii, jj = i + di, j + dj
                if 0 <= ii < ny and 0 <= jj < nx:
                    diff[c, c] += nu * w
                    diff[c, idx(ii, jj)] -= nu * w

    # stream-function basis terms: h_k = cos(a pi x) cos(b pi y); the induced
    # velocity (1/pi) (dh/dy, -dh/dx) is divergence-free by construction
    modes = [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 1), (1, 2), (2, 2)]

    def stream_velocity(a_mode, b_mode):
        cx, sx = np.cos(a_mode * np.pi * xg), np.sin(a_mode * np.pi * xg)
        cy, sy = np.cos(b_mode * np.pi * yg), np.sin(b_mode * np.pi * yg)
        vx = -b_mode * cx * sy  # (1/pi) d/dy [cos(a pi x) cos(b pi y)]
        vy = a_mode * sx * cy   # -(1/pi) d/dx [...]
        return vx, vy

    # parameter-independent mesh Peclet guard: bound |eta| over the whole box
    eta_bound = 1.0
    for (a_mode, b_mode), (lo, hi) in zip(modes, box.bounds[:8]):
        eta_bound += max(abs(lo), abs(hi)) * np.hypot(a_mode, b_mode)
    upwind = eta_bound * max(hx, hy) / (2.0 * nu) > 1.0

    ones = np.ones_like(xg)
    zeros = np.zeros_like(xg)
    terms = [(_one, diff)]
    terms.append((lambda al: np.cos(al[8]), _advection_matrix(ones, zeros, nx, ny, upwind)))
    terms.append((lambda al: np.sin(al[8]), _advection_matrix(zeros, ones, nx, ny, upwind)))
    for axis, (a_mode, b_mode) in enumerate(modes):
        vx, vy = stream_velocity(a_mode, b_mode)
        terms.append((_pick(axis), _advection_matrix(vx, vy, nx, ny, upwind)))

    source = (
        area
        / (2 * np.pi * sigma_s**2)
        * np.exp(-((xg - 0.25) ** 2 + (yg - 0.25) ** 2) / (2 * sigma_s**2))
    )
    return AffineSystem(
        mass=area * np.eye(m),
        terms=terms,
        forcings=[(_one, source.reshape(-1))],
        initial_state=np.zeros(m),
    )


def generate_snapshots(family: AffineSystem, sampling, dt: float, n_steps: int) -> DenseTensor:
    """Solve the family at every sample and stack the snapshot columns.

    Cartesian sampling yields an order D+2 tensor (space, one mode per
    parameter axis, time); scattered sampling yields an order-3 tensor
    (space, sample, time).
    """
    if isinstance(sampling, CartesianGrid):
        shape = (family.state_dim, *sampling.axis_sizes, n_steps)
        points = sampling.points()
    elif isinstance(sampling, GeneralSampling):
        shape = (family.state_dim, sampling.size, n_steps)
        points = sampling.samples
    else:
        raise InvalidInput(f"unsupported sampling type {type(sampling).__name__}")
    columns = np.empty((family.state_dim, len(points), n_steps))
    for p, alpha in enumerate(points):
        try:
            traj = crank_nicolson(family, alpha, dt, n_steps)
        except NumericalError as exc:
            raise type(exc)(f"{exc} (at sample {np.array2string(alpha)})") from exc
        columns[:, p, :] = traj.states
    return DenseTensor(columns.reshape(shape))
