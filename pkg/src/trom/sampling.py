"""Parameter-domain handling: boxes, Cartesian grids, scattered sample sets,
and the interpolation vectors that extract one parameter's snapshots."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateNeighborhood,
    InvalidGrid,
    InvalidInput,
    NotOnGrid,
    OutOfDomain,
    StencilTooLarge,
)
from .linalg import weighted_minnorm_solve

__all__ = [
    "ParameterBox",
    "CartesianGrid",
    "GeneralSampling",
    "InterpVectors",
    "position_vectors",
    "lagrange_vectors",
    "general_vector",
    "grid_delta",
    "load_sampling",
]


@dataclass(frozen=True)
class ParameterBox:
    """Axis-aligned box of admissible parameter vectors."""

    bounds: tuple

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if not b:
            raise InvalidInput("box needs at least one axis")
        for lo, hi in b:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise InvalidInput(f"bad axis bounds ({lo}, {hi})")
        object.__setattr__(self, "bounds", b)

    @property
    def dimension(self) -> int:
        return len(self.bounds)

    def diameter(self) -> float:
        return float(np.linalg.norm([hi - lo for lo, hi in self.bounds]))

    def contains(self, alpha) -> bool:
        alpha = np.asarray(alpha, dtype=np.float64)
        if alpha.shape != (self.dimension,):
            return False
        return all(lo <= a <= hi for a, (lo, hi) in zip(alpha, self.bounds))

    def sample(self, count: int, rng) -> np.ndarray:
        """Draw ``count`` uniform points, one row each."""
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return lo + (hi - lo) * rng.random((count, self.dimension))


def _check_alpha(box: ParameterBox, alpha) -> np.ndarray:
    alpha = np.atleast_1d(np.asarray(alpha, dtype=np.float64))
    if alpha.shape != (box.dimension,):
        raise InvalidInput(
            f"parameter has {alpha.shape} entries, box has {box.dimension} axes"
        )
    if not np.all(np.isfinite(alpha)):
        raise InvalidInput("parameter entries must be finite")
    return alpha


@dataclass(frozen=True)
class CartesianGrid:
    """Tensor-product sampling of the box: one strictly increasing node list
    per axis."""

    box: ParameterBox
    nodes: tuple

    def __post_init__(self):
        cleaned = []
        if len(self.nodes) != self.box.dimension:
            raise InvalidGrid("one node list per box axis required")
        for axis, arr in enumerate(self.nodes):
            arr = np.asarray(arr, dtype=np.float64)
            lo, hi = self.box.bounds[axis]
            if arr.ndim != 1 or arr.size < 1:
                raise InvalidGrid(f"axis {axis}: empty node list")
            if np.any(np.diff(arr) <= 0):
                raise InvalidGrid(f"axis {axis}: nodes must strictly increase")
            if arr[0] < lo or arr[-1] > hi:
                raise InvalidGrid(f"axis {axis}: nodes leave the box")
            arr = arr.copy()
            arr.flags.writeable = False
            cleaned.append(arr)
        object.__setattr__(self, "nodes", tuple(cleaned))

    @property
    def axis_sizes(self) -> tuple:
        return tuple(n.size for n in self.nodes)

    @property
    def size(self) -> int:
        return int(np.prod(self.axis_sizes, dtype=np.int64))

    def points(self) -> np.ndarray:
        """All grid points, one per row, last axis index fastest (matching the
        parameter-mode layout of snapshot tensors)."""
        mesh = np.meshgrid(*self.nodes, indexing="ij")
        return np.column_stack([m.reshape(-1) for m in mesh])

    def max_gaps(self) -> np.ndarray:
        """Largest adjacent node gap per axis (0 for single-node axes)."""
        return np.array(
            [float(np.max(np.diff(n))) if n.size > 1 else 0.0 for n in self.nodes]
        )

    @staticmethod
    def uniform(box: ParameterBox, axis_sizes) -> "CartesianGrid":
        nodes = [
            np.linspace(lo, hi, int(n))
            for (lo, hi), n in zip(box.bounds, axis_sizes)
        ]
        return CartesianGrid(box=box, nodes=tuple(nodes))


@dataclass(frozen=True)
class GeneralSampling:
    """Scattered sample set over the box; needs at least D+1 points."""

    box: ParameterBox
    samples: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.samples, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != self.box.dimension:
            raise InvalidInput("samples must be a K x D array")
        if pts.shape[0] < self.box.dimension + 1:
            raise InvalidInput(
                f"need at least D+1={self.box.dimension + 1} samples, got {pts.shape[0]}"
            )
        for i, p in enumerate(pts):
            if not self.box.contains(p):
                raise InvalidInput(f"sample {i} lies outside the box")
        tol = 1e-14 * max(self.box.diameter(), 1.0)
        order = np.lexsort(pts.T[::-1])
        gaps = np.linalg.norm(np.diff(pts[order], axis=0), axis=1)
        if pts.shape[0] > 1 and np.min(gaps) <= tol:
            raise InvalidInput("duplicate sample points")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "samples", pts)

    @property
    def size(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class InterpVectors:
    """Extraction weights for one parameter vector.

    ``vectors`` holds one weight vector per parameter axis for Cartesian
    sampling, or a single length-K vector for scattered sampling.
    """

    vectors: tuple
    kind: str  # "cartesian" | "general"

    def __post_init__(self):
        object.__setattr__(
            self, "vectors", tuple(np.asarray(v, dtype=np.float64) for v in self.vectors)
        )
        if self.kind not in ("cartesian", "general"):
            raise InvalidInput(f"unknown interpolation kind {self.kind!r}")
        if self.kind == "general" and len(self.vectors) != 1:
            raise InvalidInput("general sampling carries exactly one weight vector")

    @property
    def nonzero_counts(self) -> tuple:
        return tuple(int(np.count_nonzero(v)) for v in self.vectors)


def _snap_index(nodes: np.ndarray, value: float, lo: float, hi: float):
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    idx = int(np.argmin(np.abs(nodes - value)))
    if abs(nodes[idx] - value) <= tol:
        return idx
    return None


def position_vectors(grid: CartesianGrid, alpha_hat) -> InterpVectors:
    """Indicator vectors of an in-sample grid point.

    Every coordinate must coincide with a grid node up to a relative snap
    tolerance of 1e-12 on the axis scale.
    """
    alpha_hat = _check_alpha(grid.box, alpha_hat)
    vectors = []
    for axis, nodes in enumerate(grid.nodes):
        lo, hi = grid.box.bounds[axis]
        idx = _snap_index(nodes, alpha_hat[axis], lo, hi)
        if idx is None:
            raise NotOnGrid(f"coordinate {alpha_hat[axis]} not a node of axis {axis}")
        e = np.zeros(nodes.size)
        e[idx] = 1.0
        vectors.append(e)
    return InterpVectors(vectors=tuple(vectors), kind="cartesian")


def _stencil(nodes: np.ndarray, value: float, p: int) -> np.ndarray:
    """Indices of the p nearest nodes; distance ties go to the lower index."""
    n = nodes.size
    right = int(np.searchsorted(nodes, value))
    left = right - 1
    picked = []
    for _ in range(p):
        if left < 0:
            picked.append(right)
            right += 1
        elif right >= n:
            picked.append(left)
            left -= 1
        elif value - nodes[left] <= nodes[right] - value:
            picked.append(left)
            left -= 1
        else:
            picked.append(right)
            right += 1
    return np.sort(np.asarray(picked))


def lagrange_vectors(grid: CartesianGrid, alpha, p: int) -> InterpVectors:
    """Polynomial interpolation weights over the p nearest nodes per axis.

    Weights on each axis sum to one and reduce to an indicator when the
    coordinate hits a node, so in-sample extraction is reproduced exactly.

    Parameters
    ----------
    grid : CartesianGrid
    alpha : array_like
        Point inside the box (strictly enforced; no extrapolation).
    p : int
        Stencil size per axis, at least 2 and at most the axis node count.
    """
    alpha = _check_alpha(grid.box, alpha)
    if p < 2:
        raise InvalidInput("stencil size must be >= 2")
    if not grid.box.contains(alpha):
        raise OutOfDomain(f"{alpha} outside the parameter box")
    vectors = []
    for axis, nodes in enumerate(grid.nodes):
        if p > nodes.size:
            raise StencilTooLarge(
                f"stencil {p} exceeds {nodes.size} nodes on axis {axis}"
            )
        idx = _stencil(nodes, alpha[axis], p)
        x = nodes[idx]
        e = np.zeros(nodes.size)
        for t in range(p):
            num = alpha[axis] - np.delete(x, t)
            den = x[t] - np.delete(x, t)
            e[idx[t]] = np.prod(num / den)
        vectors.append(e)
    return InterpVectors(vectors=tuple(vectors), kind="cartesian")


def general_vector(s: GeneralSampling, alpha, q: int) -> InterpVectors:
    """Scattered-sampling weight vector via a distance-weighted min-norm fit.

    Picks the q nearest samples, solves for weights reproducing alpha and
    summing to one, and scatters them into a length-K vector. A query closer
    to a sample than 1e-12 of the box diameter short-circuits to that
    sample's indicator, avoiding the 1/distance singularity.
    """
    alpha = _check_alpha(s.box, alpha)
    if not s.box.contains(alpha):
        raise OutOfDomain(f"{alpha} outside the parameter box")
    d_cap = s.box.dimension + 1
    if q < d_cap:
        raise InvalidInput(f"need at least D+1={d_cap} neighbors")
    if q > s.size:
        raise InvalidInput(f"q={q} exceeds sample count {s.size}")
    dist = np.linalg.norm(s.samples - alpha, axis=1)
    e = np.zeros(s.size)
    nearest = int(np.argmin(dist))
    if dist[nearest] < 1e-12 * s.box.diameter():
        e[nearest] = 1.0
        return InterpVectors(vectors=(e,), kind="general")

    def attempt(count):
        idx = np.argsort(dist, kind="stable")[:count]
        x = np.vstack([s.samples[idx].T, np.ones(count)])
        rhs = np.concatenate([alpha, [1.0]])
        return idx, weighted_minnorm_solve(x, dist[idx], rhs)

    try:
        idx, weights = attempt(q)
    except DegenerateNeighborhood:
        # widen once; a flat neighborhood may gain rank from farther samples
        wider = min(2 * q, s.size)
        if wider == q:
            raise
        idx, weights = attempt(wider)
    e[idx] = weights
    return InterpVectors(vectors=(e,), kind="general")


def grid_delta(grid: CartesianGrid, p: int) -> float:
    """Aggregate grid-step parameter (sum of per-axis max gaps to the p)."""
    gaps = grid.max_gaps()
    return float(np.sum(gaps**p) ** (1.0 / p))


def load_sampling(source):
    """Build a grid or sample set from a JSON document.

    Expects ``{"box": [[lo, hi], ...], "nodes": [[...], ...]}`` for Cartesian
    grids or ``{"box": ..., "samples": [[...], ...]}`` for scattered sets.
    ``source`` may be a path, an open file, or an already-parsed dict.
    """
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    try:
        box = ParameterBox(bounds=tuple(tuple(b) for b in doc["box"]))
    except KeyError as exc:
        raise InvalidInput("sampling document needs a 'box' entry") from exc
    if "nodes" in doc:
        return CartesianGrid(box=box, nodes=tuple(np.asarray(n) for n in doc["nodes"]))
    if "samples" in doc:
        return GeneralSampling(box=box, samples=np.asarray(doc["samples"]))
    raise InvalidInput("sampling document needs 'nodes' or 'samples'")
