"""File formats: sectioned binary containers for decompositions, online
payloads and bases, CSV trajectories, and JSON model configs.

A container is magic ``TRMC``, a version word, a length-prefixed JSON header,
then one binary tensor section (the tensor file layout) per header entry.
Triangular matrices are packed to their upper triangle on disk.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .decomp import CpDecomposition, TtDecomposition, TuckerDecomposition
from .dynsys import Trajectory, build_advdiff_model, build_heat_model
from .errors import InvalidInput
from .rom import OnlinePayloadCP, OnlinePayloadHOSVD, OnlinePayloadTT, UniversalBasis
from .sampling import ParameterBox
from .tensor import DenseTensor, read_tensor, write_tensor

__all__ = [
    "write_container",
    "read_container",
    "save_decomposition",
    "load_decomposition",
    "save_payload",
    "load_payload",
    "save_basis",
    "load_basis",
    "save_trajectory_csv",
    "load_trajectory_csv",
    "load_model_config",
    "build_model_from_config",
]

_MAGIC = b"TRMC"
_VERSION = 1


def _numbered(arrays: dict, prefix: str) -> list:
    # sort by the numeric suffix, not lexicographically
    keys = [k for k in arrays if k.startswith(prefix)]
    return [arrays[k] for k in sorted(keys, key=lambda k: int(k[len(prefix):]))]


def _pack_triangle(r: np.ndarray) -> np.ndarray:
    k = r.shape[0]
    return r[np.triu_indices(k)]


def _unpack_triangle(packed: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros((k, k))
    out[np.triu_indices(k)] = packed
    return out


def write_container(path, header: dict, sections) -> None:
    """Write a JSON header plus named array sections to one binary file.

    ``sections`` is a list of (name, array, kind) with kind ``"array"`` or
    ``"tri"``; triangular sections must be square and are stored packed.
    """
    entries = []
    blobs = []
    for name, arr, kind in sections:
        if kind == "tri":
            a = np.asarray(arr, dtype=np.float64)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise InvalidInput(f"section {name!r}: triangular pack needs square")
            entries.append({"name": name, "kind": "tri", "size": int(a.shape[0])})
            blobs.append(DenseTensor(_pack_triangle(a)))
        elif kind == "array":
            a = arr.array if isinstance(arr, DenseTensor) else np.asarray(arr, dtype=np.float64)
            entries.append({"name": name, "kind": "array"})
            blobs.append(DenseTensor(a))
        else:
            raise InvalidInput(f"unknown section kind {kind!r}")
    doc = dict(header)
    doc["sections"] = entries
    payload = json.dumps(doc).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", _VERSION))
        f.write(struct.pack("<Q", len(payload)))
        f.write(payload)
        for blob in blobs:
            write_tensor(blob, f)


def read_container(path):
    """Read a container back as (header dict, {section name: ndarray})."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC:
            raise InvalidInput(f"bad container magic {magic!r}")
        (version,) = struct.unpack("<I", f.read(4))
        if version != _VERSION:
            raise InvalidInput(f"unsupported container version {version}")
        (hlen,) = struct.unpack("<Q", f.read(8))
        header = json.loads(f.read(hlen).decode("utf-8"))
        arrays = {}
        for entry in header.get("sections", []):
            t = read_tensor(f)
            if entry["kind"] == "tri":
                arrays[entry["name"]] = _unpack_triangle(t.values, entry["size"])
            else:
                arrays[entry["name"]] = t.array
    return header, arrays


# -- decompositions ---------------------------------------------------------------


def save_decomposition(path, d) -> None:
    """Persist a CP, Tucker, or tensor-train decomposition."""
    if isinstance(d, CpDecomposition):
        header = {"type": "decomposition", "format": "cp", "ranks": [d.rank],
                  "rel_error": d.rel_error}
        sections = [("u_factors", d.u_factors, "array")]
        for i, s in enumerate(d.sigma_factors):
            sections.append((f"sigma_{i}", s, "array"))
        sections.append(("v_factors", d.v_factors, "array"))
    elif isinstance(d, TuckerDecomposition):
        header = {"type": "decomposition", "format": "hosvd",
                  "ranks": list(d.core.dims), "rel_error": d.rel_error,
                  "mode_residuals": list(d.mode_residuals)}
        sections = [("core", d.core, "array"), ("u", d.u, "array")]
        for i, s in enumerate(d.s_factors):
            sections.append((f"s_{i}", s, "array"))
        sections.append(("v", d.v, "array"))
    elif isinstance(d, TtDecomposition):
        header = {"type": "decomposition", "format": "tt",
                  "ranks": list(d.ranks), "rel_error": d.rel_error,
                  "mode_residuals": list(d.mode_residuals)}
        sections = [("u", d.u, "array")]
        for i, c in enumerate(d.carriages):
            sections.append((f"carriage_{i}", c, "array"))
        sections.append(("v", d.v, "array"))
        sections.append(("w_scale", d.w_scale, "array"))
    else:
        raise InvalidInput(f"cannot serialize {type(d).__name__}")
    write_container(path, header, sections)


def load_decomposition(path):
    header, arrays = read_container(path)
    if header.get("type") != "decomposition":
        raise InvalidInput(f"not a decomposition file: {header.get('type')!r}")
    fmt = header.get("format")
    rel = float(header.get("rel_error", 0.0))
    if fmt == "cp":
        sigmas = _numbered(arrays, "sigma_")
        return CpDecomposition(
            u_factors=arrays["u_factors"], sigma_factors=sigmas,
            v_factors=arrays["v_factors"], rel_error=rel,
        )
    if fmt == "hosvd":
        s = _numbered(arrays, "s_")
        return TuckerDecomposition(
            core=DenseTensor(arrays["core"]), u=arrays["u"], s_factors=s,
            v=arrays["v"], rel_error=rel,
            mode_residuals=tuple(header.get("mode_residuals", [])),
        )
    if fmt == "tt":
        cars = [DenseTensor(a) for a in _numbered(arrays, "carriage_")]
        return TtDecomposition(
            u=arrays["u"], carriages=cars, v=arrays["v"],
            w_scale=arrays["w_scale"], rel_error=rel,
            mode_residuals=tuple(header.get("mode_residuals", [])),
        )
    raise InvalidInput(f"unknown decomposition format {fmt!r}")


# -- online payloads and the universal basis --------------------------------------


def save_payload(path, payload, eps_achieved: float | None = None,
                 axis_nodes=None, sampling: str | None = None) -> None:
    """Persist an online payload with its compression and sampling metadata.

    ``axis_nodes`` (per-axis parameter node lists, or the scattered sample
    coordinates) travels in the header so the online stage can rebuild
    interpolation vectors without the offline data.
    """
    header: dict = {"type": "payload", "eps_achieved": eps_achieved,
                    "sampling": sampling}
    if axis_nodes is not None:
        header["axis_nodes"] = [np.asarray(a).tolist() for a in axis_nodes]
    if isinstance(payload, OnlinePayloadCP):
        header.update(format="cp", ranks=[payload.rank])
        square = payload.r_v.shape[0] == payload.r_v.shape[1]
        sections = [("r_u", payload.r_u, "tri"),
                    ("r_v", payload.r_v, "tri" if square else "array")]
        for i, s in enumerate(payload.sigma_factors):
            sections.append((f"sigma_{i}", s, "array"))
    elif isinstance(payload, OnlinePayloadHOSVD):
        header.update(format="hosvd", ranks=list(payload.core.dims))
        sections = [("core", payload.core, "array")]
        for i, s in enumerate(payload.s_factors):
            sections.append((f"s_{i}", s, "array"))
    elif isinstance(payload, OnlinePayloadTT):
        ranks = [payload.carriages[0].dims[0]] + [c.dims[2] for c in payload.carriages]
        header.update(format="tt", ranks=ranks)
        sections = [("w_scale", payload.w_scale, "array")]
        for i, c in enumerate(payload.carriages):
            sections.append((f"carriage_{i}", c, "array"))
    else:
        raise InvalidInput(f"cannot serialize {type(payload).__name__}")
    write_container(path, header, sections)


def load_payload(path):
    """Load an online payload; returns (payload, header)."""
    header, arrays = read_container(path)
    if header.get("type") != "payload":
        raise InvalidInput(f"not a payload file: {header.get('type')!r}")
    fmt = header.get("format")
    if fmt == "cp":
        sigmas = _numbered(arrays, "sigma_")
        payload = OnlinePayloadCP(r_u=arrays["r_u"], r_v=arrays["r_v"],
                                  sigma_factors=sigmas)
    elif fmt == "hosvd":
        s = _numbered(arrays, "s_")
        payload = OnlinePayloadHOSVD(core=DenseTensor(arrays["core"]), s_factors=s)
    elif fmt == "tt":
        cars = [DenseTensor(a) for a in _numbered(arrays, "carriage_")]
        payload = OnlinePayloadTT(carriages=cars, w_scale=arrays["w_scale"])
    else:
        raise InvalidInput(f"unknown payload format {fmt!r}")
    return payload, header


def save_basis(path, basis: UniversalBasis) -> None:
    """The universal basis lives in its own file: it stays offline."""
    write_container(path, {"type": "basis", "source_format": basis.source_format},
                    [("u", basis.u, "array")])


def load_basis(path) -> UniversalBasis:
    header, arrays = read_container(path)
    if header.get("type") != "basis":
        raise InvalidInput(f"not a basis file: {header.get('type')!r}")
    return UniversalBasis(u=arrays["u"], source_format=header.get("source_format", ""))


# -- trajectories -----------------------------------------------------------------


def save_trajectory_csv(path, traj: Trajectory) -> None:
    """CSV with a time column followed by one column per state entry."""
    m = traj.states.shape[0]
    table = np.column_stack([traj.times, traj.states.T])
    cols = ",".join(["time"] + [f"s{i}" for i in range(m)])
    np.savetxt(path, table, delimiter=",", header=cols, comments="")


def load_trajectory_csv(path) -> Trajectory:
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if table.shape[1] < 2:
        raise InvalidInput("trajectory CSV needs a time column and state columns")
    return Trajectory(times=table[:, 0], states=table[:, 1:].T)


# -- model configuration ----------------------------------------------------------


def load_model_config(source) -> dict:
    """Read a model config from a dict, an open file, or a path."""
    if isinstance(source, dict):
        return source
    if hasattr(source, "read"):
        return json.load(source)
    with open(Path(source), "r", encoding="utf-8") as f:
        return json.load(f)


def build_model_from_config(doc: dict):
    """Instantiate a built-in model family from its JSON description.

    Returns (system family, parameter box, dt, step count). The document
    needs ``model`` ("heat" or "advdiff"), ``nx``/``ny``, ``box`` as a list
    of [lo, hi] pairs, ``dt``, ``n_steps``, and ``nu`` for advdiff.
    """
    doc = load_model_config(doc)
    try:
        kind = doc["model"]
        nx, ny = int(doc["nx"]), int(doc["ny"])
        box = ParameterBox(bounds=tuple(tuple(float(b) for b in pair)
                                        for pair in doc["box"]))
        dt = float(doc["dt"])
        n_steps = int(doc["n_steps"])
    except KeyError as exc:
        raise InvalidInput(f"model config missing key {exc}") from exc
    if kind == "heat":
        family = build_heat_model(nx, ny, box)
    elif kind == "advdiff":
        if "nu" not in doc:
            raise InvalidInput("advdiff config needs 'nu'")
        family = build_advdiff_model(nx, ny, float(doc["nu"]), box)
    else:
        raise InvalidInput(f"unknown model {kind!r}")
    return family, box, dt, n_steps
