"""Dense tensors and the multilinear primitives everything else consumes."""

from __future__ import annotations

import struct

import numpy as np

from .errors import InvalidDimension, InvalidInput, InvalidMode

__all__ = [
    "DenseTensor",
    "kmode_product",
    "unfold",
    "refold",
    "frobenius_norm",
    "read_tensor",
    "write_tensor",
]


class DenseTensor:
    """Immutable dense real tensor of arbitrary order.

    Values are stored flat in row-major order (last index varies fastest),
    which keeps the last-mode unfolding contiguous.

    Parameters
    ----------
    values : array_like
        Anything numpy can coerce to a float array. The shape defines the
        tensor order and dimensions.
    """

    __slots__ = ("_array",)

    def __init__(self, values):
        # np.ascontiguousarray would promote 0-d to 1-d and hide scalars
        arr = np.array(values, dtype=np.float64, order="C")
        if arr.ndim == 0:
            raise InvalidDimension("a tensor needs at least one mode")
        if any(d < 1 for d in arr.shape):
            raise InvalidDimension(f"empty mode in shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInput("tensor entries must be finite")
        arr.flags.writeable = False
        self._array = arr

    @property
    def array(self) -> np.ndarray:
        """Read-only ndarray view of the entries."""
        return self._array

    @property
    def order(self) -> int:
        return self._array.ndim

    @property
    def dims(self) -> tuple:
        return self._array.shape

    @property
    def values(self) -> np.ndarray:
        """Flat entries, last index fastest."""
        return self._array.reshape(-1)

    def __repr__(self):
        return f"DenseTensor(order={self.order}, dims={self.dims})"

    def __eq__(self, other):
        if not isinstance(other, DenseTensor):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self._array, other._array)

    def __hash__(self):
        return hash((self.dims, self._array.tobytes()))


def _check_axis(t: DenseTensor, axis: int) -> int:
    if not isinstance(axis, (int, np.integer)):
        raise InvalidMode(f"mode index must be an integer, got {axis!r}")
    if not 0 <= axis < t.order:
        raise InvalidMode(f"mode {axis} out of range for order-{t.order} tensor")
    return int(axis)


def kmode_product(t: DenseTensor, v, axis: int) -> DenseTensor:
    """Contract one mode of a tensor with a vector, removing that mode.

    Parameters
    ----------
    t : DenseTensor
        Tensor of order m >= 1.
    v : array_like
        Vector of length ``t.dims[axis]``.
    axis : int
        Zero-based index of the mode to contract.

    Returns
    -------
    DenseTensor
        Order m-1 result; a scalar contraction (m = 1) comes back as a
        one-entry order-1 tensor.
    """
    axis = _check_axis(t, axis)
    vec = np.asarray(v, dtype=np.float64)
    if vec.ndim != 1:
        raise InvalidDimension(f"expected a vector, got shape {vec.shape}")
    if vec.shape[0] != t.dims[axis]:
        raise InvalidDimension(
            f"vector length {vec.shape[0]} != mode-{axis} size {t.dims[axis]}"
        )
    out = np.tensordot(t.array, vec, axes=([axis], [0]))
    if out.ndim == 0:
        out = out.reshape(1)
    return DenseTensor(out)


def unfold(t: DenseTensor, axis: int) -> np.ndarray:
    """Matricize a tensor along one mode.

    Row i holds every entry with mode-``axis`` index i; columns enumerate the
    remaining modes in ascending order with the last-listed mode fastest.
    """
    axis = _check_axis(t, axis)
    a = np.moveaxis(t.array, axis, 0)
    return np.ascontiguousarray(a.reshape(t.dims[axis], -1))


def refold(mat, axis: int, dims) -> DenseTensor:
    """Inverse of :func:`unfold` for the given full shape."""
    dims = tuple(int(d) for d in dims)
    mat = np.asarray(mat, dtype=np.float64)
    if not 0 <= axis < len(dims):
        raise InvalidMode(f"mode {axis} out of range for shape {dims}")
    rest = dims[:axis] + dims[axis + 1:]
    if mat.shape != (dims[axis], int(np.prod(rest, dtype=np.int64))):
        raise InvalidDimension(
            f"matrix shape {mat.shape} does not refold into {dims} at mode {axis}"
        )
    a = mat.reshape((dims[axis],) + rest)
    return DenseTensor(np.moveaxis(a, 0, axis))


def frobenius_norm(t: DenseTensor) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(t.values))


# -- binary tensor file -------------------------------------------------------
#
# magic "TROM", version u32, order u8, dims u64 each, float64 values in
# storage order; all integers and floats little-endian.

_MAGIC = b"TROM"
_VERSION = 1


def write_tensor(t: DenseTensor, fileobj) -> None:
    """Serialize a tensor to a binary stream (see module notes for layout)."""
    fileobj.write(_MAGIC)
    fileobj.write(struct.pack("<I", _VERSION))
    fileobj.write(struct.pack("<B", t.order))
    for d in t.dims:
        fileobj.write(struct.pack("<Q", d))
    data = t.values.astype("<f8", copy=False)
    fileobj.write(data.tobytes())


def read_tensor(fileobj) -> DenseTensor:
    """Parse a tensor written by :func:`write_tensor`."""
    magic = fileobj.read(4)
    if magic != _MAGIC:
        raise InvalidInput(f"bad magic {magic!r}, expected {_MAGIC!r}")
    (version,) = struct.unpack("<I", fileobj.read(4))
    if version != _VERSION:
        raise InvalidInput(f"unsupported tensor file version {version}")
    (order,) = struct.unpack("<B", fileobj.read(1))
    if order < 1:
        raise InvalidInput("tensor file with zero order")
    dims = struct.unpack(f"<{order}Q", fileobj.read(8 * order))
    count = int(np.prod(dims, dtype=np.int64))
    raw = fileobj.read(8 * count)
    if len(raw) != 8 * count:
        raise InvalidInput("tensor file truncated")
    values = np.frombuffer(raw, dtype="<f8").reshape(dims)
    return DenseTensor(values)
