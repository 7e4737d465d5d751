"""Typed NPY v1.0 readers/writers for probability tensors, priors, and masks.

All arrays are little-endian C-order NPY v1.0 files: ``<f4`` with shape
(H, W, C) for probability tensors, ``<f4`` with shape (H, W, C) or (C,) for
prior fields, ``|u1`` with shape (H, W) for label masks. Wrapped arrays are
marked read-only, so instances are safe to share between threads.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import numpy.lib.format as npy_format

from segfuse.errors import FormatError, SchemaError, ValidationError

IGNORE_LABEL = 255

# float32 softmax outputs rarely sum exactly to 1
PROB_SUM_TOL = 1e-4

NPY_MAGIC = b"\x93NUMPY"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    if arr.flags.writeable:
        # copy so freezing never mutates a caller-owned array
        arr = arr.copy()
        arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ProbTensor:
    """Per-pixel class probabilities, shape (H, W, C), float32."""

    data: np.ndarray

    @classmethod
    def from_array(cls, arr) -> "ProbTensor":
        arr = np.asarray(arr, dtype=np.float32)
        if arr.ndim != 3:
            raise SchemaError(f"probability tensor must be rank 3, got rank {arr.ndim}")
        if arr.size == 0:
            raise SchemaError(f"degenerate shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValidationError("probability tensor contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValidationError("probabilities must lie in [0, 1]")
        sums = arr.sum(axis=2, dtype=np.float64)
        bad = np.abs(sums - 1.0) > PROB_SUM_TOL
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise ValidationError(
                f"probabilities at pixel ({r}, {c}) sum to {sums[r, c]:.6f}, "
                f"expected 1 within {PROB_SUM_TOL}"
            )
        return cls(_freeze(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def classes(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class LabelMask:
    """Class-id raster, shape (H, W), uint8; 255 marks ignored pixels."""

    data: np.ndarray
    ignore_label: int = IGNORE_LABEL

    @classmethod
    def from_array(cls, arr) -> "LabelMask":
        arr = np.asarray(arr)
        if arr.dtype != np.uint8:
            raise SchemaError(f"label mask must be uint8, got {arr.dtype}")
        if arr.ndim != 2:
            raise SchemaError(f"label mask must be rank 2, got rank {arr.ndim}")
        if arr.size == 0:
            raise SchemaError(f"degenerate shape {arr.shape}")
        return cls(_freeze(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def check_classes(self, classes: int) -> "LabelMask":
        """Assert every non-ignore label is < classes."""
        values = self.data[self.data != self.ignore_label]
        if values.size and int(values.max()) >= classes:
            raise ValidationError(
                f"mask contains class id {int(values.max())} >= {classes}"
            )
        return self


@dataclass(frozen=True)
class PriorField:
    """Estimated class priors: positional (H, W, C) or global (C,), float32.

    Estimated fields sum to at most 1 per position (less when ignore pixels
    were present). Interpolated fields (see decision.interpolate_priors) keep
    values in [0, 1] but may sum above 1; the per-position sum invariant is
    enforced only when reading prior files.
    """

    data: np.ndarray

    @classmethod
    def from_array(cls, arr) -> "PriorField":
        arr = np.asarray(arr, dtype=np.float32)
        if arr.ndim not in (1, 3):
            raise SchemaError(f"prior field must be rank 1 or 3, got rank {arr.ndim}")
        if arr.size == 0:
            raise SchemaError(f"degenerate shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValidationError("prior field contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValidationError("priors must lie in [0, 1]")
        return cls(_freeze(arr))

    @property
    def mode(self) -> str:
        return "global" if self.data.ndim == 1 else "positional"

    @property
    def classes(self) -> int:
        return self.data.shape[-1]


_ROLES = ("probs", "mask", "priors")


def _read_raw(path) -> np.ndarray:
    try:
        fp = open(path, "rb")
    except OSError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    with fp:
        magic = fp.read(len(NPY_MAGIC))
        if magic != NPY_MAGIC:
            raise FormatError(f"{path}: not an NPY file (bad magic)")
        version = fp.read(2)
        if version != b"\x01\x00":
            raise FormatError(f"{path}: unsupported NPY version {tuple(version)}")
        try:
            shape, fortran, dtype = npy_format.read_array_header_1_0(fp)
        except ValueError as exc:
            raise FormatError(f"{path}: malformed NPY header: {exc}") from exc
        if fortran:
            raise SchemaError(f"{path}: Fortran-order arrays are not supported")
        if dtype.byteorder == ">":
            raise SchemaError(f"{path}: big-endian dtype {dtype} is not supported")
        count = int(np.prod(shape, dtype=np.int64))
        data = fp.read()
    if len(data) != count * dtype.itemsize:
        raise FormatError(
            f"{path}: payload holds {len(data)} bytes, expected {count * dtype.itemsize}"
        )
    return np.frombuffer(data, dtype=dtype).reshape(shape)


def read_tensor(path, role: str):
    """Read an NPY file as a ProbTensor, LabelMask, or PriorField.

    ``role`` selects validation: "probs", "mask", or "priors". Raises
    FormatError for malformed files, SchemaError for dtype/rank mismatches,
    ValidationError for invariant violations.
    """
    if role not in _ROLES:
        raise ValueError(f"unknown role {role!r}, expected one of {_ROLES}")
    arr = _read_raw(path)
    try:
        if role == "probs":
            if arr.dtype != np.float32:
                raise SchemaError(f"{path}: expected float32, got {arr.dtype}")
            return ProbTensor.from_array(arr)
        if role == "mask":
            if arr.dtype != np.uint8:
                raise SchemaError(f"{path}: expected uint8, got {arr.dtype}")
            return LabelMask.from_array(arr)
        if arr.dtype != np.float32:
            raise SchemaError(f"{path}: expected float32, got {arr.dtype}")
        field = PriorField.from_array(arr)
        _check_prior_sums(field, path)
        return field
    except (SchemaError, ValidationError) as exc:
        if str(exc).startswith(str(path)):
            raise
        raise type(exc)(f"{path}: {exc}") from exc


def _check_prior_sums(field: PriorField, path) -> None:
    sums = field.data.sum(axis=-1, dtype=np.float64)
    bad = sums > 1.0 + PROB_SUM_TOL
    if field.mode == "global":
        if bad:
            raise ValidationError(f"{path}: global priors sum to {sums:.6f} > 1")
    elif bad.any():
        r, c = np.argwhere(bad)[0]
        raise ValidationError(
            f"{path}: priors at pixel ({r}, {c}) sum to {sums[r, c]:.6f} > 1"
        )


def read_probs(path) -> ProbTensor:
    return read_tensor(path, "probs")


def read_mask(path) -> LabelMask:
    return read_tensor(path, "mask")


def read_priors(path) -> PriorField:
    return read_tensor(path, "priors")


def write_tensor(tensor, path) -> None:
    """Write a ProbTensor/LabelMask/PriorField as an NPY v1.0 file."""
    if isinstance(tensor, (ProbTensor, LabelMask, PriorField)):
        arr = tensor.data
    else:
        raise TypeError(f"cannot serialize {type(tensor).__name__}")
    if arr.size == 0:
        raise ValidationError(f"refusing to write degenerate shape {arr.shape}")
    if np.issubdtype(arr.dtype, np.floating) and not np.isfinite(arr).all():
        raise ValidationError("refusing to write non-finite values")
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "wb") as fp:
            npy_format.write_array(fp, np.ascontiguousarray(arr), version=(1, 0))
        os.replace(tmp, path)
    except OSError as exc:
        raise FormatError(f"{path}: {exc}") from exc
