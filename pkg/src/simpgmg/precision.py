"""Per-level precision tags and bit-exact BF16 rounding emulation."""

from __future__ import annotations

import enum

import numpy as np

#: Unit roundoff of the BF16 format (1 sign + 8 exponent + 7 mantissa bits,
#: 8-bit significand including the implied leading one).
EPS_BF16 = 2.0**-8


class PrecisionTag(enum.Enum):
    FP64 = "fp64"
    FP32 = "fp32"
    BF16EMU = "bf16"

    @property
    def working_dtype(self):
        """Dtype carrying smoother vectors under this tag."""
        return np.float64 if self is PrecisionTag.FP64 else np.float32


def round_bf16(x):
    """Round to the nearest BF16-representable value, ties to even.

    Operates on the FP32 bit pattern (float64 input is first cast to float32,
    matching a cast-down pipeline where BF16 values only ever originate from
    FP32 data). Idempotent; +-inf are preserved; NaN passes through unchanged;
    finite values beyond the BF16 range round to inf as IEEE round-to-nearest
    prescribes. Returns float32 with the low 16 mantissa bits clear, or a
    Python float for scalar input.
    """
    scalar = np.isscalar(x) or getattr(x, "ndim", 0) == 0
    arr = np.ascontiguousarray(x, dtype=np.float32).reshape(-1) if scalar \
        else np.ascontiguousarray(x, dtype=np.float32)
    bits = arr.view(np.uint32)
    lsb = (bits >> np.uint32(16)) & np.uint32(1)
    with np.errstate(over="ignore"):
        rounded = (bits + np.uint32(0x7FFF) + lsb) & np.uint32(0xFFFF0000)
    out = rounded.view(np.float32).copy()
    nan = np.isnan(arr)
    if nan.any():
        out[nan] = arr[nan]
    if scalar:
        return float(out[0])
    return out
