"""16-bit fixed-point arithmetic, bit-exact with the vector ALU.

Values live in a signed 16-bit container with ``frac_bits`` fractional bits,
written S(15-N).N.  The raw-level helpers (``wrap16``, ``sat16``,
``mul_raw`` ...) accept either Python ints or integer numpy arrays, so the
simulator and the host-side oracles run exactly the same code lane-wise.

Rounding follows the DSP multiply-accumulate form ``((a * b) + r) >> shift``
with an arithmetic right shift:

* ``ROUND_TO_ZERO``: r = 0.  The arithmetic shift makes this floor for
  negative products; the historical name is kept.
* ``ROUND_TO_NEAREST``: r = 2**(shift - 1) (0 when shift == 0), ties upward.
* ``STOCHASTIC``: r = the low ``shift`` bits of a caller-supplied entropy word.

Post-shift results wrap into 16 bits; there is no saturating multiply.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

RAW_MIN = -0x8000
RAW_MAX = 0x7FFF


class FixedPointError(ValueError):
    pass


class FormatMismatch(FixedPointError):
    pass


class OutOfRange(FixedPointError):
    pass


class RoundingMode(enum.IntEnum):
    ROUND_TO_ZERO = 0
    ROUND_TO_NEAREST = 1
    STOCHASTIC = 2


@dataclass(frozen=True)
class QFormat:
    frac_bits: int

    def __post_init__(self):
        if not 0 <= self.frac_bits <= 15:
            raise ValueError(f"frac_bits must be in 0..15, got {self.frac_bits}")

    @property
    def ulp(self) -> float:
        return 2.0 ** -self.frac_bits

    @property
    def min_value(self) -> float:
        return RAW_MIN * self.ulp

    @property
    def max_value(self) -> float:
        return RAW_MAX * self.ulp

    def __str__(self):
        return f"S{15 - self.frac_bits}.{self.frac_bits}"

    @classmethod
    def parse(cls, text: str) -> "QFormat":
        """Parse ``"S3.12"`` style names."""
        t = text.strip().upper()
        if not t.startswith("S") or "." not in t:
            raise ValueError(f"not a Q-format name: {text!r}")
        int_bits, frac_bits = (int(p) for p in t[1:].split("."))
        if int_bits + frac_bits != 15:
            raise ValueError(f"{text!r} does not describe a 16-bit container")
        return cls(frac_bits)


S0_15 = QFormat(15)
S1_14 = QFormat(14)
S3_12 = QFormat(12)


def _is_array(x) -> bool:
    return isinstance(x, np.ndarray)


def wrap16(x):
    """Reduce an integer (or int array) modulo 2**16 into the signed range."""
    if _is_array(x):
        return ((x.astype(np.int64) + 0x8000) & 0xFFFF) - 0x8000
    return ((x + 0x8000) & 0xFFFF) - 0x8000


def sat16(x):
    if _is_array(x):
        return np.clip(x.astype(np.int64), RAW_MIN, RAW_MAX)
    return RAW_MIN if x < RAW_MIN else RAW_MAX if x > RAW_MAX else x


def to_signed16(x):
    """Reinterpret an unsigned 16-bit pattern as signed."""
    return wrap16(x)


def to_unsigned16(x):
    return x & 0xFFFF


def wrap_add_raw(a, b):
    return wrap16(a + b)


def wrap_sub_raw(a, b):
    return wrap16(a - b)


def sat_add_raw(a, b):
    return sat16(a + b)


def sat_sub_raw(a, b):
    return sat16(a - b)


def rounding_offset(shift: int, mode: RoundingMode, entropy=0):
    """The addend ``r`` in ``((a * b) + r) >> shift``."""
    if mode == RoundingMode.ROUND_TO_ZERO or shift == 0:
        return 0
    if mode == RoundingMode.ROUND_TO_NEAREST:
        return 1 << (shift - 1)
    if mode == RoundingMode.STOCHASTIC:
        return entropy & ((1 << shift) - 1)
    raise ValueError(f"unknown rounding mode {mode!r}")


def mul_raw(a, b, shift: int, mode: RoundingMode = RoundingMode.ROUND_TO_ZERO, entropy=0):
    """Fused multiply-round on raw values: ``wrap16(((a * b) + r) >> shift)``.

    ``entropy`` is only read for ``STOCHASTIC``; for arrays it may be an array
    of per-lane words.
    """
    if not 0 <= shift <= 15:
        raise ValueError(f"shift must be in 0..15, got {shift}")
    if _is_array(a) or _is_array(b) or _is_array(entropy):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if mode == RoundingMode.STOCHASTIC:
            entropy = np.asarray(entropy, dtype=np.int64)
    product = a * b
    return wrap16((product + rounding_offset(shift, mode, entropy)) >> shift)


@dataclass(frozen=True)
class Fix16:
    raw: int
    format: QFormat

    def __post_init__(self):
        if not RAW_MIN <= self.raw <= RAW_MAX:
            raise OutOfRange(f"raw value {self.raw} does not fit 16 bits")

    @classmethod
    def from_bits(cls, bits: int, fmt: QFormat) -> "Fix16":
        return cls(to_signed16(bits), fmt)

    @property
    def bits(self) -> int:
        return to_unsigned16(self.raw)

    def to_real(self) -> float:
        return math.ldexp(self.raw, -self.format.frac_bits)

    def __float__(self):
        return self.to_real()

    def __repr__(self):
        return f"Fix16({self.to_real()!r}, {self.format}, raw={self.raw})"


def _check_formats(a: Fix16, b: Fix16):
    if a.format != b.format:
        raise FormatMismatch(f"{a.format} vs {b.format}")


def sat_add(a: Fix16, b: Fix16) -> Fix16:
    _check_formats(a, b)
    return Fix16(sat_add_raw(a.raw, b.raw), a.format)


def sat_sub(a: Fix16, b: Fix16) -> Fix16:
    _check_formats(a, b)
    return Fix16(sat_sub_raw(a.raw, b.raw), a.format)


def wrap_add(a: Fix16, b: Fix16) -> Fix16:
    _check_formats(a, b)
    return Fix16(wrap_add_raw(a.raw, b.raw), a.format)


def wrap_sub(a: Fix16, b: Fix16) -> Fix16:
    _check_formats(a, b)
    return Fix16(wrap_sub_raw(a.raw, b.raw), a.format)


def fx_mul(a: Fix16, b: Fix16, shift: int, mode: RoundingMode = RoundingMode.ROUND_TO_ZERO,
           entropy: int = 0, out_format: QFormat | None = None) -> Fix16:
    """Multiply two fixed-point values, shifting right by ``shift``.

    The result is tagged with ``out_format`` (default: ``a.format``); the
    caller picks ``shift`` so the tag is right for mixed-format products.
    """
    raw = mul_raw(a.raw, b.raw, shift, mode, entropy)
    return Fix16(int(raw), out_format or a.format)


def quantize(x: float, fmt: QFormat, mode: RoundingMode = RoundingMode.ROUND_TO_NEAREST,
             rng: np.random.Generator | None = None) -> Fix16:
    """Convert a real number to ``fmt``.

    Uses the same conventions as the multiplier: round-to-zero floors,
    round-to-nearest rounds ties upward, stochastic adds a uniform [0, 1)
    draw from ``rng`` before flooring.
    """
    if not math.isfinite(x) or x < fmt.min_value or x > fmt.max_value:
        raise OutOfRange(f"{x!r} outside {fmt} range [{fmt.min_value}, {fmt.max_value}]")
    scaled = math.ldexp(x, fmt.frac_bits)  # exact: power-of-two scaling
    if mode == RoundingMode.ROUND_TO_ZERO:
        raw = math.floor(scaled)
    elif mode == RoundingMode.ROUND_TO_NEAREST:
        raw = math.floor(scaled + 0.5)
    elif mode == RoundingMode.STOCHASTIC:
        if rng is None:
            raise ValueError("stochastic quantization needs an rng")
        raw = math.floor(scaled + rng.random())
    else:
        raise ValueError(f"unknown rounding mode {mode!r}")
    return Fix16(min(raw, RAW_MAX), fmt)


def to_real(v: Fix16) -> float:
    return v.to_real()


def quantize_array(x, fmt: QFormat) -> np.ndarray:
    """Round-to-nearest quantization of an array, raising on out-of-range values."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(~np.isfinite(x)) or np.any(x < fmt.min_value) or np.any(x > fmt.max_value):
        raise OutOfRange(f"values outside {fmt} range")
    raw = np.floor(np.ldexp(x, fmt.frac_bits) + 0.5)
    return np.minimum(raw, RAW_MAX).astype(np.int16)


def raw_to_real(raw, fmt: QFormat):
    return np.ldexp(np.asarray(raw, dtype=np.float64), -fmt.frac_bits)
