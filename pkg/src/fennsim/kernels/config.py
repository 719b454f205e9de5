"""Neuron parameters, numeric configuration and constant quantization."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from ..fixedpoint import (QFormat, RoundingMode, S0_15, S1_14, S3_12, quantize,
                          sat_add_raw, sat_sub_raw, wrap_add_raw, wrap_sub_raw)


class ConfigError(ValueError):
    pass


class AdditiveMode(str, enum.Enum):
    WRAP = "wrap"
    SATURATE = "saturate"


@dataclass(frozen=True)
class AlifParams:
    tau_m: float = 20.0
    tau_a: float = 2000.0
    v_th: float = 0.6
    beta: float = 0.0174

    def __post_init__(self):
        if not (self.tau_m > 0 and self.tau_a > 0):
            raise ConfigError("time constants must be positive")

    @property
    def alpha(self) -> float:
        return math.exp(-1.0 / self.tau_m)

    @property
    def rho(self) -> float:
        return math.exp(-1.0 / self.tau_a)


@dataclass(frozen=True)
class NumericConfig:
    """Fixed-point formats and rounding/overflow behaviour of a kernel.

    ``state_format`` holds V (and A unless ``adapt_format`` is given);
    synaptic input accumulates in ``weight_format`` and is converted to the
    state format inside the neuron update when the two differ.
    """

    state_format: QFormat = S3_12
    weight_format: QFormat = S1_14
    rounding: RoundingMode = RoundingMode.STOCHASTIC
    additive_mode: AdditiveMode = AdditiveMode.SATURATE
    adapt_format: QFormat | None = field(default=None)

    @property
    def v_format(self) -> QFormat:
        return self.state_format

    @property
    def a_format(self) -> QFormat:
        return self.adapt_format or self.state_format

    @property
    def saturating(self) -> bool:
        return self.additive_mode is AdditiveMode.SATURATE

    def add(self, a, b):
        return sat_add_raw(a, b) if self.saturating else wrap_add_raw(a, b)

    def sub(self, a, b):
        return sat_sub_raw(a, b) if self.saturating else wrap_sub_raw(a, b)


def constant_format(value: float) -> QFormat:
    """Finest format that holds ``value`` (used for multiplicative constants)."""
    for frac in range(15, -1, -1):
        fmt = QFormat(frac)
        if fmt.min_value <= value <= fmt.max_value:
            return fmt
    raise ConfigError(f"constant {value} does not fit any 16-bit format")


def quantize_const(value: float, fmt: QFormat, what: str) -> int:
    try:
        return quantize(value, fmt).raw
    except ValueError:
        raise ConfigError(f"{what}={value} is not representable in {fmt}") from None


def product_shift(const_frac: int, src_frac: int, dst_frac: int, what: str) -> int:
    shift = const_frac + src_frac - dst_frac
    if not 0 <= shift <= 15:
        raise ConfigError(f"{what}: needs a shift of {shift}, outside 0..15")
    return shift


@dataclass(frozen=True)
class AlifConstants:
    """Quantized raw constants and multiply shifts for the ALIF update."""

    alpha: int
    alpha_shift: int
    rho: int
    rho_shift: int
    beta: int
    beta_shift: int
    v_th: int
    a_inc: int
    conv: int | None      # multiplier converting I_syn into the V format
    conv_shift: int


def alif_constants(params: AlifParams, num: NumericConfig) -> AlifConstants:
    fv, fa, fw = num.v_format.frac_bits, num.a_format.frac_bits, num.weight_format.frac_bits
    fmt_alpha = constant_format(params.alpha)
    fmt_rho = constant_format(params.rho)
    fmt_beta = constant_format(params.beta)
    conv, conv_shift = None, 0
    if fw != fv:
        # I_v = I_w * 2**max(0, fv - fw) >> max(0, fw - fv), rounded per num.rounding
        conv = 1 << max(0, fv - fw)
        conv_shift = max(0, fw - fv)
    return AlifConstants(
        alpha=quantize_const(params.alpha, fmt_alpha, "alpha"),
        alpha_shift=product_shift(fmt_alpha.frac_bits, fv, fv, "alpha*V"),
        rho=quantize_const(params.rho, fmt_rho, "rho"),
        rho_shift=product_shift(fmt_rho.frac_bits, fa, fa, "rho*A"),
        beta=quantize_const(params.beta, fmt_beta, "beta"),
        beta_shift=product_shift(fmt_beta.frac_bits, fa, fv, "beta*A"),
        v_th=quantize_const(params.v_th, num.v_format, "v_th"),
        a_inc=quantize_const(1.0, num.a_format, "spike increment of A"),
        conv=conv,
        conv_shift=conv_shift,
    )


def decay_constant(tau: float) -> tuple[int, int]:
    """(raw, frac_bits) of e^(-1/tau) in its finest format."""
    value = math.exp(-1.0 / tau)
    fmt = constant_format(value)
    return quantize_const(value, fmt, "decay"), fmt.frac_bits


__all__ = [
    "AdditiveMode", "AlifConstants", "AlifParams", "ConfigError", "NumericConfig",
    "alif_constants", "constant_format", "decay_constant", "quantize_const", "product_shift",
    "S0_15", "S1_14", "S3_12",
]
