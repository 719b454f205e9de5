"""ALIF neuron update: machine-code emitter, host mirror and a 32-neuron kernel.

Per timestep and per 32-neuron vector the update is::

    thr  = v_th + beta * A            (multiply rounded per config)
    S    = V >= thr                   (VTGE -> scalar mask)
    V'   = alpha * V + I              (I converted to V's format if needed)
    V'   = S ? V' - v_th : V'         (VSEL, no multiply)
    A'   = rho * A
    A'   = S ? A' + 1 : A'

Additions and subtractions wrap or saturate per ``NumericConfig``.  With
stochastic rounding every VMUL consumes one RNG draw per lane, in the order
beta*A, alpha*V, conversion (if any), rho*A; ``alif_vector_step`` replays
exactly that order on the host.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import core
from ..assembler import LANES, VECTOR_BYTES, Assembler, Program
from ..fixedpoint import RoundingMode, mul_raw, quantize_array, raw_to_real
from ..rng import VectorRngState, seed_image
from .config import AlifConstants, AlifParams, ConfigError, NumericConfig, alif_constants

# vector register allocation shared by kernels using the ALIF update
VZERO, VALPHA, VRHO, VBETA, VVTH, VAINC, VCONV = 0, 1, 2, 3, 4, 5, 6
VV, VA, VI, VT, VT2 = 8, 9, 10, 11, 12
XMASK = 24


def emit_seed(a: Assembler, seed: int, tmp: int = 31):
    """Place a seed image in vector memory and load both RNG state registers."""
    s0, s1 = seed_image(seed)
    addr = a.vmem_vectors(np.stack([s0, s1]), name="rng_seed")
    a.li(tmp, addr)
    a.vload_r0(0, tmp)
    a.vload_r1(1, tmp)


def emit_alif_constants(a: Assembler, c: AlifConstants, tmp: int = 31):
    a.vsub(VZERO, VZERO, VZERO)
    a.vconst(VALPHA, c.alpha, tmp)
    a.vconst(VRHO, c.rho, tmp)
    a.vconst(VBETA, c.beta, tmp)
    a.vconst(VVTH, c.v_th, tmp)
    a.vconst(VAINC, c.a_inc, tmp)
    if c.conv is not None:
        a.vconst(VCONV, c.conv, tmp)


def _vadd(a: Assembler, num: NumericConfig):
    return a.vadd_s if num.saturating else a.vadd


def _vsub(a: Assembler, num: NumericConfig):
    return a.vsub_s if num.saturating else a.vsub


def emit_alif_update(a: Assembler, c: AlifConstants, num: NumericConfig):
    """Update VV/VA in place from VI; leaves the spike mask in x[XMASK]."""
    add, sub, rm = _vadd(a, num), _vsub(a, num), num.rounding
    a.vmul(VT, VBETA, VA, c.beta_shift, rm)
    add(VT, VT, VVTH)
    a.vtge(XMASK, VV, VT)
    a.vmul(VV, VALPHA, VV, c.alpha_shift, rm)
    if c.conv is not None:
        a.vmul(VI, VI, VCONV, c.conv_shift, rm)
    add(VV, VV, VI)
    sub(VT, VV, VVTH)
    a.vsel(VV, VT, VV, XMASK)
    a.vmul(VA, VRHO, VA, c.rho_shift, rm)
    add(VT2, VA, VAINC)
    a.vsel(VA, VT2, VA, XMASK)


def alif_vector_step(V, A, I, c: AlifConstants, num: NumericConfig, rng: VectorRngState | None):
    """Host mirror of ``emit_alif_update`` on raw int arrays.

    Returns (V', A', spike bool array).  ``rng`` is advanced once per
    multiply when rounding is stochastic.
    """
    rm = num.rounding
    stochastic = rm == RoundingMode.STOCHASTIC

    def mul(x, y, shift):
        ent = rng.next() if stochastic else 0
        return mul_raw(x, y, shift, rm, ent)

    thr = num.add(mul(c.beta, A, c.beta_shift), c.v_th)
    spikes = V >= thr
    v_new = mul(c.alpha, V, c.alpha_shift)
    if c.conv is not None:
        I = mul(I, c.conv, c.conv_shift)
    v_new = num.add(v_new, I)
    v_new = np.where(spikes, num.sub(v_new, c.v_th), v_new)
    a_new = mul(c.rho, A, c.rho_shift)
    a_new = np.where(spikes, num.add(a_new, c.a_inc), a_new)
    return v_new, a_new, spikes


def mask_to_bits(mask: int) -> np.ndarray:
    return ((mask >> np.arange(LANES)) & 1).astype(bool)


def bits_to_mask(bits) -> int:
    return int(sum(1 << i for i, b in enumerate(bits) if b))


@dataclass(frozen=True)
class AlifRun:
    v: np.ndarray       # (T, 32) raw, V[t+1]
    a: np.ndarray       # (T, 32) raw, A[t+1]
    spikes: np.ndarray  # (T, 32) bool, S[t]
    stats: core.Stats

    def v_real(self, num: NumericConfig) -> np.ndarray:
        return raw_to_real(self.v, num.v_format)

    def a_real(self, num: NumericConfig) -> np.ndarray:
        return raw_to_real(self.a, num.a_format)


def quantize_input(input_current, num: NumericConfig, n_steps: int | None = None) -> np.ndarray:
    """Per-step synaptic input -> (T, 32) raw in the weight format.

    A 1-D series is broadcast to all lanes.
    """
    cur = np.asarray(input_current, dtype=np.float64)
    if cur.ndim == 1:
        cur = np.repeat(cur[:, None], LANES, axis=1)
    if cur.ndim != 2 or cur.shape[1] != LANES:
        raise ConfigError(f"input must be (T,) or (T, {LANES})")
    if n_steps is not None and cur.shape[0] != n_steps:
        raise ConfigError("input length does not match the number of timesteps")
    return quantize_array(cur, num.weight_format)


def build_alif(params: AlifParams, num: NumericConfig, input_current, n_steps: int | None = None,
               seed: int = 0) -> Program:
    """32 ALIF neurons (one per lane) for T timesteps.

    ``input_current`` is the synaptic input arriving each step (real values,
    quantized here to the weight format).  V, A and the spike mask are
    recorded every step: V/A to vector memory (``v_record``: V[t+1] then
    A[t+1] for each t) and masks to scalar memory (``spike_record``).
    """
    c = alif_constants(params, num)
    raw_in = quantize_input(input_current, num, n_steps)
    T = raw_in.shape[0]
    if T < 1:
        raise ConfigError("need at least one timestep")
    a = Assembler()
    emit_seed(a, seed)
    in_addr = a.vmem_vectors(raw_in, name="input")
    rec_addr = a.vmem_alloc(2 * T, name="v_record")
    spk_addr = a.dmem_alloc(4 * T, name="spike_record")
    a.symbols["n_steps"] = T
    if a.symbols["v_record"] + 2 * T * VECTOR_BYTES > core.VMEM_BASE + core.MachineConfig().vmem_size:
        raise ConfigError(f"{T} timesteps do not fit in vector memory")

    emit_alif_constants(a, c)
    a.vsub(VV, VV, VV)
    a.vsub(VA, VA, VA)
    a.li(1, in_addr)
    a.li(2, rec_addr)
    a.li(3, spk_addr)
    a.li(4, T)
    loop = a.here("step")
    a.vload(VI, 0, 1)
    a.addi(1, 1, VECTOR_BYTES)
    emit_alif_update(a, c, num)
    a.vstore(VV, 0, 2)
    a.vstore(VA, 1, 2)
    a.sw(XMASK, 0, 3)
    a.addi(2, 2, 2 * VECTOR_BYTES)
    a.addi(3, 3, 4)
    a.addi(4, 4, -1)
    a.bne(4, 0, loop)
    end = a.here("end")
    a.mark_region("neuron_update", loop, end)
    a.ecall()
    return a.finalize()


def read_alif(m: core.MachineState, program: Program) -> AlifRun:
    T = program.symbols["n_steps"]
    vecs = core.read_vectors(m, program.symbols["v_record"], 2 * T).astype(np.int64).reshape(T, 2, LANES)
    masks = core.read_words(m, program.symbols["spike_record"], T)
    spikes = np.array([mask_to_bits(int(w)) for w in masks])
    return AlifRun(vecs[:, 0], vecs[:, 1], spikes, m.stats.copy())


def run_alif(params: AlifParams, num: NumericConfig, input_current, seed: int = 0) -> AlifRun:
    prog = build_alif(params, num, input_current, seed=seed)
    m = core.load(prog)
    core.run_checked(m)
    return read_alif(m, prog)


def alif_oracle(params: AlifParams, num: NumericConfig, input_current, seed: int = 0) -> AlifRun:
    """Host fixed-point mirror of ``build_alif`` (no simulator involved)."""
    c = alif_constants(params, num)
    raw_in = quantize_input(input_current, num).astype(np.int64)
    rng = VectorRngState(*seed_image(seed))
    V = np.zeros(LANES, dtype=np.int64)
    A = np.zeros(LANES, dtype=np.int64)
    vs, as_, ss = [], [], []
    for I in raw_in:
        V, A, S = alif_vector_step(V, A, I, c, num, rng)
        vs.append(V)
        as_.append(A)
        ss.append(S)
    return AlifRun(np.array(vs), np.array(as_), np.array(ss), core.Stats())
