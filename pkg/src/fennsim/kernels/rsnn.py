"""Recurrent ALIF network: one hidden layer with recurrence, leaky-integrator readout.

Each timestep runs two phases.

spike processing
    Input events for step t are read from an event list in scalar memory and
    recurrent spikes from the previous raster row; every spike adds one weight
    row into the input accumulators.  Per target vector that is
    VLOAD w, VLOAD acc, VADD, VSTORE acc.
neuron update
    Every hidden vector goes through the ALIF update (unrolled, one block per
    vector), its spike mask is written to the raster row for step t and its
    accumulator is cleared.  Readout units then integrate
    Y' = alpha_out * Y + I.

Layout (vector memory): per hidden vector [V, A, I], per output vector
[Y, I]; W_in rows of ``nhv`` vectors; W_rec rows of ``nhv + nov`` vectors
(recurrent weights followed by readout weights); records of
[V_0, A_0, ..., V_{nhv-1}, A_{nhv-1}, Y_0, ...] per step.
Scalar memory holds the event list, terminated by 0xFFFFFFFF, and a raster
of ``T + 1`` rows of ``nhv`` mask words (row 0 is all zero).

``rsnn_oracle`` replays the same accumulation order and RNG draws on the
host, so its trajectories must equal the simulator's exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import core
from ..assembler import LANES, VECTOR_BYTES, Assembler, Program
from ..fixedpoint import RoundingMode, mul_raw
from ..rng import VectorRngState, seed_image
from .alif import (VA, VI, VV, VZERO, XMASK, alif_vector_step, emit_alif_constants,
                   emit_alif_update, emit_seed, mask_to_bits)
from .config import (AlifParams, ConfigError, NumericConfig, alif_constants, constant_format,
                     product_shift, quantize_const)

SENTINEL = 0xFFFFFFFF
VALPHA_OUT = 7
VY = 13
_DELIVER_REGS = (20, 21, 22, 23)


@dataclass(frozen=True)
class RsnnTopology:
    """Raw weights in the weight format: ``w_in`` (n_in, n_hidden),
    ``w_rec`` (n_hidden, n_hidden), ``w_out`` (n_hidden, n_out)."""

    w_in: np.ndarray
    w_rec: np.ndarray
    w_out: np.ndarray
    params: AlifParams = field(default_factory=AlifParams)
    tau_out: float = 20.0

    def __post_init__(self):
        n_in, nh = np.shape(self.w_in)
        if np.shape(self.w_rec) != (nh, nh):
            raise ConfigError("w_rec must be n_hidden x n_hidden")
        if np.shape(self.w_out)[0] != nh:
            raise ConfigError("w_out must have n_hidden rows")
        if nh == 0 or nh % LANES:
            raise ConfigError(f"n_hidden must be a positive multiple of {LANES}")
        if self.n_out < 1 or n_in < 1:
            raise ConfigError("need at least one input and one output")
        for w in (self.w_in, self.w_rec, self.w_out):
            if np.min(w) < -32768 or np.max(w) > 32767:
                raise ConfigError("weights must be raw 16-bit values")
        if self.tau_out <= 0:
            raise ConfigError("tau_out must be positive")

    @property
    def n_in(self) -> int:
        return int(np.shape(self.w_in)[0])

    @property
    def n_hidden(self) -> int:
        return int(np.shape(self.w_in)[1])

    @property
    def n_out(self) -> int:
        return int(np.shape(self.w_out)[1])

    @property
    def nhv(self) -> int:
        return self.n_hidden // LANES

    @property
    def nov(self) -> int:
        return -(-self.n_out // LANES)


def random_topology(rng: np.random.Generator, n_in: int, n_hidden: int, n_out: int,
                    num: NumericConfig = NumericConfig(), in_scale: float = 0.5,
                    rec_scale: float = 0.1, out_scale: float = 0.1, **kw) -> RsnnTopology:
    """Gaussian weights (real std given by the scales), quantized and clipped."""
    fmt = num.weight_format

    def q(shape, std):
        w = np.rint(rng.normal(0.0, std, shape) / fmt.ulp)
        return np.clip(w, -32768, 32767).astype(np.int16)

    return RsnnTopology(q((n_in, n_hidden), in_scale), q((n_hidden, n_hidden), rec_scale / math.sqrt(n_hidden / 32)),
                        q((n_hidden, n_out), out_scale), **kw)


def random_events(rng: np.random.Generator, n_in: int, n_steps: int, rate: float) -> np.ndarray:
    """Bernoulli input spikes as a time-sorted (k, 2) array of (t, neuron)."""
    hits = rng.random((n_steps, n_in)) < rate
    t, n = np.nonzero(hits)
    return np.stack([t, n], axis=1).astype(np.int64).reshape(-1, 2)


def check_events(events, n_in: int, n_steps: int) -> np.ndarray:
    ev = np.asarray(events, dtype=np.int64).reshape(-1, 2)
    if len(ev):
        if ev[:, 0].min() < 0 or ev[:, 0].max() >= n_steps:
            raise ConfigError("event time outside [0, T)")
        if ev[:, 1].min() < 0 or ev[:, 1].max() >= n_in:
            raise ConfigError("event neuron outside [0, n_in)")
        if np.any(np.diff(ev[:, 0]) < 0):
            raise ConfigError("events must be sorted by time")
    return ev


@dataclass(frozen=True)
class OutputConstants:
    alpha: int
    alpha_shift: int


def output_constants(top: RsnnTopology, num: NumericConfig) -> OutputConstants:
    alpha = math.exp(-1.0 / top.tau_out)
    fmt = constant_format(alpha)
    fv = num.v_format.frac_bits
    return OutputConstants(quantize_const(alpha, fmt, "alpha_out"),
                           product_shift(fmt.frac_bits, fv, fv, "alpha_out*Y"))


@dataclass(frozen=True)
class RsnnRun:
    v: np.ndarray        # (T, n_hidden) raw V after each step
    a: np.ndarray        # (T, n_hidden) raw A after each step
    spikes: np.ndarray   # (T, n_hidden) bool, spikes emitted at each step
    y: np.ndarray        # (T, n_out) raw readout after each step
    stats: core.Stats

    def same_trajectory(self, other: "RsnnRun") -> bool:
        return all(np.array_equal(getattr(self, f), getattr(other, f)) for f in ("v", "a", "spikes", "y"))


def _pad_cols(w, n) -> np.ndarray:
    out = np.zeros((w.shape[0], n), dtype=np.int64)
    out[:, :w.shape[1]] = w
    return out


def _deliver(a: Assembler, row_reg: int, targets, state_reg: int, add):
    """Add weight vectors ``row_reg[j]`` into accumulators ``state_reg[acc]``.

    ``targets`` is a list of (weight vector index, accumulator vector index);
    handled in pairs so no accumulator is used right after its load.
    """
    w0, c0, w1, c1 = _DELIVER_REGS
    for k in range(0, len(targets), 2):
        pair = targets[k:k + 2]
        if len(pair) == 2:
            (ja, ia), (jb, ib) = pair
            a.vload(w0, ja, row_reg)
            a.vload(c0, ia, state_reg)
            a.vload(w1, jb, row_reg)
            a.vload(c1, ib, state_reg)
            add(c0, c0, w0)
            add(c1, c1, w1)
            a.vstore(c0, ia, state_reg)
            a.vstore(c1, ib, state_reg)
        else:
            (ja, ia), = pair
            a.vload(c0, ia, state_reg)
            a.vload(w0, ja, row_reg)
            add(c0, c0, w0)
            a.vstore(c0, ia, state_reg)


def build_rsnn(top: RsnnTopology, num: NumericConfig, events, n_steps: int, seed: int = 0,
               record: bool = True) -> Program:
    """Program simulating ``n_steps`` timesteps of ``top`` driven by ``events``."""
    if n_steps < 1:
        raise ConfigError("need at least one timestep")
    ev = check_events(events, top.n_in, n_steps)
    c = alif_constants(top.params, num)
    oc = output_constants(top, num)
    nhv, nov = top.nhv, top.nov
    rec_stride = 2 * nhv + nov

    a = Assembler()
    emit_seed(a, seed)
    state = a.vmem_alloc(3 * nhv + 2 * nov, name="state")
    w_in = a.vmem_vectors(np.asarray(top.w_in, np.int64).reshape(-1, LANES), name="w_in")
    w_rec_rows = np.concatenate([np.asarray(top.w_rec, np.int64), _pad_cols(np.asarray(top.w_out), nov * LANES)],
                                axis=1)
    w_rec = a.vmem_vectors(w_rec_rows.reshape(-1, LANES), name="w_rec")
    vmem_end = core.VMEM_BASE + core.MachineConfig().vmem_size
    if record:
        if a.symbols["w_rec"] + (len(w_rec_rows) * (nhv + nov) + n_steps * rec_stride) * VECTOR_BYTES > vmem_end:
            raise ConfigError("network and records do not fit in vector memory")
        records = a.vmem_alloc(n_steps * rec_stride, name="records")
    else:
        records = a.vmem_alloc(rec_stride, name="records")  # scratch, overwritten every step
    words = np.full(2 * len(ev) + 1, SENTINEL, dtype=np.int64)
    words[0:-1:2], words[1:-1:2] = ev[:, 0], ev[:, 1]
    ev_addr = a.dmem_words(words, name="events")
    raster = a.dmem_alloc(4 * nhv * (n_steps + 1), name="raster")
    a.symbols.update(n_steps=n_steps, record=record)

    add = a.vadd_s if num.saturating else a.vadd

    emit_alif_constants(a, c)
    a.vconst(VALPHA_OUT, oc.alpha, 31)
    a.li(1, 0)
    a.li(2, n_steps)
    a.li(3, ev_addr)
    a.li(4, raster)
    a.li(5, state)
    a.li(6, w_in)
    a.li(7, w_rec)
    a.li(8, nhv * VECTOR_BYTES)
    a.li(9, (nhv + nov) * VECTOR_BYTES)
    a.li(10, records)
    a.li(20, rec_stride * VECTOR_BYTES if record else 0)

    hidden_acc = [3 * j + 2 for j in range(nhv)]
    out_acc = [3 * nhv + 2 * o + 1 for o in range(nov)]

    # ---- spike processing
    step = a.here("step")
    ev_loop = a.here("events")
    ev_done = a.label("events_done")
    a.lw(11, 0, 3)
    a.bne(11, 1, ev_done)
    a.lw(12, 4, 3)
    a.addi(3, 3, 8)
    a.mul(13, 12, 8)
    a.add(13, 13, 6)
    _deliver(a, 13, list(zip(range(nhv), hidden_acc)), 5, add)
    a.j(ev_loop)
    a.bind(ev_done)

    word, bit, skip, word_next = a.label("word"), a.label("bit"), a.label("skip"), a.label("word_next")
    a.mv(17, 4)
    a.li(18, 0)
    a.li(19, nhv)
    a.bind(word)
    a.lw(14, 0, 17)
    a.mv(15, 18)
    a.beq(14, 0, word_next)
    a.bind(bit)
    a.andi(16, 14, 1)
    a.beq(16, 0, skip)
    a.mul(13, 15, 9)
    a.add(13, 13, 7)
    _deliver(a, 13, list(zip(range(nhv + nov), hidden_acc + out_acc)), 5, add)
    a.bind(skip)
    a.srli(14, 14, 1)
    a.addi(15, 15, 1)
    a.bne(14, 0, bit)
    a.bind(word_next)
    a.addi(17, 17, 4)
    a.addi(18, 18, LANES)
    a.addi(19, 19, -1)
    a.bne(19, 0, word)
    spikes_end = a.here("update")
    a.mark_region("spike_processing", step, spikes_end)

    # ---- hidden neuron update, one block per vector
    for j in range(nhv):
        a.vload(VV, 3 * j, 5)
        a.vload(VA, 3 * j + 1, 5)
        a.vload(VI, 3 * j + 2, 5)
        emit_alif_update(a, c, num)
        a.vstore(VV, 3 * j, 5)
        a.vstore(VA, 3 * j + 1, 5)
        a.vstore(VZERO, 3 * j + 2, 5)
        a.sw(XMASK, 4 * (nhv + j), 4)
        a.vstore(VV, 2 * j, 10)
        a.vstore(VA, 2 * j + 1, 10)
    update_end = a.here("readout")
    a.mark_region("neuron_update", spikes_end, update_end)

    # ---- readout: Y' = alpha_out * Y + I
    for o in range(nov):
        base = 3 * nhv + 2 * o
        a.vload(VY, base, 5)
        a.vload(VI, base + 1, 5)
        a.vmul(VY, VALPHA_OUT, VY, oc.alpha_shift, num.rounding)
        if c.conv is not None:
            a.vmul(VI, VI, 6, c.conv_shift, num.rounding)
        add(VY, VY, VI)
        a.vstore(VY, base, 5)
        a.vstore(VZERO, base + 1, 5)
        a.vstore(VY, 2 * nhv + o, 10)
    readout_end = a.here("step_end")
    a.mark_region("readout", update_end, readout_end)

    a.addi(1, 1, 1)
    a.addi(4, 4, 4 * nhv)
    a.add(10, 10, 20)
    a.bne(1, 2, step)
    end = a.here("end")
    a.mark_region("step_overhead", readout_end, end)
    a.ecall()
    return a.finalize()


def read_rsnn(m: core.MachineState, program: Program, top: RsnnTopology) -> RsnnRun:
    T = program.symbols["n_steps"]
    if not program.symbols["record"]:
        raise ConfigError("program was built without records")
    nhv, nov = top.nhv, top.nov
    rec = core.read_vectors(m, program.symbols["records"], T * (2 * nhv + nov)).astype(np.int64)
    rec = rec.reshape(T, 2 * nhv + nov, LANES)
    v = rec[:, 0:2 * nhv:2].reshape(T, -1)
    a = rec[:, 1:2 * nhv:2].reshape(T, -1)
    y = rec[:, 2 * nhv:].reshape(T, -1)[:, :top.n_out]
    words = core.read_words(m, program.symbols["raster"], (T + 1) * nhv).reshape(T + 1, nhv)[1:]
    spikes = np.array([np.concatenate([mask_to_bits(int(w)) for w in row]) for row in words]).reshape(T, -1)
    return RsnnRun(v, a, spikes, y, m.stats.copy())


def run_rsnn(top: RsnnTopology, num: NumericConfig, events, n_steps: int, seed: int = 0) -> RsnnRun:
    prog = build_rsnn(top, num, events, n_steps, seed)
    m = core.load(prog)
    core.run_checked(m)
    return read_rsnn(m, prog, top)


def rsnn_oracle(top: RsnnTopology, num: NumericConfig, events, n_steps: int, seed: int = 0) -> RsnnRun:
    """Host fixed-point mirror of ``build_rsnn``."""
    ev = check_events(events, top.n_in, n_steps)
    c = alif_constants(top.params, num)
    oc = output_constants(top, num)
    nh, nov = top.n_hidden, top.nov
    stochastic = num.rounding == RoundingMode.STOCHASTIC
    rng = VectorRngState(*seed_image(seed))
    w_in = np.asarray(top.w_in, np.int64)
    w_rec = np.asarray(top.w_rec, np.int64)
    w_out = _pad_cols(np.asarray(top.w_out), nov * LANES)

    V = np.zeros(nh, np.int64)
    A = np.zeros(nh, np.int64)
    I = np.zeros(nh, np.int64)
    Y = np.zeros(nov * LANES, np.int64)
    J = np.zeros(nov * LANES, np.int64)
    prev = np.zeros(nh, bool)
    vs, as_, ss, ys = [], [], [], []
    by_t = {}
    for t, n in ev:
        by_t.setdefault(int(t), []).append(int(n))

    def mul(x, y, shift):
        return mul_raw(x, y, shift, num.rounding, rng.next() if stochastic else 0)

    for t in range(n_steps):
        for n in by_t.get(t, ()):
            I = num.add(I, w_in[n])
        for n in np.flatnonzero(prev):
            I = num.add(I, w_rec[n])
            J = num.add(J, w_out[n])
        S = np.zeros(nh, bool)
        for j in range(top.nhv):
            sl = slice(j * LANES, (j + 1) * LANES)
            V[sl], A[sl], S[sl] = alif_vector_step(V[sl], A[sl], I[sl], c, num, rng)
        I[:] = 0
        for o in range(nov):
            sl = slice(o * LANES, (o + 1) * LANES)
            y = mul(oc.alpha, Y[sl], oc.alpha_shift)
            j_in = J[sl] if c.conv is None else mul(J[sl], c.conv, c.conv_shift)
            Y[sl] = num.add(y, j_in)
        J[:] = 0
        prev = S
        vs.append(V.copy())
        as_.append(A.copy())
        ss.append(S)
        ys.append(Y[:top.n_out].copy())
    return RsnnRun(np.array(vs), np.array(as_), np.array(ss), np.array(ys), core.Stats())
