"""Poisson variates by Knuth's direct method, 32 lanes at a time.

Per lane: p starts just below one and is multiplied by a fresh uniform draw
(S0.15, round-to-zero) until it falls to e^-lambda or below; the variate is
the number of multiplies that left p above the limit.  A lane that has
finished keeps multiplying, but since p only shrinks its count is frozen by
the VTLT/VSEL pair and the vector loop exits once no lane is still active.

e^-lambda is only a couple of ulps in S0.15 once lambda approaches 10, so
larger rates are split into chunks of at most ``CHUNK_LAMBDA``, each run
through the loop into the same counter (a sum of Poisson variates is Poisson).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import core
from ..assembler import LANES, VECTOR_BYTES, Assembler, Program
from ..fixedpoint import RoundingMode, mul_raw
from ..rng import VectorRngState, seed_image
from .alif import emit_seed

P_START = 0x7FFF
UNIFORM_SHIFT = 1  # 16-bit draw >> 1 -> u in [0, 1) as S0.15
CHUNK_LAMBDA = 5.0
MAX_LAMBDA = 100.0


class LambdaOutOfRange(ValueError):
    pass


def chunks(lam: float) -> tuple[int, float]:
    """(number of chunks, per-chunk lambda)."""
    if not (lam > 0 and math.isfinite(lam)):
        raise LambdaOutOfRange(f"lambda must be positive, got {lam}")
    if lam > MAX_LAMBDA:
        raise LambdaOutOfRange(f"lambda={lam} exceeds {MAX_LAMBDA}")
    n = max(1, math.ceil(lam / CHUNK_LAMBDA))
    return n, lam / n


def limit_raw(lam: float) -> int:
    """e^-lambda in S0.15, round to nearest.

    Clamped to ``P_START``: a rate too small to resolve then yields all zeros,
    since no product can exceed the limit.
    """
    if not (lam > 0 and math.isfinite(lam)):
        raise LambdaOutOfRange(f"lambda must be positive, got {lam}")
    raw = int(math.floor(math.exp(-lam) * 32768 + 0.5))
    if raw < 1:
        raise LambdaOutOfRange(f"e^-{lam} underflows S0.15")
    return min(raw, P_START)


@dataclass(frozen=True)
class PoissonRun:
    counts: np.ndarray   # (n_variates,) int
    cycles: int          # cycles spent in the generator loop
    n_vectors: int
    stats: core.Stats

    @property
    def cycles_per_vector(self) -> float:
        return self.cycles / self.n_vectors


def _n_vectors(n_variates: int) -> int:
    if n_variates < 1:
        raise ValueError("need at least one variate")
    return -(-n_variates // LANES)


def build_poisson(lam: float, n_variates: int, seed: int = 0) -> Program:
    """Program writing ceil(n/32) vectors of counts to ``counts`` in vmem."""
    n_chunks, lam_c = chunks(lam)
    L = limit_raw(lam_c)
    nv = _n_vectors(n_variates)
    a = Assembler()
    emit_seed(a, seed)
    out = a.vmem_alloc(nv, name="counts")
    a.symbols["n_variates"] = n_variates

    vzero, vlim, vstart, vone, p, k, u, t = 0, 1, 2, 3, 4, 5, 6, 7
    a.vsub(vzero, vzero, vzero)
    a.vconst(vlim, L, 31)
    a.vconst(vstart, P_START, 31)
    a.vconst(vone, 1, 31)
    a.li(1, out)
    a.li(2, nv)

    outer = a.here("outer")
    a.vsub(k, k, k)
    for _ in range(n_chunks):
        a.vadd(p, vstart, vzero)
        inner = a.here()
        for _ in range(2):
            a.vrng(u, UNIFORM_SHIFT)
            a.vmul(p, p, u, 15, RoundingMode.ROUND_TO_ZERO)
            a.vtlt(5, vlim, p)
            a.vadd(t, k, vone)
            a.vsel(k, t, k, 5)
        a.bne(5, 0, inner)
    a.vstore(k, 0, 1)
    a.addi(1, 1, VECTOR_BYTES)
    a.addi(2, 2, -1)
    a.bne(2, 0, outer)
    end = a.here("end")
    a.mark_region("poisson", outer, end)
    a.ecall()
    return a.finalize()


def read_poisson(m: core.MachineState, program: Program) -> PoissonRun:
    n = program.symbols["n_variates"]
    nv = _n_vectors(n)
    counts = core.read_vectors(m, program.symbols["counts"], nv).astype(np.int64).reshape(-1)[:n]
    return PoissonRun(counts, m.stats.region_cycles["poisson"], nv, m.stats.copy())


def run_poisson(lam: float, n_variates: int, seed: int = 0) -> PoissonRun:
    prog = build_poisson(lam, n_variates, seed)
    m = core.load(prog)
    core.run_checked(m)
    return read_poisson(m, prog)


def poisson_oracle(lam: float, n_variates: int, seed: int = 0) -> np.ndarray:
    """Host replay of ``build_poisson``: same draws, same unrolling."""
    n_chunks, lam_c = chunks(lam)
    L = limit_raw(lam_c)
    rng = VectorRngState(*seed_image(seed))
    out = []
    for _ in range(_n_vectors(n_variates)):
        k = np.zeros(LANES, dtype=np.int64)
        for _ in range(n_chunks):
            p = np.full(LANES, P_START, dtype=np.int64)
            active = True
            while active:
                for _ in range(2):
                    u = rng.next() >> UNIFORM_SHIFT
                    p = mul_raw(p, u, 15, RoundingMode.ROUND_TO_ZERO)
                    live = L < p
                    k = np.where(live, k + 1, k)
                active = bool(live.any())
        out.append(k)
    return np.concatenate(out)[:n_variates]
