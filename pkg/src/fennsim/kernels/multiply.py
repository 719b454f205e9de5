"""Batch S0.15 multiplies on the vector unit, one pass per rounding mode."""

from __future__ import annotations

import numpy as np

from .. import core
from ..assembler import LANES, VECTOR_BYTES, Assembler, Program
from ..fixedpoint import RoundingMode
from .alif import emit_seed

MODES = (RoundingMode.ROUND_TO_ZERO, RoundingMode.ROUND_TO_NEAREST, RoundingMode.STOCHASTIC)


def _vectors(raw) -> np.ndarray:
    raw = np.asarray(raw, dtype=np.int64).reshape(-1)
    pad = (-len(raw)) % LANES
    return np.concatenate([raw, np.zeros(pad, np.int64)]).reshape(-1, LANES)


def build_multiply(a_raw, b_raw, shift: int = 15, modes=MODES, seed: int = 0) -> Program:
    """Multiply ``a_raw * b_raw`` elementwise once per mode.

    Results land in vmem symbols ``product_<mode value>``.
    """
    va, vb = _vectors(a_raw), _vectors(b_raw)
    if va.shape != vb.shape:
        raise ValueError("operand arrays differ in length")
    n = len(np.asarray(a_raw).reshape(-1))
    asm = Assembler()
    emit_seed(asm, seed)
    a_addr = asm.vmem_vectors(va, name="a")
    b_addr = asm.vmem_vectors(vb, name="b")
    outs = [asm.vmem_alloc(len(va), name=f"product_{int(m)}") for m in modes]
    asm.symbols["n"] = n
    asm.symbols["modes"] = tuple(int(m) for m in modes)
    for mode, out in zip(modes, outs):
        asm.li(1, a_addr)
        asm.li(2, b_addr)
        asm.li(3, out)
        asm.li(4, len(va))
        loop = asm.here()
        asm.vload(1, 0, 1)
        asm.vload(2, 0, 2)
        asm.addi(1, 1, VECTOR_BYTES)
        asm.vmul(3, 1, 2, shift, mode)
        asm.addi(2, 2, VECTOR_BYTES)
        asm.vstore(3, 0, 3)
        asm.addi(3, 3, VECTOR_BYTES)
        asm.addi(4, 4, -1)
        asm.bne(4, 0, loop)
    asm.ecall()
    return asm.finalize()


def run_multiply(a_raw, b_raw, shift: int = 15, modes=MODES, seed: int = 0) -> dict:
    """{mode: raw products} computed on the simulator."""
    prog = build_multiply(a_raw, b_raw, shift, modes, seed)
    m = core.load(prog)
    core.run_checked(m)
    n = prog.symbols["n"]
    nv = -(-n // LANES)
    return {RoundingMode(k): core.read_vectors(m, prog.symbols[f"product_{k}"], nv).astype(np.int64).reshape(-1)[:n]
            for k in prog.symbols["modes"]}
