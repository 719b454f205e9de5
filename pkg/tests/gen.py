"""Random instruction generators shared by the ISA tests and the acceptance suite."""

import numpy as np

from fennsim.fixedpoint import RoundingMode
from fennsim.isa import OP_INFO, Fmt, Instruction, Op

REG = (0, 31)


def s(bits):
    return (-(1 << (bits - 1)), (1 << (bits - 1)) - 1)


# fields each format carries, with inclusive ranges (written out independently of the isa module)
FIELDS = {
    Fmt.R: {"rd": REG, "rs1": REG, "rs2": REG},
    Fmt.I: {"rd": REG, "rs1": REG, "imm": s(12)},
    Fmt.SHIFT: {"rd": REG, "rs1": REG, "imm": (0, 31)},
    Fmt.LOAD: {"rd": REG, "rs1": REG, "imm": s(12)},
    Fmt.STORE: {"rs1": REG, "rs2": REG, "imm": s(12)},
    Fmt.BRANCH: {"rs1": REG, "rs2": REG, "imm": s(13)},
    Fmt.U: {"rd": REG, "imm": (0, (1 << 20) - 1)},
    Fmt.J: {"rd": REG, "imm": s(21)},
    Fmt.NONE: {},
    Fmt.CSR: {"rd": REG},
    Fmt.VR: {"rd": REG, "rs1": REG, "rs2": REG},
    Fmt.VMUL: {"rd": REG, "rs1": REG, "rs2": REG, "shift": (0, 15)},
    Fmt.VLOAD: {"rd": REG, "rs1": REG, "imm": s(11)},
    Fmt.VSTORE: {"rs1": REG, "rs2": REG, "imm": s(11)},
    Fmt.VSEED: {"rs1": REG, "imm": s(11)},
    Fmt.VBCAST: {"rd": REG, "rs1": REG},
    Fmt.VEXTRACT: {"rd": REG, "rs1": REG, "imm": (0, 31)},
    Fmt.VRNG: {"rd": REG, "shift": (0, 15)},
    Fmt.VCMP: {"rd": REG, "rs1": REG, "rs2": REG},
    Fmt.VSEL: {"rd": REG, "rs1": REG, "rs2": REG, "rs3": REG},
}


def random_instruction(g: np.random.Generator, op: Op | None = None) -> Instruction:
    ops = list(Op)
    op = op or ops[g.integers(len(ops))]
    fmt = OP_INFO[op].fmt
    kw = {}
    for name, (lo, hi) in FIELDS[fmt].items():
        # bias towards the edges of each range now and then
        r = g.random()
        kw[name] = lo if r < 0.05 else hi if r < 0.1 else int(g.integers(lo, hi + 1))
    if fmt in (Fmt.BRANCH, Fmt.J):
        kw["imm"] &= ~1
    if fmt is Fmt.VMUL:
        kw["rmode"] = RoundingMode(int(g.integers(3)))
    return Instruction(op, **kw)


# straight-line scalar programs for the differential tests
BASE_REG = 31
_ALU_R = [Op.ADD, Op.SUB, Op.SLL, Op.SLT, Op.SLTU, Op.XOR, Op.SRL, Op.SRA, Op.OR, Op.AND, Op.MUL]
_ALU_I = [Op.ADDI, Op.SLTI, Op.SLTIU, Op.XORI, Op.ORI, Op.ANDI]
_SHIFT_I = [Op.SLLI, Op.SRLI, Op.SRAI]
_LOADS = {Op.LB: 1, Op.LH: 2, Op.LW: 4, Op.LBU: 1, Op.LHU: 2}
_STORES = {Op.SB: 1, Op.SH: 2, Op.SW: 4}


def _interesting_word(g):
    r = g.random()
    if r < 0.2:
        return int(g.choice([0, 1, 0xFFFFFFFF, 0x80000000, 0x7FFFFFFF, 0xFFFF, 0x8000]))
    return int(g.integers(0, 1 << 32))


def straight_line_program(g: np.random.Generator, n: int, base: int):
    """Assembler with random x1..x30, x31 = ``base``, then ``n`` random scalar instructions and ECALL.

    Memory accesses use x31 as the base with naturally aligned offsets, so
    every access stays within ``base - 2048 .. base + 2047``.
    """
    from fennsim.assembler import Assembler

    a = Assembler()
    for r in range(1, 31):
        a.li(r, _interesting_word(g))
    a.li(BASE_REG, base)
    kinds = ["r", "i", "sh", "lui", "auipc", "load", "store"]
    p = np.array([0.35, 0.2, 0.1, 0.05, 0.05, 0.12, 0.13])
    for _ in range(n):
        kind = kinds[g.choice(len(kinds), p=p)]
        rd = int(g.integers(0, 31))
        rs1, rs2 = (int(v) for v in g.integers(0, 31, 2))
        if kind == "r":
            a.emit(Instruction(_ALU_R[g.integers(len(_ALU_R))], rd=rd, rs1=rs1, rs2=rs2))
        elif kind == "i":
            a.emit(Instruction(_ALU_I[g.integers(len(_ALU_I))], rd=rd, rs1=rs1, imm=int(g.integers(-2048, 2048))))
        elif kind == "sh":
            a.emit(Instruction(_SHIFT_I[g.integers(3)], rd=rd, rs1=rs1, imm=int(g.integers(0, 32))))
        elif kind in ("lui", "auipc"):
            a.emit(Instruction(Op.LUI if kind == "lui" else Op.AUIPC, rd=rd, imm=int(g.integers(0, 1 << 20))))
        else:
            table = _LOADS if kind == "load" else _STORES
            ops = list(table)
            op = ops[g.integers(len(ops))]
            size = table[op]
            imm = int(g.integers(-2048 // size, 2048 // size)) * size
            if kind == "load":
                a.emit(Instruction(op, rd=rd, rs1=BASE_REG, imm=imm))
            else:
                a.emit(Instruction(op, rs1=BASE_REG, rs2=rs2, imm=imm))
    a.ecall()
    return a.finalize()
