"""Instruction set: an RV32 scalar subset plus the FeNN vector extension.

Scalar instructions use their standard RV32I/M encodings (quadrant ``11``).
Vector instructions occupy quadrant ``10`` with this layout::

    bits   1:0   quadrant = 0b10
    bits   6:2   major opcode
    bits  11:7   rd / vd          (VSTORE: imm[4:0])
    bits 14:12   minor opcode
    bits 19:15   rs1 / vs1        (VSEL: mask register rs)
    bits 24:20   rs2 / vs2        (VEXTRACT: lane, VRNG: bits 23:20 shift)
    bits 28:25   VMUL shift       (VSTORE: imm[10:5] in 30:25)
    bits 30:29   VMUL rounding mode
    bits 31:27   VSEL vs1

    major 0  VALU  minor 0 VADD, 1 VADD.S, 2 VSUB, 3 VSUB.S     vd, vs1, vs2
    major 1  VMUL  minor 0                                       vd, vs1, vs2, shift, rmode
    major 2  VMEM  minor 0 VLOAD   vd, imm(rs1)    imm in 30:20
                   minor 1 VSTORE  vs2, imm(rs1)   imm in 30:25 | 11:7
                   minor 2 VLOAD.R0 imm(rs1), 3 VLOAD.R1 imm(rs1)
    major 3  VMOVE minor 0 VBCAST vd, rs1; 1 VEXTRACT rd, vs1, lane; 2 VRNG vd, shift
    major 4  VCMP  minor 0 VTEQ, 1 VTNE, 2 VTLT, 3 VTGE         rd, vs1, vs2
    major 5  VSEL  minor 0                                       vd, vs1, vs2, rs

Vector memory immediates are signed 11-bit counts of whole vectors (64
bytes).  Every bit not named above must be zero; anything else decodes as
illegal, which keeps decode an exact inverse of encode.

In the ``Instruction`` record VSEL keeps vs1 in ``rs3`` and its mask register
in ``rs1``, mirroring the bit positions.  VRNG's ``shift`` is a logical right
shift applied to each lane's raw 16-bit draw (0 = raw word).

Disassembly is one instruction per line, mnemonic then comma-separated
operands, e.g. ``vmul v1, v2, v3, 15, sr`` or ``lw x5, -4(x2)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .fixedpoint import RoundingMode


class IllegalInstruction(ValueError):
    pass


class FieldOverflow(ValueError):
    pass


class OpClass(str, enum.Enum):
    SCALAR_ALU = "ScalarALU"
    SCALAR_MEMORY = "ScalarMemory"
    CONTROL = "Control"
    VECTOR_ALU = "VectorALU"
    VECTOR_MEMORY = "VectorMemory"
    VECTOR_MOVE_MASK_RNG = "VectorMoveMaskRng"


class Fmt(enum.Enum):
    R = "r"            # rd, rs1, rs2
    I = "i"            # rd, rs1, imm
    SHIFT = "shift"    # rd, rs1, shamt
    LOAD = "load"      # rd, imm(rs1)
    STORE = "store"    # rs2, imm(rs1)
    BRANCH = "branch"  # rs1, rs2, imm
    U = "u"            # rd, imm20
    J = "j"            # rd, imm
    NONE = "none"
    CSR = "csr"        # rd
    VR = "vr"          # vd, vs1, vs2
    VMUL = "vmul"      # vd, vs1, vs2, shift, rmode
    VLOAD = "vload"    # vd, imm(rs1)
    VSTORE = "vstore"  # vs2, imm(rs1)
    VSEED = "vseed"    # imm(rs1)
    VBCAST = "vbcast"  # vd, rs1
    VEXTRACT = "vextract"  # rd, vs1, lane
    VRNG = "vrng"      # vd, shift
    VCMP = "vcmp"      # rd, vs1, vs2
    VSEL = "vsel"      # vd, vs1(rs3), vs2, rs1


class Op(str, enum.Enum):
    # scalar
    LUI = "lui"
    AUIPC = "auipc"
    JAL = "jal"
    JALR = "jalr"
    BEQ = "beq"
    BNE = "bne"
    BLT = "blt"
    BGE = "bge"
    BLTU = "bltu"
    BGEU = "bgeu"
    LB = "lb"
    LH = "lh"
    LW = "lw"
    LBU = "lbu"
    LHU = "lhu"
    SB = "sb"
    SH = "sh"
    SW = "sw"
    ADDI = "addi"
    SLTI = "slti"
    SLTIU = "sltiu"
    XORI = "xori"
    ORI = "ori"
    ANDI = "andi"
    SLLI = "slli"
    SRLI = "srli"
    SRAI = "srai"
    ADD = "add"
    SUB = "sub"
    SLL = "sll"
    SLT = "slt"
    SLTU = "sltu"
    XOR = "xor"
    SRL = "srl"
    SRA = "sra"
    OR = "or"
    AND = "and"
    MUL = "mul"
    ECALL = "ecall"
    RDCYCLE = "rdcycle"
    # vector
    VADD = "vadd"
    VADD_S = "vadd.s"
    VSUB = "vsub"
    VSUB_S = "vsub.s"
    VMUL = "vmul"
    VLOAD = "vload"
    VSTORE = "vstore"
    VLOAD_R0 = "vload.r0"
    VLOAD_R1 = "vload.r1"
    VBCAST = "vbcast"
    VEXTRACT = "vextract"
    VRNG = "vrng"
    VTEQ = "vteq"
    VTNE = "vtne"
    VTLT = "vtlt"
    VTGE = "vtge"
    VSEL = "vsel"


@dataclass(frozen=True)
class OpInfo:
    fmt: Fmt
    cls: OpClass
    opcode: int          # 7-bit scalar opcode, or vector major (5 bits)
    funct3: int = 0
    funct7: int = 0


_S = OpClass
SCALAR_OPS: dict[Op, OpInfo] = {
    Op.LUI: OpInfo(Fmt.U, _S.SCALAR_ALU, 0x37),
    Op.AUIPC: OpInfo(Fmt.U, _S.SCALAR_ALU, 0x17),
    Op.JAL: OpInfo(Fmt.J, _S.CONTROL, 0x6F),
    Op.JALR: OpInfo(Fmt.I, _S.CONTROL, 0x67, 0),
    Op.BEQ: OpInfo(Fmt.BRANCH, _S.CONTROL, 0x63, 0),
    Op.BNE: OpInfo(Fmt.BRANCH, _S.CONTROL, 0x63, 1),
    Op.BLT: OpInfo(Fmt.BRANCH, _S.CONTROL, 0x63, 4),
    Op.BGE: OpInfo(Fmt.BRANCH, _S.CONTROL, 0x63, 5),
    Op.BLTU: OpInfo(Fmt.BRANCH, _S.CONTROL, 0x63, 6),
    Op.BGEU: OpInfo(Fmt.BRANCH, _S.CONTROL, 0x63, 7),
    Op.LB: OpInfo(Fmt.LOAD, _S.SCALAR_MEMORY, 0x03, 0),
    Op.LH: OpInfo(Fmt.LOAD, _S.SCALAR_MEMORY, 0x03, 1),
    Op.LW: OpInfo(Fmt.LOAD, _S.SCALAR_MEMORY, 0x03, 2),
    Op.LBU: OpInfo(Fmt.LOAD, _S.SCALAR_MEMORY, 0x03, 4),
    Op.LHU: OpInfo(Fmt.LOAD, _S.SCALAR_MEMORY, 0x03, 5),
    Op.SB: OpInfo(Fmt.STORE, _S.SCALAR_MEMORY, 0x23, 0),
    Op.SH: OpInfo(Fmt.STORE, _S.SCALAR_MEMORY, 0x23, 1),
    Op.SW: OpInfo(Fmt.STORE, _S.SCALAR_MEMORY, 0x23, 2),
    Op.ADDI: OpInfo(Fmt.I, _S.SCALAR_ALU, 0x13, 0),
    Op.SLTI: OpInfo(Fmt.I, _S.SCALAR_ALU, 0x13, 2),
    Op.SLTIU: OpInfo(Fmt.I, _S.SCALAR_ALU, 0x13, 3),
    Op.XORI: OpInfo(Fmt.I, _S.SCALAR_ALU, 0x13, 4),
    Op.ORI: OpInfo(Fmt.I, _S.SCALAR_ALU, 0x13, 6),
    Op.ANDI: OpInfo(Fmt.I, _S.SCALAR_ALU, 0x13, 7),
    Op.SLLI: OpInfo(Fmt.SHIFT, _S.SCALAR_ALU, 0x13, 1, 0x00),
    Op.SRLI: OpInfo(Fmt.SHIFT, _S.SCALAR_ALU, 0x13, 5, 0x00),
    Op.SRAI: OpInfo(Fmt.SHIFT, _S.SCALAR_ALU, 0x13, 5, 0x20),
    Op.ADD: OpInfo(Fmt.R, _S.SCALAR_ALU, 0x33, 0, 0x00),
    Op.SUB: OpInfo(Fmt.R, _S.SCALAR_ALU, 0x33, 0, 0x20),
    Op.SLL: OpInfo(Fmt.R, _S.SCALAR_ALU, 0x33, 1, 0x00),
    Op.SLT: OpInfo(Fmt.R, _S.SCALAR_ALU, 0x33, 2, 0x00),
    Op.SLTU: OpInfo(Fmt.R, _S.SCALAR_ALU, 0x33, 3, 0x00),
    Op.XOR: OpInfo(Fmt.R, _S.SCALAR_ALU, 0x33, 4, 0x00),
    Op.SRL: OpInfo(Fmt.R, _S.SCALAR_ALU, 0x33, 5, 0x00),
    Op.SRA: OpInfo(Fmt.R, _S.SCALAR_ALU, 0x33, 5, 0x20),
    Op.OR: OpInfo(Fmt.R, _S.SCALAR_ALU, 0x33, 6, 0x00),
    Op.AND: OpInfo(Fmt.R, _S.SCALAR_ALU, 0x33, 7, 0x00),
    Op.MUL: OpInfo(Fmt.R, _S.SCALAR_ALU, 0x33, 0, 0x01),
    Op.ECALL: OpInfo(Fmt.NONE, _S.CONTROL, 0x73, 0),
    Op.RDCYCLE: OpInfo(Fmt.CSR, _S.SCALAR_ALU, 0x73, 2),
}

VECTOR_OPS: dict[Op, OpInfo] = {
    Op.VADD: OpInfo(Fmt.VR, _S.VECTOR_ALU, 0, 0),
    Op.VADD_S: OpInfo(Fmt.VR, _S.VECTOR_ALU, 0, 1),
    Op.VSUB: OpInfo(Fmt.VR, _S.VECTOR_ALU, 0, 2),
    Op.VSUB_S: OpInfo(Fmt.VR, _S.VECTOR_ALU, 0, 3),
    Op.VMUL: OpInfo(Fmt.VMUL, _S.VECTOR_ALU, 1, 0),
    Op.VLOAD: OpInfo(Fmt.VLOAD, _S.VECTOR_MEMORY, 2, 0),
    Op.VSTORE: OpInfo(Fmt.VSTORE, _S.VECTOR_MEMORY, 2, 1),
    Op.VLOAD_R0: OpInfo(Fmt.VSEED, _S.VECTOR_MEMORY, 2, 2),
    Op.VLOAD_R1: OpInfo(Fmt.VSEED, _S.VECTOR_MEMORY, 2, 3),
    Op.VBCAST: OpInfo(Fmt.VBCAST, _S.VECTOR_MOVE_MASK_RNG, 3, 0),
    Op.VEXTRACT: OpInfo(Fmt.VEXTRACT, _S.VECTOR_MOVE_MASK_RNG, 3, 1),
    Op.VRNG: OpInfo(Fmt.VRNG, _S.VECTOR_MOVE_MASK_RNG, 3, 2),
    Op.VTEQ: OpInfo(Fmt.VCMP, _S.VECTOR_MOVE_MASK_RNG, 4, 0),
    Op.VTNE: OpInfo(Fmt.VCMP, _S.VECTOR_MOVE_MASK_RNG, 4, 1),
    Op.VTLT: OpInfo(Fmt.VCMP, _S.VECTOR_MOVE_MASK_RNG, 4, 2),
    Op.VTGE: OpInfo(Fmt.VCMP, _S.VECTOR_MOVE_MASK_RNG, 4, 3),
    Op.VSEL: OpInfo(Fmt.VSEL, _S.VECTOR_MOVE_MASK_RNG, 5, 0),
}

OP_INFO: dict[Op, OpInfo] = {**SCALAR_OPS, **VECTOR_OPS}

VECTOR_IMM_BITS = 11


def _signed_range(bits: int) -> tuple[int, int]:
    return -(1 << (bits - 1)), (1 << (bits - 1)) - 1


def _sext(value: int, bits: int) -> int:
    value &= (1 << bits) - 1
    return value - (1 << bits) if value >> (bits - 1) else value


@dataclass(frozen=True)
class Instruction:
    """One decoded instruction.  Fields a variant does not use stay zero."""

    op: Op
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    rs3: int = 0
    imm: int = 0
    shift: int = 0
    rmode: RoundingMode = RoundingMode.ROUND_TO_ZERO

    def __post_init__(self):
        if not isinstance(self.op, Op):
            object.__setattr__(self, "op", Op(self.op))
        if not isinstance(self.rmode, RoundingMode):
            object.__setattr__(self, "rmode", RoundingMode(self.rmode))
        _validate(self)

    @property
    def info(self) -> OpInfo:
        return OP_INFO[self.op]

    @property
    def is_vector(self) -> bool:
        return self.op in VECTOR_OPS

    def __str__(self):
        return disassemble(self)


# Which Instruction fields each format uses, with their legal ranges.
_REG = (0, 31)
_FIELDS: dict[Fmt, dict[str, tuple[int, int]]] = {
    Fmt.R: {"rd": _REG, "rs1": _REG, "rs2": _REG},
    Fmt.I: {"rd": _REG, "rs1": _REG, "imm": _signed_range(12)},
    Fmt.SHIFT: {"rd": _REG, "rs1": _REG, "imm": (0, 31)},
    Fmt.LOAD: {"rd": _REG, "rs1": _REG, "imm": _signed_range(12)},
    Fmt.STORE: {"rs1": _REG, "rs2": _REG, "imm": _signed_range(12)},
    Fmt.BRANCH: {"rs1": _REG, "rs2": _REG, "imm": _signed_range(13)},
    Fmt.U: {"rd": _REG, "imm": (0, (1 << 20) - 1)},
    Fmt.J: {"rd": _REG, "imm": _signed_range(21)},
    Fmt.NONE: {},
    Fmt.CSR: {"rd": _REG},
    Fmt.VR: {"rd": _REG, "rs1": _REG, "rs2": _REG},
    Fmt.VMUL: {"rd": _REG, "rs1": _REG, "rs2": _REG, "shift": (0, 15)},
    Fmt.VLOAD: {"rd": _REG, "rs1": _REG, "imm": _signed_range(VECTOR_IMM_BITS)},
    Fmt.VSTORE: {"rs1": _REG, "rs2": _REG, "imm": _signed_range(VECTOR_IMM_BITS)},
    Fmt.VSEED: {"rs1": _REG, "imm": _signed_range(VECTOR_IMM_BITS)},
    Fmt.VBCAST: {"rd": _REG, "rs1": _REG},
    Fmt.VEXTRACT: {"rd": _REG, "rs1": _REG, "imm": (0, 31)},
    Fmt.VRNG: {"rd": _REG, "shift": (0, 15)},
    Fmt.VCMP: {"rd": _REG, "rs1": _REG, "rs2": _REG},
    Fmt.VSEL: {"rd": _REG, "rs1": _REG, "rs2": _REG, "rs3": _REG},
}
_ALL_FIELDS = ("rd", "rs1", "rs2", "rs3", "imm", "shift")


def _validate(i: Instruction):
    info = OP_INFO[i.op]
    used = _FIELDS[info.fmt]
    for name in _ALL_FIELDS:
        value = getattr(i, name)
        if name in used:
            lo, hi = used[name]
            if not lo <= value <= hi:
                raise FieldOverflow(f"{i.op.value}: {name}={value} outside [{lo}, {hi}]")
        elif value != 0:
            raise FieldOverflow(f"{i.op.value} has no {name} field (got {value})")
    if info.fmt in (Fmt.BRANCH, Fmt.J) and i.imm & 1:
        raise FieldOverflow(f"{i.op.value}: branch offset {i.imm} is not 2-byte aligned")
    if info.fmt is not Fmt.VMUL and i.rmode != RoundingMode.ROUND_TO_ZERO:
        raise FieldOverflow(f"{i.op.value} has no rounding-mode field")
    if info.fmt is Fmt.VMUL and i.rmode not in RoundingMode:
        raise FieldOverflow(f"bad rounding mode {i.rmode}")


def fits_branch_offset(offset: int) -> bool:
    lo, hi = _signed_range(13)
    return lo <= offset <= hi and not offset & 1


def fits_jal_offset(offset: int) -> bool:
    lo, hi = _signed_range(21)
    return lo <= offset <= hi and not offset & 1


# --------------------------------------------------------------------------
# encode

def encode(i: Instruction) -> int:
    info = i.info
    if i.is_vector:
        return _encode_vector(i, info)
    return _encode_scalar(i, info)


def _encode_scalar(i: Instruction, info: OpInfo) -> int:
    f = info.fmt
    w = info.opcode
    if f is Fmt.R:
        return w | i.rd << 7 | info.funct3 << 12 | i.rs1 << 15 | i.rs2 << 20 | info.funct7 << 25
    if f in (Fmt.I, Fmt.LOAD):
        return w | i.rd << 7 | info.funct3 << 12 | i.rs1 << 15 | (i.imm & 0xFFF) << 20
    if f is Fmt.SHIFT:
        return w | i.rd << 7 | info.funct3 << 12 | i.rs1 << 15 | i.imm << 20 | info.funct7 << 25
    if f is Fmt.STORE:
        imm = i.imm & 0xFFF
        return (w | (imm & 0x1F) << 7 | info.funct3 << 12 | i.rs1 << 15 | i.rs2 << 20
                | (imm >> 5) << 25)
    if f is Fmt.BRANCH:
        imm = i.imm & 0x1FFF
        return (w | ((imm >> 11) & 1) << 7 | ((imm >> 1) & 0xF) << 8 | info.funct3 << 12
                | i.rs1 << 15 | i.rs2 << 20 | ((imm >> 5) & 0x3F) << 25 | ((imm >> 12) & 1) << 31)
    if f is Fmt.U:
        return w | i.rd << 7 | i.imm << 12
    if f is Fmt.J:
        imm = i.imm & 0x1FFFFF
        return (w | i.rd << 7 | ((imm >> 12) & 0xFF) << 12 | ((imm >> 11) & 1) << 20
                | ((imm >> 1) & 0x3FF) << 21 | ((imm >> 20) & 1) << 31)
    if f is Fmt.NONE:
        return w
    if f is Fmt.CSR:
        return w | i.rd << 7 | info.funct3 << 12 | 0xC00 << 20
    raise AssertionError(f)


def _encode_vector(i: Instruction, info: OpInfo) -> int:
    f = info.fmt
    w = 0b10 | info.opcode << 2 | info.funct3 << 12
    imm = i.imm & ((1 << VECTOR_IMM_BITS) - 1)
    if f in (Fmt.VR, Fmt.VCMP):
        return w | i.rd << 7 | i.rs1 << 15 | i.rs2 << 20
    if f is Fmt.VMUL:
        return w | i.rd << 7 | i.rs1 << 15 | i.rs2 << 20 | i.shift << 25 | int(i.rmode) << 29
    if f is Fmt.VLOAD:
        return w | i.rd << 7 | i.rs1 << 15 | imm << 20
    if f is Fmt.VSEED:
        return w | i.rs1 << 15 | imm << 20
    if f is Fmt.VSTORE:
        return w | (imm & 0x1F) << 7 | i.rs1 << 15 | i.rs2 << 20 | (imm >> 5) << 25
    if f is Fmt.VBCAST:
        return w | i.rd << 7 | i.rs1 << 15
    if f is Fmt.VEXTRACT:
        return w | i.rd << 7 | i.rs1 << 15 | i.imm << 20
    if f is Fmt.VRNG:
        return w | i.rd << 7 | i.shift << 20
    if f is Fmt.VSEL:
        return w | i.rd << 7 | i.rs1 << 15 | i.rs2 << 20 | i.rs3 << 27
    raise AssertionError(f)


# --------------------------------------------------------------------------
# decode

_SCALAR_BY_KEY: dict[tuple, Op] = {}
for _op, _info in SCALAR_OPS.items():
    if _info.fmt in (Fmt.R, Fmt.SHIFT):
        _SCALAR_BY_KEY[(_info.opcode, _info.funct3, _info.funct7)] = _op
    elif _info.fmt in (Fmt.U, Fmt.J):
        _SCALAR_BY_KEY[(_info.opcode,)] = _op
    else:
        _SCALAR_BY_KEY[(_info.opcode, _info.funct3)] = _op
_VECTOR_BY_KEY = {(info.opcode, info.funct3): op for op, info in VECTOR_OPS.items()}


def _bits(w: int, hi: int, lo: int) -> int:
    return (w >> lo) & ((1 << (hi - lo + 1)) - 1)


def decode(word: int) -> Instruction:
    if not 0 <= word <= 0xFFFFFFFF:
        raise IllegalInstruction(f"not a 32-bit word: {word!r}")
    quadrant = word & 3
    if quadrant == 0b11:
        i = _decode_scalar(word)
    elif quadrant == 0b10:
        i = _decode_vector(word)
    else:
        raise IllegalInstruction(f"{word:#010x}: compressed quadrant {quadrant:02b} is unused")
    # Canonical check: reserved bits must be zero.
    if encode(i) != word:
        raise IllegalInstruction(f"{word:#010x}: reserved bits set")
    return i


def _decode_scalar(w: int) -> Instruction:
    opcode = w & 0x7F
    rd, f3, rs1, rs2, f7 = _bits(w, 11, 7), _bits(w, 14, 12), _bits(w, 19, 15), _bits(w, 24, 20), _bits(w, 31, 25)
    op = (_SCALAR_BY_KEY.get((opcode,))
          or _SCALAR_BY_KEY.get((opcode, f3, f7))
          or _SCALAR_BY_KEY.get((opcode, f3)))
    if op is None:
        raise IllegalInstruction(f"{w:#010x}: unknown scalar opcode")
    f = SCALAR_OPS[op].fmt
    try:
        if f is Fmt.R:
            return Instruction(op, rd=rd, rs1=rs1, rs2=rs2)
        if f in (Fmt.I, Fmt.LOAD):
            return Instruction(op, rd=rd, rs1=rs1, imm=_sext(w >> 20, 12))
        if f is Fmt.SHIFT:
            return Instruction(op, rd=rd, rs1=rs1, imm=rs2)
        if f is Fmt.STORE:
            return Instruction(op, rs1=rs1, rs2=rs2, imm=_sext(f7 << 5 | rd, 12))
        if f is Fmt.BRANCH:
            imm = (_bits(w, 31, 31) << 12 | _bits(w, 7, 7) << 11 | _bits(w, 30, 25) << 5
                   | _bits(w, 11, 8) << 1)
            return Instruction(op, rs1=rs1, rs2=rs2, imm=_sext(imm, 13))
        if f is Fmt.U:
            return Instruction(op, rd=rd, imm=w >> 12)
        if f is Fmt.J:
            imm = (_bits(w, 31, 31) << 20 | _bits(w, 19, 12) << 12 | _bits(w, 20, 20) << 11
                   | _bits(w, 30, 21) << 1)
            return Instruction(op, rd=rd, imm=_sext(imm, 21))
        if f is Fmt.NONE:
            return Instruction(op)
        if f is Fmt.CSR:
            return Instruction(op, rd=rd)
    except FieldOverflow as exc:
        raise IllegalInstruction(f"{w:#010x}: {exc}") from None
    raise AssertionError(f)


def _decode_vector(w: int) -> Instruction:
    major, minor = _bits(w, 6, 2), _bits(w, 14, 12)
    op = _VECTOR_BY_KEY.get((major, minor))
    if op is None:
        raise IllegalInstruction(f"{w:#010x}: unknown vector opcode {major}/{minor}")
    f = VECTOR_OPS[op].fmt
    rd, rs1, rs2 = _bits(w, 11, 7), _bits(w, 19, 15), _bits(w, 24, 20)
    try:
        if f in (Fmt.VR, Fmt.VCMP):
            return Instruction(op, rd=rd, rs1=rs1, rs2=rs2)
        if f is Fmt.VMUL:
            rmode = _bits(w, 30, 29)
            if rmode > max(RoundingMode):
                raise IllegalInstruction(f"{w:#010x}: reserved rounding mode {rmode}")
            return Instruction(op, rd=rd, rs1=rs1, rs2=rs2, shift=_bits(w, 28, 25),
                               rmode=RoundingMode(rmode))
        if f is Fmt.VLOAD:
            return Instruction(op, rd=rd, rs1=rs1, imm=_sext(_bits(w, 30, 20), VECTOR_IMM_BITS))
        if f is Fmt.VSEED:
            return Instruction(op, rs1=rs1, imm=_sext(_bits(w, 30, 20), VECTOR_IMM_BITS))
        if f is Fmt.VSTORE:
            imm = _bits(w, 30, 25) << 5 | rd
            return Instruction(op, rs1=rs1, rs2=rs2, imm=_sext(imm, VECTOR_IMM_BITS))
        if f is Fmt.VBCAST:
            return Instruction(op, rd=rd, rs1=rs1)
        if f is Fmt.VEXTRACT:
            return Instruction(op, rd=rd, rs1=rs1, imm=rs2)
        if f is Fmt.VRNG:
            return Instruction(op, rd=rd, shift=_bits(w, 23, 20))
        if f is Fmt.VSEL:
            return Instruction(op, rd=rd, rs1=rs1, rs2=rs2, rs3=_bits(w, 31, 27))
    except FieldOverflow as exc:
        raise IllegalInstruction(f"{w:#010x}: {exc}") from None
    raise AssertionError(f)


def classify(i: Instruction) -> OpClass:
    return OP_INFO[i.op].cls


# --------------------------------------------------------------------------
# disassembly

_RMODE_NAMES = {
    RoundingMode.ROUND_TO_ZERO: "rz",
    RoundingMode.ROUND_TO_NEAREST: "rn",
    RoundingMode.STOCHASTIC: "sr",
}


def disassemble(i: Instruction) -> str:
    f = i.info.fmt
    x = lambda r: f"x{r}"  # noqa: E731
    v = lambda r: f"v{r}"  # noqa: E731
    ops = {
        Fmt.R: lambda: [x(i.rd), x(i.rs1), x(i.rs2)],
        Fmt.I: lambda: [x(i.rd), x(i.rs1), str(i.imm)],
        Fmt.SHIFT: lambda: [x(i.rd), x(i.rs1), str(i.imm)],
        Fmt.LOAD: lambda: [x(i.rd), f"{i.imm}({x(i.rs1)})"],
        Fmt.STORE: lambda: [x(i.rs2), f"{i.imm}({x(i.rs1)})"],
        Fmt.BRANCH: lambda: [x(i.rs1), x(i.rs2), str(i.imm)],
        Fmt.U: lambda: [x(i.rd), hex(i.imm)],
        Fmt.J: lambda: [x(i.rd), str(i.imm)],
        Fmt.NONE: lambda: [],
        Fmt.CSR: lambda: [x(i.rd)],
        Fmt.VR: lambda: [v(i.rd), v(i.rs1), v(i.rs2)],
        Fmt.VMUL: lambda: [v(i.rd), v(i.rs1), v(i.rs2), str(i.shift), _RMODE_NAMES[i.rmode]],
        Fmt.VLOAD: lambda: [v(i.rd), f"{i.imm}({x(i.rs1)})"],
        Fmt.VSTORE: lambda: [v(i.rs2), f"{i.imm}({x(i.rs1)})"],
        Fmt.VSEED: lambda: [f"{i.imm}({x(i.rs1)})"],
        Fmt.VBCAST: lambda: [v(i.rd), x(i.rs1)],
        Fmt.VEXTRACT: lambda: [x(i.rd), v(i.rs1), str(i.imm)],
        Fmt.VRNG: lambda: [v(i.rd), str(i.shift)],
        Fmt.VCMP: lambda: [x(i.rd), v(i.rs1), v(i.rs2)],
        Fmt.VSEL: lambda: [v(i.rd), v(i.rs3), v(i.rs2), x(i.rs1)],
    }[f]()
    return f"{i.op.value} {', '.join(ops)}".rstrip()


def disassemble_words(words) -> str:
    return "\n".join(disassemble(decode(w)) for w in words)
