"""Programmatic assembler: build instruction streams, labels and data images.

Typical use::

    a = Assembler()
    loop = a.label()
    a.addi(5, 0, 10)
    a.bind(loop)
    a.addi(5, 5, -1)
    a.bne(5, 0, loop)
    a.ecall()
    prog = a.finalize()

Branches and jumps to labels are emitted as placeholders and patched at
``finalize`` (two passes).  Data for scalar memory and vector memory is
declared on the builder so a ``Program`` is self-contained.

Program container layout (little-endian)::

    magic   b"FENN"
    u32     version (= 1)
    u32     entry
    section code      : u32 byte length, then 32-bit words
    section dmem      : u32 byte length, then bytes
    section vmem      : u32 byte length, then bytes
    section regions   : u32 byte length, then repeated
                        (u16 name length, utf-8 name, u32 start, u32 end)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import isa
from .fixedpoint import RoundingMode
from .isa import Instruction, Op

VECTOR_BYTES = 64
LANES = 32

IMEM_BASE = 0x0000_0000
DMEM_BASE = 0x1000_0000
VMEM_BASE = 0x2000_0000

MAGIC = b"FENN"
FORMAT_VERSION = 1


class AssemblerError(Exception):
    pass


class UnboundLabel(AssemblerError):
    pass


class DuplicateBind(AssemblerError):
    pass


class BranchOutOfRange(AssemblerError):
    pass


class RegionOverlap(AssemblerError):
    pass


class Label:
    __slots__ = ("name", "address")

    def __init__(self, name: str | None = None):
        self.name = name
        self.address: int | None = None

    @property
    def bound(self) -> bool:
        return self.address is not None

    def __repr__(self):
        where = f"@{self.address:#x}" if self.bound else "unbound"
        return f"Label({self.name or id(self):}, {where})"


@dataclass(frozen=True)
class Region:
    name: str
    start: int
    end: int  # exclusive byte address

    def contains(self, pc: int) -> bool:
        return self.start <= pc < self.end


@dataclass(frozen=True)
class Program:
    words: tuple[int, ...]
    dmem_image: bytes = b""
    vmem_image: bytes = b""
    entry: int = IMEM_BASE
    regions: tuple[Region, ...] = ()
    symbols: dict = field(default_factory=dict, compare=False)

    @property
    def instructions(self) -> list[Instruction]:
        return [isa.decode(w) for w in self.words]

    @property
    def code_bytes(self) -> bytes:
        return struct.pack(f"<{len(self.words)}I", *self.words)

    def listing(self) -> str:
        lines = []
        for n, w in enumerate(self.words):
            addr = IMEM_BASE + 4 * n
            lines.append(f"{addr:08x}: {w:08x}  {isa.disassemble(isa.decode(w))}")
        return "\n".join(lines)

    # ---- serialization
    def to_bytes(self) -> bytes:
        regions = b"".join(
            struct.pack("<H", len(r.name.encode())) + r.name.encode() + struct.pack("<II", r.start, r.end)
            for r in self.regions
        )
        out = [MAGIC, struct.pack("<II", FORMAT_VERSION, self.entry)]
        for section in (self.code_bytes, self.dmem_image, self.vmem_image, regions):
            out.append(struct.pack("<I", len(section)))
            out.append(section)
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Program":
        if data[:4] != MAGIC:
            raise ValueError("not a FeNN program container")
        version, entry = struct.unpack_from("<II", data, 4)
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported container version {version}")
        pos = 12
        sections = []
        for _ in range(4):
            (n,) = struct.unpack_from("<I", data, pos)
            pos += 4
            sections.append(bytes(data[pos:pos + n]))
            if len(sections[-1]) != n:
                raise ValueError("truncated program container")
            pos += n
        code, dmem, vmem, raw_regions = sections
        if len(code) % 4:
            raise ValueError("code section is not a whole number of words")
        regions = []
        rpos = 0
        while rpos < len(raw_regions):
            (n,) = struct.unpack_from("<H", raw_regions, rpos)
            name = raw_regions[rpos + 2:rpos + 2 + n].decode()
            start, end = struct.unpack_from("<II", raw_regions, rpos + 2 + n)
            regions.append(Region(name, start, end))
            rpos += 2 + n + 8
        words = struct.unpack(f"<{len(code) // 4}I", code)
        return cls(tuple(words), dmem, vmem, entry, tuple(regions))

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Program":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


@dataclass
class _Fixup:
    index: int
    label: Label
    kind: str  # "branch" | "jal"


class Assembler:
    """Instruction-stream builder.  One builder per program."""

    def __init__(self, base: int = IMEM_BASE):
        self.base = base
        self._code: list[Instruction] = []
        self._fixups: list[_Fixup] = []
        self._labels: list[Label] = []
        self._regions: list[tuple[str, Label, Label]] = []
        self._dmem = bytearray()
        self._vmem = bytearray()
        self.symbols: dict[str, int] = {}

    # ---- labels and positions
    @property
    def pc(self) -> int:
        return self.base + 4 * len(self._code)

    def label(self, name: str | None = None) -> Label:
        lbl = Label(name)
        self._labels.append(lbl)
        return lbl

    def bind(self, lbl: Label) -> Label:
        if lbl.bound:
            raise DuplicateBind(f"{lbl!r} already bound")
        lbl.address = self.pc
        return lbl

    def here(self, name: str | None = None) -> Label:
        return self.bind(self.label(name))

    def emit(self, i: Instruction) -> int:
        self._code.append(i)
        return self.pc - 4

    def mark_region(self, name: str, start: Label, end: Label):
        self._regions.append((name, start, end))

    # ---- data images
    def dmem_alloc(self, nbytes: int, align: int = 4, name: str | None = None) -> int:
        """Reserve zeroed scalar memory; returns its absolute address."""
        pad = -len(self._dmem) % align
        self._dmem.extend(bytes(pad))
        offset = len(self._dmem)
        self._dmem.extend(bytes(nbytes))
        addr = DMEM_BASE + offset
        if name:
            self.symbols[name] = addr
        return addr

    def dmem_words(self, words, name: str | None = None) -> int:
        data = np.asarray(words, dtype=np.int64).astype("<u4", casting="unsafe")
        addr = self.dmem_alloc(4 * len(data), name=name)
        off = addr - DMEM_BASE
        self._dmem[off:off + 4 * len(data)] = data.tobytes()
        return addr

    def vmem_alloc(self, n_vectors: int, name: str | None = None) -> int:
        addr = VMEM_BASE + len(self._vmem)
        self._vmem.extend(bytes(n_vectors * VECTOR_BYTES))
        if name:
            self.symbols[name] = addr
        return addr

    def vmem_vectors(self, vectors, name: str | None = None) -> int:
        """Place int16 vectors (shape (n, 32)) in vector memory."""
        data = np.asarray(vectors)
        if data.ndim == 1:
            data = data.reshape(1, -1)
        if data.shape[1] != LANES:
            raise ValueError(f"vectors must have {LANES} lanes")
        raw = (data.astype(np.int64) & 0xFFFF).astype("<u2")
        addr = self.vmem_alloc(len(data), name=name)
        off = addr - VMEM_BASE
        self._vmem[off:off + raw.nbytes] = raw.tobytes()
        return addr

    # ---- finalize
    def finalize(self, entry: int | None = None) -> Program:
        code = list(self._code)
        for fx in self._fixups:
            if not fx.label.bound:
                raise UnboundLabel(f"{fx.label!r} referenced but never bound")
            here = self.base + 4 * fx.index
            offset = fx.label.address - here
            old = code[fx.index]
            ok = isa.fits_branch_offset(offset) if fx.kind == "branch" else isa.fits_jal_offset(offset)
            if not ok:
                raise BranchOutOfRange(f"{old.op.value} at {here:#x} cannot reach {fx.label!r}")
            code[fx.index] = Instruction(old.op, rd=old.rd, rs1=old.rs1, rs2=old.rs2, imm=offset)
        end = self.pc
        regions = []
        for name, start, stop in self._regions:
            for lbl in (start, stop):
                if not lbl.bound:
                    raise UnboundLabel(f"region {name!r} uses unbound {lbl!r}")
            r = Region(name, start.address, stop.address)
            if r.end < r.start or r.end > end:
                raise AssemblerError(f"region {name!r} does not lie inside the code")
            for other in regions:
                if r.start < other.end and other.start < r.end:
                    raise RegionOverlap(f"region {name!r} overlaps {other.name!r}")
            regions.append(r)
        words = tuple(isa.encode(i) for i in code)
        return Program(words, bytes(self._dmem), bytes(self._vmem),
                       self.base if entry is None else entry, tuple(regions), dict(self.symbols))

    # ---- scalar emitters
    def _r(self, op, rd, rs1, rs2):
        return self.emit(Instruction(op, rd=rd, rs1=rs1, rs2=rs2))

    def _i(self, op, rd, rs1, imm):
        return self.emit(Instruction(op, rd=rd, rs1=rs1, imm=imm))

    def add(self, rd, rs1, rs2): return self._r(Op.ADD, rd, rs1, rs2)
    def sub(self, rd, rs1, rs2): return self._r(Op.SUB, rd, rs1, rs2)
    def sll(self, rd, rs1, rs2): return self._r(Op.SLL, rd, rs1, rs2)
    def slt(self, rd, rs1, rs2): return self._r(Op.SLT, rd, rs1, rs2)
    def sltu(self, rd, rs1, rs2): return self._r(Op.SLTU, rd, rs1, rs2)
    def xor(self, rd, rs1, rs2): return self._r(Op.XOR, rd, rs1, rs2)
    def srl(self, rd, rs1, rs2): return self._r(Op.SRL, rd, rs1, rs2)
    def sra(self, rd, rs1, rs2): return self._r(Op.SRA, rd, rs1, rs2)
    def or_(self, rd, rs1, rs2): return self._r(Op.OR, rd, rs1, rs2)
    def and_(self, rd, rs1, rs2): return self._r(Op.AND, rd, rs1, rs2)
    def mul(self, rd, rs1, rs2): return self._r(Op.MUL, rd, rs1, rs2)

    def addi(self, rd, rs1, imm): return self._i(Op.ADDI, rd, rs1, imm)
    def slti(self, rd, rs1, imm): return self._i(Op.SLTI, rd, rs1, imm)
    def sltiu(self, rd, rs1, imm): return self._i(Op.SLTIU, rd, rs1, imm)
    def xori(self, rd, rs1, imm): return self._i(Op.XORI, rd, rs1, imm)
    def ori(self, rd, rs1, imm): return self._i(Op.ORI, rd, rs1, imm)
    def andi(self, rd, rs1, imm): return self._i(Op.ANDI, rd, rs1, imm)
    def slli(self, rd, rs1, sh): return self._i(Op.SLLI, rd, rs1, sh)
    def srli(self, rd, rs1, sh): return self._i(Op.SRLI, rd, rs1, sh)
    def srai(self, rd, rs1, sh): return self._i(Op.SRAI, rd, rs1, sh)

    def lb(self, rd, imm, rs1): return self._i(Op.LB, rd, rs1, imm)
    def lh(self, rd, imm, rs1): return self._i(Op.LH, rd, rs1, imm)
    def lw(self, rd, imm, rs1): return self._i(Op.LW, rd, rs1, imm)
    def lbu(self, rd, imm, rs1): return self._i(Op.LBU, rd, rs1, imm)
    def lhu(self, rd, imm, rs1): return self._i(Op.LHU, rd, rs1, imm)

    def _store(self, op, rs2, imm, rs1):
        return self.emit(Instruction(op, rs1=rs1, rs2=rs2, imm=imm))

    def sb(self, rs2, imm, rs1): return self._store(Op.SB, rs2, imm, rs1)
    def sh(self, rs2, imm, rs1): return self._store(Op.SH, rs2, imm, rs1)
    def sw(self, rs2, imm, rs1): return self._store(Op.SW, rs2, imm, rs1)

    def lui(self, rd, imm20): return self.emit(Instruction(Op.LUI, rd=rd, imm=imm20))
    def auipc(self, rd, imm20): return self.emit(Instruction(Op.AUIPC, rd=rd, imm=imm20))
    def ecall(self): return self.emit(Instruction(Op.ECALL))
    def rdcycle(self, rd): return self.emit(Instruction(Op.RDCYCLE, rd=rd))

    def li(self, rd, value: int):
        """Load a 32-bit constant (ADDI, or LUI + ADDI)."""
        value &= 0xFFFFFFFF
        signed = value - (1 << 32) if value >> 31 else value
        if -2048 <= signed < 2048:
            return self.addi(rd, 0, signed)
        lo = ((value & 0xFFF) ^ 0x800) - 0x800
        hi = ((value - lo) >> 12) & 0xFFFFF
        pos = self.lui(rd, hi)
        if lo:
            self.addi(rd, rd, lo)
        return pos

    def mv(self, rd, rs): return self.addi(rd, rs, 0)

    # ---- control flow
    def _branch(self, op, rs1, rs2, target):
        if isinstance(target, Label):
            pos = self.emit(Instruction(op, rs1=rs1, rs2=rs2, imm=0))
            self._fixups.append(_Fixup(len(self._code) - 1, target, "branch"))
            return pos
        return self.emit(Instruction(op, rs1=rs1, rs2=rs2, imm=target))

    def beq(self, rs1, rs2, target): return self._branch(Op.BEQ, rs1, rs2, target)
    def bne(self, rs1, rs2, target): return self._branch(Op.BNE, rs1, rs2, target)
    def blt(self, rs1, rs2, target): return self._branch(Op.BLT, rs1, rs2, target)
    def bge(self, rs1, rs2, target): return self._branch(Op.BGE, rs1, rs2, target)
    def bltu(self, rs1, rs2, target): return self._branch(Op.BLTU, rs1, rs2, target)
    def bgeu(self, rs1, rs2, target): return self._branch(Op.BGEU, rs1, rs2, target)

    def jal(self, rd, target):
        if isinstance(target, Label):
            pos = self.emit(Instruction(Op.JAL, rd=rd, imm=0))
            self._fixups.append(_Fixup(len(self._code) - 1, target, "jal"))
            return pos
        return self.emit(Instruction(Op.JAL, rd=rd, imm=target))

    def j(self, target): return self.jal(0, target)
    def jalr(self, rd, rs1, imm=0): return self._i(Op.JALR, rd, rs1, imm)

    # ---- vector emitters
    def _vr(self, op, vd, vs1, vs2):
        return self.emit(Instruction(op, rd=vd, rs1=vs1, rs2=vs2))

    def vadd(self, vd, vs1, vs2): return self._vr(Op.VADD, vd, vs1, vs2)
    def vadd_s(self, vd, vs1, vs2): return self._vr(Op.VADD_S, vd, vs1, vs2)
    def vsub(self, vd, vs1, vs2): return self._vr(Op.VSUB, vd, vs1, vs2)
    def vsub_s(self, vd, vs1, vs2): return self._vr(Op.VSUB_S, vd, vs1, vs2)

    def vmul(self, vd, vs1, vs2, shift: int, rmode: RoundingMode = RoundingMode.ROUND_TO_ZERO):
        return self.emit(Instruction(Op.VMUL, rd=vd, rs1=vs1, rs2=vs2, shift=shift, rmode=rmode))

    def vload(self, vd, imm, rs1): return self.emit(Instruction(Op.VLOAD, rd=vd, rs1=rs1, imm=imm))
    def vstore(self, vs2, imm, rs1): return self.emit(Instruction(Op.VSTORE, rs1=rs1, rs2=vs2, imm=imm))
    def vload_r0(self, imm, rs1): return self.emit(Instruction(Op.VLOAD_R0, rs1=rs1, imm=imm))
    def vload_r1(self, imm, rs1): return self.emit(Instruction(Op.VLOAD_R1, rs1=rs1, imm=imm))
    def vbcast(self, vd, rs1): return self.emit(Instruction(Op.VBCAST, rd=vd, rs1=rs1))
    def vextract(self, rd, vs1, lane): return self.emit(Instruction(Op.VEXTRACT, rd=rd, rs1=vs1, imm=lane))
    def vrng(self, vd, shift: int = 0): return self.emit(Instruction(Op.VRNG, rd=vd, shift=shift))

    def vteq(self, rd, vs1, vs2): return self._vr(Op.VTEQ, rd, vs1, vs2)
    def vtne(self, rd, vs1, vs2): return self._vr(Op.VTNE, rd, vs1, vs2)
    def vtlt(self, rd, vs1, vs2): return self._vr(Op.VTLT, rd, vs1, vs2)
    def vtge(self, rd, vs1, vs2): return self._vr(Op.VTGE, rd, vs1, vs2)

    def vsel(self, vd, vs1, vs2, rs_mask):
        """Lane i of vd = vs1[i] if bit i of x[rs_mask] is set, else vs2[i]."""
        return self.emit(Instruction(Op.VSEL, rd=vd, rs1=rs_mask, rs2=vs2, rs3=vs1))

    def vconst(self, vd, value: int, tmp: int):
        """Broadcast a 16-bit constant into vd through scalar register ``tmp``."""
        self.li(tmp, value & 0xFFFF)
        return self.vbcast(vd, tmp)
