"""Machine simulator: fetch, decode and execute over a ``MachineState``.

Memory map (byte addresses)::

    imem  0x0000_0000   instruction memory (default 128 KiB)
    dmem  0x1000_0000   scalar data memory  (default 128 KiB)
    vmem  0x2000_0000   vector memory       (default 1 MiB), 64-byte vectors,
                        lane 0 at the lowest address, little-endian lanes

Cycle-cost model: every instruction costs ``base`` cycles; a taken branch or
any jump adds ``taken_branch_penalty``; an instruction that reads the vector
register written by an immediately preceding VLOAD adds
``vector_load_use_penalty`` (likewise RNG use straight after VLOAD.R0/R1).
All other hazards are assumed bypassed.

Traps halt the machine with a cause code; nothing vectors to a handler.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import fixedpoint as fx
from . import isa
from .assembler import DMEM_BASE, IMEM_BASE, LANES, VECTOR_BYTES, VMEM_BASE, Program
from .fixedpoint import RoundingMode
from .isa import Instruction, Op, OpClass
from .rng import VectorRngState, seeded_state

M32 = 0xFFFFFFFF
UNMARKED = "unmarked"

_LANE_BITS = np.left_shift(np.ones(LANES, dtype=np.int64), np.arange(LANES, dtype=np.int64))
_LANE_IDX = np.arange(LANES, dtype=np.int64)


class TrapCause(str, enum.Enum):
    ILLEGAL_INSTRUCTION = "illegal-instruction"
    FETCH_FAULT = "fetch-fault"
    LOAD_FAULT = "load-out-of-bounds"
    STORE_FAULT = "store-out-of-bounds"
    VECTOR_MISALIGNED = "vector-misaligned"
    VECTOR_FAULT = "vector-out-of-bounds"
    ZERO_RNG_STATE = "zero-rng-state"


class HaltReason(str, enum.Enum):
    ECALL = "ecall"
    TRAP = "trap"
    CYCLE_BUDGET = "cycle-budget"


class MachineError(Exception):
    pass


class ImageTooLarge(MachineError):
    pass


class MemoryFault(MachineError):
    def __init__(self, cause: TrapCause, addr: int):
        super().__init__(f"{cause.value} at {addr:#010x}")
        self.cause = cause
        self.addr = addr


class MachineTrap(MachineError):
    def __init__(self, cause: TrapCause, pc: int, detail: str = ""):
        super().__init__(f"{cause.value} at pc={pc:#x} {detail}".rstrip())
        self.cause = cause
        self.pc = pc


class CycleBudgetExceeded(MachineError):
    pass


@dataclass(frozen=True)
class CostModel:
    base: int = 1
    taken_branch_penalty: int = 2
    vector_load_use_penalty: int = 1


@dataclass(frozen=True)
class MachineConfig:
    imem_size: int = 128 * 1024
    dmem_size: int = 128 * 1024
    vmem_size: int = 1024 * 1024
    cost: CostModel = CostModel()


@dataclass
class StepEvent:
    instruction: Instruction | None
    op_class: OpClass | None
    region: str
    cost: int
    trap: TrapCause | None = None
    halted: bool = False


@dataclass
class Stats:
    cycles: int = 0
    retired: Counter = field(default_factory=Counter)        # (region, class) -> count
    region_cycles: Counter = field(default_factory=Counter)  # region -> cycles

    @property
    def total_retired(self) -> int:
        return sum(self.retired.values())

    def by_class(self) -> Counter:
        out = Counter()
        for (_, cls), n in self.retired.items():
            out[cls] += n
        return out

    def by_region(self) -> Counter:
        out = Counter()
        for (region, _), n in self.retired.items():
            out[region] += n
        return out

    def copy(self) -> "Stats":
        return Stats(self.cycles, Counter(self.retired), Counter(self.region_cycles))


@dataclass
class RunResult:
    reason: HaltReason
    stats: Stats
    trap: TrapCause | None = None
    pc: int = 0


def _reads_vectors(i: Instruction) -> frozenset:
    f = i.info.fmt
    F = isa.Fmt
    if f in (F.VR, F.VMUL, F.VCMP):
        regs = {i.rs1, i.rs2}
    elif f is F.VSTORE:
        regs = {i.rs2}
    elif f is F.VEXTRACT:
        regs = {i.rs1}
    elif f is F.VSEL:
        regs = {i.rs2, i.rs3}
    else:
        regs = set()
    if i.op is Op.VRNG or (i.op is Op.VMUL and i.rmode == RoundingMode.STOCHASTIC):
        regs.add("rng")
    return frozenset(regs)


def _load_target(i: Instruction):
    if i.op is Op.VLOAD:
        return i.rd
    if i.op in (Op.VLOAD_R0, Op.VLOAD_R1):
        return "rng"
    return None


class MachineState:
    """Architectural state plus counters.  Advance with ``step``/``run``."""

    def __init__(self, config: MachineConfig = MachineConfig(), rng_seed: int = 0):
        for size in (config.dmem_size, config.vmem_size):
            if size <= 0:
                raise ValueError("memory sizes must be positive")
        if config.vmem_size % VECTOR_BYTES:
            raise ValueError("vector memory size must be a whole number of vectors")
        self.config = config
        self.x = [0] * 32
        self.pc = IMEM_BASE
        self.v = [np.zeros(LANES, dtype=np.int64) for _ in range(32)]
        self.rng: VectorRngState = seeded_state(rng_seed)
        self.imem = bytearray(config.imem_size)
        self.dmem = bytearray(config.dmem_size)
        self.vmem = np.zeros((config.vmem_size // VECTOR_BYTES, LANES), dtype=np.int16)
        self.stats = Stats()
        self.halted = False
        self.halt_cause: TrapCause | None = None
        self.regions: tuple = ()
        self._region_of: list[str] = []
        self._compiled: dict[int, tuple] = {}
        self._last_load = None
        self._rng_dirty = False

    # ---- convenience views
    @property
    def cycles(self) -> int:
        return self.stats.cycles

    def xs(self, r: int) -> int:
        """Signed view of scalar register r."""
        val = self.x[r]
        return val - (1 << 32) if val >> 31 else val

    # ---- memory helpers
    def _dmem_index(self, addr: int, n: int, cause: TrapCause) -> int:
        off = addr - DMEM_BASE
        if off < 0 or off + n > len(self.dmem):
            raise MemoryFault(cause, addr)
        return off

    def load_scalar(self, addr: int, n: int, signed: bool) -> int:
        off = self._dmem_index(addr, n, TrapCause.LOAD_FAULT)
        return int.from_bytes(self.dmem[off:off + n], "little", signed=signed)

    def store_scalar(self, addr: int, n: int, value: int):
        off = self._dmem_index(addr, n, TrapCause.STORE_FAULT)
        self.dmem[off:off + n] = (value & ((1 << (8 * n)) - 1)).to_bytes(n, "little")

    def _vmem_index(self, addr: int) -> int:
        off = addr - VMEM_BASE
        if off % VECTOR_BYTES:
            raise MemoryFault(TrapCause.VECTOR_MISALIGNED, addr)
        idx = off // VECTOR_BYTES
        if off < 0 or idx >= len(self.vmem):
            raise MemoryFault(TrapCause.VECTOR_FAULT, addr)
        return idx

    def region_at(self, pc: int) -> str:
        n = (pc - IMEM_BASE) >> 2
        if 0 <= n < len(self._region_of):
            return self._region_of[n]
        return UNMARKED

    # ---- compile-on-first-fetch
    def _fetch(self, pc: int):
        entry = self._compiled.get(pc)
        if entry is not None:
            return entry
        off = pc - IMEM_BASE
        if pc & 3 or off < 0 or off + 4 > len(self.imem):
            raise MachineTrap(TrapCause.FETCH_FAULT, pc)
        word = int.from_bytes(self.imem[off:off + 4], "little")
        try:
            instr = isa.decode(word)
        except isa.IllegalInstruction as exc:
            raise MachineTrap(TrapCause.ILLEGAL_INSTRUCTION, pc, str(exc)) from None
        entry = (instr, instr.info.cls, _compile(instr, pc), _reads_vectors(instr), _load_target(instr))
        self._compiled[pc] = entry
        return entry

    def step(self) -> StepEvent:
        if self.halted:
            raise MachineError("machine is halted")
        pc = self.pc
        region = self.region_at(pc)
        try:
            instr, cls, fn, reads, load_target = self._fetch(pc)
        except MachineTrap as trap:
            return self._trap(trap.cause, region)
        cost_model = self.config.cost
        cost = cost_model.base
        if self._last_load is not None and self._last_load in reads:
            cost += cost_model.vector_load_use_penalty
        try:
            nxt = fn(self)
        except MemoryFault as fault:
            return self._trap(fault.cause, region, instr, cls)
        except MachineTrap as trap:
            return self._trap(trap.cause, region, instr, cls)
        self.x[0] = 0
        if nxt is None:
            self.pc = (pc + 4) & M32
        else:
            self.pc = nxt & M32
            cost += cost_model.taken_branch_penalty
        self._last_load = load_target
        st = self.stats
        st.cycles += cost
        st.retired[(region, cls)] += 1
        st.region_cycles[region] += cost
        return StepEvent(instr, cls, region, cost, halted=self.halted)

    def _trap(self, cause, region, instr=None, cls=None) -> StepEvent:
        self.halted = True
        self.halt_cause = cause
        cost = self.config.cost.base
        self.stats.cycles += cost
        self.stats.region_cycles[region] += cost
        return StepEvent(instr, cls, region, cost, trap=cause, halted=True)

    def run(self, max_cycles: int | None = None) -> RunResult:
        """Run until ECALL, a trap, or the cycle budget is used up."""
        step = self.step
        limit = float("inf") if max_cycles is None else max_cycles
        st = self.stats
        while not self.halted:
            if st.cycles >= limit:
                return RunResult(HaltReason.CYCLE_BUDGET, st.copy(), pc=self.pc)
            step()
        if self.halt_cause is not None:
            return RunResult(HaltReason.TRAP, st.copy(), self.halt_cause, self.pc)
        return RunResult(HaltReason.ECALL, st.copy(), pc=self.pc)


# --------------------------------------------------------------------------
# machine-level operations

def load(program: Program, config: MachineConfig = MachineConfig(), rng_seed: int = 0) -> MachineState:
    """Create a machine with ``program``'s images in memory and pc at its entry."""
    s = MachineState(config, rng_seed)
    code = program.code_bytes
    if len(code) > config.imem_size:
        raise ImageTooLarge(f"code is {len(code)} bytes, imem holds {config.imem_size}")
    if len(program.dmem_image) > config.dmem_size:
        raise ImageTooLarge(f"scalar data is {len(program.dmem_image)} bytes, dmem holds {config.dmem_size}")
    if len(program.vmem_image) > config.vmem_size:
        raise ImageTooLarge(f"vector data is {len(program.vmem_image)} bytes, vmem holds {config.vmem_size}")
    if len(program.vmem_image) % VECTOR_BYTES:
        raise ImageTooLarge("vector image is not a whole number of vectors")
    s.imem[:len(code)] = code
    s.dmem[:len(program.dmem_image)] = program.dmem_image
    n_vec = len(program.vmem_image) // VECTOR_BYTES
    if n_vec:
        s.vmem[:n_vec] = np.frombuffer(program.vmem_image, dtype="<i2").reshape(n_vec, LANES)
    s.pc = program.entry
    s.regions = program.regions
    region_of = [UNMARKED] * len(program.words)
    for r in program.regions:
        for n in range((r.start - IMEM_BASE) >> 2, (r.end - IMEM_BASE) >> 2):
            region_of[n] = r.name
    s._region_of = region_of
    return s


def step(s: MachineState) -> StepEvent:
    return s.step()


def run(s: MachineState, max_cycles: int | None = None) -> RunResult:
    return s.run(max_cycles)


def run_checked(s: MachineState, max_cycles: int | None = None) -> RunResult:
    """Like ``run`` but raises on anything other than a clean ECALL halt."""
    res = s.run(max_cycles)
    if res.reason is HaltReason.CYCLE_BUDGET:
        raise CycleBudgetExceeded(f"no halt within {max_cycles} cycles (pc={res.pc:#x})")
    if res.reason is HaltReason.TRAP:
        raise MachineTrap(res.trap, res.pc)
    return res


def read_vector(s: MachineState, addr: int) -> np.ndarray:
    return s.vmem[s._vmem_index(addr)].copy()


def write_vector(s: MachineState, addr: int, value):
    value = np.asarray(value)
    if value.shape != (LANES,):
        raise ValueError(f"a vector has {LANES} lanes")
    s.vmem[s._vmem_index(addr)] = fx.wrap16(value.astype(np.int64))


def read_vectors(s: MachineState, addr: int, n: int) -> np.ndarray:
    first = s._vmem_index(addr)
    if n and first + n > len(s.vmem):
        raise MemoryFault(TrapCause.VECTOR_FAULT, addr + n * VECTOR_BYTES)
    return s.vmem[first:first + n].copy()


def read_words(s: MachineState, addr: int, n: int, signed: bool = False) -> np.ndarray:
    off = s._dmem_index(addr, 4 * n, TrapCause.LOAD_FAULT)
    return np.frombuffer(bytes(s.dmem[off:off + 4 * n]), dtype="<i4" if signed else "<u4").copy()


def dump_memory(s: MachineState, which: str) -> bytes:
    """Raw little-endian image of ``"imem"``, ``"dmem"`` or ``"vmem"``."""
    if which == "imem":
        return bytes(s.imem)
    if which == "dmem":
        return bytes(s.dmem)
    if which == "vmem":
        return s.vmem.astype("<i2").tobytes()
    raise ValueError(f"unknown memory {which!r}")


def restore_memory(s: MachineState, which: str, data: bytes):
    if which == "imem":
        if len(data) > len(s.imem):
            raise ImageTooLarge("imem image too large")
        s.imem[:len(data)] = data
        s._compiled.clear()
    elif which == "dmem":
        if len(data) > len(s.dmem):
            raise ImageTooLarge("dmem image too large")
        s.dmem[:len(data)] = data
    elif which == "vmem":
        if len(data) > s.vmem.nbytes or len(data) % VECTOR_BYTES:
            raise ImageTooLarge("vmem image too large or not vector-aligned")
        n = len(data) // VECTOR_BYTES
        s.vmem[:n] = np.frombuffer(data, dtype="<i2").reshape(n, LANES)
    else:
        raise ValueError(f"unknown memory {which!r}")


@dataclass(frozen=True)
class MixRow:
    region: str
    op_class: OpClass
    count: int
    fraction: float


def instruction_mix(stats: Stats) -> list[MixRow]:
    """Per-region retired-instruction counts and fractions for every class."""
    regions = sorted({r for r, _ in stats.retired})
    rows = []
    for region in regions:
        total = sum(n for (r, _), n in stats.retired.items() if r == region)
        for cls in OpClass:
            n = stats.retired.get((region, cls), 0)
            rows.append(MixRow(region, cls, n, n / total if total else 0.0))
    return rows


# --------------------------------------------------------------------------
# instruction semantics, compiled to closures once per fetched pc

def _sx(v: int) -> int:
    return v - (1 << 32) if v >> 31 else v


def _compile(i: Instruction, pc: int):
    op = i.op
    rd, rs1, rs2, imm = i.rd, i.rs1, i.rs2, i.imm

    # --- scalar ALU
    if op is Op.LUI:
        val = (imm << 12) & M32
        def f(m): m.x[rd] = val
    elif op is Op.AUIPC:
        val = (pc + (imm << 12)) & M32
        def f(m): m.x[rd] = val
    elif op is Op.ADDI:
        def f(m): x = m.x; x[rd] = (x[rs1] + imm) & M32
    elif op is Op.SLTI:
        def f(m): x = m.x; x[rd] = int(_sx(x[rs1]) < imm)
    elif op is Op.SLTIU:
        uimm = imm & M32
        def f(m): x = m.x; x[rd] = int(x[rs1] < uimm)
    elif op is Op.XORI:
        def f(m): x = m.x; x[rd] = (x[rs1] ^ imm) & M32
    elif op is Op.ORI:
        def f(m): x = m.x; x[rd] = (x[rs1] | imm) & M32
    elif op is Op.ANDI:
        def f(m): x = m.x; x[rd] = (x[rs1] & imm) & M32
    elif op is Op.SLLI:
        def f(m): x = m.x; x[rd] = (x[rs1] << imm) & M32
    elif op is Op.SRLI:
        def f(m): x = m.x; x[rd] = x[rs1] >> imm
    elif op is Op.SRAI:
        def f(m): x = m.x; x[rd] = (_sx(x[rs1]) >> imm) & M32
    elif op is Op.ADD:
        def f(m): x = m.x; x[rd] = (x[rs1] + x[rs2]) & M32
    elif op is Op.SUB:
        def f(m): x = m.x; x[rd] = (x[rs1] - x[rs2]) & M32
    elif op is Op.SLL:
        def f(m): x = m.x; x[rd] = (x[rs1] << (x[rs2] & 31)) & M32
    elif op is Op.SLT:
        def f(m): x = m.x; x[rd] = int(_sx(x[rs1]) < _sx(x[rs2]))
    elif op is Op.SLTU:
        def f(m): x = m.x; x[rd] = int(x[rs1] < x[rs2])
    elif op is Op.XOR:
        def f(m): x = m.x; x[rd] = x[rs1] ^ x[rs2]
    elif op is Op.SRL:
        def f(m): x = m.x; x[rd] = x[rs1] >> (x[rs2] & 31)
    elif op is Op.SRA:
        def f(m): x = m.x; x[rd] = (_sx(x[rs1]) >> (x[rs2] & 31)) & M32
    elif op is Op.OR:
        def f(m): x = m.x; x[rd] = x[rs1] | x[rs2]
    elif op is Op.AND:
        def f(m): x = m.x; x[rd] = x[rs1] & x[rs2]
    elif op is Op.MUL:
        def f(m): x = m.x; x[rd] = (x[rs1] * x[rs2]) & M32
    elif op is Op.RDCYCLE:
        def f(m): m.x[rd] = m.stats.cycles & M32

    # --- scalar memory
    elif op in (Op.LB, Op.LH, Op.LW, Op.LBU, Op.LHU):
        n, signed = {Op.LB: (1, True), Op.LH: (2, True), Op.LW: (4, True),
                     Op.LBU: (1, False), Op.LHU: (2, False)}[op]
        def f(m):
            x = m.x
            x[rd] = m.load_scalar((x[rs1] + imm) & M32, n, signed) & M32
    elif op in (Op.SB, Op.SH, Op.SW):
        n = {Op.SB: 1, Op.SH: 2, Op.SW: 4}[op]
        def f(m):
            x = m.x
            m.store_scalar((x[rs1] + imm) & M32, n, x[rs2])

    # --- control
    elif op in (Op.BEQ, Op.BNE, Op.BLT, Op.BGE, Op.BLTU, Op.BGEU):
        target = pc + imm
        if op is Op.BEQ:
            def f(m): x = m.x; return target if x[rs1] == x[rs2] else None
        elif op is Op.BNE:
            def f(m): x = m.x; return target if x[rs1] != x[rs2] else None
        elif op is Op.BLT:
            def f(m): x = m.x; return target if _sx(x[rs1]) < _sx(x[rs2]) else None
        elif op is Op.BGE:
            def f(m): x = m.x; return target if _sx(x[rs1]) >= _sx(x[rs2]) else None
        elif op is Op.BLTU:
            def f(m): x = m.x; return target if x[rs1] < x[rs2] else None
        else:
            def f(m): x = m.x; return target if x[rs1] >= x[rs2] else None
    elif op is Op.JAL:
        target, link = pc + imm, (pc + 4) & M32
        def f(m):
            m.x[rd] = link
            return target
    elif op is Op.JALR:
        link = (pc + 4) & M32
        def f(m):
            x = m.x
            target = (x[rs1] + imm) & ~1 & M32
            x[rd] = link
            return target
    elif op is Op.ECALL:
        def f(m): m.halted = True

    # --- vector ALU
    elif op is Op.VADD:
        def f(m): v = m.v; v[rd] = fx.wrap_add_raw(v[rs1], v[rs2])
    elif op is Op.VADD_S:
        def f(m): v = m.v; v[rd] = fx.sat_add_raw(v[rs1], v[rs2])
    elif op is Op.VSUB:
        def f(m): v = m.v; v[rd] = fx.wrap_sub_raw(v[rs1], v[rs2])
    elif op is Op.VSUB_S:
        def f(m): v = m.v; v[rd] = fx.sat_sub_raw(v[rs1], v[rs2])
    elif op is Op.VMUL:
        shift, rmode = i.shift, i.rmode
        if rmode == RoundingMode.STOCHASTIC:
            def f(m):
                v = m.v
                v[rd] = fx.mul_raw(v[rs1], v[rs2], shift, rmode, _draw(m))
        else:
            def f(m): v = m.v; v[rd] = fx.mul_raw(v[rs1], v[rs2], shift, rmode)

    # --- vector memory
    elif op is Op.VLOAD:
        off = imm * VECTOR_BYTES
        def f(m): m.v[rd] = m.vmem[m._vmem_index((m.x[rs1] + off) & M32)].astype(np.int64)
    elif op is Op.VSTORE:
        off = imm * VECTOR_BYTES
        def f(m): m.vmem[m._vmem_index((m.x[rs1] + off) & M32)] = m.v[rs2]
    elif op in (Op.VLOAD_R0, Op.VLOAD_R1):
        off = imm * VECTOR_BYTES
        word = "s0" if op is Op.VLOAD_R0 else "s1"
        def f(m):
            data = m.vmem[m._vmem_index((m.x[rs1] + off) & M32)].astype(np.int64) & 0xFFFF
            setattr(m.rng, word, data)
            m._rng_dirty = True

    # --- moves, masks, RNG
    elif op is Op.VBCAST:
        def f(m): m.v[rd] = np.full(LANES, fx.wrap16(m.x[rs1]), dtype=np.int64)
    elif op is Op.VEXTRACT:
        def f(m): m.x[rd] = int(m.v[rs1][imm]) & M32
    elif op is Op.VRNG:
        shift = i.shift
        def f(m): m.v[rd] = fx.wrap16(_draw(m) >> shift)
    elif op in (Op.VTEQ, Op.VTNE, Op.VTLT, Op.VTGE):
        cmp = {Op.VTEQ: np.equal, Op.VTNE: np.not_equal,
               Op.VTLT: np.less, Op.VTGE: np.greater_equal}[op]
        def f(m):
            v = m.v
            m.x[rd] = int(_LANE_BITS[cmp(v[rs1], v[rs2])].sum())
    elif op is Op.VSEL:
        rs3 = i.rs3
        def f(m):
            v = m.v
            bits = ((m.x[rs1] >> _LANE_IDX) & 1).astype(bool)
            v[rd] = np.where(bits, v[rs3], v[rs2])
    else:  # pragma: no cover - decode guarantees a known op
        raise AssertionError(op)
    return f


def _draw(m: MachineState) -> np.ndarray:
    if m._rng_dirty:
        if m.rng.zero_lanes().size:
            raise MachineTrap(TrapCause.ZERO_RNG_STATE, m.pc)
        m._rng_dirty = False
    return m.rng.next()
