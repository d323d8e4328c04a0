"""Data model for the whole-program SSA IR.

Modules are plain dataclasses, treated as immutable once parsing/linking has
finished; every analysis shares them read-only.  Source line numbers are
carried for error reporting but excluded from structural equality so that a
parse -> print -> parse round trip compares equal.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

from wasisurf.ir.types import FuncType, TypeRef


# ---------------------------------------------------------------------------
# Values (operand atoms)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Value:
    """Base class for operand values."""


@dataclass(frozen=True)
class LocalRef(Value):
    """SSA value reference, `%name`."""

    name: str


@dataclass(frozen=True)
class SymbolRef(Value):
    """Address of a global symbol, `@name` (function or global variable)."""

    name: str


@dataclass(frozen=True)
class IntConst(Value):
    value: int


@dataclass(frozen=True)
class NullConst(Value):
    pass


@dataclass(frozen=True)
class UndefConst(Value):
    """`undef` / `poison`."""

    spelled: str = "undef"


@dataclass(frozen=True)
class ZeroConst(Value):
    """`zeroinitializer` - zero-fill of an aggregate."""


@dataclass(frozen=True)
class StringConst(Value):
    data: bytes


@dataclass(frozen=True)
class AggregateConst(Value):
    """Struct or array constant; elements are typed operands."""

    elements: tuple[Operand, ...]
    struct: bool = True
    packed: bool = False


@dataclass(frozen=True)
class ConstExprValue(Value):
    """Constant expression such as `getelementptr (...)` or `bitcast (... to T)`."""

    op: str
    operands: tuple[Operand, ...]
    result_type: TypeRef | None = None
    source_type: TypeRef | None = None  # element type of a constant gep


@dataclass(frozen=True)
class AsmCallee(Value):
    """Inline assembly callee of a call instruction."""

    asm_text: str
    constraints: str
    side_effect: bool = False


@dataclass(frozen=True)
class OtherConst(Value):
    """Constant outside the subset (float literal, blockaddress, ...)."""

    text: str


@dataclass(frozen=True)
class Operand:
    """A value paired with its (possibly unknown) type annotation."""

    value: Value
    ty: TypeRef | None = None


# ---------------------------------------------------------------------------
# Instructions
# ---------------------------------------------------------------------------


class InstrKind(enum.Enum):
    CALL = "call"
    INVOKE = "invoke"
    LOAD = "load"
    STORE = "store"
    ADDR_CALC = "addr_calc"
    PHI = "phi"
    CAST = "cast"
    LOCAL_ALLOC = "local_alloc"
    INT_OP = "int_op"
    COMPARE = "compare"
    BRANCH = "branch"
    SWITCH = "switch"
    RETURN = "return"
    UNREACHABLE = "unreachable"
    INLINE_ASM = "inline_asm"
    OPAQUE = "opaque"


@dataclass
class Instruction:
    """One SSA instruction.

    ``operands`` always lists every value operand (callee first for calls),
    so value-reference scans treat recognized and opaque instructions alike.
    Structured fields carry the extra shape each kind needs:

    - CALL/INVOKE: ``callee`` + ``args`` (also mirrored into operands);
      INVOKE additionally has two ``targets`` (normal, unwind)
    - BRANCH: ``targets`` = (dest,) or (true, false) with condition operand
    - SWITCH: value operand, ``targets[0]`` default, ``switch_cases``
    - PHI: ``incoming`` = ((value, predecessor label), ...)
    - ADDR_CALC/LOAD/STORE/LOCAL_ALLOC: ``pointee`` = element/value type
    - OPAQUE: ``raw`` preserves the original text for printing
    """

    kind: InstrKind
    opcode: str
    result: str | None
    operands: tuple[Operand, ...] = ()
    ty: TypeRef | None = None
    callee: Operand | None = None
    args: tuple[Operand, ...] = ()
    targets: tuple[str, ...] = ()
    incoming: tuple[tuple[Operand, str], ...] = ()
    switch_cases: tuple[tuple[int, str], ...] = ()
    pointee: TypeRef | None = None
    raw: str = ""
    line: int = field(default=0, compare=False)


@dataclass
class BasicBlock:
    label: str
    instructions: list[Instruction] = field(default_factory=list)


@dataclass(frozen=True, order=True)
class InstrLoc:
    """Stable address of an instruction: (function, block, index in block)."""

    function: str
    block: str
    index: int

    def __str__(self) -> str:
        return f"{self.function}:{self.block}:{self.index}"


# ---------------------------------------------------------------------------
# Symbols
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    params: tuple[TypeRef, ...]
    ret: TypeRef
    variadic: bool = False

    def as_func_type(self) -> FuncType:
        return FuncType(self.ret, self.params, self.variadic)


@dataclass
class FunctionDef:
    symbol: str
    signature: Signature
    param_names: tuple[str, ...]
    blocks: list[BasicBlock]
    demangled: str | None = None
    # Derived post-link; not part of structural identity.
    address_taken: bool = field(default=False, compare=False)
    line: int = field(default=0, compare=False)

    @property
    def entry_block(self) -> BasicBlock:
        return self.blocks[0]

    def block(self, label: str) -> BasicBlock | None:
        for b in self.blocks:
            if b.label == label:
                return b
        return None

    def locations(self):
        """Yield (InstrLoc, Instruction) over all blocks in order."""
        for b in self.blocks:
            for i, instr in enumerate(b.instructions):
                yield InstrLoc(self.symbol, b.label, i), instr

    def instruction_at(self, loc: InstrLoc) -> Instruction | None:
        b = self.block(loc.block)
        if b is None or loc.index >= len(b.instructions):
            return None
        return b.instructions[loc.index]


@dataclass
class FunctionDecl:
    symbol: str
    signature: Signature
    demangled: str | None = None
    line: int = field(default=0, compare=False)


@dataclass
class GlobalVar:
    symbol: str
    is_constant: bool
    value_type: TypeRef
    initializer: Operand | None
    align: int = 0
    demangled: str | None = None
    line: int = field(default=0, compare=False)


@dataclass
class IrModule:
    """A parsed (and possibly linked) whole-program module.

    Invariants after linking: each symbol has at most one definition, every
    direct call target resolves to a definition or declaration, and the type
    table covers every named aggregate in use.
    """

    name: str
    functions: list[FunctionDef] = field(default_factory=list)
    declarations: list[FunctionDecl] = field(default_factory=list)
    globals: list[GlobalVar] = field(default_factory=list)
    module_asm: list[str] = field(default_factory=list)
    type_table: dict[str, TypeRef] = field(default_factory=dict)

    # --- symbol lookup (lazy caches; module treated as immutable) ---

    @cached_property
    def function_map(self) -> dict[str, FunctionDef]:
        return {f.symbol: f for f in self.functions}

    @cached_property
    def declaration_map(self) -> dict[str, FunctionDecl]:
        return {d.symbol: d for d in self.declarations}

    @cached_property
    def global_map(self) -> dict[str, GlobalVar]:
        return {g.symbol: g for g in self.globals}

    def is_function_symbol(self, name: str) -> bool:
        return name in self.function_map or name in self.declaration_map

    def function_signature(self, name: str) -> Signature | None:
        f = self.function_map.get(name)
        if f is not None:
            return f.signature
        d = self.declaration_map.get(name)
        return d.signature if d is not None else None

    def defined_symbols(self) -> set[str]:
        return {f.symbol for f in self.functions} | {g.symbol for g in self.globals}

    def all_symbols(self) -> set[str]:
        return self.defined_symbols() | {d.symbol for d in self.declarations}

    def instruction_at(self, loc: InstrLoc) -> Instruction | None:
        f = self.function_map.get(loc.function)
        return f.instruction_at(loc) if f is not None else None


# ---------------------------------------------------------------------------
# Operand walking
# ---------------------------------------------------------------------------


def walk_values(value: Value):
    """Yield ``value`` and every value nested inside it."""
    yield value
    if isinstance(value, AggregateConst):
        for op in value.elements:
            yield from walk_values(op.value)
    elif isinstance(value, ConstExprValue):
        for op in value.operands:
            yield from walk_values(op.value)


def instruction_values(instr: Instruction):
    """Yield every value referenced by an instruction (no block labels)."""
    seen_ids: set[int] = set()
    sources: list[Operand] = list(instr.operands)
    if instr.callee is not None:
        sources.append(instr.callee)
    sources.extend(instr.args)
    sources.extend(op for op, _label in instr.incoming)
    for op in sources:
        if id(op) in seen_ids:
            continue
        seen_ids.add(id(op))
        yield from walk_values(op.value)


def value_reference_multiset(fn: FunctionDef) -> dict[tuple[str, str], int]:
    """Multiset of (kind, name) references reachable from a function's body.

    Used to check that degrading instructions to Opaque never loses operand
    references.
    """
    counts: dict[tuple[str, str], int] = {}
    for _loc, instr in fn.locations():
        for v in instruction_values(instr):
            if isinstance(v, LocalRef):
                key = ("local", v.name)
            elif isinstance(v, SymbolRef):
                key = ("symbol", v.name)
            else:
                continue
            counts[key] = counts.get(key, 0) + 1
    return counts


def underlying_symbol(operand: Operand | None) -> str | None:
    """Strip cast-like constant-expression wrappers down to a symbol name."""
    if operand is None:
        return None
    v = operand.value
    while isinstance(v, ConstExprValue) and v.op in ("bitcast", "addrspacecast", "ptrtoint", "inttoptr"):
        if not v.operands:
            return None
        v = v.operands[0].value
    if isinstance(v, SymbolRef):
        return v.name
    return None
