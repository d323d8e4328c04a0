"""Backward value-origin tracing, constant folding, and parameter taint.

This engine answers three questions the call-graph resolver and the
attack-surface explorer keep asking:

* where can this SSA value come from? (``trace_back``)
* does this value fold to a concrete integer? (``const_eval``)
* which sink arguments can an interface parameter influence?
  (``taint_propagate``)

Memory is modeled per allocation site, field-sensitively for constant
offsets; any dynamic offset collapses the site to one summarized cell.
Store/load matching is attempted only while the allocation's address flows
through constructs the engine can audit (geps, casts, phis, argument
passing, returns); as soon as the address escapes into untracked memory or
an external callee, loads from the site answer ``LoadFromUnknown``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Protocol

from wasisurf.ir.model import (
    AggregateConst,
    ConstExprValue,
    FunctionDef,
    InstrKind,
    InstrLoc,
    Instruction,
    IntConst,
    IrModule,
    LocalRef,
    NullConst,
    Operand,
    SymbolRef,
    Value,
    ZeroConst,
)
from wasisurf.ir.types import IntType, PtrType, StructType, ArrayType, resolve_named, size_and_align, field_offset
from wasisurf.vtables import VTableRegistry

DEFAULT_BUDGET = 512


# ---------------------------------------------------------------------------
# Public origin lattice
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValueOrigin:
    """Base class; ordering key used for deterministic output."""

    def sort_key(self) -> tuple:
        return (type(self).__name__, tuple(sorted(self.__dict__.items(), key=lambda kv: kv[0]))) if self.__dict__ else (type(self).__name__,)


@dataclass(frozen=True)
class Constant(ValueOrigin):
    value: int


@dataclass(frozen=True)
class FunctionAddress(ValueOrigin):
    symbol: str


@dataclass(frozen=True)
class VTableSlot(ValueOrigin):
    global_symbol: str
    slot: int


@dataclass(frozen=True)
class Parameter(ValueOrigin):
    function: str
    index: int


@dataclass(frozen=True)
class GlobalAddress(ValueOrigin):
    symbol: str
    offset: int


@dataclass(frozen=True)
class LoadFromUnknown(ValueOrigin):
    pass


@dataclass(frozen=True)
class Unknown(ValueOrigin):
    pass


# Internal-only: the address of a stack allocation site.
@dataclass(frozen=True)
class _AllocAddr(ValueOrigin):
    site: InstrLoc
    offset: int | None  # None = summarized


# Internal-only: a global address with a dynamic offset.
@dataclass(frozen=True)
class _DynGlobalAddr(ValueOrigin):
    symbol: str


@dataclass(frozen=True)
class Traced:
    """An origin plus how it was reached."""

    origin: ValueOrigin
    via_memory: bool = False


# ---------------------------------------------------------------------------
# Slices and taint facts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Slice:
    """Entry-to-sink witness: every call-site hop, ending at the sink call."""

    entry: str
    call_chain: tuple[InstrLoc, ...]
    sink: InstrLoc


class FlowKind(enum.Enum):
    DIRECT = "direct"      # value identity or cast-only
    INDIRECT = "indirect"  # through memory or arithmetic


@dataclass(frozen=True)
class TaintFact:
    source: tuple[str, int]          # (entry function, parameter index)
    sink: tuple[InstrLoc, int]       # (sink call, argument index)
    flow_kind: FlowKind
    witness: Slice


class EdgeView(Protocol):
    """Call-graph facts the engine may rely on (possibly a partial snapshot)."""

    def targets_of(self, loc: InstrLoc) -> tuple[str, ...]: ...

    def callers_of(self, symbol: str) -> tuple[tuple[str, InstrLoc], ...]: ...


# ---------------------------------------------------------------------------
# Per-function indexing
# ---------------------------------------------------------------------------


@dataclass
class _FunctionIndex:
    fn: FunctionDef
    defs: dict[str, tuple[InstrLoc, Instruction]] = field(default_factory=dict)
    params: dict[str, int] = field(default_factory=dict)
    uses: dict[str, list[tuple[InstrLoc, Instruction]]] = field(default_factory=dict)
    returns: list[Operand] = field(default_factory=list)
    stores: list[tuple[InstrLoc, Instruction]] = field(default_factory=list)
    calls: list[tuple[InstrLoc, Instruction]] = field(default_factory=list)


def _index_function(fn: FunctionDef) -> _FunctionIndex:
    idx = _FunctionIndex(fn)
    for i, name in enumerate(fn.param_names):
        idx.params[name] = i
    for loc, instr in fn.locations():
        if instr.result is not None:
            idx.defs[instr.result] = (loc, instr)
        if instr.kind is InstrKind.RETURN and instr.operands:
            idx.returns.append(instr.operands[0])
        if instr.kind is InstrKind.STORE:
            idx.stores.append((loc, instr))
        if instr.kind in (InstrKind.CALL, InstrKind.INVOKE):
            idx.calls.append((loc, instr))
        seen: set[str] = set()
        for op in _instr_value_operands(instr):
            for v in _walk(op.value):
                if isinstance(v, LocalRef) and v.name not in seen:
                    seen.add(v.name)
                    idx.uses.setdefault(v.name, []).append((loc, instr))
    return idx


def _instr_value_operands(instr: Instruction) -> Iterable[Operand]:
    return instr.operands


def _walk(value: Value):
    yield value
    if isinstance(value, (AggregateConst, ConstExprValue)):
        for op in value.operands if isinstance(value, ConstExprValue) else value.elements:
            yield from _walk(op.value)


# ---------------------------------------------------------------------------
# Allocation-site flow summaries
# ---------------------------------------------------------------------------


@dataclass
class _AllocFlow:
    escaped: bool = False
    summarized: bool = False
    # (byte offset | None, stored operand, function holding the store)
    stores: list[tuple[int | None, Operand, str]] = field(default_factory=list)


class _TraceState:
    def __init__(self, budget: int):
        self.budget = budget
        self.in_progress: set[tuple[str, str]] = set()

    def spend(self) -> bool:
        if self.budget <= 0:
            return False
        self.budget -= 1
        return True


class DataflowEngine:
    """Shared read-only analysis context over one linked module."""

    def __init__(
        self,
        module: IrModule,
        registry: VTableRegistry | None = None,
        edges: EdgeView | None = None,
    ):
        self.module = module
        self.registry = registry
        self.edges = edges
        self._indexes: dict[str, _FunctionIndex] = {}
        self._alloc_flows: dict[InstrLoc, _AllocFlow] = {}

    # -- epoch control ----------------------------------------------------

    def set_edges(self, edges: EdgeView | None) -> None:
        """Install a new call-graph snapshot and drop edge-dependent caches."""
        self.edges = edges
        self._alloc_flows.clear()

    def index(self, symbol: str) -> _FunctionIndex | None:
        idx = self._indexes.get(symbol)
        if idx is None:
            fn = self.module.function_map.get(symbol)
            if fn is None:
                return None
            idx = _index_function(fn)
            self._indexes[symbol] = idx
        return idx

    # -- call-site helpers --------------------------------------------------

    def call_targets(self, loc: InstrLoc, instr: Instruction) -> tuple[str, ...]:
        from wasisurf.ir.model import underlying_symbol

        direct = underlying_symbol(instr.callee)
        if direct is not None:
            return (direct,)
        if self.edges is not None:
            return self.edges.targets_of(loc)
        return ()

    def callers_of(self, symbol: str) -> tuple[tuple[str, InstrLoc], ...]:
        if self.edges is None:
            return ()
        return self.edges.callers_of(symbol)

    # ------------------------------------------------------------------
    # trace_back
    # ------------------------------------------------------------------

    def trace_back(self, function: str, value: Value | str, budget: int = DEFAULT_BUDGET) -> set[ValueOrigin]:
        """Public origins of a value, with internal address items generalized."""
        return {self._public(t.origin) for t in self.trace(function, value, budget)}

    def trace(self, function: str, value: Value | str, budget: int = DEFAULT_BUDGET) -> frozenset[Traced]:
        if isinstance(value, str):
            value = LocalRef(value)
        state = _TraceState(budget)
        return frozenset(self._trace(function, value, state, False))

    @staticmethod
    def _public(origin: ValueOrigin) -> ValueOrigin:
        if isinstance(origin, (_AllocAddr, _DynGlobalAddr)):
            return Unknown()
        return origin

    def _trace(self, fn: str, value: Value, state: _TraceState, via_mem: bool) -> set[Traced]:
        if not state.spend():
            return {Traced(Unknown(), via_mem)}
        if isinstance(value, IntConst):
            return {Traced(Constant(value.value), via_mem)}
        if isinstance(value, NullConst):
            return {Traced(Constant(0), via_mem)}
        if isinstance(value, ZeroConst):
            return {Traced(Constant(0), via_mem)}
        if isinstance(value, SymbolRef):
            if self.module.is_function_symbol(value.name):
                return {Traced(FunctionAddress(value.name), via_mem)}
            return {Traced(GlobalAddress(value.name, 0), via_mem)}
        if isinstance(value, ConstExprValue):
            return self._trace_constexpr(fn, value, state, via_mem)
        if isinstance(value, LocalRef):
            return self._trace_local(fn, value.name, state, via_mem)
        return {Traced(Unknown(), via_mem)}

    def _trace_constexpr(self, fn: str, expr: ConstExprValue, state: _TraceState, via_mem: bool) -> set[Traced]:
        if expr.op in ("bitcast", "addrspacecast", "inttoptr", "ptrtoint"):
            return self._trace(fn, expr.operands[0].value, state, via_mem)
        if expr.op == "getelementptr":
            base = self._trace(fn, expr.operands[0].value, state, via_mem)
            offset = self._constexpr_gep_offset(expr)
            return {Traced(self._shift(t.origin, offset), t.via_memory) for t in base}
        folded = const_fold_expr(expr)
        if folded is not None:
            return {Traced(Constant(folded), via_mem)}
        return {Traced(Unknown(), via_mem)}

    def _trace_local(self, fn: str, name: str, state: _TraceState, via_mem: bool) -> set[Traced]:
        key = (fn, name)
        if key in state.in_progress:
            return set()  # cycle: contributes nothing new on this path
        idx = self.index(fn)
        if idx is None:
            return {Traced(Unknown(), via_mem)}
        if name in idx.params:
            return self._trace_param(fn, idx.params[name], state, via_mem)
        entry = idx.defs.get(name)
        if entry is None:
            return {Traced(Unknown(), via_mem)}
        loc, instr = entry
        state.in_progress.add(key)
        try:
            return self._trace_instr_result(fn, loc, instr, state, via_mem)
        finally:
            state.in_progress.discard(key)

    def _trace_param(self, fn: str, index: int, state: _TraceState, via_mem: bool) -> set[Traced]:
        callers = self.callers_of(fn)
        if not callers:
            return {Traced(Parameter(fn, index), via_mem)}
        out: set[Traced] = set()
        for caller_fn, site in callers:
            instr = self.module.instruction_at(site)
            if instr is None or index >= len(instr.args):
                out.add(Traced(Unknown(), via_mem))
                continue
            out |= self._trace(caller_fn, instr.args[index].value, state, via_mem)
        return out

    def _trace_instr_result(
        self, fn: str, loc: InstrLoc, instr: Instruction, state: _TraceState, via_mem: bool
    ) -> set[Traced]:
        kind = instr.kind
        if kind is InstrKind.CAST:
            return self._trace(fn, instr.operands[0].value, state, via_mem)
        if kind is InstrKind.PHI:
            out: set[Traced] = set()
            for op, _label in instr.incoming:
                out |= self._trace(fn, op.value, state, via_mem)
            return out
        if kind is InstrKind.LOCAL_ALLOC:
            return {Traced(_AllocAddr(loc, 0), via_mem)}
        if kind is InstrKind.ADDR_CALC:
            base = self._trace(fn, instr.operands[0].value, state, via_mem)
            offset = self.gep_offset(fn, instr)
            return {Traced(self._shift(t.origin, offset), t.via_memory) for t in base}
        if kind in (InstrKind.INT_OP, InstrKind.COMPARE):
            folded = self.const_eval_instr(fn, instr)
            if folded is not None:
                return {Traced(Constant(folded), via_mem)}
            return {Traced(Unknown(), via_mem)}
        if kind is InstrKind.LOAD:
            return self._trace_load(fn, instr, state)
        if kind in (InstrKind.CALL, InstrKind.INVOKE):
            return self._trace_call_result(fn, loc, instr, state, via_mem)
        return {Traced(Unknown(), via_mem)}

    def _trace_call_result(
        self, fn: str, loc: InstrLoc, instr: Instruction, state: _TraceState, via_mem: bool
    ) -> set[Traced]:
        targets = self.call_targets(loc, instr)
        if not targets:
            return {Traced(Unknown(), via_mem)}
        out: set[Traced] = set()
        for target in targets:
            tidx = self.index(target)
            if tidx is None:
                out.add(Traced(Unknown(), via_mem))  # external callee
                continue
            if not tidx.returns:
                out.add(Traced(Unknown(), via_mem))
                continue
            for ret in tidx.returns:
                out |= self._trace(target, ret.value, state, via_mem)
        return out

    def _trace_load(self, fn: str, instr: Instruction, state: _TraceState) -> set[Traced]:
        addresses = self._trace(fn, instr.operands[0].value, state, False)
        out: set[Traced] = set()
        for t in addresses:
            origin = t.origin
            if isinstance(origin, GlobalAddress):
                out |= self._load_from_global(fn, origin.symbol, origin.offset, state)
            elif isinstance(origin, _AllocAddr):
                out |= self._load_from_site(origin.site, origin.offset, state)
            elif isinstance(origin, (_DynGlobalAddr,)):
                out.add(Traced(LoadFromUnknown(), True))
            elif isinstance(origin, Parameter):
                # Memory behind an untraceable parameter.
                out.add(Traced(LoadFromUnknown(), True))
            else:
                out.add(Traced(LoadFromUnknown(), True))
        return out

    def _load_from_global(self, fn: str, symbol: str, offset: int, state: _TraceState) -> set[Traced]:
        if self.registry is not None:
            hit = self.registry.lookup_offset(symbol, offset)
            if hit is not None:
                record, slot = hit
                if slot == 0:
                    return {Traced(FunctionAddress(record.drop_fn), True)}
                if slot == 1:
                    return {Traced(Constant(record.size_bytes), True)}
                if slot == 2:
                    return {Traced(Constant(record.align_bytes), True)}
                if record.method_at_slot(slot) is not None:
                    return {Traced(VTableSlot(symbol, slot), True)}
        g = self.module.global_map.get(symbol)
        if g is not None and g.is_constant and g.initializer is not None:
            element = extract_initializer_element(g.initializer, offset, self.module.type_table)
            if element is not None:
                return {Traced(t.origin, True) for t in self._trace(fn, element.value, state, True)}
        return {Traced(LoadFromUnknown(), True)}

    def _load_from_site(self, site: InstrLoc, offset: int | None, state: _TraceState) -> set[Traced]:
        flow = self.alloc_flow(site)
        if flow.escaped:
            return {Traced(LoadFromUnknown(), True)}
        out: set[Traced] = set()
        for store_off, operand, holder in flow.stores:
            if not flow.summarized and offset is not None and store_off is not None and store_off != offset:
                continue
            out |= {Traced(t.origin, True) for t in self._trace(holder, operand.value, state, True)}
        if not out:
            out.add(Traced(Unknown(), True))
        return out

    @staticmethod
    def _shift(origin: ValueOrigin, offset: int | None) -> ValueOrigin:
        if isinstance(origin, GlobalAddress):
            if offset is None:
                return _DynGlobalAddr(origin.symbol)
            return GlobalAddress(origin.symbol, origin.offset + offset)
        if isinstance(origin, _DynGlobalAddr):
            return origin
        if isinstance(origin, _AllocAddr):
            if offset is None or origin.offset is None:
                return _AllocAddr(origin.site, None)
            return _AllocAddr(origin.site, origin.offset + offset)
        if isinstance(origin, (Constant, FunctionAddress, VTableSlot)):
            return Unknown()
        return origin

    # ------------------------------------------------------------------
    # Allocation-site forward flow
    # ------------------------------------------------------------------

    def alloc_flow(self, site: InstrLoc) -> _AllocFlow:
        cached = self._alloc_flows.get(site)
        if cached is not None:
            return cached
        flow = _AllocFlow()
        self._alloc_flows[site] = flow
        site_instr = self.module.instruction_at(site)
        if site_instr is None or site_instr.result is None:
            flow.escaped = True
            return flow
        # (function, value name) -> byte offset relative to the site (None = dynamic)
        offsets: dict[tuple[str, str], int | None] = {}
        worklist: list[tuple[str, str]] = [(site.function, site_instr.result)]
        offsets[(site.function, site_instr.result)] = 0
        visited_uses: set[tuple[str, str]] = set()
        while worklist and not flow.escaped:
            fn, name = worklist.pop()
            if (fn, name) in visited_uses:
                continue
            visited_uses.add((fn, name))
            cur = offsets.get((fn, name))
            idx = self.index(fn)
            if idx is None:
                flow.escaped = True
                break
            for loc, instr in idx.uses.get(name, ()):
                self._flow_use(flow, offsets, worklist, fn, name, cur, loc, instr)
        if flow.escaped:
            flow.stores.clear()
        return flow

    def _flow_use(
        self,
        flow: _AllocFlow,
        offsets: dict[tuple[str, str], int | None],
        worklist: list[tuple[str, str]],
        fn: str,
        name: str,
        cur: int | None,
        loc: InstrLoc,
        instr: Instruction,
    ) -> None:
        def propagate(target_fn: str, target_name: str, offset: int | None) -> None:
            key = (target_fn, target_name)
            if key in offsets and offsets[key] != offset:
                offsets[key] = None
                flow.summarized = True
                worklist.append(key)
            elif key not in offsets:
                offsets[key] = offset
                worklist.append(key)

        kind = instr.kind
        is_ref = lambda op: isinstance(op.value, LocalRef) and op.value.name == name  # noqa: E731

        if kind is InstrKind.ADDR_CALC:
            if is_ref(instr.operands[0]) and instr.result is not None:
                off = self.gep_offset(fn, instr)
                if off is None:
                    flow.summarized = True
                    propagate(fn, instr.result, None)
                else:
                    propagate(fn, instr.result, None if cur is None else cur + off)
            return
        if kind is InstrKind.CAST:
            if instr.result is not None:
                propagate(fn, instr.result, cur)
            return
        if kind is InstrKind.PHI:
            if instr.result is not None:
                propagate(fn, instr.result, cur)
            return
        if kind is InstrKind.STORE:
            value_op, addr_op = instr.operands
            if is_ref(addr_op):
                flow.stores.append((None if cur is None else cur, value_op, fn))
                if cur is None:
                    flow.summarized = True
            if is_ref(value_op):
                flow.escaped = True  # the address itself escapes into memory
            return
        if kind is InstrKind.LOAD:
            return  # reading through the address is fine
        if kind is InstrKind.COMPARE:
            return
        if kind in (InstrKind.CALL, InstrKind.INVOKE, InstrKind.INLINE_ASM):
            if instr.callee is not None and is_ref(instr.callee):
                return  # being called, not leaked
            positions = [i for i, a in enumerate(instr.args) if is_ref(a)]
            if not positions:
                return
            if kind is InstrKind.INLINE_ASM:
                flow.escaped = True
                return
            targets = self.call_targets(loc, instr)
            if not targets:
                # Indirect site with nothing confidently resolved: a flow
                # barrier, not an escape - fallback candidate sets are
                # over-approximations and must not poison exact matches.
                return
            for target in targets:
                tfn = self.module.function_map.get(target)
                if tfn is None:
                    flow.escaped = True  # external callee may retain/mutate it
                    return
                for i in positions:
                    if i < len(tfn.param_names):
                        propagate(target, tfn.param_names[i], cur)
            return
        if kind is InstrKind.RETURN:
            for caller_fn, site in self.callers_of(fn):
                call_instr = self.module.instruction_at(site)
                if call_instr is not None and call_instr.result is not None:
                    propagate(caller_fn, call_instr.result, cur)
            return
        # switch/branch on the address, int ops, opaque uses: out of model.
        if kind in (InstrKind.BRANCH, InstrKind.SWITCH):
            return
        flow.escaped = True

    # ------------------------------------------------------------------
    # getelementptr offsets
    # ------------------------------------------------------------------

    def gep_offset(self, fn: str, instr: Instruction) -> int | None:
        return self._gep_offset(instr.pointee, [op for op in instr.operands[1:]], fn)

    def _constexpr_gep_offset(self, expr: ConstExprValue) -> int | None:
        return self._gep_offset(expr.source_type, list(expr.operands[1:]), None)

    def _gep_offset(self, source_type, indices: list[Operand], fn: str | None) -> int | None:
        if source_type is None or not indices:
            return None
        table = self.module.type_table

        def index_value(op: Operand) -> int | None:
            if isinstance(op.value, IntConst):
                return op.value.value
            if fn is not None:
                return self.const_eval(fn, op.value)
            return None

        first = index_value(indices[0])
        if first is None:
            return None
        sa = size_and_align(source_type, table)
        if sa is None:
            return None
        offset = first * sa[0]
        current = source_type
        for op in indices[1:]:
            current = resolve_named(current, table)
            idx = index_value(op)
            if idx is None:
                return None
            if isinstance(current, StructType):
                fo = field_offset(current, idx, table)
                if fo is None:
                    return None
                offset += fo
                current = current.fields[idx]
            elif isinstance(current, ArrayType):
                esa = size_and_align(current.element, table)
                if esa is None:
                    return None
                stride = (esa[0] + esa[1] - 1) // esa[1] * esa[1]
                offset += idx * stride
                current = current.element
            else:
                return None
        return offset

    # ------------------------------------------------------------------
    # const_eval
    # ------------------------------------------------------------------

    def const_eval(self, function: str, value: Value | str, _depth: int = 0) -> int | None:
        """Fold an integer value to a constant, or None if any leaf is not."""
        if _depth > 128:
            return None
        if isinstance(value, str):
            value = LocalRef(value)
        if isinstance(value, IntConst):
            return value.value
        if isinstance(value, NullConst) or isinstance(value, ZeroConst):
            return 0
        if isinstance(value, ConstExprValue):
            return const_fold_expr(value)
        if not isinstance(value, LocalRef):
            return None
        idx = self.index(function)
        if idx is None or value.name in idx.params:
            return None
        entry = idx.defs.get(value.name)
        if entry is None:
            return None
        _loc, instr = entry
        return self.const_eval_instr(function, instr, _depth + 1)

    def const_eval_instr(self, function: str, instr: Instruction, _depth: int = 0) -> int | None:
        kind = instr.kind
        if kind is InstrKind.INT_OP:
            bits = instr.ty.bits if isinstance(instr.ty, IntType) else 64
            a = self.const_eval(function, instr.operands[0].value, _depth + 1)
            b = self.const_eval(function, instr.operands[1].value, _depth + 1)
            if a is None or b is None:
                return None
            return fold_int_op(instr.opcode, a, b, bits)
        if kind is InstrKind.COMPARE:
            ty = instr.operands[0].ty
            bits = ty.bits if isinstance(ty, IntType) else 64
            a = self.const_eval(function, instr.operands[0].value, _depth + 1)
            b = self.const_eval(function, instr.operands[1].value, _depth + 1)
            if a is None or b is None:
                return None
            return fold_icmp(instr.opcode, a, b, bits)
        if kind is InstrKind.CAST:
            src_ty = instr.operands[0].ty
            inner = self.const_eval(function, instr.operands[0].value, _depth + 1)
            if inner is None:
                return None
            src_bits = src_ty.bits if isinstance(src_ty, IntType) else None
            dst_bits = instr.ty.bits if isinstance(instr.ty, IntType) else None
            return fold_cast(instr.opcode, inner, src_bits, dst_bits)
        if kind is InstrKind.PHI:
            folded = {self.const_eval(function, op.value, _depth + 1) for op, _ in instr.incoming}
            if len(folded) == 1 and None not in folded:
                return folded.pop()
            return None
        return None


# ---------------------------------------------------------------------------
# Pure integer folding (shared with constant expressions)
# ---------------------------------------------------------------------------


def _u(v: int, bits: int) -> int:
    return v & ((1 << bits) - 1)


def _s(v: int, bits: int) -> int:
    u = _u(v, bits)
    return u - (1 << bits) if u >= 1 << (bits - 1) else u


def fold_int_op(op: str, a: int, b: int, bits: int) -> int | None:
    au, bu = _u(a, bits), _u(b, bits)
    as_, bs = _s(a, bits), _s(b, bits)
    if op == "add":
        return _u(au + bu, bits)
    if op == "sub":
        return _u(au - bu, bits)
    if op == "mul":
        return _u(au * bu, bits)
    if op == "and":
        return au & bu
    if op == "or":
        return au | bu
    if op == "xor":
        return au ^ bu
    if op == "udiv":
        return None if bu == 0 else au // bu
    if op == "urem":
        return None if bu == 0 else au % bu
    if op == "sdiv":
        if bs == 0 or (as_ == -(1 << (bits - 1)) and bs == -1):
            return None
        q = abs(as_) // abs(bs)
        return _u(q if (as_ < 0) == (bs < 0) else -q, bits)
    if op == "srem":
        if bs == 0 or (as_ == -(1 << (bits - 1)) and bs == -1):
            return None
        q = abs(as_) // abs(bs)
        q = q if (as_ < 0) == (bs < 0) else -q
        return _u(as_ - q * bs, bits)
    if op == "shl":
        return None if bu >= bits else _u(au << bu, bits)
    if op == "lshr":
        return None if bu >= bits else au >> bu
    if op == "ashr":
        return None if bu >= bits else _u(as_ >> bu, bits)
    return None


def fold_icmp(pred: str, a: int, b: int, bits: int) -> int | None:
    au, bu = _u(a, bits), _u(b, bits)
    as_, bs = _s(a, bits), _s(b, bits)
    table = {
        "eq": au == bu,
        "ne": au != bu,
        "ugt": au > bu,
        "uge": au >= bu,
        "ult": au < bu,
        "ule": au <= bu,
        "sgt": as_ > bs,
        "sge": as_ >= bs,
        "slt": as_ < bs,
        "sle": as_ <= bs,
    }
    if pred not in table:
        return None
    return int(table[pred])


def fold_cast(op: str, value: int, src_bits: int | None, dst_bits: int | None) -> int | None:
    if op == "trunc":
        return None if dst_bits is None else _u(value, dst_bits)
    if op == "zext":
        return None if src_bits is None else _u(value, src_bits)
    if op == "sext":
        if src_bits is None or dst_bits is None:
            return None
        return _u(_s(value, src_bits), dst_bits)
    if op == "bitcast":
        if src_bits is not None and dst_bits is not None and src_bits == dst_bits:
            return value
        return None
    return None  # pointer casts do not yield integers


def const_fold_expr(expr: ConstExprValue) -> int | None:
    def leaf(op: Operand) -> int | None:
        if isinstance(op.value, IntConst):
            return op.value.value
        if isinstance(op.value, ConstExprValue):
            return const_fold_expr(op.value)
        if isinstance(op.value, (NullConst, ZeroConst)):
            return 0
        return None

    if expr.op.startswith("icmp."):
        a, b = leaf(expr.operands[0]), leaf(expr.operands[1])
        ty = expr.operands[0].ty
        bits = ty.bits if isinstance(ty, IntType) else 64
        if a is None or b is None:
            return None
        return fold_icmp(expr.op.split(".", 1)[1], a, b, bits)
    if expr.op in ("trunc", "zext", "sext", "bitcast"):
        inner = leaf(expr.operands[0])
        if inner is None:
            return None
        src = expr.operands[0].ty
        src_bits = src.bits if isinstance(src, IntType) else None
        dst = expr.result_type
        dst_bits = dst.bits if isinstance(dst, IntType) else None
        return fold_cast(expr.op, inner, src_bits, dst_bits)
    if expr.op in ("inttoptr", "ptrtoint", "addrspacecast", "getelementptr", "select"):
        return None
    if len(expr.operands) == 2:
        a, b = leaf(expr.operands[0]), leaf(expr.operands[1])
        ty = expr.operands[0].ty
        bits = ty.bits if isinstance(ty, IntType) else 64
        if a is None or b is None:
            return None
        return fold_int_op(expr.op, a, b, bits)
    return None


# ---------------------------------------------------------------------------
# Parameter taint
# ---------------------------------------------------------------------------


_BaseKey = tuple  # ('site', InstrLoc) | ('global', str)


def _merge_kind(
    table: dict, key, param: int, kind: FlowKind, queue: list, queue_item
) -> None:
    kinds = table.setdefault(key, {})
    old = kinds.get(param)
    if old is None or (old is FlowKind.INDIRECT and kind is FlowKind.DIRECT):
        kinds[param] = kind
        queue.append(queue_item)


class TaintAnalysis:
    """Forward parameter-taint propagation from one entry function.

    Value flow only: taint moves through casts and phis (Direct), argument
    passing and non-sink returns (kind preserved), integer arithmetic,
    comparisons, derived pointers, and store->load pairs on auditable
    allocation sites (Indirect).  Control dependence never taints, and sink
    return values never flow back.
    """

    def __init__(self, engine: DataflowEngine, entry: str, callgraph):
        self.engine = engine
        self.entry = entry
        self.callgraph = callgraph
        self.value_taint: dict[tuple[str, str], dict[int, FlowKind]] = {}
        self.memory_taint: dict[tuple[_BaseKey, int | None], dict[int, FlowKind]] = {}
        self.queue: list[tuple[str, str]] = []
        self.reachable = self._reachable_functions()
        self._load_index = self._index_loads()

    def _reachable_functions(self) -> set[str]:
        seen = {self.entry}
        work = [self.entry]
        while work:
            fn = work.pop()
            for site, target in self.callgraph.out_edges(fn):
                del site
                if target not in seen:
                    seen.add(target)
                    if target in self.engine.module.function_map:
                        work.append(target)
        return seen

    def _index_loads(self) -> dict[tuple[_BaseKey, int | None], list[tuple[str, str]]]:
        index: dict[tuple[_BaseKey, int | None], list[tuple[str, str]]] = {}
        for fn in sorted(self.reachable):
            fidx = self.engine.index(fn)
            if fidx is None:
                continue
            for _loc, instr in fidx.fn.locations():
                if instr.kind is not InstrKind.LOAD or instr.result is None:
                    continue
                for base, off in self._address_keys(fn, instr.operands[0]):
                    index.setdefault((base, off), []).append((fn, instr.result))
        return index

    def _address_keys(self, fn: str, pointer: Operand) -> list[tuple[_BaseKey, int | None]]:
        keys: list[tuple[_BaseKey, int | None]] = []
        for t in self.engine.trace(fn, pointer.value):
            origin = t.origin
            if isinstance(origin, _AllocAddr):
                keys.append((("site", origin.site), origin.offset))
            elif isinstance(origin, GlobalAddress):
                keys.append((("global", origin.symbol), origin.offset))
            elif isinstance(origin, _DynGlobalAddr):
                keys.append((("global", origin.symbol), None))
        return keys

    # -- propagation --

    def run(self, sinks: list[InstrLoc]) -> list[TaintFact]:
        entry_fn = self.engine.module.function_map.get(self.entry)
        if entry_fn is None:
            return []
        for i, name in enumerate(entry_fn.param_names):
            _merge_kind(self.value_taint, (self.entry, name), i, FlowKind.DIRECT, self.queue, (self.entry, name))
        while self.queue:
            fn, name = self.queue.pop()
            self._propagate_value(fn, name)
        return self._collect_facts(sinks)

    def _taints_of(self, fn: str, name: str) -> dict[int, FlowKind]:
        return self.value_taint.get((fn, name), {})

    def _propagate_value(self, fn: str, name: str) -> None:
        kinds = dict(self._taints_of(fn, name))
        if not kinds:
            return
        fidx = self.engine.index(fn)
        if fidx is None:
            return
        for loc, instr in fidx.uses.get(name, ()):
            self._propagate_use(fn, name, kinds, loc, instr)

    def _taint_value(self, fn: str, name: str, kinds: dict[int, FlowKind], force_indirect: bool) -> None:
        for param, kind in kinds.items():
            out_kind = FlowKind.INDIRECT if force_indirect else kind
            _merge_kind(self.value_taint, (fn, name), param, out_kind, self.queue, (fn, name))

    def _taint_memory(self, key: tuple[_BaseKey, int | None], kinds: dict[int, FlowKind]) -> None:
        changed_params = []
        kmap = self.memory_taint.setdefault(key, {})
        for param in kinds:
            if param not in kmap:
                kmap[param] = FlowKind.INDIRECT
                changed_params.append(param)
        if not changed_params:
            return
        base, off = key
        for (lbase, loff), loads in self._load_index.items():
            if lbase != base:
                continue
            if off is not None and loff is not None and off != loff:
                continue
            for lfn, lname in loads:
                for param in changed_params:
                    _merge_kind(
                        self.value_taint, (lfn, lname), param, FlowKind.INDIRECT, self.queue, (lfn, lname)
                    )

    def _propagate_use(
        self, fn: str, name: str, kinds: dict[int, FlowKind], loc: InstrLoc, instr: Instruction
    ) -> None:
        is_ref = lambda op: isinstance(op.value, LocalRef) and op.value.name == name  # noqa: E731
        kind = instr.kind
        if kind in (InstrKind.CAST, InstrKind.PHI):
            if instr.result is not None:
                self._taint_value(fn, instr.result, kinds, force_indirect=False)
            return
        if kind in (InstrKind.INT_OP, InstrKind.COMPARE, InstrKind.ADDR_CALC):
            if instr.result is not None:
                self._taint_value(fn, instr.result, kinds, force_indirect=True)
            return
        if kind is InstrKind.STORE:
            value_op, addr_op = instr.operands
            if is_ref(value_op):
                for key in self._address_keys(fn, addr_op):
                    self._taint_memory(key, kinds)
            return
        if kind in (InstrKind.CALL, InstrKind.INVOKE):
            for i, arg in enumerate(instr.args):
                if not is_ref(arg):
                    continue
                for target in self.callgraph.targets_of(loc):
                    tfn = self.engine.module.function_map.get(target)
                    if tfn is None or i >= len(tfn.param_names):
                        continue
                    self._taint_value(target, tfn.param_names[i], kinds, force_indirect=False)
            return
        if kind is InstrKind.RETURN:
            for caller_fn, site in self.callgraph.callers_of(fn):
                if caller_fn not in self.reachable and caller_fn != self.entry:
                    continue
                call_instr = self.engine.module.instruction_at(site)
                if call_instr is not None and call_instr.result is not None:
                    self._taint_value(caller_fn, call_instr.result, kinds, force_indirect=False)
            return
        # Branch/switch conditions, inline asm, opaque uses: no value flow.

    def _collect_facts(self, sinks: list[InstrLoc]) -> list[TaintFact]:
        best: dict[tuple[int, InstrLoc, int], FlowKind] = {}
        for loc in sinks:
            instr = self.engine.module.instruction_at(loc)
            if instr is None:
                continue
            for i, arg in enumerate(instr.args):
                if not isinstance(arg.value, LocalRef):
                    continue
                for param, kind in self._taints_of(loc.function, arg.value.name).items():
                    key = (param, loc, i)
                    old = best.get(key)
                    if old is None or (old is FlowKind.INDIRECT and kind is FlowKind.DIRECT):
                        best[key] = kind
        facts = []
        for (param, loc, arg_index), kind in best.items():
            witness = self.callgraph.shortest_slice(self.entry, loc)
            if witness is None:
                continue
            facts.append(
                TaintFact(
                    source=(self.entry, param),
                    sink=(loc, arg_index),
                    flow_kind=kind,
                    witness=witness,
                )
            )
        facts.sort(key=lambda f: (f.sink[0], f.sink[1], f.source[1], f.flow_kind.value))
        return facts


def taint_propagate(
    engine: DataflowEngine, entry: str, sinks: list[InstrLoc], callgraph
) -> list[TaintFact]:
    """Taint facts from an entry function's parameters into sink arguments."""
    return TaintAnalysis(engine, entry, callgraph).run(sinks)


# ---------------------------------------------------------------------------
# Global initializer element extraction
# ---------------------------------------------------------------------------


def extract_initializer_element(init: Operand, offset: int, type_table) -> Operand | None:
    """Constant element of an initializer tree at a byte offset, if addressable."""
    if offset == 0 and not isinstance(init.value, AggregateConst):
        return init
    value = init.value
    if isinstance(value, ZeroConst):
        return Operand(IntConst(0), None)
    if not isinstance(value, AggregateConst):
        return None
    cursor = 0
    for element in value.elements:
        if element.ty is None:
            return None
        sa = size_and_align(element.ty, type_table)
        if sa is None:
            return None
        size, align = sa
        if not value.packed:
            cursor = (cursor + align - 1) // align * align
        if cursor <= offset < cursor + size:
            return extract_initializer_element(element, offset - cursor, type_table)
        cursor += size
    return None
