"""Call-site classification and whole-program call-graph resolution.

Every call site is classified each pass against a frozen snapshot of the
edges found so far: data-flow tracing first (vtable dispatch, then traced
function addresses as produced by async lowering), then a two-layer type
fallback for the generic-template cases, and only then "unresolved".  Edges
discovered in one pass feed the traces of the next; the loop stops when a
full pass changes nothing.  Because each pass is a pure function of the
previous pass's state, the final graph is independent of the order sites
are visited in - a property the test suite exercises with randomized
orders.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field

from wasisurf.dataflow import (
    DEFAULT_BUDGET,
    DataflowEngine,
    FunctionAddress,
    Slice,
    VTableSlot,
)
from wasisurf.diagnostics import Diagnostics, emit
from wasisurf.extraction import kind_class
from wasisurf.ir.model import (
    AggregateConst,
    ConstExprValue,
    InstrKind,
    InstrLoc,
    Instruction,
    IrModule,
    LocalRef,
    Operand,
    SymbolRef,
    underlying_symbol,
)
from wasisurf.ir.printer import render_type
from wasisurf.ir.types import StructType, resolve_named, size_and_align, field_offset
from wasisurf.vtables import VTableRegistry


class Classification(enum.Enum):
    DIRECT = "direct"
    VTABLE_DISPATCH = "vtable_dispatch"
    ASYNC_POLL = "async_poll"
    GENERIC_INDIRECT = "generic_indirect"
    UNRESOLVED_INDIRECT = "unresolved_indirect"


@dataclass(frozen=True)
class CallSiteInfo:
    location: InstrLoc
    classification: Classification
    targets: tuple[str, ...]  # sorted
    provenance: tuple[tuple[str, str], ...] = ()  # (target, resolution note)


@dataclass(frozen=True)
class Edge:
    site: InstrLoc
    target: str
    classification: Classification


@dataclass
class ResolutionStats:
    counts: dict[str, int] = field(default_factory=dict)
    iterations: int = 1
    unresolved_count: int = 0
    indirect_site_count: int = 0


class CallGraph:
    """Resolved whole-program call graph with deterministic iteration order."""

    def __init__(self, module: IrModule, sites: dict[InstrLoc, CallSiteInfo], stats: ResolutionStats):
        self.module = module
        self.sites = dict(sorted(sites.items()))
        self.stats = stats
        self.edges: tuple[Edge, ...] = tuple(
            Edge(loc, target, info.classification)
            for loc, info in self.sites.items()
            for target in info.targets
        )
        self.nodes: tuple[str, ...] = tuple(
            sorted({f.symbol for f in module.functions} | {e.target for e in self.edges} | {e.site.function for e in self.edges})
        )
        self._out: dict[str, list[tuple[InstrLoc, str]]] = {}
        self._callers: dict[str, list[tuple[str, InstrLoc]]] = {}
        for e in self.edges:
            self._out.setdefault(e.site.function, []).append((e.site, e.target))
            self._callers.setdefault(e.target, []).append((e.site.function, e.site))
        self._flat_index = self._compute_flat_indexes()

    def _compute_flat_indexes(self) -> dict[InstrLoc, int]:
        flat: dict[InstrLoc, int] = {}
        for fn in self.module.functions:
            ordinal = 0
            for loc, _instr in fn.locations():
                if loc in self.sites:
                    flat[loc] = ordinal
                ordinal += 1
        return flat

    # -- views ---------------------------------------------------------

    def targets_of(self, loc: InstrLoc) -> tuple[str, ...]:
        info = self.sites.get(loc)
        return info.targets if info is not None else ()

    def callers_of(self, symbol: str) -> tuple[tuple[str, InstrLoc], ...]:
        return tuple(sorted(self._callers.get(symbol, ())))

    def out_edges(self, function: str) -> tuple[tuple[InstrLoc, str], ...]:
        return tuple(sorted(self._out.get(function, ())))

    def confident_view(self) -> "_Snapshot":
        """Edge view restricted to confidently resolved sites, for engines."""
        return _Snapshot(self.sites)

    def shortest_slice(self, entry: str, sink: InstrLoc) -> Slice | None:
        """Hop-minimal entry-to-sink chain; ties broken by smallest call site."""
        target_fn = sink.function
        if entry == target_fn:
            return Slice(entry, (sink,), sink)
        parent: dict[str, tuple[str, InstrLoc]] = {}
        seen = {entry}
        frontier = [entry]
        while frontier and target_fn not in seen:
            next_frontier: list[str] = []
            for fn in frontier:
                for site, tgt in self.out_edges(fn):
                    if tgt in seen:
                        continue
                    seen.add(tgt)
                    parent[tgt] = (fn, site)
                    next_frontier.append(tgt)
            frontier = next_frontier
        if target_fn not in parent:
            return None
        hops: list[InstrLoc] = []
        cur = target_fn
        while cur != entry:
            prev, site = parent[cur]
            hops.append(site)
            cur = prev
        hops.reverse()
        return Slice(entry, (*hops, sink), sink)

    def export_text(self) -> str:
        lines = []
        for e in self.edges:
            lines.append(
                f"{e.site.function}\t{self._flat_index.get(e.site, -1)}\t{e.target}\t{e.classification.value}"
            )
        return "\n".join(sorted(lines)) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Edge snapshot handed to the dataflow engine during resolution
# ---------------------------------------------------------------------------


CONFIDENT = frozenset(
    {Classification.DIRECT, Classification.VTABLE_DISPATCH, Classification.ASYNC_POLL}
)


class _Snapshot:
    """Edge view for the dataflow engine.

    Only confidently resolved edges are exposed: type-fallback candidate sets
    are declared over-approximations, so letting them drive memory-flow and
    escape reasoning would poison exact resolutions (and can even deadlock a
    site against its own fallback edges).  Generic and unresolved sites act
    as flow barriers instead.
    """

    def __init__(self, sites: dict[InstrLoc, CallSiteInfo]):
        self._targets: dict[InstrLoc, tuple[str, ...]] = {}
        callers: dict[str, set[tuple[str, InstrLoc]]] = {}
        for loc, info in sites.items():
            if info.classification not in CONFIDENT:
                continue
            self._targets[loc] = info.targets
            for t in info.targets:
                callers.setdefault(t, set()).add((loc.function, loc))
        self._callers = {sym: tuple(sorted(pairs)) for sym, pairs in callers.items()}

    def targets_of(self, loc: InstrLoc) -> tuple[str, ...]:
        return self._targets.get(loc, ())

    def callers_of(self, symbol: str) -> tuple[tuple[str, InstrLoc], ...]:
        return self._callers.get(symbol, ())


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


def classify_call_site(
    engine: DataflowEngine,
    loc: InstrLoc,
    instr: Instruction,
    mlta: "FieldStoreIndex",
    budget: int = DEFAULT_BUDGET,
    diags: Diagnostics | None = None,
) -> CallSiteInfo:
    direct = underlying_symbol(instr.callee)
    if direct is not None:
        return CallSiteInfo(loc, Classification.DIRECT, (direct,), ((direct, "direct callee"),))

    traced = engine.trace(loc.function, instr.callee.value, budget)
    origins = {t.origin for t in traced}
    slot_origins = {o for o in origins if isinstance(o, VTableSlot)}
    addr_origins = {o for o in origins if isinstance(o, FunctionAddress)}
    resolved_fully = origins and origins == (slot_origins | addr_origins)

    if resolved_fully and not addr_origins:
        targets: set[str] = set()
        provenance: list[tuple[str, str]] = []
        for o in sorted(slot_origins, key=lambda o: (o.global_symbol, o.slot)):
            method = engine.registry.lookup_slot(o.global_symbol, o.slot) if engine.registry else None
            if method is not None:
                targets.add(method)
                provenance.append((method, f"vtable {o.global_symbol} slot {o.slot}"))
        if targets:
            return CallSiteInfo(loc, Classification.VTABLE_DISPATCH, tuple(sorted(targets)), tuple(provenance))
    if resolved_fully:
        targets = set()
        provenance = []
        via_mem = any(t.via_memory for t in traced if isinstance(t.origin, FunctionAddress))
        note = "traced function address" + (" (via wrapper memory)" if via_mem else "")
        for o in sorted(addr_origins, key=lambda o: o.symbol):
            targets.add(o.symbol)
            provenance.append((o.symbol, note))
        for o in sorted(slot_origins, key=lambda o: (o.global_symbol, o.slot)):
            method = engine.registry.lookup_slot(o.global_symbol, o.slot) if engine.registry else None
            if method is not None:
                targets.add(method)
                provenance.append((method, f"vtable {o.global_symbol} slot {o.slot}"))
        if slot_origins:
            emit(diags, "resolve", f"site {loc} matches both dispatch and traced-address patterns")
        if targets:
            return CallSiteInfo(loc, Classification.ASYNC_POLL, tuple(sorted(targets)), tuple(provenance))

    candidates = mlta.resolve(engine, loc, instr)
    extra = {o.symbol for o in addr_origins}
    all_targets = set(candidates) | extra
    if all_targets:
        provenance = [(t, "type-analysis candidate") for t in sorted(candidates)]
        provenance += [(t, "traced function address (partial)") for t in sorted(extra - set(candidates))]
        return CallSiteInfo(loc, Classification.GENERIC_INDIRECT, tuple(sorted(all_targets)), tuple(provenance))
    return CallSiteInfo(loc, Classification.UNRESOLVED_INDIRECT, (), ())


# ---------------------------------------------------------------------------
# Two-layer type analysis fallback
# ---------------------------------------------------------------------------


class FieldStoreIndex:
    """Module-wide map (aggregate type, byte offset) -> function addresses
    stored there, plus the signature-compatible address-taken baseline."""

    def __init__(self, module: IrModule):
        self.module = module
        self.address_taken = _address_taken_symbols(module)
        self.by_field: dict[tuple[str, int], set[str]] = {}
        self._build()

    def _build(self) -> None:
        table = self.module.type_table
        for g in self.module.globals:
            if g.initializer is not None:
                self._index_initializer(g.initializer, g.value_type, 0)
        for fn in self.module.functions:
            defs: dict[str, Instruction] = {}
            for _loc, instr in fn.locations():
                if instr.result is not None:
                    defs[instr.result] = instr
            for _loc, instr in fn.locations():
                if instr.kind is not InstrKind.STORE:
                    continue
                value_op, addr_op = instr.operands
                sym = underlying_symbol(value_op)
                if sym is None or not self.module.is_function_symbol(sym):
                    continue
                key = _field_key_of_pointer(addr_op, defs, table)
                if key is not None:
                    self.by_field.setdefault(key, set()).add(sym)

    def _index_initializer(self, init: Operand, ty, base: int) -> None:
        table = self.module.type_table
        value = init.value
        if not isinstance(value, AggregateConst):
            return  # a scalar function pointer carries no containing field type
        offset = 0
        for element in value.elements:
            if element.ty is None:
                return
            sa = size_and_align(element.ty, table)
            if sa is None:
                return
            size, align = sa
            if not value.packed:
                offset = (offset + align - 1) // align * align
            esym = underlying_symbol(element)
            if esym is not None and self.module.is_function_symbol(esym) and ty is not None:
                self.by_field.setdefault((_normalize_type_key(ty, table), offset), set()).add(esym)
            if isinstance(element.value, AggregateConst):
                self._index_initializer(element, element.ty, base + offset)
            offset += size

    def resolve(self, engine: DataflowEngine, loc: InstrLoc, instr: Instruction) -> set[str]:
        baseline = self.signature_baseline(instr)
        key = self._callee_field_key(loc.function, instr)
        if key is None:
            return baseline
        refined = self.by_field.get(key)
        if refined is None:
            return baseline
        return baseline & refined

    def signature_baseline(self, instr: Instruction) -> set[str]:
        table = self.module.type_table
        arg_kinds = [kind_class(a.ty, table) for a in instr.args]
        ret_kind = kind_class(instr.ty, table) if instr.ty is not None else None
        out: set[str] = set()
        for sym in self.address_taken:
            sig = self.module.function_signature(sym)
            if sig is None:
                continue
            if sig.variadic:
                if len(instr.args) < len(sig.params):
                    continue
            elif len(sig.params) != len(arg_kinds):
                continue
            if ret_kind is not None and kind_class(sig.ret, table) != ret_kind:
                continue
            if all(kind_class(p, table) == k for p, k in zip(sig.params, arg_kinds)):
                out.add(sym)
        return out

    def _callee_field_key(self, function: str, instr: Instruction) -> tuple[str, int] | None:
        fn = self.module.function_map.get(function)
        if fn is None:
            return None
        defs: dict[str, Instruction] = {}
        for _loc, i in fn.locations():
            if i.result is not None:
                defs[i.result] = i
        value = instr.callee.value if instr.callee is not None else None
        # Walk through casts to the load, then to its address computation.
        for _ in range(16):
            if isinstance(value, LocalRef):
                d = defs.get(value.name)
                if d is None:
                    return None
                if d.kind is InstrKind.CAST:
                    value = d.operands[0].value
                    continue
                if d.kind is InstrKind.LOAD:
                    return _field_key_of_pointer(d.operands[0], defs, self.module.type_table)
                return None
            return None
        return None


def _field_key_of_pointer(pointer: Operand, defs: dict[str, Instruction], table) -> tuple[str, int] | None:
    value = pointer.value
    for _ in range(16):
        if isinstance(value, LocalRef):
            d = defs.get(value.name)
            if d is None:
                return None
            if d.kind is InstrKind.CAST:
                value = d.operands[0].value
                continue
            if d.kind is InstrKind.ADDR_CALC:
                return _gep_field_key(d.pointee, list(d.operands[1:]), table)
            return None
        if isinstance(value, ConstExprValue) and value.op == "getelementptr":
            return _gep_field_key(value.source_type, list(value.operands[1:]), table)
        return None
    return None


def _gep_field_key(source_type, indices: list[Operand], table) -> tuple[str, int] | None:
    from wasisurf.ir.model import IntConst

    if source_type is None or len(indices) < 2:
        return None
    resolved = resolve_named(source_type, table)
    if not isinstance(resolved, StructType):
        return None
    idx = indices[1].value
    if not isinstance(idx, IntConst):
        return None
    offset = field_offset(resolved, idx.value, table)
    if offset is None:
        return None
    # Deeper indices would address a nested aggregate: refine via its type.
    if len(indices) > 2:
        inner = resolved.fields[idx.value]
        return _gep_field_key(inner, indices[1:], table)
    return (_normalize_type_key(source_type, table), offset)


def _normalize_type_key(ty, table) -> str:
    return render_type(resolve_named(ty, table))


def _address_taken_symbols(module: IrModule) -> set[str]:
    """Function symbols (definitions and declarations) used as values."""
    taken: set[str] = set()

    def visit(value) -> None:
        if isinstance(value, SymbolRef) and module.is_function_symbol(value.name):
            taken.add(value.name)
        elif isinstance(value, (AggregateConst, ConstExprValue)):
            ops = value.operands if isinstance(value, ConstExprValue) else value.elements
            for op in ops:
                visit(op.value)

    for g in module.globals:
        if g.initializer is not None:
            visit(g.initializer.value)
    for fn in module.functions:
        for _loc, instr in fn.locations():
            for op in instr.operands:
                if (
                    instr.kind in (InstrKind.CALL, InstrKind.INVOKE)
                    and op is instr.callee
                    and underlying_symbol(op) is not None
                ):
                    continue
                visit(op.value)
    return taken


# ---------------------------------------------------------------------------
# Fixed point
# ---------------------------------------------------------------------------


def mlta_resolve(module: IrModule, loc: InstrLoc, instr: Instruction, engine: DataflowEngine | None = None) -> set[str]:
    """Standalone two-layer resolution for one site (index built on demand)."""
    index = FieldStoreIndex(module)
    return index.resolve(engine or DataflowEngine(module), loc, instr)


def resolve_fixed_point(
    module: IrModule,
    registry: VTableRegistry | None = None,
    *,
    budget: int = DEFAULT_BUDGET,
    order_seed: int | None = None,
    diags: Diagnostics | None = None,
) -> CallGraph:
    """Iterate call-site classification to a fixed point and build the graph.

    ``order_seed`` shuffles the per-pass processing order; because each pass
    classifies against the previous pass's frozen snapshot, the result is
    identical for every seed.
    """
    from wasisurf.vtables import scan_vtables

    if registry is None:
        registry = scan_vtables(module)
    engine = DataflowEngine(module, registry)
    mlta = FieldStoreIndex(module)

    site_list: list[tuple[InstrLoc, Instruction]] = []
    for fn in module.functions:
        for loc, instr in fn.locations():
            if instr.kind in (InstrKind.CALL, InstrKind.INVOKE):
                site_list.append((loc, instr))
    indirect_count = sum(1 for _loc, i in site_list if underlying_symbol(i.callee) is None)

    rng = random.Random(order_seed)
    sites: dict[InstrLoc, CallSiteInfo] = {}
    iterations = 0
    max_passes = indirect_count + 1
    while True:
        snapshot = _Snapshot(sites)
        engine.set_edges(snapshot)
        order = list(site_list)
        if order_seed is not None:
            rng.shuffle(order)
        changed = False
        new_sites: dict[InstrLoc, CallSiteInfo] = dict(sites)
        for loc, instr in order:
            info = classify_call_site(engine, loc, instr, mlta, budget, diags)
            if sites.get(loc) != info:
                changed = True
            new_sites[loc] = info
        sites = new_sites
        if not changed:
            break
        iterations += 1
        if iterations > max_passes:
            # Should be unreachable for monotone inputs; guarantees termination.
            emit(diags, "resolve", f"stopping at iteration cap ({max_passes})")
            break

    iterations = max(iterations, 1)
    stats = ResolutionStats(iterations=iterations, indirect_site_count=indirect_count)
    for info in sites.values():
        stats.counts[info.classification.value] = stats.counts.get(info.classification.value, 0) + 1
    stats.unresolved_count = stats.counts.get(Classification.UNRESOLVED_INDIRECT.value, 0)
    return CallGraph(module, sites, stats)
