"""Entry-point discovery, sink reachability, and argument recovery.

The attack surface is the map from WASI/WASIX interface entry points to the
OS-boundary sinks they can reach: external API calls (functions that remain
declared-but-undefined after whole-program linking) and raw syscalls (wrapper
functions taking the number in argument 0, or inline-asm sites matching the
configured patterns).  Each reachable sink yields a finding with its shortest
entry-to-sink slice, a capped count of distinct call chains, parameter-taint
facts, and recovered constant arguments (syscall numbers, flag words).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from wasisurf.callgraph import CallGraph
from wasisurf.dataflow import Constant, DataflowEngine, Slice, TaintFact, taint_propagate
from wasisurf.diagnostics import Diagnostics, emit
from wasisurf.errors import ConfigError
from wasisurf.graphkern import bfs_tree, build_csr, count_simple_paths
from wasisurf.ir.model import InstrKind, InstrLoc, IrModule, underlying_symbol
from wasisurf.ir.model import AsmCallee

PATH_COUNT_CAP = 1000


# ---------------------------------------------------------------------------
# Specs and findings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntryPoint:
    interface_name: str
    symbols: tuple[str, ...]
    source: str  # "config_pattern" or "export_list"


@dataclass(frozen=True)
class InlineSyscallPattern:
    contains: str
    number_operand: int = 0


@dataclass
class SinkSpec:
    api_names: dict[str, str]  # external function name -> resource tag
    syscall_wrappers: tuple[str, ...] = ()
    inline_patterns: tuple[InlineSyscallPattern, ...] = ()
    sensitive_args: dict[str, tuple[tuple[int, str], ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class RecoveredArg:
    arg_index: int
    value: int | None
    flag_names: tuple[str, ...] = ()
    note: str = ""


@dataclass
class SinkFinding:
    interface_name: str
    sink_name: str
    sink_kind: str  # "external_api" or "raw_syscall"
    shortest_slice: Slice
    path_count: int
    taint: tuple[TaintFact, ...] = ()
    recovered: tuple[RecoveredArg, ...] = ()
    annotations: tuple = ()  # strategy annotations, attached by the classifier


@dataclass
class SurfaceReport:
    runtime_label: str
    findings: dict[str, list[SinkFinding]]  # interface -> sorted findings
    summary: dict[str, tuple[str, ...]]  # interface -> sorted sink names
    resolution: dict


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def find_entry_points(
    module: IrModule,
    patterns: list[str] | None = None,
    export_list: dict[str, list[str]] | None = None,
    diags: Diagnostics | None = None,
) -> list[EntryPoint]:
    """Interface entry points from demangled-name patterns or an export list.

    A pattern with a capture group names the interface explicitly; otherwise
    the final ``::`` segment of the demangled path is used.
    """
    if not patterns and not export_list:
        raise ConfigError("entry_points", "no patterns and no export list configured")
    collected: dict[str, set[str]] = {}
    sources: dict[str, str] = {}
    for pattern in patterns or []:
        try:
            rx = re.compile(pattern)
        except re.error as exc:
            raise ConfigError("entry_points", f"bad pattern {pattern!r}: {exc}") from None
        for fn in module.functions:
            path = fn.demangled or fn.symbol
            m = rx.search(path)
            if m is None:
                continue
            interface = m.group(1) if m.groups() and m.group(1) else path.rsplit("::", 1)[-1]
            collected.setdefault(interface, set()).add(fn.symbol)
            sources.setdefault(interface, "config_pattern")
    for interface, symbols in (export_list or {}).items():
        present = [s for s in symbols if s in module.function_map]
        missing = [s for s in symbols if s not in module.function_map]
        for s in missing:
            emit(diags, "entry", f"export-list symbol '@{s}' not defined in module")
        if present:
            collected.setdefault(interface, set()).update(present)
            sources.setdefault(interface, "export_list")
    if not collected:
        emit(diags, "entry", "no entry points matched the configured patterns")
    return [
        EntryPoint(name, tuple(sorted(collected[name])), sources[name])
        for name in sorted(collected)
    ]


# ---------------------------------------------------------------------------
# Sink-site discovery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SinkSite:
    location: InstrLoc
    sink_name: str
    sink_kind: str
    wrapper: bool = False  # number in argument 0
    number_operand: int = 0


def discover_sink_sites(
    module: IrModule,
    engine: DataflowEngine,
    spec: SinkSpec,
    syscall_table: dict[int, str],
    diags: Diagnostics | None = None,
) -> list[SinkSite]:
    """All OS-boundary call sites in the module, with raw syscalls named."""
    sites: list[SinkSite] = []
    declared = set(module.declaration_map)
    for fn in module.functions:
        for loc, instr in fn.locations():
            if instr.kind in (InstrKind.CALL, InstrKind.INVOKE):
                callee = underlying_symbol(instr.callee)
                if callee is None:
                    continue
                if callee in spec.api_names and callee in declared:
                    sites.append(SinkSite(loc, callee, "external_api"))
                elif callee in spec.syscall_wrappers:
                    name = _raw_syscall_name(engine, loc, instr, 0, syscall_table, diags)
                    sites.append(SinkSite(loc, name, "raw_syscall", wrapper=True, number_operand=0))
            elif instr.kind is InstrKind.INLINE_ASM:
                asm = instr.callee.value if instr.callee is not None else None
                if not isinstance(asm, AsmCallee):
                    continue
                for pattern in spec.inline_patterns:
                    if pattern.contains in asm.asm_text:
                        name = _raw_syscall_name(
                            engine, loc, instr, pattern.number_operand, syscall_table, diags
                        )
                        sites.append(
                            SinkSite(loc, name, "raw_syscall", wrapper=False, number_operand=pattern.number_operand)
                        )
                        break
    sites.sort(key=lambda s: (s.location, s.sink_name))
    return sites


def _raw_syscall_name(
    engine: DataflowEngine,
    loc: InstrLoc,
    instr,
    operand_index: int,
    syscall_table: dict[int, str],
    diags: Diagnostics | None,
) -> str:
    recovered = recover_syscall_number(engine, loc, syscall_table, operand_index)
    if recovered is None:
        emit(diags, "sink", f"unresolved syscall number at {loc}")
        return "syscall<unknown>"
    number, name = recovered
    del number
    return name


def recover_syscall_number(
    engine: DataflowEngine,
    loc: InstrLoc,
    syscall_table: dict[int, str],
    operand_index: int = 0,
) -> tuple[int, str] | None:
    """Constant syscall number of a raw-syscall site, mapped through the table."""
    instr = engine.module.instruction_at(loc)
    if instr is None or operand_index >= len(instr.args):
        return None
    value = _constant_of(engine, loc.function, instr.args[operand_index].value)
    if value is None:
        return None
    return value, syscall_table.get(value, f"syscall_{value}")


def _constant_of(engine: DataflowEngine, function: str, value) -> int | None:
    folded = engine.const_eval(function, value)
    if folded is not None:
        return folded
    origins = engine.trace_back(function, value)
    constants = {o.value for o in origins if isinstance(o, Constant)}
    if len(origins) == len(constants) == 1:
        return constants.pop()
    return None


# ---------------------------------------------------------------------------
# Reachability traversal
# ---------------------------------------------------------------------------


def traverse_reachable_sinks(
    callgraph: CallGraph,
    entry: EntryPoint,
    sink_sites: list[SinkSite],
) -> list[tuple[SinkSite, Slice, int]]:
    """Breadth-first sink discovery from one entry point.

    For each reachable sink site: the hop-minimal slice (deterministic tie
    break) and the number of distinct call chains up to the cap.
    """
    node_ids = {sym: i for i, sym in enumerate(callgraph.nodes)}
    edges: list[tuple[int, int]] = []
    edge_sites: dict[tuple[int, int], list[InstrLoc]] = {}
    for e in callgraph.edges:
        u = node_ids.get(e.site.function)
        v = node_ids.get(e.target)
        if u is None or v is None:
            continue
        edges.append((u, v))
        edge_sites.setdefault((u, v), []).append(e.site)
    indptr, indices = build_csr(len(callgraph.nodes), edges)

    results: list[tuple[SinkSite, Slice, int]] = []
    best: dict[InstrLoc, tuple[SinkSite, Slice, int]] = {}
    for entry_symbol in entry.symbols:
        src = node_ids.get(entry_symbol)
        if src is None:
            continue
        dist, parent = bfs_tree(indptr, indices, src)
        for site in sink_sites:
            fn_id = node_ids.get(site.location.function)
            if fn_id is None or dist[fn_id] < 0:
                continue
            hops: list[InstrLoc] = []
            cur = fn_id
            while cur != src:
                prev = int(parent[cur])
                hops.append(min(edge_sites[(prev, cur)]))
                cur = prev
            hops.reverse()
            witness = Slice(entry_symbol, (*hops, site.location), site.location)
            count = count_simple_paths(indptr, indices, src, fn_id, PATH_COUNT_CAP)
            prior = best.get(site.location)
            if prior is None:
                best[site.location] = (site, witness, min(count, PATH_COUNT_CAP))
            else:
                merged = min(prior[2] + count, PATH_COUNT_CAP)
                keep = prior[1]
                if (len(witness.call_chain), witness.call_chain) < (len(keep.call_chain), keep.call_chain):
                    keep = witness
                best[site.location] = (prior[0], keep, merged)
    results = [best[loc] for loc in sorted(best)]
    return results


# ---------------------------------------------------------------------------
# Flag recovery
# ---------------------------------------------------------------------------


def recover_sensitive_flags(
    engine: DataflowEngine,
    site: SinkSite,
    spec: SinkSpec,
    flag_tables: dict[str, dict[str, int]],
    taint: tuple[TaintFact, ...] = (),
    diags: Diagnostics | None = None,
) -> tuple[RecoveredArg, ...]:
    """Constant values and symbolic names for the sink's sensitive arguments."""
    rules = spec.sensitive_args.get(site.sink_name, ())
    if not rules:
        return ()
    instr = engine.module.instruction_at(site.location)
    if instr is None:
        return ()
    out: list[RecoveredArg] = []
    for natural_index, table_name in rules:
        table = flag_tables.get(table_name)
        if table is None:
            emit(diags, "flags", f"flag table '{table_name}' not configured")
            continue
        # Raw-syscall wrappers shift every argument past the number operand.
        arg_index = natural_index
        if site.sink_kind == "raw_syscall":
            arg_index = site.number_operand + 1 + natural_index
        if arg_index >= len(instr.args):
            continue
        value = _constant_of(engine, site.location.function, instr.args[arg_index].value)
        if value is None:
            tainted = any(f.sink == (site.location, arg_index) for f in taint)
            note = f"non-constant flags argument ({table_name})"
            if tainted:
                note += "; see taint facts for this argument"
            out.append(RecoveredArg(arg_index, None, (), note))
            continue
        names = decompose_flags(value, table)
        out.append(RecoveredArg(arg_index, value, tuple(names), table_name))
    return tuple(out)


def decompose_flags(value: int, table: dict[str, int]) -> list[str]:
    """Symbolic names for a flag word: exact match first, then set bits."""
    exact = sorted(name for name, v in table.items() if v == value)
    if exact:
        return [exact[0]]
    if value == 0:
        return []  # no zero-valued name in the table
    names = sorted(name for name, v in table.items() if v and v & value == v)
    return names


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------


def explore_attack_surface(
    module: IrModule,
    callgraph: CallGraph,
    entries: list[EntryPoint],
    spec: SinkSpec,
    syscall_table: dict[int, str],
    flag_tables: dict[str, dict[str, int]],
    diags: Diagnostics | None = None,
) -> dict[str, list[SinkFinding]]:
    """Per-interface sink findings over a resolved call graph."""
    engine = DataflowEngine(module, edges=callgraph.confident_view())
    sink_sites = discover_sink_sites(module, engine, spec, syscall_table, diags)
    findings: dict[str, list[SinkFinding]] = {}
    for entry in entries:
        reached = traverse_reachable_sinks(callgraph, entry, sink_sites)
        if not reached:
            findings[entry.interface_name] = []
            continue
        sink_locs = sorted({site.location for site, _sl, _n in reached})
        facts: list[TaintFact] = []
        for symbol in entry.symbols:
            facts.extend(taint_propagate(engine, symbol, sink_locs, callgraph))
        by_loc: dict[InstrLoc, list[TaintFact]] = {}
        for fact in facts:
            by_loc.setdefault(fact.sink[0], []).append(fact)
        rows: list[SinkFinding] = []
        for site, witness, count in reached:
            site_taint = tuple(by_loc.get(site.location, ()))
            recovered: list[RecoveredArg] = []
            if site.sink_kind == "raw_syscall":
                got = recover_syscall_number(engine, site.location, syscall_table, site.number_operand)
                if got is not None:
                    recovered.append(RecoveredArg(site.number_operand, got[0], (got[1],), "syscall number"))
            recovered.extend(
                recover_sensitive_flags(engine, site, spec, flag_tables, site_taint, diags)
            )
            rows.append(
                SinkFinding(
                    interface_name=entry.interface_name,
                    sink_name=site.sink_name,
                    sink_kind=site.sink_kind,
                    shortest_slice=witness,
                    path_count=count,
                    taint=site_taint,
                    recovered=tuple(recovered),
                )
            )
        rows.sort(key=lambda f: (f.sink_name, f.shortest_slice.sink))
        findings[entry.interface_name] = rows
    return findings


def build_report(
    runtime_label: str,
    findings: dict[str, list[SinkFinding]],
    resolution_stats: dict | None = None,
) -> SurfaceReport:
    summary = {
        interface: tuple(sorted({f.sink_name for f in rows}))
        for interface, rows in sorted(findings.items())
    }
    return SurfaceReport(
        runtime_label=runtime_label,
        findings={k: list(v) for k, v in sorted(findings.items())},
        summary=summary,
        resolution=dict(resolution_stats or {}),
    )


def report_sink_union(report: SurfaceReport) -> tuple[str, ...]:
    return tuple(sorted({name for names in report.summary.values() for name in names}))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _loc_str(loc: InstrLoc) -> str:
    return f"{loc.function}:{loc.block}:{loc.index}"


def _slice_dict(sl: Slice) -> dict:
    return {
        "entry": sl.entry,
        "call_chain": [_loc_str(l) for l in sl.call_chain],
        "sink": _loc_str(sl.sink),
    }


def finding_to_dict(f: SinkFinding) -> dict:
    return {
        "interface": f.interface_name,
        "sink_name": f.sink_name,
        "sink_kind": f.sink_kind,
        "shortest_slice": _slice_dict(f.shortest_slice),
        "path_count": f.path_count,
        "taint": [
            {
                "source_function": t.source[0],
                "source_param": t.source[1],
                "sink": _loc_str(t.sink[0]),
                "sink_arg": t.sink[1],
                "flow": t.flow_kind.value,
                "witness": _slice_dict(t.witness),
            }
            for t in f.taint
        ],
        "recovered": [
            {
                "arg_index": r.arg_index,
                "value": r.value,
                "flag_names": list(r.flag_names),
                "note": r.note,
            }
            for r in f.recovered
        ],
        "strategies": [
            {
                "class": a.strategy_class.value,
                "resource": a.resource_axis.value,
                "rationale": a.rationale,
            }
            for a in f.annotations
        ],
    }


def report_to_dict(report: SurfaceReport) -> dict:
    return {
        "runtime": report.runtime_label,
        "summary": {k: list(v) for k, v in report.summary.items()},
        "sink_union": list(report_sink_union(report)),
        "findings": {
            interface: [finding_to_dict(f) for f in rows]
            for interface, rows in report.findings.items()
        },
        "resolution": report.resolution,
    }


def render_summary_table(report: SurfaceReport) -> str:
    union = " ".join(report_sink_union(report))
    lines = [
        "Runtime | Dependence",
        "--------+-----------",
        f"{report.runtime_label} | {union}",
        "",
        "Interface | Sinks",
        "----------+------",
    ]
    for interface, names in report.summary.items():
        lines.append(f"{interface} | {' '.join(names)}")
    return "\n".join(lines) + "\n"
