"""Command-line front end.

Subcommands separate the environment-dependent extraction step from the
deterministic analysis:

* ``extract``  - emit (or execute) the toolchain build plan for IR production
* ``analyze``  - full pipeline from textual IR files to the surface report
* ``report``   - re-render a saved findings file

Exit codes: 0 success, 2 configuration error, 3 parse/link error,
4 analysis error.
"""

from __future__ import annotations

import argparse
import json
import logging
import subprocess
import sys
from pathlib import Path

from wasisurf import config as cfg
from wasisurf.callgraph import resolve_fixed_point
from wasisurf.diagnostics import Diagnostics, logger
from wasisurf.errors import AnalysisError, ConfigError, DuplicateDefinition, ParseError, SignatureMismatch
from wasisurf.extraction import integrate_lifted_ir, plan_build
from wasisurf.ir import link_modules, parse_module
from wasisurf.surface import (
    build_report,
    explore_attack_surface,
    find_entry_points,
    render_summary_table,
    report_to_dict,
)
from wasisurf.strategy import annotate_findings
from wasisurf.vtables import scan_vtables

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_ANALYSIS = 4


class StageError(AnalysisError):
    def __init__(self, stage: str, cause: Exception, code: int):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.code = code


def _stage(stage: str, code: int, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (ParseError, DuplicateDefinition, SignatureMismatch) as exc:
        raise StageError(stage, exc, EXIT_PARSE) from exc
    except ConfigError as exc:
        raise StageError(stage, exc, EXIT_CONFIG) from exc
    except AnalysisError as exc:
        raise StageError(stage, exc, code) from exc
    except OSError as exc:
        raise StageError(stage, exc, code) from exc


def run_pipeline(run: cfg.RunConfig) -> int:
    """parse -> link -> asm integration -> vtables -> resolution -> surface -> reports."""
    out_dir = Path(run.out_dir)
    diags = Diagnostics()
    try:
        _stage("config", EXIT_CONFIG, run.validate)
        flag_tables = _stage("config", EXIT_CONFIG, cfg.load_flag_tables, run.flag_table_paths or None)
        sinkspec = _stage("config", EXIT_CONFIG, cfg.load_sinkspec, run.sinkspec_path, flag_tables)
        syscall_table = _stage("config", EXIT_CONFIG, cfg.load_syscall_table, run.syscall_table_path)
        rules = _stage("config", EXIT_CONFIG, cfg.load_strategy_rules, run.strategy_rules_path)

        modules = _stage(
            "parse",
            EXIT_PARSE,
            lambda: [parse_module(Path(p).read_text(), Path(p).stem, diags=diags) for p in run.inputs],
        )
        module = _stage("link", EXIT_PARSE, link_modules, modules, "program", diags=diags)
        if run.lifted_inputs:
            lifted_modules = _stage(
                "parse",
                EXIT_PARSE,
                lambda: [parse_module(Path(p).read_text(), Path(p).stem, diags=diags) for p in run.lifted_inputs],
            )
            lifted = _stage("link", EXIT_PARSE, link_modules, lifted_modules, "lifted", diags=diags)
            module = _stage("asm-integration", EXIT_PARSE, integrate_lifted_ir, module, lifted, diags=diags)

        registry = _stage("vtable-scan", EXIT_ANALYSIS, scan_vtables, module, diags=diags)
        graph = _stage(
            "resolution",
            EXIT_ANALYSIS,
            resolve_fixed_point,
            module,
            registry,
            order_seed=run.worklist_seed,
            diags=diags,
        )
        stats = graph.stats
        logger.info(
            "resolution stats: iterations=%d unresolved=%d counts=%s",
            stats.iterations,
            stats.unresolved_count,
            json.dumps(stats.counts, sort_keys=True),
        )
        entries = _stage(
            "entry-points",
            EXIT_ANALYSIS,
            find_entry_points,
            module,
            run.entry_patterns,
            run.export_list or None,
            diags,
        )
        findings = _stage(
            "surface",
            EXIT_ANALYSIS,
            explore_attack_surface,
            module,
            graph,
            entries,
            sinkspec,
            syscall_table,
            flag_tables,
            diags,
        )
        _stage("classify", EXIT_ANALYSIS, annotate_findings, findings, rules, diags)
        report = build_report(
            run.runtime_label,
            findings,
            {
                "iterations": stats.iterations,
                "unresolved": stats.unresolved_count,
                "indirect_sites": stats.indirect_site_count,
                "counts": dict(sorted(stats.counts.items())),
            },
        )
        _stage("write", EXIT_ANALYSIS, _write_artifacts, out_dir, report, graph, diags)
    except StageError as exc:
        logger.error("%s", exc)
        _write_failure_marker(out_dir, exc)
        return exc.code
    return EXIT_OK


def _write_artifacts(out_dir: Path, report, graph, diags: Diagnostics) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    marker = out_dir / "FAILED"
    if marker.exists():
        marker.unlink()
    payload = report_to_dict(report)
    payload["diagnostics"] = [f"{c}: {m}" for c, m in diags.entries]
    (out_dir / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    (out_dir / "report.txt").write_text(render_summary_table(report))
    (out_dir / "callgraph.tsv").write_text(graph.export_text())


def _write_failure_marker(out_dir: Path, exc: StageError) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "FAILED").write_text(f"stage: {exc.stage}\nerror: {exc}\n")
    except OSError:
        pass  # no artifacts were written, nothing to mark


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_extract(args: argparse.Namespace) -> int:
    try:
        document = json.loads(Path(args.config).read_text())
        plan = plan_build(document)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        logger.error("[extract] %s", exc)
        return EXIT_CONFIG
    plan_doc = {
        "steps": [
            {"program": s.program, "args": list(s.args), "cwd": s.cwd} for s in plan.steps
        ],
        "produced_ir_paths": plan.produced_ir_paths,
    }
    text = json.dumps(plan_doc, indent=2) + "\n"
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "build_plan.json").write_text(text)
    else:
        sys.stdout.write(text)
    if args.execute:
        for step in plan.steps:
            result = subprocess.run([step.program, *step.args], cwd=step.cwd)
            if result.returncode != 0:
                logger.error("[extract] step failed: %s", step.program)
                return EXIT_ANALYSIS
    return EXIT_OK


def _merge_cli_config(args: argparse.Namespace) -> cfg.RunConfig:
    run = cfg.load_run_config(args.config) if args.config else cfg.RunConfig()
    if args.input:
        run.inputs = list(args.input)
    if args.entry_pattern:
        run.entry_patterns = list(args.entry_pattern)
    if args.runtime:
        run.entry_patterns = run.entry_patterns or cfg.default_entry_patterns(args.runtime)
        run.runtime_label = args.runtime.capitalize()
    if args.sinkspec:
        run.sinkspec_path = args.sinkspec
    if args.out:
        run.out_dir = args.out
    if args.format:
        run.output_format = args.format
    if args.label:
        run.runtime_label = args.label
    if args.worklist_seed is not None:
        run.worklist_seed = args.worklist_seed
    run.verbose = bool(args.verbose)
    return run


def _cmd_analyze(args: argparse.Namespace) -> int:
    try:
        run = _merge_cli_config(args)
    except ConfigError as exc:
        logger.error("[config] %s", exc)
        return EXIT_CONFIG
    code = run_pipeline(run)
    if code == EXIT_OK and run.output_format == "table":
        sys.stdout.write((Path(run.out_dir) / "report.txt").read_text())
    return code


def _cmd_report(args: argparse.Namespace) -> int:
    try:
        payload = json.loads(Path(args.findings).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        logger.error("[report] %s", exc)
        return EXIT_CONFIG
    if args.format == "json":
        sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    lines = [
        "Runtime | Dependence",
        "--------+-----------",
        f"{payload.get('runtime', '?')} | {' '.join(payload.get('sink_union', []))}",
        "",
        "Interface | Sinks",
        "----------+------",
    ]
    for interface, names in sorted(payload.get("summary", {}).items()):
        lines.append(f"{interface} | {' '.join(names)}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wasisurf",
        description="Map WASI/WASIX interface implementations to reachable syscalls/APIs.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="emit or execute the IR build plan")
    p_extract.add_argument("--config", required=True, help="toolchain configuration (JSON)")
    p_extract.add_argument("--out", help="directory for build_plan.json (default: stdout)")
    p_extract.add_argument("--execute", action="store_true", help="run the planned commands")
    p_extract.set_defaults(func=_cmd_extract)

    p_analyze = sub.add_parser("analyze", help="run the full analysis pipeline")
    p_analyze.add_argument("--input", nargs="+", help="textual IR files")
    p_analyze.add_argument("--config", help="run configuration (JSON)")
    p_analyze.add_argument("--entry-pattern", nargs="+", help="demangled-name regexes for entry points")
    p_analyze.add_argument("--runtime", choices=("wasmtime", "wasmer"), help="use shipped entry patterns")
    p_analyze.add_argument("--sinkspec", help="sink specification file")
    p_analyze.add_argument("--out", help="output directory")
    p_analyze.add_argument("--format", choices=("json", "table"), help="also print this format")
    p_analyze.add_argument("--label", help="runtime label for the report")
    p_analyze.add_argument("--worklist-seed", type=int, help="randomize resolver worklist order (testing)")
    p_analyze.set_defaults(func=_cmd_analyze)

    p_report = sub.add_parser("report", help="re-render a saved findings file")
    p_report.add_argument("--findings", required=True, help="report.json from a previous run")
    p_report.add_argument("--format", choices=("json", "table"), default="table")
    p_report.set_defaults(func=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
