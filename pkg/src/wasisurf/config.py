"""Configuration loading: run configs, sink specs, syscall and flag tables.

Editable defaults for everything ship inside the package (``wasisurf.data``)
so an analysis can run with nothing but IR files and an entry pattern.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from wasisurf.errors import ConfigError
from wasisurf.surface import InlineSyscallPattern, SinkSpec


def _data_text(name: str) -> str:
    return resources.files("wasisurf.data").joinpath(name).read_text()


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


def parse_syscall_table(text: str) -> dict[int, str]:
    table: dict[int, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ConfigError("syscall_table", f"line {lineno}: expected 'number<TAB>name'")
        try:
            table[int(parts[0])] = parts[1]
        except ValueError:
            raise ConfigError("syscall_table", f"line {lineno}: bad number {parts[0]!r}") from None
    return table


def parse_flag_table(text: str) -> dict[str, int]:
    table: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ConfigError("flag_table", f"line {lineno}: expected 'name<TAB>hex value'")
        try:
            table[parts[0]] = int(parts[1], 16)
        except ValueError:
            raise ConfigError("flag_table", f"line {lineno}: bad value {parts[1]!r}") from None
    return table


def load_syscall_table(path: str | Path | None = None) -> dict[int, str]:
    text = Path(path).read_text() if path else _data_text("syscalls_x86_64.tsv")
    return parse_syscall_table(text)


def load_flag_tables(paths: dict[str, str] | None = None) -> dict[str, dict[str, int]]:
    if paths:
        return {name: parse_flag_table(Path(p).read_text()) for name, p in sorted(paths.items())}
    return {
        "statx_flags": parse_flag_table(_data_text("flags_statx.tsv")),
        "open_flags": parse_flag_table(_data_text("flags_open.tsv")),
    }


# ---------------------------------------------------------------------------
# Sink spec
# ---------------------------------------------------------------------------

_AXIS_VALUES = {
    "cpu_cycles",
    "disk_bandwidth",
    "disk_space_inode",
    "kernel_object_exhaustion",
    "entropy_pool",
    "network_bandwidth",
    "kernel_processing_load",
    "thread_pressure",
}


def parse_sinkspec(document: dict, flag_tables: dict[str, dict[str, int]] | None = None) -> SinkSpec:
    api_names = document.get("api_names")
    if not isinstance(api_names, dict) or not api_names:
        raise ConfigError("sinkspec", "missing or empty 'api_names'")
    for name, tag in api_names.items():
        if tag not in _AXIS_VALUES:
            raise ConfigError("sinkspec", f"api '{name}': unknown resource tag {tag!r}")
    patterns = tuple(
        InlineSyscallPattern(contains=p["contains"], number_operand=int(p.get("number_operand", 0)))
        for p in document.get("inline_syscall_patterns", [])
    )
    sensitive: dict[str, tuple[tuple[int, str], ...]] = {}
    for sink, rules in document.get("sensitive_args", {}).items():
        sensitive[sink] = tuple((int(i), str(t)) for i, t in rules)
        if flag_tables is not None:
            for _i, t in sensitive[sink]:
                if t not in flag_tables:
                    raise ConfigError("sinkspec", f"sink '{sink}' references unknown flag table '{t}'")
    return SinkSpec(
        api_names=dict(api_names),
        syscall_wrappers=tuple(document.get("syscall_wrappers", [])),
        inline_patterns=patterns,
        sensitive_args=sensitive,
    )


def load_sinkspec(
    path: str | Path | None = None,
    flag_tables: dict[str, dict[str, int]] | None = None,
) -> SinkSpec:
    text = Path(path).read_text() if path else _data_text("sinkspec_default.json")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("sinkspec", str(exc)) from None
    return parse_sinkspec(document, flag_tables)


def load_strategy_rules(path: str | Path | None = None):
    from wasisurf.strategy import parse_rules

    text = Path(path).read_text() if path else _data_text("strategy_rules.json")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("strategy_rules", str(exc)) from None
    return parse_rules(document)


def default_entry_patterns(runtime: str) -> list[str]:
    table = json.loads(_data_text("entry_patterns.json"))
    if runtime not in table:
        raise ConfigError("entry_points", f"no default patterns for runtime {runtime!r}")
    return list(table[runtime])


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    inputs: list[str] = field(default_factory=list)
    lifted_inputs: list[str] = field(default_factory=list)
    entry_patterns: list[str] = field(default_factory=list)
    export_list: dict[str, list[str]] = field(default_factory=dict)
    sinkspec_path: str | None = None
    syscall_table_path: str | None = None
    flag_table_paths: dict[str, str] = field(default_factory=dict)
    strategy_rules_path: str | None = None
    runtime_label: str = "runtime"
    out_dir: str = "wasisurf-out"
    output_format: str = "json"
    verbose: bool = False
    worklist_seed: int | None = None

    def validate(self) -> None:
        if not self.inputs:
            raise ConfigError("inputs", "at least one IR input is required")
        for path in [*self.inputs, *self.lifted_inputs]:
            if not Path(path).exists():
                raise ConfigError("inputs", f"input file not found: {path}")
        if self.sinkspec_path and not Path(self.sinkspec_path).exists():
            raise ConfigError("sinkspec", f"file not found: {self.sinkspec_path}")
        if not self.entry_patterns and not self.export_list:
            raise ConfigError("entry_points", "no entry patterns or export list configured")
        if self.output_format not in ("json", "table"):
            raise ConfigError("format", f"unknown format {self.output_format!r}")


def load_run_config(path: str | Path) -> RunConfig:
    try:
        document = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", str(exc)) from None
    known = {f.name for f in RunConfig.__dataclass_fields__.values()}
    unknown = set(document) - known
    if unknown:
        raise ConfigError("config", f"unknown keys: {', '.join(sorted(unknown))}")
    return RunConfig(**document)
