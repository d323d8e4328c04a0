"""Resource-exhaustion strategy classification of sink findings.

Findings are annotated from a rule table mapping sink names to a strategy
class (consume resources directly vs. inject load into other system
components that per-instance limits cannot attribute) and a resource axis.
The table ships as editable data; every annotation's rationale cites the
rule id it came from.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from wasisurf.diagnostics import Diagnostics, emit
from wasisurf.errors import ConfigError
from wasisurf.surface import SinkFinding


class StrategyClass(enum.Enum):
    DIRECT_CONSUMPTION = "direct_consumption"
    WORKLOAD_INJECTION = "workload_injection"


class ResourceAxis(enum.Enum):
    CPU_CYCLES = "cpu_cycles"
    DISK_BANDWIDTH = "disk_bandwidth"
    DISK_SPACE_INODE = "disk_space_inode"
    KERNEL_OBJECT_EXHAUSTION = "kernel_object_exhaustion"
    ENTROPY_POOL = "entropy_pool"
    NETWORK_BANDWIDTH = "network_bandwidth"
    KERNEL_PROCESSING_LOAD = "kernel_processing_load"
    THREAD_PRESSURE = "thread_pressure"


@dataclass(frozen=True)
class StrategyAnnotation:
    strategy_class: StrategyClass
    resource_axis: ResourceAxis
    rationale: str


@dataclass(frozen=True)
class StrategyRule:
    rule_id: str
    sinks: tuple[str, ...]
    strategy_class: StrategyClass
    resource_axis: ResourceAxis
    note: str


def parse_rules(document: dict) -> list[StrategyRule]:
    rules_raw = document.get("rules")
    if not isinstance(rules_raw, list):
        raise ConfigError("strategy_rules", "missing 'rules' list")
    rules: list[StrategyRule] = []
    seen_ids: set[str] = set()
    for i, raw in enumerate(rules_raw):
        try:
            rule = StrategyRule(
                rule_id=raw["id"],
                sinks=tuple(raw["sinks"]),
                strategy_class=StrategyClass(raw["class"]),
                resource_axis=ResourceAxis(raw["resource"]),
                note=raw.get("note", ""),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError("strategy_rules", f"rule {i}: {exc}") from None
        if rule.rule_id in seen_ids:
            raise ConfigError("strategy_rules", f"duplicate rule id '{rule.rule_id}'")
        seen_ids.add(rule.rule_id)
        rules.append(rule)
    return rules


def classify_finding(
    finding: SinkFinding,
    rules: list[StrategyRule],
    diags: Diagnostics | None = None,
) -> list[StrategyAnnotation]:
    """Annotations for one finding; multiple rules may apply, in table order."""
    annotations = [
        StrategyAnnotation(
            strategy_class=rule.strategy_class,
            resource_axis=rule.resource_axis,
            rationale=f"rule {rule.rule_id}: {rule.note}" if rule.note else f"rule {rule.rule_id}",
        )
        for rule in rules
        if finding.sink_name in rule.sinks
    ]
    if not annotations:
        emit(diags, "strategy", f"no strategy rule covers sink '{finding.sink_name}'")
    return annotations


def annotate_findings(
    findings: dict[str, list[SinkFinding]],
    rules: list[StrategyRule],
    diags: Diagnostics | None = None,
) -> None:
    for rows in findings.values():
        for finding in rows:
            finding.annotations = tuple(classify_finding(finding, rules, diags))
