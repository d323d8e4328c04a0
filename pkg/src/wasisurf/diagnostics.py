"""Non-fatal diagnostic collection.

Analyses degrade gracefully rather than abort; anything worth surfacing to the
analyst (skipped constructs, unresolved constants, suspicious layouts) goes
through a :class:`Diagnostics` collector.  When no collector is supplied the
messages are routed to the module logger instead, so library callers can opt
in without plumbing.
"""

from __future__ import annotations

import logging

logger = logging.getLogger("wasisurf")


class Diagnostics:
    """An append-only list of (category, message) pairs."""

    def __init__(self) -> None:
        self.entries: list[tuple[str, str]] = []

    def add(self, category: str, message: str) -> None:
        self.entries.append((category, message))

    def messages(self, category: str | None = None) -> list[str]:
        return [m for c, m in self.entries if category is None or c == category]

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)


def emit(diags: Diagnostics | None, category: str, message: str) -> None:
    """Record into ``diags`` when given, else log at WARNING level."""
    if diags is not None:
        diags.add(category, message)
    else:
        logger.warning("%s: %s", category, message)
