"""Discovery of trait-object dispatch tables in constant globals.

A dispatch table is recognized purely structurally: a constant struct whose
element 0 is a function address, elements 1-2 are pointer-width integers
(object size and a power-of-two alignment), and elements 3..n are function
addresses.  Symbol names never gate a match; a name that demangles to a
``<Type as Trait>::vtable`` path only raises confidence and supplies the
trait hint.  Tables fused into larger constant aggregates are found by
scanning nested sub-aggregates, with slot offsets rebased to the
sub-aggregate start.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from wasisurf.diagnostics import Diagnostics, emit
from wasisurf.ir import AggregateConst, GlobalVar, IrModule, Operand
from wasisurf.ir.demangle import demangle
from wasisurf.ir.model import underlying_symbol
from wasisurf.ir.types import IntType, size_and_align

import re

_TRAIT_FROM_VTABLE = re.compile(r"<.+? as (.+?)>::vtable")


class Confidence(enum.Enum):
    STRUCTURAL = "structural"
    STRUCTURAL_PLUS_NAME = "structural+name"


@dataclass(frozen=True)
class VTableRecord:
    global_symbol: str
    trait_hint: str | None
    drop_fn: str
    size_bytes: int
    align_bytes: int
    methods: tuple[tuple[int, str], ...]  # (slot index >= 3, function symbol)
    confidence: Confidence
    byte_base: int = 0  # offset of the table within its global's initializer

    def method_at_slot(self, slot: int) -> str | None:
        if slot == 0:
            return self.drop_fn
        for idx, sym in self.methods:
            if idx == slot:
                return sym
        return None


class VTableRegistry:
    """Immutable lookup structure over discovered dispatch tables."""

    def __init__(self, records: list[VTableRecord], pointer_bytes: int = 8):
        self.records = tuple(records)
        self.pointer_bytes = pointer_bytes
        self._by_symbol: dict[str, list[VTableRecord]] = {}
        for rec in records:
            self._by_symbol.setdefault(rec.global_symbol, []).append(rec)

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def tables_of(self, global_symbol: str) -> list[VTableRecord]:
        return list(self._by_symbol.get(global_symbol, []))

    def lookup_slot(self, global_symbol: str, slot: int) -> str | None:
        """Method symbol at a slot of the table based at offset 0 (or the
        global's only table); slot 0 answers the drop function."""
        for rec in self._by_symbol.get(global_symbol, []):
            if rec.byte_base == 0 or len(self._by_symbol[global_symbol]) == 1:
                return rec.method_at_slot(slot)
        return None

    def lookup_offset(self, global_symbol: str, byte_offset: int) -> tuple[VTableRecord, int] | None:
        """Locate the (record, slot) addressed by a byte offset into a global."""
        for rec in self._by_symbol.get(global_symbol, []):
            rel = byte_offset - rec.byte_base
            if rel < 0 or rel % self.pointer_bytes:
                continue
            slot = rel // self.pointer_bytes
            top = rec.methods[-1][0] if rec.methods else 2
            if 0 <= slot <= top:
                return rec, slot
        return None

    def dump(self) -> str:
        lines = []
        for rec in self.records:
            methods = " ".join(f"{i}:{s}" for i, s in rec.methods)
            hint = rec.trait_hint or "-"
            lines.append(
                f"{rec.global_symbol}\tbase={rec.byte_base}\tdrop={rec.drop_fn}"
                f"\tsize={rec.size_bytes}\talign={rec.align_bytes}\t{methods}"
                f"\t{rec.confidence.value}\t{hint}"
            )
        return "\n".join(lines)


def scan_vtables(
    module: IrModule,
    pointer_bytes: int = 8,
    diags: Diagnostics | None = None,
) -> VTableRegistry:
    """Scan constant globals for dispatch-table layouts (deterministic order)."""
    records: list[VTableRecord] = []
    for g in sorted(module.globals, key=lambda g: g.symbol):
        if not g.is_constant or g.initializer is None:
            continue
        records.extend(_scan_initializer(module, g, g.initializer, 0, pointer_bytes, diags))
    records.sort(key=lambda r: (r.global_symbol, r.byte_base))
    return VTableRegistry(records, pointer_bytes)


def _scan_initializer(
    module: IrModule,
    g: GlobalVar,
    init: Operand,
    base: int,
    pointer_bytes: int,
    diags: Diagnostics | None,
) -> list[VTableRecord]:
    value = init.value
    if not isinstance(value, AggregateConst):
        return []
    found: list[VTableRecord] = []
    rec = _match_table(module, g, value, base, pointer_bytes, diags)
    if rec is not None:
        found.append(rec)
    # Independently scan nested aggregates (fused statics).
    offset: int | None = 0
    for element in value.elements:
        elem_size = None
        if element.ty is not None:
            sa = size_and_align(element.ty, module.type_table)
            if sa is not None:
                elem_size = sa[0]
                if offset is not None and not value.packed:
                    offset = (offset + sa[1] - 1) // sa[1] * sa[1]
        if isinstance(element.value, AggregateConst) and offset is not None:
            found.extend(_scan_initializer(module, g, element, base + offset, pointer_bytes, diags))
        if offset is not None and elem_size is not None:
            offset += elem_size
        else:
            offset = None  # cannot place later elements precisely
    return found


def _match_table(
    module: IrModule,
    g: GlobalVar,
    agg: AggregateConst,
    base: int,
    pointer_bytes: int,
    diags: Diagnostics | None,
) -> VTableRecord | None:
    if not agg.struct or len(agg.elements) < 4:
        return None
    drop_fn = _function_symbol(module, agg.elements[0])
    if drop_fn is None:
        return None
    size = _pointer_width_int(agg.elements[1], pointer_bytes)
    align = _pointer_width_int(agg.elements[2], pointer_bytes)
    if size is None or align is None:
        return None
    if size < 0 or align <= 0 or align & (align - 1):
        return None
    methods: list[tuple[int, str]] = []
    for slot, element in enumerate(agg.elements[3:], start=3):
        sym = _function_symbol(module, element)
        if sym is None:
            sym = _global_symbol(module, element)
            if sym is None:
                return None  # trailing non-address element: not a dispatch table
            emit(
                diags,
                "vtable",
                f"slot {slot} of '{g.symbol}' holds global '@{sym}' "
                "(possible nested supertrait table); recorded as a method",
            )
        methods.append((slot, sym))
    if not methods:
        return None
    hint = None
    confidence = Confidence.STRUCTURAL
    demangled = g.demangled or demangle(g.symbol)
    if "vtable" in demangled:
        confidence = Confidence.STRUCTURAL_PLUS_NAME
        m = _TRAIT_FROM_VTABLE.search(demangled)
        hint = m.group(1) if m else demangled
    return VTableRecord(
        global_symbol=g.symbol,
        trait_hint=hint,
        drop_fn=drop_fn,
        size_bytes=size,
        align_bytes=align,
        methods=tuple(methods),
        confidence=confidence,
        byte_base=base,
    )


def _function_symbol(module: IrModule, op: Operand) -> str | None:
    sym = underlying_symbol(op)
    if sym is not None and module.is_function_symbol(sym):
        return sym
    return None


def _global_symbol(module: IrModule, op: Operand) -> str | None:
    sym = underlying_symbol(op)
    if sym is not None and sym in module.global_map:
        return sym
    return None


def _pointer_width_int(op: Operand, pointer_bytes: int) -> int | None:
    from wasisurf.ir.model import IntConst

    if not isinstance(op.value, IntConst):
        return None
    if isinstance(op.ty, IntType) and op.ty.bits != pointer_bytes * 8:
        return None
    return op.value.value
