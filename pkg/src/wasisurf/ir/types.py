"""Type references for the supported IR subset.

Types matter to the analyses for three things only: pointer-ness (callees,
address computations), integer widths (constant folding), and aggregate field
offsets (vtable slots, wrapper fields).  Everything the subset does not model
(floats, vectors, metadata) is preserved as :class:`OpaqueType` so operands
are never dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

POINTER_BYTES = 8  # 64-bit targets; both analyzed runtimes are 64-bit hosts


@dataclass(frozen=True)
class TypeRef:
    """Base class; concrete types below."""


@dataclass(frozen=True)
class VoidType(TypeRef):
    pass


@dataclass(frozen=True)
class IntType(TypeRef):
    bits: int


@dataclass(frozen=True)
class PtrType(TypeRef):
    """Pointer; ``pointee is None`` for the opaque-pointer dialect."""

    pointee: TypeRef | None = None


@dataclass(frozen=True)
class NamedType(TypeRef):
    """Reference to a named aggregate in the module type table."""

    name: str


@dataclass(frozen=True)
class StructType(TypeRef):
    fields: tuple[TypeRef, ...]
    packed: bool = False


@dataclass(frozen=True)
class ArrayType(TypeRef):
    count: int
    element: TypeRef


@dataclass(frozen=True)
class FuncType(TypeRef):
    ret: TypeRef
    params: tuple[TypeRef, ...]
    variadic: bool = False


@dataclass(frozen=True)
class OpaqueType(TypeRef):
    """Anything outside the subset (floats, vectors, ...), kept verbatim."""

    text: str


def resolve_named(ty: TypeRef, type_table: dict[str, TypeRef], _depth: int = 0) -> TypeRef:
    """Follow NamedType references through the type table (cycle-safe)."""
    while isinstance(ty, NamedType) and _depth < 32:
        target = type_table.get(ty.name)
        if target is None or target is ty:
            return ty
        ty = target
        _depth += 1
    return ty


def size_and_align(ty: TypeRef, type_table: dict[str, TypeRef]) -> tuple[int, int] | None:
    """Byte size and alignment under the default 64-bit layout, or None.

    Structs use natural alignment (each field aligned to its own alignment,
    struct aligned to the max).  Types without a known layout (opaque, void,
    unresolved names) return None and poison any offset arithmetic that
    touches them.
    """
    ty = resolve_named(ty, type_table)
    if isinstance(ty, IntType):
        size = max(1, (ty.bits + 7) // 8)
        # Power-of-two alignment capped at 8, matching common data layouts.
        align = 1
        while align < size and align < 8:
            align *= 2
        return size, align
    if isinstance(ty, (PtrType, FuncType)):
        return POINTER_BYTES, POINTER_BYTES
    if isinstance(ty, ArrayType):
        elem = size_and_align(ty.element, type_table)
        if elem is None:
            return None
        esize, ealign = elem
        stride = _round_up(esize, ealign)
        return stride * ty.count, ealign
    if isinstance(ty, StructType):
        offset = 0
        align = 1
        for f in ty.fields:
            fa = size_and_align(f, type_table)
            if fa is None:
                return None
            fsize, falign = fa
            if not ty.packed:
                offset = _round_up(offset, falign)
                align = max(align, falign)
            offset += fsize
        if not ty.packed:
            offset = _round_up(offset, align)
        return offset, align
    return None


def field_offset(ty: StructType, index: int, type_table: dict[str, TypeRef]) -> int | None:
    """Byte offset of field ``index`` within ``ty``, or None if unknowable."""
    if index < 0 or index >= len(ty.fields):
        return None
    offset = 0
    for i, f in enumerate(ty.fields):
        fa = size_and_align(f, type_table)
        if fa is None:
            return None
        fsize, falign = fa
        if not ty.packed:
            offset = _round_up(offset, falign)
        if i == index:
            return offset
        offset += fsize
    return None


def _round_up(value: int, align: int) -> int:
    return (value + align - 1) // align * align
