from __future__ import annotations

from wasisurf.diagnostics import Diagnostics
from wasisurf.ir import parse_module
from wasisurf.vtables import Confidence, scan_vtables

BASIC = """
@vt = constant { ptr, i64, i64, ptr, ptr } { ptr @drop_it, i64 24, i64 8, ptr @m1, ptr @m2 }

declare void @drop_it(ptr)
declare i64 @m1(ptr)
declare i64 @m2(ptr)
"""

# Demangles to "<host::dir::Dir as wasi_common::dir::WasiDir>::vtable".
WASIDIR_SYM = (
    "_ZN60_$LT$host..dir..Dir$u20$as$u20$wasi_common..dir..WasiDir$GT$6vtable17h9999888877776666E"
)

LISTING_STYLE = f"""
@"{WASIDIR_SYM}" = constant {{ ptr, i64, i64, ptr }} {{ ptr @drop_dir, i64 16, i64 8, ptr @open_file_impl }}

declare void @drop_dir(ptr)
declare ptr @open_file_impl(ptr, i64)
"""


def test_basic_layout_is_recorded():
    module = parse_module(BASIC)
    registry = scan_vtables(module)
    assert len(registry) == 1
    rec = registry.records[0]
    assert rec.global_symbol == "vt"
    assert rec.drop_fn == "drop_it"
    assert rec.size_bytes == 24 and rec.align_bytes == 8
    assert rec.methods == ((3, "m1"), (4, "m2"))
    assert rec.confidence is Confidence.STRUCTURAL
    assert rec.trait_hint is None


def test_listing_style_table_carries_trait_hint():
    module = parse_module(LISTING_STYLE)
    registry = scan_vtables(module)
    assert len(registry) == 1
    rec = registry.records[0]
    assert rec.methods == ((3, "open_file_impl"),)
    assert rec.confidence is Confidence.STRUCTURAL_PLUS_NAME
    assert rec.trait_hint == "wasi_common::dir::WasiDir"


def test_plain_integer_array_is_not_recorded():
    module = parse_module("@nums = constant [4 x i64] [i64 1, i64 2, i64 3, i64 4]\n")
    assert len(scan_vtables(module)) == 0


def test_function_pointer_array_without_header_is_not_recorded():
    module = parse_module(
        """
@fns = constant { ptr, ptr, ptr, ptr } { ptr @a, ptr @b, ptr @a, ptr @b }
declare void @a()
declare void @b()
"""
    )
    assert len(scan_vtables(module)) == 0


def test_function_address_in_size_slot_rejected():
    module = parse_module(
        """
@bad = constant { ptr, ptr, i64, ptr } { ptr @a, ptr @b, i64 8, ptr @a }
declare void @a()
declare void @b()
"""
    )
    assert len(scan_vtables(module)) == 0


def test_non_power_of_two_alignment_rejected():
    module = parse_module(
        """
@bad = constant { ptr, i64, i64, ptr } { ptr @a, i64 24, i64 7, ptr @a }
declare void @a()
"""
    )
    assert len(scan_vtables(module)) == 0


def test_nested_table_in_fused_static():
    module = parse_module(
        """
@fused = constant { i64, { ptr, i64, i64, ptr } } { i64 99, { ptr, i64, i64, ptr } { ptr @d, i64 8, i64 8, ptr @m } }
declare void @d(ptr)
declare i64 @m(ptr)
"""
    )
    registry = scan_vtables(module)
    assert len(registry) == 1
    rec = registry.records[0]
    assert rec.byte_base == 8
    assert rec.methods == ((3, "m"),)
    # Byte-offset lookup agrees with slot lookup, rebased to the table start.
    assert registry.lookup_offset("fused", 8 + 3 * 8) == (rec, 3)


def test_lookup_slot_and_offset_agree():
    module = parse_module(BASIC)
    registry = scan_vtables(module)
    rec = registry.records[0]
    for slot, sym in rec.methods:
        assert registry.lookup_slot("vt", slot) == sym
        found = registry.lookup_offset("vt", rec.byte_base + slot * 8)
        assert found is not None and found[0].method_at_slot(found[1]) == sym
    assert registry.lookup_slot("vt", 0) == "drop_it"
    assert registry.lookup_slot("vt", 99) is None
    assert registry.lookup_slot("vt", 1) is None


def test_scan_is_idempotent_and_sorted():
    module = parse_module(BASIC + LISTING_STYLE)
    r1 = scan_vtables(module)
    r2 = scan_vtables(module)
    assert [r.global_symbol for r in r1] == sorted(r.global_symbol for r in r1)
    assert r1.records == r2.records
    assert r1.dump() == r2.dump()


def test_global_address_slot_recorded_with_diagnostic():
    module = parse_module(
        """
@super_vt = constant { ptr, i64, i64, ptr } { ptr @d, i64 8, i64 8, ptr @m }
@sub_vt = constant { ptr, i64, i64, ptr, ptr } { ptr @d, i64 8, i64 8, ptr @m, ptr @super_vt }
declare void @d(ptr)
declare i64 @m(ptr)
"""
    )
    diags = Diagnostics()
    registry = scan_vtables(module, diags=diags)
    subs = registry.tables_of("sub_vt")
    assert len(subs) == 1
    assert (4, "super_vt") in subs[0].methods
    assert any("supertrait" in m for m in diags.messages("vtable"))
