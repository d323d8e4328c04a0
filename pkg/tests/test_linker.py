from __future__ import annotations

import pytest

from wasisurf.errors import DuplicateDefinition
from wasisurf.ir import link_modules, parse_module

DEF_F = """
define i64 @f(i64 %x) {
entry:
  ret i64 %x
}
"""

DECL_F = """
declare i64 @f(i64)

define i64 @g() {
entry:
  %r = call i64 @f(i64 1)
  ret i64 %r
}
"""


def test_definition_overrides_declaration():
    merged = link_modules([parse_module(DECL_F, "a"), parse_module(DEF_F, "b")])
    assert "f" in merged.function_map
    assert "f" not in merged.declaration_map
    assert sorted(f.symbol for f in merged.functions) == ["f", "g"]


def test_link_of_empty_list_is_empty_module():
    merged = link_modules([])
    assert merged.functions == []
    assert merged.declarations == []
    assert merged.globals == []


def test_differing_definitions_raise():
    other = """
define i64 @f(i64 %x) {
entry:
  %y = add i64 %x, 1
  ret i64 %y
}
"""
    with pytest.raises(DuplicateDefinition) as exc:
        link_modules([parse_module(DEF_F, "a"), parse_module(other, "b")])
    assert exc.value.symbol == "f"


def test_identical_duplicate_definitions_collapse_silently():
    merged = link_modules([parse_module(DEF_F, "a"), parse_module(DEF_F, "b")])
    assert len(merged.functions) == 1


def test_link_associativity_on_disjoint_modules():
    a = parse_module(DEF_F, "a")
    b = parse_module(DECL_F, "b")
    c = parse_module("define void @h() {\nentry:\n  ret void\n}\n", "c")
    nested = link_modules([link_modules([a, b]), c])
    flat = link_modules([a, b, c])
    assert nested == flat


def test_address_taken_computed_over_merged_module():
    take = """
declare i64 @f(i64)

@fptr = constant ptr @f
"""
    merged = link_modules([parse_module(DEF_F, "a"), parse_module(take, "b")])
    assert merged.function_map["f"].address_taken


def test_direct_callee_is_not_address_taken():
    merged = link_modules([parse_module(DEF_F, "a"), parse_module(DECL_F, "b")])
    assert not merged.function_map["f"].address_taken


def test_global_declaration_resolved_by_definition():
    decl = "@buf = external global [16 x i8]\n"
    defn = "@buf = global [16 x i8] zeroinitializer\n"
    merged = link_modules([parse_module(decl, "a"), parse_module(defn, "b")])
    assert len(merged.globals) == 1
    assert merged.globals[0].initializer is not None
