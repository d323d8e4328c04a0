from __future__ import annotations

import random

import pytest

from wasisurf.dataflow import Constant, DataflowEngine
from wasisurf.ir import parse_module

from oracle_consteval import evaluate, random_tree, render_ir


def _eval_ir(text: str, root_bits: int) -> int | None:
    module = parse_module(text)
    engine = DataflowEngine(module)
    fn = module.functions[0]
    ret = next(i for _loc, i in fn.locations() if i.opcode == "ret" and i.operands)
    return engine.const_eval(fn.symbol, ret.operands[0].value)


def test_or_shl_identity():
    text = """
define i64 @f() {
entry:
  %a = shl i64 1, 13
  %b = or i64 %a, 0
  ret i64 %b
}
"""
    assert _eval_ir(text, 64) == 8192


def test_parameter_is_not_constant():
    module = parse_module(
        """
define i64 @f(i64 %x) {
entry:
  %y = add i64 %x, 1
  ret i64 %y
}
"""
    )
    engine = DataflowEngine(module)
    assert engine.const_eval("f", "y") is None


def test_cast_chain_around_zero():
    text = """
define i64 @f() {
entry:
  %a = trunc i64 0 to i8
  %b = sext i8 %a to i32
  %c = zext i32 %b to i64
  ret i64 %c
}
"""
    assert _eval_ir(text, 64) == 0


def test_signed_division_truncates_toward_zero():
    text = """
define i32 @f() {
entry:
  %q = sdiv i32 -7, 2
  ret i32 %q
}
"""
    assert _eval_ir(text, 32) == (-3) & 0xFFFFFFFF


def test_udiv_by_zero_is_absent():
    text = """
define i32 @f() {
entry:
  %q = udiv i32 7, 0
  ret i32 %q
}
"""
    assert _eval_ir(text, 32) is None


def test_phi_of_identical_constants_folds():
    text = """
define i64 @f(i1 %c) {
entry:
  br i1 %c, label %a, label %b
a:
  br label %join
b:
  br label %join
join:
  %p = phi i64 [ 5, %a ], [ 5, %b ]
  ret i64 %p
}
"""
    assert _eval_ir(text, 64) == 5


def test_trace_back_reports_constant_for_folded_chain():
    module = parse_module(
        """
define i64 @f() {
entry:
  %a = shl i64 1, 13
  %b = or i64 %a, 0
  ret i64 %b
}
"""
    )
    engine = DataflowEngine(module)
    assert engine.trace_back("f", "b") == {Constant(8192)}


@pytest.mark.parametrize("seed", range(4))
def test_random_trees_match_oracle(seed):
    rng = random.Random(1000 + seed)
    for i in range(250):
        tree = random_tree(rng, depth=rng.randint(1, 8), bits=rng.choice((8, 16, 32, 64)))
        text, root_bits = render_ir(tree, f"expr{i}")
        expected = evaluate(tree)
        got = _eval_ir(text, root_bits)
        assert got == expected, f"seed={seed} tree #{i}:\n{text}\noracle={expected} impl={got}"
