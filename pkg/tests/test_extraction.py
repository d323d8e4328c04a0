from __future__ import annotations

import pytest

from wasisurf.diagnostics import Diagnostics
from wasisurf.errors import ConfigError, DuplicateDefinition, SignatureMismatch
from wasisurf.extraction import (
    detect_asm_definitions,
    integrate_lifted_ir,
    plan_build,
)
from wasisurf.ir import parse_module

TOOLCHAIN = {
    "toolchain": [
        {
            "compiler": "/usr/bin/rustc",
            "flags": ["--emit=llvm-ir", "-C", "lto=fat", "-C", "opt-level=0", "-C", "embed-bitcode=yes"],
            "sources": ["src/main.rs"],
            "cwd": "runtime",
            "output_ir": "out/rust.ll",
        },
        {
            "compiler": "/usr/bin/clang",
            "flags": ["-S", "-emit-llvm", "-O0", "-fembed-bitcode"],
            "sources": ["glue.c"],
            "cwd": "runtime",
            "output_ir": "out/glue.ll",
        },
    ],
    "extract_command": ["extract-ir", "{binary}", "{out}"],
    "binary": "target/runtime",
    "extracted_ir": "out/full.ll",
}


def test_plan_echoes_configured_flags():
    plan = plan_build(TOOLCHAIN)
    rustc = plan.steps[0]
    assert rustc.program == "/usr/bin/rustc"
    assert "-C" in rustc.args and "opt-level=0" in rustc.args
    assert "embed-bitcode=yes" in " ".join(rustc.args)
    assert plan.produced_ir_paths == ["out/rust.ll", "out/glue.ll", "out/full.ll"]


def test_plan_orders_front_ends_as_configured():
    plan = plan_build(TOOLCHAIN)
    assert [s.program for s in plan.steps] == ["/usr/bin/rustc", "/usr/bin/clang", "extract-ir"]
    assert plan.steps[-1].args == ("target/runtime", "out/full.ll")


def test_plan_is_deterministic():
    assert plan_build(TOOLCHAIN) == plan_build(TOOLCHAIN)


def test_missing_compiler_is_config_error():
    with pytest.raises(ConfigError) as exc:
        plan_build({"toolchain": [{"flags": ["-O0"]}]})
    assert exc.value.section == "toolchain"
    with pytest.raises(ConfigError):
        plan_build({})


ASM_MODULE = '''
module asm ".text"
module asm ".globl stack_switch"
module asm "stack_switch:"
module asm "  mov %rsp, %rdi"
module asm "  ret"

define void @caller() {
entry:
  call void @stack_switch()
  ret void
}
'''


def test_detect_asm_definitions_finds_labels_and_globl():
    module = parse_module(ASM_MODULE, "asmmod")
    blocks = detect_asm_definitions(module)
    assert len(blocks) == 5
    declared = [b.declared_symbols for b in blocks]
    assert ["stack_switch"] in declared
    by_symbol = {s for b in blocks for s in b.declared_symbols}
    assert by_symbol == {"stack_switch"}
    assert blocks[1].origin == ("asmmod", 1)


def test_no_module_asm_yields_empty_list():
    module = parse_module("define void @f() {\nentry:\n  ret void\n}\n")
    assert detect_asm_definitions(module) == []


def test_comment_only_asm_block_yields_diagnostic():
    module = parse_module('module asm "# just a comment"\n')
    diags = Diagnostics()
    blocks = detect_asm_definitions(module, diags)
    assert len(blocks) == 1
    assert blocks[0].declared_symbols == []
    assert len(diags.messages("asm")) == 1


LIFTED = """
define void @stack_switch() {
entry:
  ret void
}
"""


def test_integrate_replaces_declaration():
    base = parse_module("declare i64 @f(i64)\n", "base")
    lifted = parse_module("define i64 @f(i64 %x) {\nentry:\n  ret i64 %x\n}\n", "lift")
    merged = integrate_lifted_ir(base, lifted)
    assert "f" in merged.function_map
    assert "f" not in merged.declaration_map


def test_integrate_rejects_arity_mismatch():
    base = parse_module("declare i64 @f(i64)\n", "base")
    lifted = parse_module("define i64 @f(i64 %x, i64 %y) {\nentry:\n  ret i64 %x\n}\n", "lift")
    with pytest.raises(SignatureMismatch) as exc:
        integrate_lifted_ir(base, lifted)
    assert exc.value.symbol == "f"


def test_integer_widths_do_not_block_integration():
    base = parse_module("declare i32 @f(i32)\n", "base")
    lifted = parse_module("define i64 @f(i64 %x) {\nentry:\n  ret i64 %x\n}\n", "lift")
    merged = integrate_lifted_ir(base, lifted)
    assert "f" in merged.function_map


def test_integrate_rejects_redefinition_of_strong_symbol():
    base = parse_module("define i64 @f(i64 %x) {\nentry:\n  ret i64 %x\n}\n", "base")
    lifted = parse_module("define i64 @f(i64 %x) {\nentry:\n  ret i64 0\n}\n", "lift")
    with pytest.raises(DuplicateDefinition):
        integrate_lifted_ir(base, lifted)


def test_asm_defined_symbol_gains_body_and_block_is_dropped():
    base = parse_module(ASM_MODULE, "base")
    lifted = parse_module(LIFTED, "lift")
    merged = integrate_lifted_ir(base, lifted)
    assert "stack_switch" in merged.function_map
    # The defining asm block disappears; unrelated text blocks survive.
    remaining = detect_asm_definitions(merged)
    assert all("stack_switch" not in b.declared_symbols for b in remaining)
    # Interface preservation: nothing from base vanished.
    assert merged.all_symbols() >= base.all_symbols()


def test_integration_preserves_symbol_set():
    base = parse_module(ASM_MODULE, "base")
    lifted = parse_module(LIFTED, "lift")
    merged = integrate_lifted_ir(base, lifted)
    assert merged.all_symbols() >= base.all_symbols()
