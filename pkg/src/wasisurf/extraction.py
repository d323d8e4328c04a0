"""Build-time IR production and assembly-block handling.

This module plans (never executes) the toolchain commands that produce
whole-program textual IR, detects assembly-defined symbols that punch holes
in the control flow, and integrates externally lifted replacement IR back
into the program.  The compile/decompile/recompile loop for assembly blocks
runs as configured external commands; only detection and integration live
here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from wasisurf.diagnostics import Diagnostics, emit
from wasisurf.errors import ConfigError, DuplicateDefinition, SignatureMismatch
from wasisurf.ir import IrModule, Signature, link_modules
from wasisurf.ir.types import (
    ArrayType,
    FuncType,
    IntType,
    NamedType,
    OpaqueType,
    PtrType,
    StructType,
    TypeRef,
    VoidType,
)


@dataclass(frozen=True)
class BuildStep:
    program: str
    args: tuple[str, ...]
    cwd: str


@dataclass
class BuildPlan:
    steps: list[BuildStep] = field(default_factory=list)
    produced_ir_paths: list[str] = field(default_factory=list)


@dataclass
class AsmBlock:
    source_text: str
    declared_symbols: list[str]
    origin: tuple[str, int]  # (module name, asm block index)


def plan_build(config: dict) -> BuildPlan:
    """Turn a toolchain configuration into the exact command sequence.

    Pure function of the configuration: callers decide when and whether to
    execute it.  Expected shape::

        {
          "toolchain": [
            {"compiler": "/usr/bin/rustc", "flags": [...], "sources": [...],
             "cwd": ".", "output_ir": "out/prog.ll"},
            ...
          ],
          "extract_command": ["extract-ir", "{binary}", "{out}"],   # optional
          "binary": "target/prog", "extracted_ir": "out/full.ll"    # optional
        }
    """
    entries = config.get("toolchain")
    if not entries:
        raise ConfigError("toolchain", "no compiler entries configured")
    plan = BuildPlan()
    for i, entry in enumerate(entries):
        compiler = entry.get("compiler")
        if not compiler:
            raise ConfigError("toolchain", f"entry {i} missing 'compiler'")
        flags = list(entry.get("flags", []))
        sources = list(entry.get("sources", []))
        cwd = entry.get("cwd", ".")
        plan.steps.append(BuildStep(compiler, tuple(flags + sources), cwd))
        out = entry.get("output_ir")
        if out:
            plan.produced_ir_paths.append(out)
    extract = config.get("extract_command")
    if extract:
        binary = config.get("binary", "")
        out = config.get("extracted_ir", "")
        args = [a.format(binary=binary, out=out) for a in extract[1:]]
        plan.steps.append(BuildStep(extract[0], tuple(args), config.get("cwd", ".")))
        if out:
            plan.produced_ir_paths.append(out)
    seen: set[str] = set()
    unique: list[str] = []
    for p in plan.produced_ir_paths:
        if p not in seen:
            seen.add(p)
            unique.append(p)
    plan.produced_ir_paths = unique
    return plan


# Label definitions and .globl/.global directives inside module-level asm.
_ASM_LABEL = re.compile(r"^\s*([A-Za-z_.$][\w.$]*)\s*:", re.MULTILINE)
_ASM_GLOBL = re.compile(r"^\s*\.(?:globl|global)\s+([A-Za-z_.$][\w.$]*)", re.MULTILINE)
_ASM_COMMENT = re.compile(r"(?://|#|;).*$", re.MULTILINE)


def detect_asm_definitions(module: IrModule, diags: Diagnostics | None = None) -> list[AsmBlock]:
    """One AsmBlock per module-level assembly block, with its defined symbols.

    Local labels (``.L*``) are assembler-internal and skipped.  Blocks where
    nothing parseable remains yield an empty symbol list plus a diagnostic.
    """
    blocks: list[AsmBlock] = []
    for index, text in enumerate(module.module_asm):
        stripped = _ASM_COMMENT.sub("", text)
        labels = [s for s in _ASM_LABEL.findall(stripped) if not s.startswith(".L")]
        exported = _ASM_GLOBL.findall(stripped)
        symbols: list[str] = []
        for s in labels + exported:
            if s not in symbols:
                symbols.append(s)
        if not symbols:
            emit(
                diags,
                "asm",
                f"module asm block {index} of '{module.name}' declares no recognizable symbols",
            )
        blocks.append(AsmBlock(source_text=text, declared_symbols=symbols, origin=(module.name, index)))
    return blocks


def integrate_lifted_ir(
    base: IrModule,
    lifted: IrModule,
    *,
    diags: Diagnostics | None = None,
) -> IrModule:
    """Replace declarations (or asm-defined symbols) in ``base`` with lifted bodies.

    Every lifted definition must correspond to a declaration or asm-defined
    symbol of ``base`` with a call-compatible signature (arity and operand
    kind classes; exact integer widths are allowed to differ, since lifted
    code frequently widens them).  The result is relinked and keeps every
    symbol of ``base``.
    """
    asm_symbols: set[str] = set()
    for block in detect_asm_definitions(base, diags):
        asm_symbols.update(block.declared_symbols)

    for fn in lifted.functions:
        if fn.symbol in base.function_map:
            raise DuplicateDefinition(fn.symbol, "already strongly defined in base module")
        decl = base.declaration_map.get(fn.symbol)
        if decl is not None:
            if not signatures_compatible(decl.signature, fn.signature, base.type_table):
                raise SignatureMismatch(fn.symbol)
        elif fn.symbol not in asm_symbols:
            emit(diags, "integrate", f"lifted definition '@{fn.symbol}' matches no declaration or asm symbol")

    lifted_defined = {fn.symbol for fn in lifted.functions}
    merged = link_modules([base, lifted], name=base.name)
    # Assembly blocks whose symbols all gained real definitions are spent.
    merged.module_asm = [
        text
        for index, text in enumerate(base.module_asm)
        if not _block_fully_replaced(base, index, text, lifted_defined)
    ] + lifted.module_asm
    return merged


def _block_fully_replaced(base: IrModule, index: int, text: str, lifted_defined: set[str]) -> bool:
    probe = IrModule(name=base.name, module_asm=[text])
    blocks = detect_asm_definitions(probe)
    symbols = blocks[0].declared_symbols if blocks else []
    return bool(symbols) and all(s in lifted_defined for s in symbols)


# ---------------------------------------------------------------------------
# Signature kind-class compatibility
# ---------------------------------------------------------------------------


def kind_class(ty: TypeRef | None, type_table: dict[str, TypeRef] | None = None) -> str:
    """Coarse operand class: integer, address, aggregate, void, or other."""
    if ty is None:
        return "address"
    if isinstance(ty, NamedType) and type_table is not None:
        resolved = type_table.get(ty.name)
        if resolved is not None and not isinstance(resolved, NamedType):
            return kind_class(resolved, None)
    if isinstance(ty, IntType):
        return "integer"
    if isinstance(ty, (PtrType, FuncType)):
        return "address"
    if isinstance(ty, (StructType, ArrayType, NamedType)):
        return "aggregate"
    if isinstance(ty, VoidType):
        return "void"
    if isinstance(ty, OpaqueType):
        return "other"
    return "other"


def signatures_compatible(a: Signature, b: Signature, type_table: dict[str, TypeRef]) -> bool:
    if len(a.params) != len(b.params) or a.variadic != b.variadic:
        return False
    if kind_class(a.ret, type_table) != kind_class(b.ret, type_table):
        return False
    return all(
        kind_class(pa, type_table) == kind_class(pb, type_table)
        for pa, pb in zip(a.params, b.params)
    )
