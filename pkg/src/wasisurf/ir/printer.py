"""Render an IrModule back to textual IR.

The printed form stays inside the supported grammar subset, so a parsed
module can be printed and reparsed into a structurally equal module; that
round trip is part of the test suite.
"""

from __future__ import annotations

from wasisurf.ir.model import (
    AggregateConst,
    AsmCallee,
    ConstExprValue,
    FunctionDecl,
    FunctionDef,
    GlobalVar,
    InstrKind,
    Instruction,
    IntConst,
    IrModule,
    LocalRef,
    NullConst,
    Operand,
    OtherConst,
    StringConst,
    SymbolRef,
    UndefConst,
    Value,
    ZeroConst,
)
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

_BARE_NAME = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-$._")


def _name(prefix: str, name: str) -> str:
    if name and all(c in _BARE_NAME for c in name) and not name[0].isdigit() or name.isdigit():
        return f"{prefix}{name}"
    escaped = name.replace("\\", "\\5C").replace('"', "\\22")
    return f'{prefix}"{escaped}"'


def render_type(ty: TypeRef | None) -> str:
    if ty is None:
        return "ptr"
    if isinstance(ty, VoidType):
        return "void"
    if isinstance(ty, IntType):
        return f"i{ty.bits}"
    if isinstance(ty, PtrType):
        if ty.pointee is None:
            return "ptr"
        return f"{render_type(ty.pointee)}*"
    if isinstance(ty, NamedType):
        return _name("%", ty.name)
    if isinstance(ty, StructType):
        inner = ", ".join(render_type(f) for f in ty.fields)
        return "<{ " + inner + " }>" if ty.packed else "{ " + inner + " }"
    if isinstance(ty, ArrayType):
        return f"[{ty.count} x {render_type(ty.element)}]"
    if isinstance(ty, FuncType):
        params = [render_type(p) for p in ty.params]
        if ty.variadic:
            params.append("...")
        return f"{render_type(ty.ret)} ({', '.join(params)})"
    if isinstance(ty, OpaqueType):
        return ty.text
    raise TypeError(f"unprintable type {ty!r}")


def _escape_bytes(data: bytes) -> str:
    out = []
    for b in data:
        ch = chr(b)
        if ch in ('"', "\\") or not (0x20 <= b < 0x7F):
            out.append(f"\\{b:02X}")
        else:
            out.append(ch)
    return "".join(out)


def render_value(value: Value) -> str:
    if isinstance(value, IntConst):
        return str(value.value)
    if isinstance(value, LocalRef):
        return _name("%", value.name)
    if isinstance(value, SymbolRef):
        return _name("@", value.name)
    if isinstance(value, NullConst):
        return "null"
    if isinstance(value, UndefConst):
        return value.spelled
    if isinstance(value, ZeroConst):
        return "zeroinitializer"
    if isinstance(value, StringConst):
        return f'c"{_escape_bytes(value.data)}"'
    if isinstance(value, AggregateConst):
        inner = ", ".join(render_operand(op) for op in value.elements)
        if value.struct:
            body = "{ " + inner + " }" if inner else "{}"
            return f"<{body}>" if value.packed else body
        return f"[{inner}]" if inner else "[]"
    if isinstance(value, ConstExprValue):
        return _render_constexpr(value)
    if isinstance(value, AsmCallee):
        side = "sideeffect " if value.side_effect else ""
        return f'asm {side}"{_escape_bytes(value.asm_text.encode())}", "{_escape_bytes(value.constraints.encode())}"'
    if isinstance(value, OtherConst):
        return value.text
    raise TypeError(f"unprintable value {value!r}")


def _render_constexpr(value: ConstExprValue) -> str:
    if value.op == "getelementptr":
        parts = [render_type(value.source_type)]
        parts.extend(render_operand(op) for op in value.operands)
        return f"getelementptr ({', '.join(parts)})"
    if value.result_type is not None:
        inner = render_operand(value.operands[0])
        return f"{value.op} ({inner} to {render_type(value.result_type)})"
    if value.op.startswith("icmp."):
        pred = value.op.split(".", 1)[1]
        inner = ", ".join(render_operand(op) for op in value.operands)
        return f"icmp {pred} ({inner})"
    inner = ", ".join(render_operand(op) for op in value.operands)
    return f"{value.op} ({inner})"


def render_operand(op: Operand) -> str:
    if op.ty is None:
        return render_value(op.value)
    return f"{render_type(op.ty)} {render_value(op.value)}"


def _render_instruction(instr: Instruction) -> str:
    prefix = f"{_name('%', instr.result)} = " if instr.result is not None else ""
    kind = instr.kind
    if kind is InstrKind.OPAQUE:
        return f"{prefix}{instr.raw}"
    if kind in (InstrKind.CALL, InstrKind.INVOKE, InstrKind.INLINE_ASM):
        assert instr.callee is not None
        callee_ty = instr.callee.ty
        ty_text = render_type(callee_ty if isinstance(callee_ty, FuncType) else instr.ty)
        args = ", ".join(render_operand(a) for a in instr.args)
        mnemonic = instr.opcode  # call or invoke
        text = f"{prefix}{mnemonic} {ty_text} {render_value(instr.callee.value)}({args})"
        if instr.opcode == "invoke":
            text += f" to label {_name('%', instr.targets[0])} unwind label {_name('%', instr.targets[1])}"
        return text
    if kind is InstrKind.LOAD:
        return f"{prefix}load {render_type(instr.pointee)}, {render_operand(instr.operands[0])}"
    if kind is InstrKind.STORE:
        return f"{prefix}store {render_operand(instr.operands[0])}, {render_operand(instr.operands[1])}"
    if kind is InstrKind.ADDR_CALC:
        rest = ", ".join(render_operand(op) for op in instr.operands)
        return f"{prefix}getelementptr {render_type(instr.pointee)}, {rest}"
    if kind is InstrKind.PHI:
        pairs = ", ".join(f"[ {render_value(op.value)}, {_name('%', label)} ]" for op, label in instr.incoming)
        ty = instr.ty if instr.ty is not None else (instr.incoming[0][0].ty if instr.incoming else None)
        return f"{prefix}phi {render_type(ty)} {pairs}"
    if kind is InstrKind.CAST:
        return f"{prefix}{instr.opcode} {render_operand(instr.operands[0])} to {render_type(instr.ty)}"
    if kind is InstrKind.LOCAL_ALLOC:
        rest = "".join(f", {render_operand(op)}" for op in instr.operands)
        return f"{prefix}alloca {render_type(instr.pointee)}{rest}"
    if kind is InstrKind.INT_OP:
        a, b = instr.operands
        return f"{prefix}{instr.opcode} {render_operand(a)}, {render_value(b.value)}"
    if kind is InstrKind.COMPARE:
        a, b = instr.operands
        return f"{prefix}icmp {instr.opcode} {render_operand(a)}, {render_value(b.value)}"
    if kind is InstrKind.BRANCH:
        if len(instr.targets) == 1:
            return f"{prefix}br label {_name('%', instr.targets[0])}"
        cond = instr.operands[0]
        return (
            f"{prefix}br {render_operand(cond)}, label {_name('%', instr.targets[0])},"
            f" label {_name('%', instr.targets[1])}"
        )
    if kind is InstrKind.SWITCH:
        cases = " ".join(
            f"i64 {v}, label {_name('%', label)}" for v, label in instr.switch_cases
        )
        return (
            f"{prefix}switch {render_operand(instr.operands[0])},"
            f" label {_name('%', instr.targets[0])} [ {cases} ]"
        )
    if kind is InstrKind.RETURN:
        if not instr.operands:
            return f"{prefix}ret void"
        return f"{prefix}ret {render_operand(instr.operands[0])}"
    if kind is InstrKind.UNREACHABLE:
        return f"{prefix}unreachable"
    raise TypeError(f"unprintable instruction kind {kind}")


def _render_signature_params(sig, param_names=None) -> str:
    parts = []
    for i, p in enumerate(sig.params):
        if param_names is not None:
            parts.append(f"{render_type(p)} {_name('%', param_names[i])}")
        else:
            parts.append(render_type(p))
    if sig.variadic:
        parts.append("...")
    return ", ".join(parts)


def _render_global(g: GlobalVar) -> str:
    kw = "constant" if g.is_constant else "global"
    init = f" {render_value(g.initializer.value)}" if g.initializer is not None else ""
    align = f", align {g.align}" if g.align else ""
    return f"{_name('@', g.symbol)} = {kw} {render_type(g.value_type)}{init}{align}"


def _render_declare(d: FunctionDecl) -> str:
    return f"declare {render_type(d.signature.ret)} {_name('@', d.symbol)}({_render_signature_params(d.signature)})"


def _render_define(fn: FunctionDef) -> list[str]:
    header = (
        f"define {render_type(fn.signature.ret)} {_name('@', fn.symbol)}"
        f"({_render_signature_params(fn.signature, fn.param_names)}) {{"
    )
    lines = [header]
    for block in fn.blocks:
        lines.append(f"{block.label}:" if all(c in _BARE_NAME for c in block.label) else f'"{block.label}":')
        for instr in block.instructions:
            lines.append(f"  {_render_instruction(instr)}")
    lines.append("}")
    return lines


def print_module(module: IrModule) -> str:
    lines: list[str] = []
    for name in module.type_table:
        lines.append(f"{_name('%', name)} = type {render_type(module.type_table[name])}")
    if module.type_table:
        lines.append("")
    for asm in module.module_asm:
        lines.append(f'module asm "{_escape_bytes(asm.encode())}"')
    if module.module_asm:
        lines.append("")
    for g in module.globals:
        lines.append(_render_global(g))
    if module.globals:
        lines.append("")
    for d in module.declarations:
        lines.append(_render_declare(d))
    if module.declarations:
        lines.append("")
    for fn in module.functions:
        lines.extend(_render_define(fn))
        lines.append("")
    return "\n".join(lines) + "\n"
