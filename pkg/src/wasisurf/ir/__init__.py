"""Whole-program SSA IR: data model, parser, printer, linker, demangler."""

from wasisurf.ir.model import (
    AggregateConst,
    AsmCallee,
    BasicBlock,
    ConstExprValue,
    FunctionDecl,
    FunctionDef,
    GlobalVar,
    InstrKind,
    InstrLoc,
    Instruction,
    IntConst,
    IrModule,
    LocalRef,
    NullConst,
    Operand,
    OtherConst,
    Signature,
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
from wasisurf.ir.parser import parse_module
from wasisurf.ir.printer import print_module
from wasisurf.ir.linker import link_modules
from wasisurf.ir.demangle import demangle

__all__ = [
    "AggregateConst",
    "ArrayType",
    "AsmCallee",
    "BasicBlock",
    "ConstExprValue",
    "FuncType",
    "FunctionDecl",
    "FunctionDef",
    "GlobalVar",
    "InstrKind",
    "InstrLoc",
    "Instruction",
    "IntConst",
    "IntType",
    "IrModule",
    "LocalRef",
    "NamedType",
    "NullConst",
    "OpaqueType",
    "Operand",
    "OtherConst",
    "PtrType",
    "Signature",
    "StringConst",
    "StructType",
    "SymbolRef",
    "TypeRef",
    "UndefConst",
    "Value",
    "VoidType",
    "ZeroConst",
    "demangle",
    "link_modules",
    "parse_module",
    "print_module",
]
