"""Parser for the supported textual SSA IR subset (LLVM-compatible assembly).

Recognized constructs: define/declare, globals with aggregate initializers,
call/invoke, load/store, getelementptr, casts, phi, br/switch/ret/unreachable,
alloca, integer arithmetic/bitwise ops, icmp, and module-level asm.  Both the
typed-pointer and opaque-pointer dialects are accepted.  Any instruction
outside the subset degrades to an Opaque record that preserves its operand
references; it is never dropped and never aborts the parse.
"""

from __future__ import annotations

import re

from wasisurf.diagnostics import Diagnostics, emit
from wasisurf.errors import ParseError
from wasisurf.ir.demangle import demangle
from wasisurf.ir.model import (
    AggregateConst,
    AsmCallee,
    BasicBlock,
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
    Signature,
    StringConst,
    SymbolRef,
    UndefConst,
    Value,
    ZeroConst,
    instruction_values,
    underlying_symbol,
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

# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<WS>[ \t\r]+)
  | (?P<COMMENT>;[^\n]*)
  | (?P<NL>\n)
  | (?P<LOCAL>%(?:"(?:[^"\\]|\\.)*"|[-A-Za-z$._0-9]+))
  | (?P<GLOBAL>@(?:"(?:[^"\\]|\\.)*"|[-A-Za-z$._0-9]+))
  | (?P<META>!(?:"(?:[^"\\]|\\.)*"|[-A-Za-z$._0-9]+)?)
  | (?P<ATTRGRP>\#[0-9]+)
  | (?P<SUMMARY>\^[0-9]+)
  | (?P<COMDAT>\$[-A-Za-z$._0-9]+)
  | (?P<HEXFLOAT>0x[KLMHR]?[0-9A-Fa-f]+)
  | (?P<FLOAT>-?[0-9]+\.[0-9]*(?:[eE][+-]?[0-9]+)?|-?[0-9]+[eE][+-]?[0-9]+)
  | (?P<INT>-?[0-9]+)
  | (?P<STRING>"(?:[^"\\]|\\.)*")
  | (?P<WORD>[A-Za-z_.][-A-Za-z$._0-9]*)
  | (?P<ELLIPSIS>\.\.\.)
  | (?P<PUNCT>[()\[\]{}<>,=*:|])
    """,
    re.VERBOSE,
)


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind: str, text: str, line: int, col: int):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"Token({self.kind},{self.text!r},{self.line}:{self.col})"


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    line_start = 0
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup or ""
        tok_text = m.group()
        if kind == "NL":
            line += 1
            line_start = m.end()
        elif kind not in ("WS", "COMMENT"):
            if kind == "WORD" and tok_text == "...":
                kind = "ELLIPSIS"
            tokens.append(Token(kind, tok_text, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("EOF", "", line, 1))
    return tokens


def _unquote(text: str) -> str:
    """Strip quotes and decode \\xx escapes from an IR quoted identifier."""
    if not (text.startswith('"') and text.endswith('"')):
        return text
    return _unescape(text[1:-1]).decode("utf-8", errors="replace")


def _unescape(body: str) -> bytes:
    out = bytearray()
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            if nxt == "\\":
                out.append(0x5C)
                i += 2
                continue
            if i + 2 < len(body) and re.match(r"[0-9A-Fa-f]{2}", body[i + 1 : i + 3]):
                out.append(int(body[i + 1 : i + 3], 16))
                i += 3
                continue
        out.append(ord(ch) & 0xFF)
        i += 1
    return bytes(out)


def _symbol_name(token_text: str) -> str:
    return _unquote(token_text[1:])


# Words that may precede or trail values/instructions without changing the
# analyses: parameter/return attributes, fast-math and wrap flags, orderings.
_SKIP_WORDS = {
    "zeroext", "signext", "noext", "inreg", "noalias", "nocapture", "nofree",
    "nonnull", "noundef", "nest", "returned", "swiftself", "swifterror",
    "readnone", "readonly", "writeonly", "writable", "immarg", "allocalign",
    "allocptr", "dead_on_unwind", "captures",
    "nuw", "nsw", "exact", "disjoint", "nneg", "inbounds", "nusw",
    "volatile", "atomic", "unordered", "monotonic", "acquire", "release",
    "acq_rel", "seq_cst", "syncscope",
    "fast", "nnan", "ninf", "nsz", "arcp", "contract", "afn", "reassoc",
    "nounwind", "willreturn", "mustprogress", "nosync", "nocallback",
    "memory", "tail", "musttail", "notail", "local_unnamed_addr",
    "unnamed_addr", "nonlazybind", "uwtable", "nocf_check",
}

_PAREN_ATTR_WORDS = {
    "dereferenceable", "dereferenceable_or_null", "byval", "byref", "sret",
    "preallocated", "inalloca", "elementtype", "alignstack", "allocsize",
    "range", "syncscope", "memory", "captures", "nofpclass", "initializes",
}

_CCONV_WORDS = {
    "ccc", "fastcc", "coldcc", "webkit_jscc", "anyregcc", "preserve_mostcc",
    "preserve_allcc", "preserve_nonecc", "cxx_fast_tlscc", "tailcc",
    "swiftcc", "swifttailcc", "cfguard_checkcc", "x86_stdcallcc",
    "x86_fastcallcc", "x86_64_sysvcc", "win64cc", "ghccc",
}

_LINKAGE_WORDS = {
    "private", "internal", "available_externally", "linkonce", "weak",
    "common", "appending", "extern_weak", "linkonce_odr", "weak_odr",
    "external", "dso_local", "dso_preemptable", "hidden", "protected",
    "default", "thread_local", "externally_initialized",
}

_INT_OPS = {
    "add", "sub", "mul", "udiv", "sdiv", "urem", "srem",
    "shl", "lshr", "ashr", "and", "or", "xor",
}

_CAST_OPS = {"bitcast", "inttoptr", "ptrtoint", "trunc", "zext", "sext", "addrspacecast"}

_CONSTEXPR_OPS = _CAST_OPS | _INT_OPS | {"getelementptr", "icmp", "select"}

_FLOAT_TYPE_WORDS = {"half", "bfloat", "float", "double", "fp128", "x86_fp80", "ppc_fp128", "x86_mmx", "x86_amx"}

_ICMP_PREDS = {"eq", "ne", "ugt", "uge", "ult", "ule", "sgt", "sge", "slt", "sle"}


class _Parser:
    def __init__(self, text: str, name: str, opaque_opcodes: frozenset[str], diags: Diagnostics | None):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.module = IrModule(name=name)
        self.opaque_opcodes = opaque_opcodes
        self.diags = diags

    # -- token plumbing --

    def peek(self, ahead: int = 0) -> Token:
        i = min(self.pos + ahead, len(self.tokens) - 1)
        return self.tokens[i]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.line, tok.col)
        return self.next()

    def fail(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.col)

    def skip_line(self) -> None:
        line = self.peek().line
        while self.peek().kind != "EOF" and self.peek().line == line:
            self.next()

    def skip_balanced(self, open_tok: str, close_tok: str) -> None:
        self.expect(open_tok)
        depth = 1
        while depth > 0:
            tok = self.next()
            if tok.kind == "EOF":
                raise ParseError(f"unbalanced {open_tok!r}", tok.line, tok.col)
            if tok.text == open_tok:
                depth += 1
            elif tok.text == close_tok:
                depth -= 1

    def skip_attr_words(self) -> None:
        """Skip attribute-ish words, attr groups, and metadata attachments."""
        while True:
            tok = self.peek()
            if tok.kind in ("ATTRGRP", "META"):
                self.next()
                if tok.kind == "META" and self.at("{"):
                    self.skip_balanced("{", "}")
                elif tok.kind == "META" and self.peek().kind in ("META", "INT") and tok.text == "!":
                    self.next()
                continue
            if tok.kind == "WORD":
                if tok.text in _SKIP_WORDS or tok.text in _CCONV_WORDS:
                    self.next()
                    if tok.text == "syncscope" and self.at("("):
                        self.skip_balanced("(", ")")
                    if tok.text == "memory" and self.at("("):
                        self.skip_balanced("(", ")")
                    continue
                if tok.text in _PAREN_ATTR_WORDS and self.peek(1).text == "(":
                    self.next()
                    self.skip_balanced("(", ")")
                    continue
                if tok.text == "align" and self.peek(1).kind == "INT":
                    self.next()
                    self.next()
                    continue
                if tok.text == "cc" and self.peek(1).kind == "INT":
                    self.next()
                    self.next()
                    continue
            break

    # -- types --

    def at_type_start(self) -> bool:
        tok = self.peek()
        if tok.kind == "LOCAL":
            return True
        if tok.text in ("{", "[", "<"):
            return True
        if tok.kind == "WORD":
            if tok.text in ("void", "ptr", "label", "metadata", "opaque", "token"):
                return True
            if tok.text in _FLOAT_TYPE_WORDS:
                return True
            if re.fullmatch(r"i[0-9]+", tok.text):
                return True
        return False

    def parse_type(self) -> TypeRef:
        tok = self.peek()
        ty: TypeRef
        if tok.kind == "WORD":
            if re.fullmatch(r"i[0-9]+", tok.text):
                self.next()
                ty = IntType(int(tok.text[1:]))
            elif tok.text == "void":
                self.next()
                ty = VoidType()
            elif tok.text == "ptr":
                self.next()
                if self.at("addrspace"):
                    self.next()
                    self.skip_balanced("(", ")")
                ty = PtrType(None)
            elif tok.text in _FLOAT_TYPE_WORDS or tok.text in ("label", "metadata", "opaque", "token"):
                self.next()
                ty = OpaqueType(tok.text)
            else:
                raise self.fail(f"expected type, found {tok.text!r}")
        elif tok.kind == "LOCAL":
            self.next()
            ty = NamedType(_symbol_name(tok.text))
        elif tok.text == "{":
            ty = self._parse_struct_body(packed=False)
        elif tok.text == "[":
            self.next()
            count_tok = self.next()
            if count_tok.kind != "INT":
                raise ParseError("expected array length", count_tok.line, count_tok.col)
            x = self.next()
            if x.text != "x":
                raise ParseError("expected 'x' in array type", x.line, x.col)
            elem = self.parse_type()
            self.expect("]")
            ty = ArrayType(int(count_tok.text), elem)
        elif tok.text == "<":
            self.next()
            if self.at("{"):
                ty = self._parse_struct_body(packed=True)
                self.expect(">")
            else:
                # Vector type: preserved opaquely (out of scope semantically).
                count_tok = self.next()
                vscale = ""
                if count_tok.text == "vscale":
                    self.expect("x")
                    vscale = "vscale x "
                    count_tok = self.next()
                x = self.next()
                if x.text != "x":
                    raise ParseError("expected 'x' in vector type", x.line, x.col)
                elem = self.parse_type()
                self.expect(">")
                ty = OpaqueType(f"<{vscale}{count_tok.text} x {_render_opaque(elem)}>")
        else:
            raise self.fail(f"expected type, found {tok.text!r}")
        return self._parse_type_suffixes(ty)

    def _parse_struct_body(self, packed: bool) -> StructType:
        self.expect("{")
        fields: list[TypeRef] = []
        if not self.at("}"):
            fields.append(self.parse_type())
            while self.accept(","):
                fields.append(self.parse_type())
        self.expect("}")
        return StructType(tuple(fields), packed=packed)

    def _parse_type_suffixes(self, ty: TypeRef) -> TypeRef:
        while True:
            tok = self.peek()
            if tok.text == "addrspace" and self.peek(1).text == "(":
                self.next()
                self.skip_balanced("(", ")")
                continue
            if tok.text == "*":
                self.next()
                ty = PtrType(ty)
                continue
            if tok.text == "(" and self._paren_opens_param_list():
                params, variadic = self._parse_param_type_list()
                ty = FuncType(ty, tuple(params), variadic)
                continue
            return ty

    def _paren_opens_param_list(self) -> bool:
        nxt = self.peek(1)
        if nxt.text == ")" or nxt.kind == "ELLIPSIS":
            return True
        save = self.pos
        self.pos += 1
        try:
            return self.at_type_start()
        finally:
            self.pos = save

    def _parse_param_type_list(self) -> tuple[list[TypeRef], bool]:
        self.expect("(")
        params: list[TypeRef] = []
        variadic = False
        while not self.accept(")"):
            if self.peek().kind == "ELLIPSIS":
                self.next()
                variadic = True
                self.accept(")")
                break
            params.append(self.parse_type())
            self.skip_attr_words()
            if not self.accept(","):
                self.expect(")")
                break
        return params, variadic

    # -- values --

    def parse_typed_operand(self) -> Operand:
        ty = self.parse_type()
        self.skip_attr_words()
        if isinstance(ty, OpaqueType) and ty.text == "metadata":
            return Operand(self._parse_metadata_value(), ty)
        value = self.parse_value()
        return Operand(value, ty)

    def _parse_metadata_value(self) -> Value:
        tok = self.peek()
        if tok.kind == "META":
            self.next()
            if self.at("{"):
                self.skip_balanced("{", "}")
            return OtherConst(tok.text)
        if tok.kind in ("LOCAL", "GLOBAL", "INT"):
            return self.parse_value()
        self.next()
        return OtherConst(tok.text)

    def parse_value(self) -> Value:
        tok = self.peek()
        if tok.kind == "INT":
            self.next()
            return IntConst(int(tok.text))
        if tok.kind == "LOCAL":
            self.next()
            return LocalRef(_symbol_name(tok.text))
        if tok.kind == "GLOBAL":
            self.next()
            return SymbolRef(_symbol_name(tok.text))
        if tok.kind in ("FLOAT", "HEXFLOAT"):
            self.next()
            return OtherConst(tok.text)
        if tok.kind == "STRING":
            self.next()
            return OtherConst(tok.text)
        if tok.text == "{":
            return self._parse_aggregate("}", struct=True)
        if tok.text == "[":
            return self._parse_aggregate("]", struct=False)
        if tok.text == "<":
            self.next()
            if self.at("{"):
                agg = self._parse_aggregate("}", struct=True, packed=True)
                self.expect(">")
                return agg
            agg = self._parse_aggregate(">", struct=False)
            return agg
        if tok.kind == "WORD":
            return self._parse_word_value(tok)
        raise self.fail(f"expected value, found {tok.text!r}")

    def _parse_aggregate(self, close: str, struct: bool, packed: bool = False) -> AggregateConst:
        if close != ">":
            self.expect("{" if close == "}" else "[")
        elements: list[Operand] = []
        while not self.accept(close):
            elements.append(self.parse_typed_operand())
            if not self.accept(","):
                self.expect(close)
                break
        return AggregateConst(tuple(elements), struct=struct, packed=packed)

    def _parse_word_value(self, tok: Token) -> Value:
        word = tok.text
        if word == "true":
            self.next()
            return IntConst(1)
        if word == "false":
            self.next()
            return IntConst(0)
        if word in ("null", "none"):
            self.next()
            return NullConst()
        if word in ("undef", "poison"):
            self.next()
            return UndefConst(word)
        if word == "zeroinitializer":
            self.next()
            return ZeroConst()
        if word == "c" and self.peek(1).kind == "STRING":
            self.next()
            s = self.next()
            return StringConst(_unescape(s.text[1:-1]))
        if word == "asm":
            return self._parse_asm_callee()
        if word == "blockaddress":
            self.next()
            raw = self._capture_balanced("(", ")")
            return OtherConst(f"blockaddress{raw}")
        if word in _CONSTEXPR_OPS:
            return self._parse_constexpr(word)
        raise self.fail(f"unsupported constant {word!r}")

    def _parse_asm_callee(self) -> AsmCallee:
        self.expect("asm")
        side_effect = False
        while self.peek().kind == "WORD" and self.peek().text in ("sideeffect", "alignstack", "inteldialect", "unwind"):
            if self.peek().text == "sideeffect":
                side_effect = True
            self.next()
        asm_tok = self.next()
        if asm_tok.kind != "STRING":
            raise ParseError("expected inline-asm string", asm_tok.line, asm_tok.col)
        self.expect(",")
        cons_tok = self.next()
        if cons_tok.kind != "STRING":
            raise ParseError("expected inline-asm constraint string", cons_tok.line, cons_tok.col)
        return AsmCallee(
            asm_text=_unescape(asm_tok.text[1:-1]).decode("utf-8", errors="replace"),
            constraints=_unescape(cons_tok.text[1:-1]).decode("utf-8", errors="replace"),
            side_effect=side_effect,
        )

    def _capture_balanced(self, open_tok: str, close_tok: str) -> str:
        parts: list[str] = []
        self.expect(open_tok)
        parts.append(open_tok)
        depth = 1
        while depth > 0:
            tok = self.next()
            if tok.kind == "EOF":
                raise ParseError(f"unbalanced {open_tok!r}", tok.line, tok.col)
            if tok.text == open_tok:
                depth += 1
            elif tok.text == close_tok:
                depth -= 1
            parts.append(tok.text)
        return " ".join(parts)

    def _parse_constexpr(self, op: str) -> ConstExprValue:
        self.next()
        if op == "getelementptr":
            while self.peek().kind == "WORD" and self.peek().text in ("inbounds", "nuw", "nusw"):
                self.next()
            self.expect("(")
            source_type = self.parse_type()
            self.expect(",")
            operands: list[Operand] = [self.parse_typed_operand()]
            while self.accept(","):
                if self.peek().text == "inrange":
                    self.next()
                    continue
                operands.append(self.parse_typed_operand())
            self.expect(")")
            return ConstExprValue("getelementptr", tuple(operands), source_type=source_type)
        if op in _CAST_OPS:
            self.expect("(")
            inner = self.parse_typed_operand()
            self.expect("to")
            result = self.parse_type()
            self.expect(")")
            return ConstExprValue(op, (inner,), result_type=result)
        if op == "icmp":
            pred = self.next().text
            self.expect("(")
            a = self.parse_typed_operand()
            self.expect(",")
            b = self.parse_typed_operand()
            self.expect(")")
            return ConstExprValue(f"icmp.{pred}", (a, b))
        # Remaining folded ops: binary integer ops and select.
        self.expect("(")
        operands = [self.parse_typed_operand()]
        while self.accept(","):
            operands.append(self.parse_typed_operand())
        self.expect(")")
        return ConstExprValue(op, tuple(operands))

    # -- top level --

    def parse_module(self) -> IrModule:
        while True:
            tok = self.peek()
            if tok.kind == "EOF":
                break
            if tok.kind == "WORD":
                if tok.text == "define":
                    self._parse_define()
                    continue
                if tok.text == "declare":
                    self._parse_declare()
                    continue
                if tok.text == "module":
                    self._parse_module_asm()
                    continue
                if tok.text in ("source_filename", "target"):
                    self.skip_line()
                    continue
                if tok.text == "attributes":
                    self.next()
                    if self.peek().kind == "ATTRGRP":
                        self.next()
                    self.expect("=")
                    self.skip_balanced("{", "}")
                    continue
                if tok.text == "uselistorder" or tok.text == "uselistorder_bb":
                    self.skip_line()
                    continue
                raise self.fail(f"unexpected top-level construct {tok.text!r}")
            if tok.kind == "GLOBAL":
                self._parse_global()
                continue
            if tok.kind == "LOCAL":
                self._parse_type_def()
                continue
            if tok.kind in ("META", "SUMMARY", "COMDAT"):
                self.skip_line()
                continue
            raise self.fail(f"unexpected token {tok.text!r} at top level")
        self._finalize()
        return self.module

    def _parse_module_asm(self) -> None:
        self.expect("module")
        self.expect("asm")
        tok = self.next()
        if tok.kind != "STRING":
            raise ParseError("expected string after 'module asm'", tok.line, tok.col)
        self.module.module_asm.append(_unescape(tok.text[1:-1]).decode("utf-8", errors="replace"))

    def _parse_type_def(self) -> None:
        name_tok = self.next()
        name = _symbol_name(name_tok.text)
        self.expect("=")
        self.expect("type")
        if self.at("opaque"):
            self.next()
            self.module.type_table[name] = OpaqueType("opaque")
            return
        self.module.type_table[name] = self.parse_type()

    def _skip_linkage_words(self) -> None:
        while self.peek().kind == "WORD" and (
            self.peek().text in _LINKAGE_WORDS or self.peek().text in ("unnamed_addr", "local_unnamed_addr")
        ):
            word = self.next().text
            if word == "thread_local" and self.at("("):
                self.skip_balanced("(", ")")

    def _parse_global(self) -> None:
        name_tok = self.next()
        name = _symbol_name(name_tok.text)
        self.expect("=")
        self._skip_linkage_words()
        if self.peek().text in ("alias", "ifunc"):
            emit(self.diags, "parse", f"skipping alias/ifunc '{name}'")
            self.skip_line()
            return
        if self.at("addrspace"):
            self.next()
            self.skip_balanced("(", ")")
        is_constant = False
        if self.accept("constant"):
            is_constant = True
        elif self.accept("global"):
            is_constant = False
        else:
            raise self.fail("expected 'global' or 'constant'")
        value_type = self.parse_type()
        initializer: Operand | None = None
        if not self.at(",") and self.peek().kind != "EOF" and self.peek().line == name_tok.line:
            value = self.parse_value()
            initializer = Operand(value, value_type)
        align = 0
        while self.accept(","):
            tok = self.peek()
            if tok.text == "align" and self.peek(1).kind == "INT":
                self.next()
                align = int(self.next().text)
            elif tok.text == "section":
                self.next()
                self.next()
            elif tok.text == "comdat":
                self.next()
                if self.at("("):
                    self.skip_balanced("(", ")")
            elif tok.kind == "META":
                self.skip_line()
                break
            else:
                self.skip_line()
                break
        self.module.globals.append(
            GlobalVar(
                symbol=name,
                is_constant=is_constant,
                value_type=value_type,
                initializer=initializer,
                align=align,
                demangled=demangle(name),
                line=name_tok.line,
            )
        )

    def _parse_declare(self) -> None:
        start = self.expect("declare")
        self._skip_linkage_words()
        self.skip_attr_words()
        ret = self.parse_type()
        name_tok = self.next()
        if name_tok.kind != "GLOBAL":
            raise ParseError("expected function name", name_tok.line, name_tok.col)
        name = _symbol_name(name_tok.text)
        params, variadic, _names = self._parse_def_params(named=False)
        self.skip_attr_words()
        while self.peek().kind != "EOF" and self.peek().line == start.line and not self.at("define"):
            self.next()
        self.module.declarations.append(
            FunctionDecl(
                symbol=name,
                signature=Signature(tuple(params), ret, variadic),
                demangled=demangle(name),
                line=start.line,
            )
        )

    def _parse_def_params(self, named: bool) -> tuple[list[TypeRef], bool, list[str]]:
        self.expect("(")
        params: list[TypeRef] = []
        names: list[str] = []
        variadic = False
        unnamed = 0
        while not self.accept(")"):
            if self.peek().kind == "ELLIPSIS":
                self.next()
                variadic = True
                self.expect(")")
                break
            ty = self.parse_type()
            self.skip_attr_words()
            if self.peek().kind == "LOCAL":
                names.append(_symbol_name(self.next().text))
            else:
                names.append(str(unnamed))
                unnamed += 1
            params.append(ty)
            if not self.accept(","):
                self.expect(")")
                break
        return params, variadic, names

    def _parse_define(self) -> None:
        start = self.expect("define")
        self._skip_linkage_words()
        while self.peek().kind == "WORD" and self.peek().text in _CCONV_WORDS:
            self.next()
        self.skip_attr_words()
        ret = self.parse_type()
        name_tok = self.next()
        if name_tok.kind != "GLOBAL":
            raise ParseError("expected function name", name_tok.line, name_tok.col)
        name = _symbol_name(name_tok.text)
        params, variadic, names = self._parse_def_params(named=True)
        # Function attributes, personality, section, metadata, ... up to the body.
        while not self.at("{"):
            tok = self.peek()
            if tok.kind == "EOF":
                raise self.fail("missing function body")
            if tok.text in ("personality", "prefix", "prologue"):
                self.next()
                self.parse_typed_operand()
                continue
            if tok.text == "section" or tok.text == "gc" or tok.text == "partition":
                self.next()
                self.next()
                continue
            if tok.text == "comdat":
                self.next()
                if self.at("("):
                    self.skip_balanced("(", ")")
                continue
            if tok.kind == "META":
                self.next()
                if self.peek().kind in ("META", "INT"):
                    self.next()
                continue
            if tok.text == "align" and self.peek(1).kind == "INT":
                self.next()
                self.next()
                continue
            if tok.kind in ("ATTRGRP",) or tok.kind == "WORD":
                self.next()
                continue
            raise self.fail(f"unexpected token {tok.text!r} in function header")
        blocks = self._parse_body(name)
        fn = FunctionDef(
            symbol=name,
            signature=Signature(tuple(params), ret, variadic),
            param_names=tuple(names),
            blocks=blocks,
            demangled=demangle(name),
            line=start.line,
        )
        self._validate_function(fn)
        self.module.functions.append(fn)

    def _parse_body(self, fn_name: str) -> list[BasicBlock]:
        self.expect("{")
        blocks: list[BasicBlock] = []
        current: BasicBlock | None = None
        labels_seen: set[str] = set()
        while not self.accept("}"):
            tok = self.peek()
            if tok.kind == "EOF":
                raise self.fail(f"unterminated body of @{fn_name}")
            label = self._try_parse_label()
            if label is not None:
                if label in labels_seen:
                    raise ParseError(f"duplicate block label '{label}'", tok.line, tok.col)
                labels_seen.add(label)
                current = BasicBlock(label)
                blocks.append(current)
                continue
            if current is None:
                synth = "entry"
                n = 0
                while synth in labels_seen:
                    n += 1
                    synth = f"entry.{n}"
                labels_seen.add(synth)
                current = BasicBlock(synth)
                blocks.append(current)
            current.instructions.append(self._parse_instruction())
        if not blocks:
            raise self.fail(f"function @{fn_name} has no blocks")
        return blocks

    def _try_parse_label(self) -> str | None:
        tok = self.peek()
        if tok.kind in ("WORD", "INT", "STRING") and self.peek(1).text == ":" and self.peek(1).line == tok.line:
            self.next()
            self.next()
            return _unquote(tok.text)
        return None

    # -- instructions --

    def _parse_instruction(self) -> Instruction:
        first = self.peek()
        result: str | None = None
        if first.kind == "LOCAL" and self.peek(1).text == "=":
            self.next()
            self.next()
            result = _symbol_name(first.text)
        mnemonic_tok = self.peek()
        mnemonic = mnemonic_tok.text
        if mnemonic_tok.kind != "WORD" or mnemonic in self.opaque_opcodes:
            return self._opaque_instruction(result, mnemonic_tok.line)
        handler = {
            "call": self._parse_call,
            "invoke": self._parse_invoke,
            "load": self._parse_load,
            "store": self._parse_store,
            "getelementptr": self._parse_gep,
            "phi": self._parse_phi,
            "alloca": self._parse_alloca,
            "icmp": self._parse_icmp,
            "br": self._parse_br,
            "switch": self._parse_switch,
            "ret": self._parse_ret,
            "unreachable": self._parse_unreachable,
        }.get(mnemonic)
        if handler is None and mnemonic in _INT_OPS:
            handler = self._parse_int_op
        if handler is None and mnemonic in _CAST_OPS:
            handler = self._parse_cast
        if handler is None:
            return self._opaque_instruction(result, mnemonic_tok.line)
        instr = handler()
        instr.result = result
        instr.line = mnemonic_tok.line
        return instr

    def _opaque_instruction(self, result: str | None, line: int) -> Instruction:
        """Capture the rest of the line verbatim, preserving value references."""
        tokens: list[Token] = []
        depth = 0
        while self.peek().kind != "EOF" and self.peek().line == line:
            tok = self.peek()
            if tok.text in ("{", "[", "("):
                depth += 1
            elif tok.text in ("}", "]", ")"):
                if tok.text == "}" and depth == 0:
                    break  # would close the enclosing function body
                depth = max(0, depth - 1)
            tokens.append(self.next())
        operands: list[Operand] = []
        for tok in tokens:
            if tok.kind == "LOCAL":
                operands.append(Operand(LocalRef(_symbol_name(tok.text))))
            elif tok.kind == "GLOBAL":
                operands.append(Operand(SymbolRef(_symbol_name(tok.text))))
            elif tok.kind == "INT":
                operands.append(Operand(IntConst(int(tok.text))))
        raw = " ".join(t.text for t in tokens)
        return Instruction(
            kind=InstrKind.OPAQUE,
            opcode=tokens[0].text if tokens else "",
            result=result,
            operands=tuple(operands),
            raw=raw,
            line=line,
        )

    def _parse_call_like(self, opcode: str) -> Instruction:
        self.next()  # mnemonic
        self.skip_attr_words()
        ty = self.parse_type()
        self.skip_attr_words()
        if isinstance(ty, PtrType) and isinstance(ty.pointee, FuncType):
            ty = ty.pointee  # typed-pointer dialect spells the callee type as T (...)*
        if isinstance(ty, FuncType):
            ret_ty: TypeRef = ty.ret
            fn_ty: FuncType | None = ty
        else:
            ret_ty = ty
            fn_ty = None
        callee_val = self.parse_value()
        args: list[Operand] = []
        self.expect("(")
        while not self.accept(")"):
            args.append(self.parse_typed_operand())
            if not self.accept(","):
                self.expect(")")
                break
        self.skip_attr_words()
        if self.at("["):
            self.skip_balanced("[", "]")
        callee = Operand(callee_val, fn_ty if fn_ty is not None else PtrType(None))
        kind = InstrKind.INLINE_ASM if isinstance(callee_val, AsmCallee) else InstrKind.CALL
        return Instruction(
            kind=kind,
            opcode=opcode,
            result=None,
            operands=(callee, *args),
            ty=ret_ty,
            callee=callee,
            args=tuple(args),
        )

    def _parse_call(self) -> Instruction:
        return self._parse_call_like("call")

    def _parse_invoke(self) -> Instruction:
        instr = self._parse_call_like("invoke")
        self.expect("to")
        self.expect("label")
        normal = _symbol_name(self.next().text)
        self.expect("unwind")
        self.expect("label")
        unwind = _symbol_name(self.next().text)
        if instr.kind != InstrKind.INLINE_ASM:
            instr.kind = InstrKind.INVOKE
        instr.targets = (normal, unwind)
        return instr

    def _parse_load(self) -> Instruction:
        self.next()
        self.skip_attr_words()
        ty = self.parse_type()
        if self.accept(","):
            ptr = self.parse_typed_operand()
            pointee = ty
        else:
            # Typed-pointer dialect: the single type is the pointer type.
            value = self.parse_value()
            ptr = Operand(value, ty)
            pointee = ty.pointee if isinstance(ty, PtrType) else None
        self.skip_attr_words()  # atomic orderings trail the pointer
        self._skip_trailing_commas()
        return Instruction(
            kind=InstrKind.LOAD,
            opcode="load",
            result=None,
            operands=(ptr,),
            ty=pointee,
            pointee=pointee,
        )

    def _parse_store(self) -> Instruction:
        self.next()
        self.skip_attr_words()
        value = self.parse_typed_operand()
        self.expect(",")
        ptr = self.parse_typed_operand()
        self.skip_attr_words()
        self._skip_trailing_commas()
        return Instruction(
            kind=InstrKind.STORE,
            opcode="store",
            result=None,
            operands=(value, ptr),
            ty=VoidType(),
            pointee=value.ty,
        )

    def _skip_trailing_commas(self) -> None:
        while self.accept(","):
            tok = self.peek()
            if tok.text == "align" and self.peek(1).kind == "INT":
                self.next()
                self.next()
            elif tok.kind == "META":
                self.next()
                if self.peek().kind in ("META", "INT"):
                    self.next()
            else:
                self.skip_attr_words()
                if self.at(",") or self.peek().kind == "EOF":
                    continue
                break

    def _parse_gep(self) -> Instruction:
        self.next()
        self.skip_attr_words()
        first_ty = self.parse_type()
        if self.accept(","):
            source_type = first_ty
            base = self.parse_typed_operand()
        else:
            base_val = self.parse_value()
            base = Operand(base_val, first_ty)
            source_type = first_ty.pointee if isinstance(first_ty, PtrType) else None
        indices: list[Operand] = []
        while self.accept(","):
            if self.peek().text == "inrange":
                self.next()
                continue
            indices.append(self.parse_typed_operand())
        return Instruction(
            kind=InstrKind.ADDR_CALC,
            opcode="getelementptr",
            result=None,
            operands=(base, *indices),
            ty=PtrType(None),
            pointee=source_type,
        )

    def _parse_phi(self) -> Instruction:
        self.next()
        self.skip_attr_words()
        ty = self.parse_type()
        incoming: list[tuple[Operand, str]] = []
        while True:
            self.expect("[")
            value = self.parse_value()
            self.expect(",")
            label_tok = self.next()
            if label_tok.kind != "LOCAL":
                raise ParseError("expected predecessor label", label_tok.line, label_tok.col)
            self.expect("]")
            incoming.append((Operand(value, ty), _symbol_name(label_tok.text)))
            if not self.accept(","):
                break
        return Instruction(
            kind=InstrKind.PHI,
            opcode="phi",
            result=None,
            operands=tuple(op for op, _ in incoming),
            ty=ty,
            incoming=tuple(incoming),
        )

    def _parse_alloca(self) -> Instruction:
        self.next()
        self.skip_attr_words()
        ty = self.parse_type()
        operands: list[Operand] = []
        while self.accept(","):
            tok = self.peek()
            if tok.text == "align" and self.peek(1).kind == "INT":
                self.next()
                self.next()
            elif tok.text == "addrspace":
                self.next()
                self.skip_balanced("(", ")")
            elif self.at_type_start():
                operands.append(self.parse_typed_operand())
            else:
                break
        return Instruction(
            kind=InstrKind.LOCAL_ALLOC,
            opcode="alloca",
            result=None,
            operands=tuple(operands),
            ty=PtrType(ty),
            pointee=ty,
        )

    def _parse_icmp(self) -> Instruction:
        self.next()
        pred_tok = self.next()
        if pred_tok.text not in _ICMP_PREDS:
            raise ParseError(f"unknown icmp predicate {pred_tok.text!r}", pred_tok.line, pred_tok.col)
        ty = self.parse_type()
        a = self.parse_value()
        self.expect(",")
        b = self.parse_value()
        return Instruction(
            kind=InstrKind.COMPARE,
            opcode=pred_tok.text,
            result=None,
            operands=(Operand(a, ty), Operand(b, ty)),
            ty=IntType(1),
        )

    def _parse_int_op(self) -> Instruction:
        op_tok = self.next()
        self.skip_attr_words()
        ty = self.parse_type()
        a = self.parse_value()
        self.expect(",")
        b = self.parse_value()
        return Instruction(
            kind=InstrKind.INT_OP,
            opcode=op_tok.text,
            result=None,
            operands=(Operand(a, ty), Operand(b, ty)),
            ty=ty,
        )

    def _parse_cast(self) -> Instruction:
        op_tok = self.next()
        self.skip_attr_words()
        src_ty = self.parse_type()
        value = self.parse_value()
        self.expect("to")
        dst_ty = self.parse_type()
        return Instruction(
            kind=InstrKind.CAST,
            opcode=op_tok.text,
            result=None,
            operands=(Operand(value, src_ty),),
            ty=dst_ty,
        )

    def _parse_br(self) -> Instruction:
        self.next()
        if self.accept("label"):
            dest = _symbol_name(self.next().text)
            return Instruction(kind=InstrKind.BRANCH, opcode="br", result=None, targets=(dest,), ty=VoidType())
        ty = self.parse_type()
        cond = self.parse_value()
        self.expect(",")
        self.expect("label")
        t = _symbol_name(self.next().text)
        self.expect(",")
        self.expect("label")
        f = _symbol_name(self.next().text)
        return Instruction(
            kind=InstrKind.BRANCH,
            opcode="br",
            result=None,
            operands=(Operand(cond, ty),),
            targets=(t, f),
            ty=VoidType(),
        )

    def _parse_switch(self) -> Instruction:
        self.next()
        ty = self.parse_type()
        value = self.parse_value()
        self.expect(",")
        self.expect("label")
        default = _symbol_name(self.next().text)
        cases: list[tuple[int, str]] = []
        self.expect("[")
        while not self.accept("]"):
            case_ty = self.parse_type()
            case_tok = self.next()
            if case_tok.kind != "INT":
                raise ParseError("expected integer switch case", case_tok.line, case_tok.col)
            self.expect(",")
            self.expect("label")
            cases.append((int(case_tok.text), _symbol_name(self.next().text)))
            del case_ty
        return Instruction(
            kind=InstrKind.SWITCH,
            opcode="switch",
            result=None,
            operands=(Operand(value, ty),),
            targets=(default, *[c[1] for c in cases]),
            switch_cases=tuple(cases),
            ty=VoidType(),
        )

    def _parse_ret(self) -> Instruction:
        self.next()
        if self.at("void"):
            self.next()
            return Instruction(kind=InstrKind.RETURN, opcode="ret", result=None, ty=VoidType())
        ty = self.parse_type()
        value = self.parse_value()
        return Instruction(
            kind=InstrKind.RETURN,
            opcode="ret",
            result=None,
            operands=(Operand(value, ty),),
            ty=ty,
        )

    def _parse_unreachable(self) -> Instruction:
        self.next()
        return Instruction(kind=InstrKind.UNREACHABLE, opcode="unreachable", result=None, ty=VoidType())

    # -- validation & finalization --

    def _validate_function(self, fn: FunctionDef) -> None:
        labels = {b.label for b in fn.blocks}
        # Labels and values share the %-namespace: a %token naming a block in
        # an opaque capture is a block reference, not a value reference.
        for block in fn.blocks:
            for instr in block.instructions:
                if instr.kind is InstrKind.OPAQUE:
                    instr.operands = tuple(
                        op
                        for op in instr.operands
                        if not (isinstance(op.value, LocalRef) and op.value.name in labels)
                    )
        defined: set[str] = set(fn.param_names)
        if len(defined) != len(fn.param_names):
            raise ParseError(f"duplicate parameter name in @{fn.symbol}", fn.line)
        for block in fn.blocks:
            for instr in block.instructions:
                for target in instr.targets:
                    if target not in labels:
                        raise ParseError(f"unknown block target '{target}' in @{fn.symbol}", instr.line)
                for op, label in instr.incoming:
                    del op
                    if label not in labels:
                        raise ParseError(f"unknown block target '{label}' in @{fn.symbol}", instr.line)
                if instr.result is not None:
                    if instr.result in defined:
                        raise ParseError(
                            f"duplicate value id '%{instr.result}' in @{fn.symbol}", instr.line
                        )
                    defined.add(instr.result)

    def _finalize(self) -> None:
        module = self.module
        known = module.all_symbols() | {g.symbol for g in module.globals}
        decl_map = {d.symbol: d for d in module.declarations}
        for fn in module.functions:
            for _loc, instr in fn.locations():
                if instr.kind not in (InstrKind.CALL, InstrKind.INVOKE):
                    continue
                target = underlying_symbol(instr.callee)
                if target is None or target in known:
                    continue
                arg_tys = tuple(a.ty if a.ty is not None else PtrType(None) for a in instr.args)
                decl = FunctionDecl(
                    symbol=target,
                    signature=Signature(arg_tys, instr.ty if instr.ty is not None else VoidType()),
                    demangled=demangle(target),
                )
                module.declarations.append(decl)
                decl_map[target] = decl
                known.add(target)
                emit(self.diags, "parse", f"implicit declaration for call target '@{target}'")
        _ensure_named_types(module, self.diags)
        compute_address_taken(module)


def _ensure_named_types(module: IrModule, diags: Diagnostics | None) -> None:
    """Guarantee the type table covers every named aggregate in use."""
    referenced: set[str] = set()

    def visit_type(ty: TypeRef | None) -> None:
        if ty is None:
            return
        if isinstance(ty, NamedType):
            referenced.add(ty.name)
        elif isinstance(ty, PtrType):
            visit_type(ty.pointee)
        elif isinstance(ty, StructType):
            for f in ty.fields:
                visit_type(f)
        elif isinstance(ty, ArrayType):
            visit_type(ty.element)
        elif isinstance(ty, FuncType):
            visit_type(ty.ret)
            for p in ty.params:
                visit_type(p)

    def visit_value(value: Value) -> None:
        if isinstance(value, AggregateConst):
            for op in value.elements:
                visit_type(op.ty)
                visit_value(op.value)
        elif isinstance(value, ConstExprValue):
            visit_type(value.result_type)
            visit_type(value.source_type)
            for op in value.operands:
                visit_type(op.ty)
                visit_value(op.value)

    for ty in list(module.type_table.values()):
        visit_type(ty)
    for g in module.globals:
        visit_type(g.value_type)
        if g.initializer is not None:
            visit_type(g.initializer.ty)
            visit_value(g.initializer.value)
    for d in module.declarations:
        visit_type(d.signature.as_func_type())
    for fn in module.functions:
        visit_type(fn.signature.as_func_type())
        for _loc, instr in fn.locations():
            visit_type(instr.ty)
            visit_type(instr.pointee)
            for op in instr.operands:
                visit_type(op.ty)
                visit_value(op.value)
            for v in instruction_values(instr):
                visit_value(v)
    for name in sorted(referenced):
        if name not in module.type_table:
            module.type_table[name] = OpaqueType("opaque")
            emit(diags, "parse", f"named type '%{name}' referenced but never defined")


def compute_address_taken(module: IrModule) -> None:
    """Mark functions whose address is used outside a direct-call position."""
    taken: set[str] = set()

    def visit_value(value: Value) -> None:
        for v in _walk(value):
            if isinstance(v, SymbolRef) and module.is_function_symbol(v.name):
                taken.add(v.name)

    def _walk(value: Value):
        yield value
        if isinstance(value, AggregateConst):
            for op in value.elements:
                yield from _walk(op.value)
        elif isinstance(value, ConstExprValue):
            for op in value.operands:
                yield from _walk(op.value)

    for g in module.globals:
        if g.initializer is not None:
            visit_value(g.initializer.value)
    for fn in module.functions:
        for _loc, instr in fn.locations():
            direct_callee = underlying_symbol(instr.callee)
            for op in instr.operands:
                sym = underlying_symbol(op)
                if (
                    instr.kind in (InstrKind.CALL, InstrKind.INVOKE)
                    and instr.callee is not None
                    and op is instr.callee
                    and direct_callee is not None
                ):
                    continue
                del sym
                visit_value(op.value)
    for fn in module.functions:
        fn.address_taken = fn.symbol in taken


def parse_module(
    text: str,
    name: str = "module",
    *,
    opaque_opcodes: frozenset[str] | set[str] = frozenset(),
    diags: Diagnostics | None = None,
) -> IrModule:
    """Parse textual IR into an :class:`IrModule`.

    ``opaque_opcodes`` forces otherwise-recognized mnemonics through the
    opaque fallback; used to test that degradation preserves operand
    references.
    """
    parser = _Parser(text, name, frozenset(opaque_opcodes), diags)
    return parser.parse_module()


def _render_opaque(ty: TypeRef) -> str:
    from wasisurf.ir.printer import render_type

    return render_type(ty)
