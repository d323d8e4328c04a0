"""Rust symbol demangling for both the legacy and v0 mangling schemes.

Output is a plain ``::``-separated human path: legacy hash suffixes and v0
crate disambiguators are stripped, since the analyses key on stable path
text (trait names, interface names), not on per-build identity.  Anything
that fails to parse is returned unchanged.
"""

from __future__ import annotations

import re

_LEGACY_ESCAPES = {
    "$C$": ",",
    "$SP$": "@",
    "$BP$": "*",
    "$RF$": "&",
    "$LT$": "<",
    "$GT$": ">",
    "$LP$": "(",
    "$RP$": ")",
}

# Trailing 17-char hash segment of the legacy scheme: 'h' + 16 hex digits.
_LEGACY_HASH = re.compile(r"\Ah[0-9a-f]{16}\Z")

_LLVM_SUFFIX = re.compile(r"\.llvm\.[0-9A-Fa-f@]+\Z")

_BASIC_TYPES = {
    "a": "i8",
    "b": "bool",
    "c": "char",
    "d": "f64",
    "e": "str",
    "f": "f32",
    "h": "u8",
    "i": "isize",
    "j": "usize",
    "l": "i32",
    "m": "u32",
    "n": "i128",
    "o": "u128",
    "p": "_",
    "s": "i16",
    "t": "u16",
    "u": "()",
    "v": "...",
    "x": "i64",
    "y": "u64",
    "z": "!",
}


def demangle(symbol: str) -> str:
    """Demangle a Rust symbol; unmangled input is returned unchanged."""
    name = _LLVM_SUFFIX.sub("", symbol)
    if name.startswith("__ZN") or name.startswith("__R"):
        name = name[1:]
    if name.startswith("_ZN"):
        out = _demangle_legacy(name)
        return out if out is not None else symbol
    if name.startswith("_R"):
        out = _demangle_v0(name)
        return out if out is not None else symbol
    return symbol


# ---------------------------------------------------------------------------
# Legacy scheme: _ZN <len> <seg> ... E, with $...$ escapes and '..' for '::'
# ---------------------------------------------------------------------------


def _demangle_legacy(name: str) -> str | None:
    pos = 3
    segments: list[str] = []
    while pos < len(name):
        if name[pos] == "E":
            if pos != len(name) - 1 or not segments:
                return None
            break
        if not name[pos].isdigit():
            return None
        length = 0
        while pos < len(name) and name[pos].isdigit():
            length = length * 10 + int(name[pos])
            pos += 1
        end = pos + length
        if length == 0 or end >= len(name):
            return None
        segments.append(name[pos:end])
        pos = end
    else:
        return None  # ran out of input before the trailing 'E'
    if _LEGACY_HASH.match(segments[-1]):
        segments = segments[:-1]
        if not segments:
            return None
    return "::".join(_unescape_legacy(s) for s in segments)


def _unescape_legacy(segment: str) -> str:
    out: list[str] = []
    i = 0
    # Segments carry an underscore guard before an escape or digit.
    if segment.startswith("_") and len(segment) > 1 and (segment[1] == "$" or segment[1].isdigit()):
        segment = segment[1:]
    while i < len(segment):
        ch = segment[i]
        if ch == "$":
            end = segment.find("$", i + 1)
            if end == -1:
                out.append(segment[i:])
                break
            token = segment[i : end + 1]
            if token in _LEGACY_ESCAPES:
                out.append(_LEGACY_ESCAPES[token])
            elif token.startswith("$u") and len(token) > 3:
                try:
                    out.append(chr(int(token[2:-1], 16)))
                except ValueError:
                    out.append(token)
            else:
                out.append(token)
            i = end + 1
        elif segment.startswith("..", i):
            out.append("::")
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


# ---------------------------------------------------------------------------
# v0 scheme (RFC 2603 subset: paths, generic args, references, basic types)
# ---------------------------------------------------------------------------


class _V0Error(Exception):
    pass


class _V0Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def demangle(self) -> str:
        # "_R", optional version number (none currently assigned), then a path.
        self.pos = 2
        if self._peek().isdigit():
            raise _V0Error("versioned symbols unsupported")
        out = self.parse_path(in_value=True)
        # Trailing instantiating-crate path is allowed and ignored.
        return out

    # -- low-level helpers --

    def _peek(self) -> str:
        if self.pos >= len(self.text):
            raise _V0Error("truncated")
        return self.text[self.pos]

    def _next(self) -> str:
        ch = self._peek()
        self.pos += 1
        return ch

    def _eat(self, ch: str) -> bool:
        if self.pos < len(self.text) and self.text[self.pos] == ch:
            self.pos += 1
            return True
        return False

    def parse_base62(self) -> int:
        # base-62 number terminated by '_'; empty digits mean 0, else n+1.
        digits = ""
        while not self._eat("_"):
            digits += self._next()
        if not digits:
            return 0
        value = 0
        for ch in digits:
            if ch.isdigit():
                d = ord(ch) - ord("0")
            elif ch.islower():
                d = 10 + ord(ch) - ord("a")
            elif ch.isupper():
                d = 36 + ord(ch) - ord("A")
            else:
                raise _V0Error(f"bad base62 digit {ch!r}")
            value = value * 62 + d
        return value + 1

    def parse_decimal(self) -> int:
        if not self._peek().isdigit():
            raise _V0Error("expected decimal")
        value = 0
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            value = value * 10 + int(self._next())
        return value

    def parse_identifier(self) -> tuple[str, int]:
        """Return (name, disambiguator index)."""
        disambiguator = 0
        if self._eat("s"):
            disambiguator = self.parse_base62() + 1
        punycode = self._eat("u")
        length = self.parse_decimal()
        self._eat("_")  # separator when the identifier starts with a digit/_
        if self.pos + length > len(self.text):
            raise _V0Error("identifier overruns input")
        raw = self.text[self.pos : self.pos + length]
        self.pos += length
        if punycode:
            raw = _decode_punycode(raw)
        return raw, disambiguator

    # -- grammar --

    def parse_path(self, in_value: bool = False) -> str:
        tag = self._next()
        if tag == "C":
            name, _ = self.parse_identifier()
            return name
        if tag == "N":
            ns = self._next()
            parent = self.parse_path()
            name, dis = self.parse_identifier()
            if ns == "C":
                leaf = "{closure#%d}" % dis
                if name:
                    leaf = "{closure:%s#%d}" % (name, dis)
            elif ns == "S":
                leaf = "{shim:%s#%d}" % (name, dis)
            elif ns.isupper():
                leaf = "{%s:%s#%d}" % (ns, name, dis)
            else:
                leaf = name
            if not leaf:
                return parent
            return f"{parent}::{leaf}"
        if tag == "I":
            base = self.parse_path()
            args: list[str] = []
            while not self._eat("E"):
                args.append(self.parse_generic_arg())
            joined = ", ".join(args)
            return f"{base}::<{joined}>" if in_value else f"{base}<{joined}>"
        if tag == "M":
            self._skip_impl_path()
            ty = self.parse_type()
            return f"<{ty}>"
        if tag == "X":
            self._skip_impl_path()
            ty = self.parse_type()
            trait = self.parse_path()
            return f"<{ty} as {trait}>"
        if tag == "Y":
            ty = self.parse_type()
            trait = self.parse_path()
            return f"<{ty} as {trait}>"
        if tag == "B":
            return self.parse_backref(lambda: self.parse_path(in_value))
        raise _V0Error(f"unsupported path tag {tag!r}")

    def _skip_impl_path(self) -> None:
        # impl-path = disambiguator? path ; the path names the impl's parent.
        if self._peek() == "s":
            self._next()
            self.parse_base62()
        self.parse_path()

    def parse_generic_arg(self) -> str:
        ch = self._peek()
        if ch == "L":
            self._next()
            self.parse_base62()
            return "'_"
        if ch == "K":
            self._next()
            return self.parse_const()
        return self.parse_type()

    def parse_type(self) -> str:
        ch = self._next()
        basic = _BASIC_TYPES.get(ch)
        if basic is not None:
            return basic
        if ch == "R" or ch == "Q":
            if self._peek() == "L":
                self._next()
                self.parse_base62()
            inner = self.parse_type()
            return ("&mut " if ch == "Q" else "&") + inner
        if ch == "P":
            return "*const " + self.parse_type()
        if ch == "O":
            return "*mut " + self.parse_type()
        if ch == "A":
            elem = self.parse_type()
            length = self.parse_const()
            return f"[{elem}; {length}]"
        if ch == "S":
            return f"[{self.parse_type()}]"
        if ch == "T":
            elems = []
            while not self._eat("E"):
                elems.append(self.parse_type())
            return "(" + ", ".join(elems) + ")"
        if ch == "B":
            return self.parse_backref(self.parse_type)
        if ch in "CNIMXY":
            self.pos -= 1
            return self.parse_path()
        raise _V0Error(f"unsupported type tag {ch!r}")

    def parse_const(self) -> str:
        ch = self._next()
        if ch == "p":
            return "_"
        if ch in _BASIC_TYPES:
            digits = ""
            neg = self._eat("n")
            while not self._eat("_"):
                digits += self._next()
            try:
                value = int(digits, 16) if digits else 0
            except ValueError:
                raise _V0Error("bad const literal") from None
            return ("-" if neg else "") + str(value)
        if ch == "B":
            return self.parse_backref(self.parse_const)
        raise _V0Error(f"unsupported const tag {ch!r}")

    def parse_backref(self, parse):
        offset = self.parse_base62()
        # Backrefs address positions after the "_R" prefix.
        target = offset + 2
        if target >= self.pos or target < 2:
            raise _V0Error("bad backref")
        saved = self.pos
        self.pos = target
        try:
            return parse()
        finally:
            self.pos = saved


def _decode_punycode(raw: str) -> str:
    if "_" in raw:
        basic, enc = raw.rsplit("_", 1)
        candidate = f"{basic}-{enc}"
    else:
        candidate = f"-{raw}"
    try:
        return candidate.encode("ascii").decode("punycode")
    except (UnicodeError, ValueError):
        raise _V0Error("punycode decode failed") from None


def _demangle_v0(name: str) -> str | None:
    try:
        return _V0Parser(name).demangle()
    except (_V0Error, IndexError, RecursionError):
        return None
