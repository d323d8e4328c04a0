"""Independent constant-expression oracle.

A brute-force interpreter over explicit expression trees, written before and
apart from the engine's folding code.  Trees are rendered to IR text for the
implementation under test; the oracle itself never touches IR.

Semantics: two's-complement integers of a fixed bit width per node; division
by zero, signed-division overflow, and over-wide shifts are undefined and
evaluate to None.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

WIDTHS = (8, 16, 32, 64)

BIN_OPS = ("add", "sub", "mul", "and", "or", "xor", "shl", "lshr", "ashr", "udiv", "sdiv", "urem", "srem")
CAST_OPS = ("trunc", "zext", "sext")
CMP_PREDS = ("eq", "ne", "ugt", "uge", "ult", "ule", "sgt", "sge", "slt", "sle")


@dataclass
class Leaf:
    value: int
    bits: int


@dataclass
class BinOp:
    op: str
    lhs: object
    rhs: object
    bits: int


@dataclass
class Cast:
    op: str
    child: object
    from_bits: int
    bits: int


@dataclass
class Cmp:
    pred: str
    lhs: object
    rhs: object
    operand_bits: int
    bits: int = 1


def _wrap(v: int, bits: int) -> int:
    return v % (1 << bits)


def _signed(v: int, bits: int) -> int:
    v = _wrap(v, bits)
    if v >= (1 << (bits - 1)):
        v -= 1 << bits
    return v


def evaluate(node) -> int | None:
    """Evaluate a tree to its unsigned canonical value, or None on UB."""
    if isinstance(node, Leaf):
        return _wrap(node.value, node.bits)
    if isinstance(node, Cast):
        inner = evaluate(node.child)
        if inner is None:
            return None
        if node.op == "trunc":
            return _wrap(inner, node.bits)
        if node.op == "zext":
            return _wrap(inner, node.from_bits)
        if node.op == "sext":
            return _wrap(_signed(inner, node.from_bits), node.bits)
        raise ValueError(node.op)
    if isinstance(node, Cmp):
        a = evaluate(node.lhs)
        b = evaluate(node.rhs)
        if a is None or b is None:
            return None
        w = node.operand_bits
        ua, ub = _wrap(a, w), _wrap(b, w)
        sa, sb = _signed(a, w), _signed(b, w)
        result = {
            "eq": ua == ub,
            "ne": ua != ub,
            "ugt": ua > ub,
            "uge": ua >= ub,
            "ult": ua < ub,
            "ule": ua <= ub,
            "sgt": sa > sb,
            "sge": sa >= sb,
            "slt": sa < sb,
            "sle": sa <= sb,
        }[node.pred]
        return 1 if result else 0
    if isinstance(node, BinOp):
        a = evaluate(node.lhs)
        b = evaluate(node.rhs)
        if a is None or b is None:
            return None
        w = node.bits
        ua, ub = _wrap(a, w), _wrap(b, w)
        sa, sb = _signed(a, w), _signed(b, w)
        op = node.op
        if op == "add":
            return _wrap(ua + ub, w)
        if op == "sub":
            return _wrap(ua - ub, w)
        if op == "mul":
            return _wrap(ua * ub, w)
        if op == "and":
            return ua & ub
        if op == "or":
            return ua | ub
        if op == "xor":
            return ua ^ ub
        if op == "udiv":
            if ub == 0:
                return None
            return ua // ub
        if op == "urem":
            if ub == 0:
                return None
            return ua % ub
        if op == "sdiv":
            if sb == 0 or (sa == -(1 << (w - 1)) and sb == -1):
                return None
            quotient = abs(sa) // abs(sb)
            if (sa < 0) != (sb < 0):
                quotient = -quotient
            return _wrap(quotient, w)
        if op == "srem":
            if sb == 0 or (sa == -(1 << (w - 1)) and sb == -1):
                return None
            quotient = abs(sa) // abs(sb)
            if (sa < 0) != (sb < 0):
                quotient = -quotient
            return _wrap(sa - quotient * sb, w)
        if op == "shl":
            if ub >= w:
                return None
            return _wrap(ua << ub, w)
        if op == "lshr":
            if ub >= w:
                return None
            return ua >> ub
        if op == "ashr":
            if ub >= w:
                return None
            return _wrap(sa >> ub, w)
        raise ValueError(op)
    raise TypeError(node)


# ---------------------------------------------------------------------------
# Random tree generation and IR rendering
# ---------------------------------------------------------------------------


def random_tree(rng: random.Random, depth: int, bits: int):
    if depth <= 0 or rng.random() < 0.20:
        return Leaf(_random_literal(rng, bits), bits)
    choice = rng.random()
    if choice < 0.62:
        op = rng.choice(BIN_OPS)
        # Bias shift amounts toward legality so not everything is UB.
        rhs = (
            Leaf(rng.randrange(0, bits + 3), bits)
            if op in ("shl", "lshr", "ashr") and rng.random() < 0.8
            else random_tree(rng, depth - 1, bits)
        )
        return BinOp(op, random_tree(rng, depth - 1, bits), rhs, bits)
    if choice < 0.90:
        wider = [w for w in WIDTHS if w > bits]
        narrower = [w for w in WIDTHS if w < bits]
        if wider and (not narrower or rng.random() < 0.5):
            op = "trunc"
            from_bits = rng.choice(wider)
        else:
            op = rng.choice(("zext", "sext"))
            from_bits = rng.choice(narrower)
        return Cast(op, random_tree(rng, depth - 1, from_bits), from_bits, bits)
    if bits == 1:
        return Leaf(rng.randrange(0, 2), 1)
    w = rng.choice(WIDTHS)
    cmp_node = Cmp(rng.choice(CMP_PREDS), random_tree(rng, depth - 1, w), random_tree(rng, depth - 1, w), w)
    # Fit the 1-bit comparison result into the requested width.
    return Cast("zext", cmp_node, 1, bits)


def _random_literal(rng: random.Random, bits: int) -> int:
    pick = rng.random()
    if pick < 0.25:
        return rng.choice([0, 1, -1, (1 << (bits - 1)) - 1, -(1 << (bits - 1)), (1 << bits) - 1])
    if pick < 0.6:
        return rng.randrange(0, 1 << min(bits, 16))
    return rng.randrange(-(1 << (bits - 1)), 1 << (bits - 1))


def render_ir(tree, function_name: str = "expr") -> tuple[str, int]:
    """Render a tree as one IR function returning the root value."""
    lines: list[str] = []
    counter = [0]

    def emit(node) -> str:
        if isinstance(node, Leaf):
            return str(_signed(node.value, node.bits))
        name = f"%v{counter[0]}"
        counter[0] += 1
        if isinstance(node, BinOp):
            a = emit(node.lhs)
            b = emit(node.rhs)
            lines.append(f"  {name} = {node.op} i{node.bits} {a}, {b}")
        elif isinstance(node, Cast):
            inner = emit(node.child)
            lines.append(f"  {name} = {node.op} i{node.from_bits} {inner} to i{node.bits}")
        elif isinstance(node, Cmp):
            a = emit(node.lhs)
            b = emit(node.rhs)
            lines.append(f"  {name} = icmp {node.pred} i{node.operand_bits} {a}, {b}")
        else:
            raise TypeError(node)
        return name

    root_bits = tree.bits
    root = emit(tree)
    if not lines:
        # Root is a bare literal; pipe it through a no-op add.
        lines.append(f"  %v0 = add i{root_bits} {root}, 0")
        root = "%v0"
    body = "\n".join(lines)
    text = f"define i{root_bits} @{function_name}() {{\nentry:\n{body}\n  ret i{root_bits} {root}\n}}\n"
    return text, root_bits


def tree_size(node) -> int:
    if isinstance(node, Leaf):
        return 1
    if isinstance(node, Cast):
        return 1 + tree_size(node.child)
    return 1 + tree_size(node.lhs) + tree_size(node.rhs)
