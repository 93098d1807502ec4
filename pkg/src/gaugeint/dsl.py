"""Piecewise-function mini-language: parser, printer, evaluators.

Grammar (whitespace insignificant)::

    def        := expr | piecewise
    piecewise  := "piecewise" "{" branch (";" branch)* "}"
    branch     := cond ":" expr
    cond       := chain ("and" chain)*
    chain      := operand relop operand (relop operand)*   # a < x <= b allowed
    operand    := ["-"] NUMBER | "x"
    relop      := "<" | "<=" | ">" | ">=" | "==" | "!="
    expr       := additive
    additive   := multiplicative (("+" | "-") multiplicative)*
    multiplicative := unary (("*" | "/") unary)*
    unary      := "-" unary | power
    power      := atom ["^" unary]                         # right-associative
    atom       := NUMBER | "x" | "pi" | "e"
                | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Numeric literals: decimal digits with optional fraction and optional
exponent (``1``, ``0.5``, ``1e-3``).  Calls: sin cos tan exp log sqrt abs
sign (1-argument), min max (2-argument).  ``log`` is the natural logarithm.

Evaluation is real-valued.  Division by zero, log of a nonpositive value,
sqrt of a negative value, a negative base raised to a non-integral power,
overflow, and falling off the end of a piecewise definition all yield the
``UNDEFINED`` sentinel in the strict scalar evaluator.  The vectorized
evaluator signals those cases with non-finite entries instead, which callers
treat as evaluation failures; unlike the strict evaluator it lets an
intermediate infinity flow onward (IEEE semantics), so an expression whose
badness cancels may still come out finite there.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np


class ParseError(Exception):
    """Syntax error with a 0-based byte position and expected-token set."""

    def __init__(self, position: int, expected: Tuple[str, ...], found: str = ""):
        self.position = position
        self.expected = tuple(expected)
        self.found = found
        expect = " or ".join(expected)
        msg = f"at position {position}: expected {expect}"
        if found:
            msg += f", found {found}"
        super().__init__(msg)


class _UndefinedType:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Undefined"

    def __bool__(self):
        return False


UNDEFINED = _UndefinedType()


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str  # "pi" | "e"


@dataclass(frozen=True)
class Unary:
    op: str  # "-"
    operand: "Node"


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Node", ...]


@dataclass(frozen=True)
class Chain:
    """Comparison chain like ``0 < x <= 1``: operands are Num or Var."""

    operands: Tuple["Node", ...]
    ops: Tuple[str, ...]


@dataclass(frozen=True)
class Cond:
    chains: Tuple[Chain, ...]  # joined by "and"


@dataclass(frozen=True)
class Piecewise:
    branches: Tuple[Tuple[Cond, "Node"], ...]


Node = Union[Num, Var, Const, Unary, Bin, Call, Piecewise]


@dataclass(frozen=True)
class FunctionDef:
    ast: Node


FUNCTIONS = {
    "sin": 1, "cos": 1, "tan": 1, "exp": 1, "log": 1,
    "sqrt": 1, "abs": 1, "sign": 1, "min": 2, "max": 2,
}

_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_PUNCT = ("<=", ">=", "==", "!=", "+", "-", "*", "/", "^",
          "(", ")", "{", "}", ";", ":", ",", "<", ">")


@dataclass(frozen=True)
class _Token:
    kind: str  # NUM | NAME | PUNCT | END
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        m = _NUMBER_RE.match(text, i)
        if m:
            tokens.append(_Token("NUM", m.group(), i))
            i = m.end()
            continue
        m = _NAME_RE.match(text, i)
        if m:
            tokens.append(_Token("NAME", m.group(), i))
            i = m.end()
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(_Token("PUNCT", p, i))
                i += len(p)
                break
        else:
            raise ParseError(i, ("a token",), found=repr(c))
    tokens.append(_Token("END", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.cur
        self.i += 1
        return tok

    def fail(self, *expected: str):
        tok = self.cur
        found = tok.text if tok.kind != "END" else "end of input"
        raise ParseError(tok.pos, expected, found=repr(found))

    def expect(self, text: str) -> _Token:
        if self.cur.kind == "PUNCT" and self.cur.text == text:
            return self.advance()
        self.fail(f"'{text}'")

    def at_punct(self, *texts: str) -> bool:
        return self.cur.kind == "PUNCT" and self.cur.text in texts

    # definition ------------------------------------------------------------

    def parse_def(self) -> Node:
        if self.cur.kind == "NAME" and self.cur.text == "piecewise":
            node = self.parse_piecewise()
        else:
            node = self.parse_expr()
        if self.cur.kind != "END":
            self.fail("end of input")
        return node

    def parse_piecewise(self) -> Piecewise:
        self.advance()  # "piecewise"
        self.expect("{")
        branches = [self.parse_branch()]
        while self.at_punct(";"):
            self.advance()
            branches.append(self.parse_branch())
        self.expect("}")
        return Piecewise(branches=tuple(branches))

    def parse_branch(self) -> Tuple[Cond, Node]:
        cond = self.parse_cond()
        self.expect(":")
        return cond, self.parse_expr()

    def parse_cond(self) -> Cond:
        chains = [self.parse_chain()]
        while self.cur.kind == "NAME" and self.cur.text == "and":
            self.advance()
            chains.append(self.parse_chain())
        return Cond(chains=tuple(chains))

    def parse_chain(self) -> Chain:
        operands = [self.parse_comp_operand()]
        ops = []
        if not self.at_punct("<", "<=", ">", ">=", "==", "!="):
            self.fail("a comparison operator")
        while self.at_punct("<", "<=", ">", ">=", "==", "!="):
            ops.append(self.advance().text)
            operands.append(self.parse_comp_operand())
        return Chain(operands=tuple(operands), ops=tuple(ops))

    def parse_comp_operand(self) -> Node:
        # literal (optionally signed) or the variable; sign folds into the literal
        if self.at_punct("-"):
            self.advance()
            if self.cur.kind != "NUM":
                self.fail("a number")
            return Num(-float(self.advance().text))
        if self.cur.kind == "NUM":
            return Num(float(self.advance().text))
        if self.cur.kind == "NAME" and self.cur.text == "x":
            self.advance()
            return Var()
        self.fail("a number", "'x'")

    # expressions -----------------------------------------------------------

    def parse_expr(self) -> Node:
        node = self.parse_mul()
        while self.at_punct("+", "-"):
            op = self.advance().text
            node = Bin(op, node, self.parse_mul())
        return node

    def parse_mul(self) -> Node:
        node = self.parse_unary()
        while self.at_punct("*", "/"):
            op = self.advance().text
            node = Bin(op, node, self.parse_unary())
        return node

    def parse_unary(self) -> Node:
        if self.at_punct("-"):
            self.advance()
            return Unary("-", self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Node:
        base = self.parse_atom()
        if self.at_punct("^"):
            self.advance()
            return Bin("^", base, self.parse_unary())
        return base

    def parse_atom(self) -> Node:
        tok = self.cur
        if tok.kind == "NUM":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "NAME":
            if tok.text == "x":
                self.advance()
                return Var()
            if tok.text in ("pi", "e"):
                self.advance()
                return Const(tok.text)
            if tok.text in FUNCTIONS:
                self.advance()
                self.expect("(")
                args = [self.parse_expr()]
                while self.at_punct(","):
                    self.advance()
                    args.append(self.parse_expr())
                closing = self.cur
                self.expect(")")
                if len(args) != FUNCTIONS[tok.text]:
                    raise ParseError(
                        closing.pos,
                        (f"{FUNCTIONS[tok.text]} argument(s) to {tok.text}",),
                        found=f"{len(args)}",
                    )
                return Call(tok.text, tuple(args))
            self.fail("a number", "'x'", "'pi'", "'e'", "a function name")
        if self.at_punct("("):
            self.advance()
            node = self.parse_expr()
            self.expect(")")
            return node
        self.fail("a number", "'x'", "'('")


def parse(text: str) -> FunctionDef:
    """Parse a single function definition.  Raises :class:`ParseError`."""
    return FunctionDef(ast=_Parser(text).parse_def())


# ---------------------------------------------------------------------------
# Canonical printer
# ---------------------------------------------------------------------------

# precedence levels: additive 1, multiplicative 2, unary 3, power 4, atom 5
def _level(node: Node) -> int:
    if isinstance(node, Bin):
        return {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}[node.op]
    if isinstance(node, Unary):
        return 3
    return 5


def _render(node: Node, min_level: int = 1) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Unary):
        text = "-" + _render(node.operand, 3)
        return f"({text})" if _level(node) < min_level else text
    if isinstance(node, Bin):
        lvl = _level(node)
        if node.op == "^":
            # left operand must be an atom; right may be a unary chain
            text = _render(node.left, 5) + "^" + _render(node.right, 3)
        else:
            text = (
                _render(node.left, lvl)
                + f" {node.op} "
                + _render(node.right, lvl + 1)
            )
        return f"({text})" if lvl < min_level else text
    if isinstance(node, Call):
        return node.name + "(" + ", ".join(_render(a, 1) for a in node.args) + ")"
    if isinstance(node, Piecewise):
        parts = [
            f"{_render_cond(cond)} : {_render(expr, 1)}" for cond, expr in node.branches
        ]
        return "piecewise{ " + " ; ".join(parts) + " }"
    raise TypeError(f"cannot render {node!r}")


def _render_cond(cond: Cond) -> str:
    chains = []
    for chain in cond.chains:
        bits = [_render_operand(chain.operands[0])]
        for op, operand in zip(chain.ops, chain.operands[1:]):
            bits.append(op)
            bits.append(_render_operand(operand))
        chains.append(" ".join(bits))
    return " and ".join(chains)


def _render_operand(node: Node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "x"
    raise TypeError(f"comparison operand must be a literal or x: {node!r}")


def render(defn: FunctionDef | Node) -> str:
    """Canonical text form; ``parse(render(d))`` reproduces the AST."""
    node = defn.ast if isinstance(defn, FunctionDef) else defn
    return _render(node, 1)


# ---------------------------------------------------------------------------
# Strict scalar evaluation
# ---------------------------------------------------------------------------

_REL = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


def _finite(v: float):
    return v if math.isfinite(v) else UNDEFINED


def _eval_scalar(node: Node, x: float):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Const):
        return math.pi if node.name == "pi" else math.e
    if isinstance(node, Unary):
        v = _eval_scalar(node.operand, x)
        return UNDEFINED if v is UNDEFINED else -v
    if isinstance(node, Bin):
        a = _eval_scalar(node.left, x)
        if a is UNDEFINED:
            return UNDEFINED
        b = _eval_scalar(node.right, x)
        if b is UNDEFINED:
            return UNDEFINED
        if node.op == "+":
            return _finite(a + b)
        if node.op == "-":
            return _finite(a - b)
        if node.op == "*":
            return _finite(a * b)
        if node.op == "/":
            return UNDEFINED if b == 0.0 else _finite(a / b)
        # "^": real-valued power only
        if a < 0.0 and b != math.floor(b):
            return UNDEFINED
        if a == 0.0 and b < 0.0:
            return UNDEFINED
        try:
            return _finite(math.pow(a, b))
        except (OverflowError, ValueError):
            return UNDEFINED
    if isinstance(node, Call):
        args = []
        for arg in node.args:
            v = _eval_scalar(arg, x)
            if v is UNDEFINED:
                return UNDEFINED
            args.append(v)
        try:
            if node.name == "sign":
                a = args[0]
                return float((a > 0) - (a < 0))
            if node.name == "abs":
                return abs(args[0])
            if node.name == "min":
                return min(args)
            if node.name == "max":
                return max(args)
            return _finite(getattr(math, node.name)(*args))
        except (OverflowError, ValueError):
            return UNDEFINED
    if isinstance(node, Piecewise):
        for cond, expr in node.branches:
            if _cond_holds(cond, x):
                return _eval_scalar(expr, x)
        return UNDEFINED
    raise TypeError(f"cannot evaluate {node!r}")


def _cond_holds(cond: Cond, x: float) -> bool:
    for chain in cond.chains:
        vals = [x if isinstance(op, Var) else op.value for op in chain.operands]
        if not all(_REL[op](a, b) for op, a, b in zip(chain.ops, vals, vals[1:])):
            return False
    return True


def evaluate(defn: FunctionDef | Node, x: float):
    """Strict scalar evaluation: returns a float or ``UNDEFINED``."""
    node = defn.ast if isinstance(defn, FunctionDef) else defn
    return _eval_scalar(node, float(x))


# ---------------------------------------------------------------------------
# Vectorized evaluation
# ---------------------------------------------------------------------------

_NP_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp,
    "log": np.log, "sqrt": np.sqrt, "abs": np.abs, "sign": np.sign,
    "min": np.minimum, "max": np.maximum,
}


def _eval_vec(node: Node, xs: np.ndarray):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return xs
    if isinstance(node, Const):
        return math.pi if node.name == "pi" else math.e
    if isinstance(node, Unary):
        return -_eval_vec(node.operand, xs)
    if isinstance(node, Bin):
        a = _eval_vec(node.left, xs)
        b = _eval_vec(node.right, xs)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return np.divide(a, b)
        return np.power(a, b)
    if isinstance(node, Call):
        args = [_eval_vec(a, xs) for a in node.args]
        return _NP_FUNCS[node.name](*args)
    if isinstance(node, Piecewise):
        out = np.full(xs.shape, np.nan)
        remaining = np.ones(xs.shape, dtype=bool)
        for cond, expr in node.branches:
            mask = remaining & _cond_mask(cond, xs)
            if mask.any():
                out[mask] = _eval_vec(expr, xs[mask])
            remaining &= ~mask
        return out
    raise TypeError(f"cannot evaluate {node!r}")


def _cond_mask(cond: Cond, xs: np.ndarray) -> np.ndarray:
    mask = np.ones(xs.shape, dtype=bool)
    for chain in cond.chains:
        vals = [xs if isinstance(op, Var) else op.value for op in chain.operands]
        for op, a, b in zip(chain.ops, vals, vals[1:]):
            mask &= _REL[op](a, b)
    return mask


class CompiledFunction:
    """Callable wrapper around a parsed definition.

    Accepts a scalar or an ndarray and evaluates with numpy throughout, so
    scalar and vector calls share one code path.  Undefined points surface as
    non-finite outputs; strict undefinedness semantics live in
    :func:`evaluate`.
    """

    __slots__ = ("defn", "source")

    def __init__(self, defn: FunctionDef | str):
        if isinstance(defn, str):
            self.source = defn
            self.defn = parse(defn)
        else:
            self.defn = defn
            self.source = render(defn)

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        with np.errstate(all="ignore"):
            out = _eval_vec(self.defn.ast, arr)
        out = np.broadcast_to(np.asarray(out, dtype=float), arr.shape)
        return float(out[0]) if scalar else np.array(out)

    def __repr__(self):
        return f"CompiledFunction({self.source!r})"
