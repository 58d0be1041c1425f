"""Text front-end for operator expressions.

Grammar (whitespace-insensitive)::

    expr   := term (("+" | "-") term)*
    term   := "-" term | factor ("*" factor)*
    factor := base ("^" INT)?
    base   := NUMBER | "i" | vecatom "." AXIS | SYM "." AXIS
            | "dot(" vexpr "," vexpr ")" | "normfn(" IDENT "," vexpr ")" | "(" expr ")"
    vecatom:= ("z" | "p") "[" INT "]"
    vexpr  := "-"? vterm (("+" | "-") vterm)*
    vterm  := (NUMBER "*")? (vecatom | "a" | "cross(" vexpr "," vexpr ")"
                             | "vec(" NUMBER ("," NUMBER)* ")" | "(" vexpr ")")

NUMBER is ``INT``, ``INT/INT`` or a decimal; SYM is one of the formal parameters
``a`` (translation), ``v`` (boost) and ``theta`` (infinitesimal rotation).
Products keep their operand order, so ``p[1].x * z[1].x`` and ``z[1].x * p[1].x``
lower to different operators.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .algebra import (AXIS_NAMES, SYMBOL_NAMES, FormalSymbol, GaussianRational, I,
                      OperatorPoly, ParticleSystem, PotentialAtom, cross, dot, vector)

MAX_INPUT = 64 * 1024


class ExpressionError(Exception):
    """Base class for parse and lowering failures."""


class ParseError(ExpressionError):
    def __init__(self, message: str, line: int, column: int, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(expected))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at line {line}, column {column}{detail}")


class UnknownSymbol(ParseError):
    pass


class ArityError(ParseError):
    pass


class LowerError(ExpressionError):
    pass


# ---------------------------------------------------------------- AST

@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Imag:
    pass


@dataclass(frozen=True)
class Component:
    vec: "VecAtom"
    axis: int


@dataclass(frozen=True)
class Sym:
    name: str
    axis: int


@dataclass(frozen=True)
class Dot:
    left: object
    right: object


@dataclass(frozen=True)
class NormFn:
    name: str
    arg: object


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Mul:
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class VecAtom:
    kind: str
    particle: int


@dataclass(frozen=True)
class VecSym:
    name: str


@dataclass(frozen=True)
class VecConst:
    values: tuple


@dataclass(frozen=True)
class VScale:
    coef: Fraction
    vec: object


@dataclass(frozen=True)
class VNeg:
    vec: object


@dataclass(frozen=True)
class VAdd:
    left: object
    right: object


@dataclass(frozen=True)
class VSub:
    left: object
    right: object


@dataclass(frozen=True)
class Cross:
    left: object
    right: object


# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>\d+\.\d*|\.\d+|\d+(?:/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<punct>[-+*^()\[\].,])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # "number", "ident", "punct", "eof"
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    if len(text.encode("utf-8")) > MAX_INPUT:
        raise ParseError("expression exceeds 64 KiB", 1, 1)
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        for k, ch in enumerate(chunk):
            if ch == "\n":
                line += 1
                line_start = pos + k + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _number(text: str) -> Fraction:
    return Fraction(text)


# ---------------------------------------------------------------- parser

class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message, expected=(), cls=ParseError):
        t = self.tok
        return cls(message, t.line, t.column, expected)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("punct", "ident") and t.text == text

    def take(self, text: str):
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"unexpected {found!r}", (repr(text),))
        self.i += 1

    def take_int(self) -> int:
        t = self.tok
        if t.kind != "number" or not t.text.isdigit():
            raise self.error(f"unexpected {t.text or 'end of input'!r}", ("INT",))
        self.i += 1
        return int(t.text)

    def take_axis(self) -> int:
        t = self.tok
        if t.kind == "ident" and t.text in AXIS_NAMES:
            self.i += 1
            return AXIS_NAMES.index(t.text) + 1
        raise self.error(f"invalid axis {t.text or 'end of input'!r}", ("x", "y", "z"))

    # scalar grammar
    def parse(self):
        node = self.expr()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}", ("'+'", "'-'", "'*'", "end of input"))
        return node

    def expr(self):
        node = self.term()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            right = self.term()
            node = Add(node, right) if op == "+" else Sub(node, right)
        return node

    def term(self):
        if self.at("-"):
            self.i += 1
            return Neg(self.term())
        node = self.factor()
        while self.at("*"):
            self.i += 1
            node = Mul(node, self.factor())
        return node

    def factor(self):
        node = self.base()
        if self.at("^"):
            self.i += 1
            exponent = self.take_int()
            if exponent < 1:
                raise self.error("power exponent must be at least 1")
            node = Pow(node, exponent)
        return node

    def base(self):
        t = self.tok
        if t.kind == "number":
            self.i += 1
            return Num(_number(t.text))
        if self.at("("):
            self.i += 1
            node = self.expr()
            self.take(")")
            return node
        if t.kind == "ident":
            name = t.text
            if name == "i":
                self.i += 1
                return Imag()
            if name in ("z", "p"):
                vec = self.vecatom()
                self.take(".")
                return Component(vec, self.take_axis())
            if name in SYMBOL_NAMES:
                self.i += 1
                self.take(".")
                return Sym(name, self.take_axis())
            if name == "dot":
                self.i += 1
                left, right = self.two_vectors("dot")
                return Dot(left, right)
            if name == "normfn":
                self.i += 1
                self.take("(")
                ident = self.tok
                if ident.kind != "ident":
                    raise self.error("normfn needs a function name", ("IDENT",))
                self.i += 1
                if self.at(")"):
                    raise self.error("normfn expects 2 arguments", cls=ArityError)
                self.take(",")
                arg = self.vexpr()
                if self.at(","):
                    raise self.error("normfn expects 2 arguments", cls=ArityError)
                self.take(")")
                return NormFn(ident.text, arg)
            if name == "cross":
                raise self.error("cross(...) is a vector; use it inside dot(...)")
            raise self.error(f"unknown symbol {name!r}", cls=UnknownSymbol)
        raise self.error(f"unexpected {t.text or 'end of input'!r}",
                         ("NUMBER", "'i'", "'z['", "'p['", "'dot('", "'normfn('", "'('"))

    def vecatom(self) -> VecAtom:
        kind = self.tok.text
        self.i += 1
        self.take("[")
        particle = self.take_int()
        if particle < 1:
            raise self.error("particle indices start at 1")
        self.take("]")
        return VecAtom(kind, particle)

    def two_vectors(self, name):
        self.take("(")
        left = self.vexpr()
        if self.at(")"):
            raise self.error(f"{name} expects 2 arguments", cls=ArityError)
        self.take(",")
        right = self.vexpr()
        if self.at(","):
            raise self.error(f"{name} expects 2 arguments", cls=ArityError)
        self.take(")")
        return left, right

    # vector grammar
    def vexpr(self):
        if self.at("-"):
            self.i += 1
            node = VNeg(self.vterm())
        else:
            node = self.vterm()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            right = self.vterm()
            node = VAdd(node, right) if op == "+" else VSub(node, right)
        return node

    def vterm(self):
        t = self.tok
        if t.kind == "number":
            self.i += 1
            self.take("*")
            return VScale(_number(t.text), self.vinner())
        return self.vinner()

    def vinner(self):
        t = self.tok
        if self.at("("):
            self.i += 1
            node = self.vexpr()
            self.take(")")
            return node
        if t.kind == "ident":
            if t.text in ("z", "p"):
                return self.vecatom()
            if t.text == "a":
                self.i += 1
                return VecSym("a")
            if t.text == "cross":
                self.i += 1
                left, right = self.two_vectors("cross")
                return Cross(left, right)
            if t.text == "vec":
                self.i += 1
                self.take("(")
                values = [self.signed_number()]
                while self.at(","):
                    self.i += 1
                    values.append(self.signed_number())
                self.take(")")
                return VecConst(tuple(values))
            raise self.error(f"unknown symbol {t.text!r}", cls=UnknownSymbol)
        raise self.error(f"unexpected {t.text or 'end of input'!r}",
                         ("'z['", "'p['", "'a'", "'cross('", "'vec('", "'('"))

    def signed_number(self) -> Fraction:
        sign = 1
        if self.at("-"):
            self.i += 1
            sign = -1
        t = self.tok
        if t.kind != "number":
            raise self.error(f"unexpected {t.text or 'end of input'!r}", ("NUMBER",))
        self.i += 1
        return sign * _number(t.text)


def parse_expression(text: str):
    """Parse ``text`` into an AST; raises :class:`ParseError` with position info."""
    return _Parser(text).parse()


# ---------------------------------------------------------------- AST printer

def _fmt_number(q: Fraction) -> str:
    return str(q)


_PREC = {Add: 1, Sub: 1, Neg: 1.5, Mul: 2, Pow: 3}


def _prec(node) -> float:
    return _PREC.get(type(node), 4)


def _wrap(node, min_prec: float) -> str:
    s = format_ast(node)
    if _prec(node) < min_prec:
        return f"({s})"
    return s


def format_ast(node) -> str:
    """Canonical text for an AST; ``parse_expression(format_ast(t)) == t``."""
    if isinstance(node, Num):
        return _fmt_number(node.value)
    if isinstance(node, Imag):
        return "i"
    if isinstance(node, Component):
        return f"{format_vec(node.vec)}.{AXIS_NAMES[node.axis - 1]}"
    if isinstance(node, Sym):
        return f"{node.name}.{AXIS_NAMES[node.axis - 1]}"
    if isinstance(node, Dot):
        return f"dot({format_vec(node.left)}, {format_vec(node.right)})"
    if isinstance(node, NormFn):
        return f"normfn({node.name}, {format_vec(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, 1.5)
    if isinstance(node, Add):
        return f"{_wrap(node.left, 1)} + {_wrap(node.right, 1.5)}"
    if isinstance(node, Sub):
        return f"{_wrap(node.left, 1)} - {_wrap(node.right, 1.5)}"
    if isinstance(node, Mul):
        return f"{_wrap(node.left, 2)}*{_wrap(node.right, 3)}"
    if isinstance(node, Pow):
        return f"{_wrap(node.base, 4)}^{node.exponent}"
    raise TypeError(f"not a scalar node: {node!r}")


_VPREC = {VAdd: 1, VSub: 1, VNeg: 1}


def _vwrap(node, min_prec) -> str:
    s = format_vec(node)
    if _VPREC.get(type(node), 2) < min_prec:
        return f"({s})"
    return s


def format_vec(node) -> str:
    if isinstance(node, VecAtom):
        return f"{node.kind}[{node.particle}]"
    if isinstance(node, VecSym):
        return node.name
    if isinstance(node, VecConst):
        return "vec(" + ", ".join(_fmt_number(v) for v in node.values) + ")"
    if isinstance(node, Cross):
        return f"cross({format_vec(node.left)}, {format_vec(node.right)})"
    if isinstance(node, VScale):
        return f"{_fmt_number(node.coef)}*{_vwrap(node.vec, 2)}"
    if isinstance(node, VNeg):
        return "-" + _vwrap(node.vec, 2)
    if isinstance(node, VAdd):
        return f"{_vwrap(node.left, 1)} + {_vwrap(node.right, 2)}"
    if isinstance(node, VSub):
        return f"{_vwrap(node.left, 1)} - {_vwrap(node.right, 2)}"
    raise TypeError(f"not a vector node: {node!r}")


# ---------------------------------------------------------------- lowering

def lower(node, system: ParticleSystem) -> OperatorPoly:
    """Expand an AST into a canonical :class:`OperatorPoly` on ``system``."""
    out = _lower_scalar(node, system)
    return OperatorPoly(out.terms, system)


def _lower_scalar(node, system) -> OperatorPoly:
    if isinstance(node, Num):
        return OperatorPoly.const(node.value, system)
    if isinstance(node, Imag):
        return OperatorPoly.const(I, system)
    if isinstance(node, Component):
        _check_vec(node.vec, system)
        if node.axis > system.d:
            raise LowerError(f"axis {AXIS_NAMES[node.axis - 1]} not available in d={system.d}")
        ctor = OperatorPoly.position if node.vec.kind == "z" else OperatorPoly.momentum
        return ctor(system, node.vec.particle, node.axis)
    if isinstance(node, Sym):
        if node.axis > system.d:
            raise LowerError(f"axis {AXIS_NAMES[node.axis - 1]} not available in d={system.d}")
        return OperatorPoly.symbol(node.name, node.axis, system)
    if isinstance(node, Dot):
        return OperatorPoly(dot(_lower_vec(node.left, system),
                                _lower_vec(node.right, system)).terms, system)
    if isinstance(node, NormFn):
        coeffs, offset = _linear_form(node.arg, system)
        return OperatorPoly.atom(system, node.name, coeffs, offset)
    if isinstance(node, Neg):
        return -_lower_scalar(node.operand, system)
    if isinstance(node, Add):
        return _lower_scalar(node.left, system) + _lower_scalar(node.right, system)
    if isinstance(node, Sub):
        return _lower_scalar(node.left, system) - _lower_scalar(node.right, system)
    if isinstance(node, Mul):
        return _lower_scalar(node.left, system) * _lower_scalar(node.right, system)
    if isinstance(node, Pow):
        return _lower_scalar(node.base, system) ** node.exponent
    raise LowerError(f"expected a scalar expression, got {type(node).__name__}")


def _check_vec(vec: VecAtom, system):
    if not 1 <= vec.particle <= system.n:
        raise LowerError(f"particle index {vec.particle} outside 1..{system.n}")


def _lower_vec(node, system) -> list:
    if isinstance(node, VecAtom):
        _check_vec(node, system)
        return vector(system, node.kind, node.particle)
    if isinstance(node, VecSym):
        return [OperatorPoly.symbol(node.name, a, system) for a in system.axes]
    if isinstance(node, VecConst):
        if len(node.values) != system.d:
            raise LowerError(f"vec(...) needs {system.d} entries")
        return [OperatorPoly.const(v, system) for v in node.values]
    if isinstance(node, Cross):
        if system.d != 3:
            raise LowerError("cross products need d = 3")
        return cross(_lower_vec(node.left, system), _lower_vec(node.right, system))
    if isinstance(node, VScale):
        return [c * node.coef for c in _lower_vec(node.vec, system)]
    if isinstance(node, VNeg):
        return [-c for c in _lower_vec(node.vec, system)]
    if isinstance(node, VAdd):
        return [a + b for a, b in zip(_lower_vec(node.left, system), _lower_vec(node.right, system))]
    if isinstance(node, VSub):
        return [a - b for a, b in zip(_lower_vec(node.left, system), _lower_vec(node.right, system))]
    raise LowerError(f"expected a vector expression, got {type(node).__name__}")


def _linear_form(node, system, scale=Fraction(1)):
    """Reduce a normfn argument to ({particle: coef}, per-axis offset)."""
    coeffs: dict = {}
    offset = [dict() for _ in system.axes]

    def walk(n, s):
        if isinstance(n, VecAtom):
            if n.kind != "z":
                raise LowerError("normfn argument must combine position vectors only")
            _check_vec(n, system)
            coeffs[n.particle] = coeffs.get(n.particle, 0) + s
        elif isinstance(n, VecSym):
            for a in system.axes:
                key = FormalSymbol(n.name, a)
                offset[a - 1][key] = offset[a - 1].get(key, 0) + s
        elif isinstance(n, VecConst):
            if len(n.values) != system.d:
                raise LowerError(f"vec(...) needs {system.d} entries")
            for a, v in zip(system.axes, n.values):
                offset[a - 1][None] = offset[a - 1].get(None, 0) + s * v
        elif isinstance(n, VScale):
            walk(n.vec, s * n.coef)
        elif isinstance(n, VNeg):
            walk(n.vec, -s)
        elif isinstance(n, VAdd):
            walk(n.left, s)
            walk(n.right, s)
        elif isinstance(n, VSub):
            walk(n.left, s)
            walk(n.right, -s)
        else:
            raise LowerError("normfn argument must be a rational combination of position vectors")

    walk(node, scale)
    return coeffs, offset


def parse_and_lower(text: str, system: ParticleSystem) -> OperatorPoly:
    return lower(parse_expression(text), system)


# ---------------------------------------------------------------- operator printer

def _signed(q: Fraction):
    return ("-" if q < 0 else "+"), abs(q)


def _fmt_linear(terms) -> str:
    """terms: list of (Fraction, text) -> 'z[1] - 1/2*z[2]'."""
    parts = []
    for coef, text in terms:
        sign, mag = _signed(coef)
        body = text if mag == 1 else f"{_fmt_number(mag)}*{text}"
        if not parts:
            parts.append(("-" if sign == "-" else "") + body)
        else:
            parts.append(f" {sign} {body}")
    return "".join(parts) if parts else "vec(0)"


def format_atom(atom: PotentialAtom, d: int = 3) -> str:
    terms = [(c, f"z[{j}]") for j, c in atom.coeffs]
    if atom.offset:
        sym_coefs = set()
        consts = []
        symbolic_ok = True
        for ax, axis_terms in enumerate(atom.offset):
            const = Fraction(0)
            for sym, c in axis_terms:
                if sym is None:
                    const += c
                elif sym.name == "a" and sym.axis == ax + 1:
                    sym_coefs.add(c)
                else:
                    symbolic_ok = False
            consts.append(const)
        n_axes = max(d, len(atom.offset))
        if symbolic_ok and len(sym_coefs) == 1:
            (c,) = sym_coefs
            present = sum(1 for axis_terms in atom.offset
                          if any(s is not None for s, _ in axis_terms))
            if present == n_axes:
                terms.append((c, "a"))
            else:
                symbolic_ok = False
        elif sym_coefs:
            symbolic_ok = False
        if not symbolic_ok:
            raise ValueError(f"atom offset of {atom.name} has no text form")
        if any(consts):
            consts += [Fraction(0)] * (n_axes - len(consts))
            terms.append((Fraction(1), "vec(" + ", ".join(_fmt_number(v) for v in consts) + ")"))
    return f"normfn({atom.name}, {_fmt_linear(terms)})"


def _fmt_factors(mono, d) -> list[str]:
    out = []
    for (p, a), e in mono.pos:
        out.append(f"z[{p}].{AXIS_NAMES[a - 1]}" + (f"^{e}" if e > 1 else ""))
    for atom in mono.atoms:
        out.append(format_atom(atom, d))
    for (p, a), e in mono.mom:
        out.append(f"p[{p}].{AXIS_NAMES[a - 1]}" + (f"^{e}" if e > 1 else ""))
    for sym, e in mono.syms:
        out.append(str(sym) + (f"^{e}" if e > 1 else ""))
    return out


def _fmt_term(mono, coef: GaussianRational, d) -> tuple[str, str]:
    """Return (sign, body) for one term."""
    factors = _fmt_factors(mono, d)
    if not coef.im:
        sign, mag = _signed(coef.re)
        if not factors:
            return sign, _fmt_number(mag)
        if mag == 1:
            return sign, "*".join(factors)
        return sign, "*".join([_fmt_number(mag)] + factors)
    if not coef.re:
        sign, mag = _signed(coef.im)
        lead = "i" if mag == 1 else f"{_fmt_number(mag)}*i"
        return sign, "*".join([lead] + factors)
    isign, imag = _signed(coef.im)
    re_txt = ("-" if coef.re < 0 else "") + _fmt_number(abs(coef.re))
    im_txt = "i" if imag == 1 else f"{_fmt_number(imag)}*i"
    body = f"({re_txt} {isign} {im_txt})"
    return "+", "*".join([body] + factors)


def format_poly(op: OperatorPoly) -> str:
    """Render an operator in the parseable grammar above (``0`` when empty)."""
    if op.is_zero():
        return "0"
    d = op.system.d if op.system is not None else 3
    parts = []
    for mono, coef in op.sorted_terms():
        sign, body = _fmt_term(mono, coef, d)
        if not parts:
            parts.append(("-" if sign == "-" else "") + body)
        else:
            parts.append(f" {sign} {body}")
    return "".join(parts)
