"""Exact normal-ordered polynomials in canonical position and momentum operators.

Operators are sums of monomials ``z-factors * potential atoms * p-factors * symbols``
with Gaussian-rational coefficients.  The canonical commutator is
``[z[j].a, p[k].b] = i delta_jk delta_ab`` (hbar = 1).  Potential atoms stand for an
unspecified scalar function of the Euclidean norm of a linear combination of
position vectors; they commute with every position factor but cannot be moved
past a momentum of a particle they depend on.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb, factorial
from typing import Iterable, Iterator, Mapping, NamedTuple, Union

AXIS_NAMES = "xyz"
SYMBOL_NAMES = ("a", "v", "theta")

Rational = Union[int, Fraction]


class AlgebraError(Exception):
    """Base class for failures of the operator algebra."""


class NonPolynomialCommutator(AlgebraError):
    """A momentum factor would have to cross a potential atom that depends on it."""


class AmbientMismatch(AlgebraError):
    """Operands live on different particle systems."""


class SubstitutionError(AlgebraError):
    """A substitution map is not applicable (mixes kinds or cannot rewrite atoms)."""


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        raise TypeError("floats are not exact; pass a Fraction or a 'p/q' string")
    return Fraction(value)


_ZERO = Fraction(0)


class GaussianRational:
    """Exact complex rational ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re: Rational = 0, im: Rational = 0):
        self.re = as_fraction(re)
        self.im = as_fraction(im)

    @classmethod
    def _raw(cls, re: Fraction, im: Fraction) -> "GaussianRational":
        # both parts already Fractions; skips conversion on hot paths
        out = object.__new__(cls)
        out.re = re
        out.im = im
        return out

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, complex):
            raise TypeError("complex floats are not exact")
        return cls(value)

    @staticmethod
    def _operand(value):
        if isinstance(value, (GaussianRational, int, Fraction)):
            return GaussianRational.coerce(value)
        return None

    def __add__(self, other):
        other = GaussianRational._operand(other)
        if other is None:
            return NotImplemented
        return GaussianRational._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = GaussianRational._operand(other)
        if other is None:
            return NotImplemented
        return GaussianRational._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = GaussianRational._operand(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = GaussianRational._operand(other)
        if other is None:
            return NotImplemented
        if not self.im and not other.im:
            return GaussianRational._raw(self.re * other.re, _ZERO)
        return GaussianRational._raw(self.re * other.re - self.im * other.im,
                                     self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = GaussianRational.coerce(other)
        den = other.re * other.re + other.im * other.im
        if den == 0:
            raise ZeroDivisionError("division by zero")
        num = self * other.conjugate()
        return GaussianRational(num.re / den, num.im / den)

    def __neg__(self):
        return GaussianRational._raw(-self.re, -self.im)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*i"
        return f"({self.re} + {self.im}*i)"


I = GaussianRational(0, 1)
_UNIT = GaussianRational(1)

# (-i)^k for k mod 4
_MINUS_I_POWERS = (GaussianRational(1), GaussianRational(0, -1),
                   GaussianRational(-1), GaussianRational(0, 1))


class CanonicalIndex(NamedTuple):
    kind: str  # "z" or "p"
    particle: int
    axis: int

    def __str__(self):
        return f"{self.kind}[{self.particle}].{AXIS_NAMES[self.axis - 1]}"


class FormalSymbol(NamedTuple):
    name: str  # "a" (translation), "v" (boost) or "theta" (infinitesimal rotation)
    axis: int

    def __str__(self):
        return f"{self.name}.{AXIS_NAMES[self.axis - 1]}"


@dataclass(frozen=True)
class ParticleSystem:
    """N particles with exact rational masses in ``d`` spatial dimensions."""

    masses: tuple
    d: int = 3

    def __post_init__(self):
        masses = tuple(as_fraction(m) for m in self.masses)
        if not masses:
            raise ValueError("a particle system needs at least one particle")
        if any(m <= 0 for m in masses):
            raise ValueError("masses must be positive")
        if self.d not in (1, 2, 3):
            raise ValueError("spatial dimension must be 1, 2 or 3")
        object.__setattr__(self, "masses", masses)

    @property
    def n(self) -> int:
        return len(self.masses)

    @property
    def total_mass(self) -> Fraction:
        return sum(self.masses, Fraction(0))

    def mass(self, particle: int) -> Fraction:
        return self.masses[particle - 1]

    @property
    def axes(self) -> range:
        return range(1, self.d + 1)

    def check_index(self, particle: int, axis: int | None = None):
        if not 1 <= particle <= self.n:
            raise IndexError(f"particle index {particle} outside 1..{self.n}")
        if axis is not None and not 1 <= axis <= self.d:
            raise IndexError(f"axis {axis} outside 1..{self.d}")


# Offsets of atom arguments: per axis, a sorted tuple of (symbol-or-None, coefficient).
Offset = tuple


def _offset_key(item):
    sym, _ = item
    return ("",) if sym is None else (sym.name, sym.axis)


def _clean_offset(per_axis: Iterable[Mapping]) -> Offset:
    out = []
    for terms in per_axis:
        out.append(tuple(sorted(((s, c) for s, c in terms.items() if c), key=_offset_key)))
    if all(not t for t in out):
        return ()
    return tuple(out)


@dataclass(frozen=True)
class PotentialAtom:
    """``name(|sum_j c_j z_j + offset|)`` for an unspecified scalar function ``name``.

    The argument is stored with its leading nonzero coefficient positive; the sign
    flip is free because the function depends only on the norm.
    """

    name: str
    coeffs: tuple  # sorted ((particle, Fraction), ...), nonzero entries only
    offset: Offset = ()

    @classmethod
    def make(cls, name: str, coeffs: Mapping[int, Rational], offset=None) -> "PotentialAtom":
        items = sorted((int(j), as_fraction(c)) for j, c in coeffs.items() if c)
        off = _clean_offset(offset) if offset else ()
        lead = items[0][1] if items else _first_offset_coef(off)
        if lead is not None and lead < 0:
            items = [(j, -c) for j, c in items]
            off = tuple(tuple((s, -c) for s, c in axis_terms) for axis_terms in off)
        return cls(name, tuple(items), off)

    @property
    def support(self) -> frozenset:
        return frozenset(j for j, _ in self.coeffs)

    def sort_key(self):
        return (self.name, tuple((j, c) for j, c in self.coeffs),
                tuple(tuple((_offset_key(t), t[1]) for t in ax) for ax in self.offset))


def _first_offset_coef(off):
    for axis_terms in off:
        for _, c in axis_terms:
            return c
    return None


def _theta_degree(syms) -> int:
    return sum(e for s, e in syms if s.name == "theta")


@dataclass(frozen=True, eq=False)
class Monomial:
    pos: tuple = ()    # ((particle, axis), exponent) sorted
    atoms: tuple = ()  # PotentialAtom multiset, sorted
    mom: tuple = ()    # ((particle, axis), exponent) sorted
    syms: tuple = ()   # (FormalSymbol, exponent) sorted

    def __post_init__(self):
        object.__setattr__(self, "_key", (self.pos, self.atoms, self.mom, self.syms))
        object.__setattr__(self, "_hash", hash(self._key))

    def __eq__(self, other):
        if not isinstance(other, Monomial):
            return NotImplemented
        return self is other or (self._hash == other._hash and self._key == other._key)

    def __hash__(self):
        return self._hash

    def degree(self) -> int:
        return (sum(e for _, e in self.pos) + sum(e for _, e in self.mom)
                + len(self.atoms) + sum(e for _, e in self.syms))

    def sort_key(self):
        return (self.degree(), len(self.atoms), self.pos, self.mom,
                tuple(a.sort_key() for a in self.atoms),
                tuple(((s.name, s.axis), e) for s, e in self.syms))

    def particles(self, kind: str) -> set:
        facs = self.pos if kind == "z" else self.mom
        return {p for (p, _), _ in facs}


ONE = Monomial()


def _merge(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    counts = Counter(dict(a))
    for k, e in b:
        counts[k] += e
    return tuple(sorted((k, e) for k, e in counts.items() if e))


def _merge_syms(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    counts = Counter(dict(a))
    for k, e in b:
        counts[k] += e
    return tuple(sorted(counts.items()))


def _sorted_atoms(atoms) -> tuple:
    return tuple(sorted(atoms, key=PotentialAtom.sort_key))


def _mul_monomials(a: Monomial, b: Monomial) -> Iterator[tuple[Monomial, GaussianRational]]:
    syms = _merge_syms(a.syms, b.syms)
    if _theta_degree(syms) >= 2:
        return
    atoms = _sorted_atoms(a.atoms + b.atoms) if b.atoms else a.atoms
    if a.mom and b.atoms:
        moving = {p for (p, _), _ in a.mom}
        for atom in b.atoms:
            if moving & atom.support:
                raise NonPolynomialCommutator(
                    f"momentum of particle(s) {sorted(moving & atom.support)} must pass "
                    f"potential atom {atom.name}")
    if not a.mom or not b.pos:
        yield Monomial(_merge(a.pos, b.pos), atoms, _merge(a.mom, b.mom), syms), _UNIT
        return
    a_mom = dict(a.mom)
    b_pos = dict(b.pos)
    shared = [q for q in a_mom if q in b_pos]
    if not shared:
        yield Monomial(_merge(a.pos, b.pos), atoms, _merge(a.mom, b.mom), syms), _UNIT
        return
    # p^n z^m = sum_k C(n,k) C(m,k) k! (-i)^k z^(m-k) p^(n-k), independently per degree of freedom
    choices = []
    for q in shared:
        n, m = a_mom[q], b_pos[q]
        choices.append([(k, comb(n, k) * comb(m, k) * factorial(k)) for k in range(min(n, m) + 1)])
    for choice in product(*choices):
        coef = 1
        ksum = 0
        zpart = dict(b_pos)
        ppart = dict(a_mom)
        for q, (k, c) in zip(shared, choice):
            coef *= c
            ksum += k
            zpart[q] -= k
            ppart[q] -= k
        zpart = tuple(sorted((q, e) for q, e in zpart.items() if e))
        ppart = tuple(sorted((q, e) for q, e in ppart.items() if e))
        yield (Monomial(_merge(a.pos, zpart), atoms, _merge(ppart, b.mom), syms),
               _MINUS_I_POWERS[ksum % 4] * coef)


def _combine_systems(a, b):
    if a is None:
        return b
    if b is None or a == b:
        return a
    raise AmbientMismatch("operators belong to different particle systems")


class OperatorPoly:
    """Immutable canonical operator polynomial.

    ``terms`` maps :class:`Monomial` to a nonzero :class:`GaussianRational`.  The
    optional ``system`` records the ambient :class:`ParticleSystem`; constants
    carry ``None`` and adopt the system of whatever they are combined with.
    """

    __slots__ = ("terms", "system", "_hash")

    def __init__(self, terms: Mapping[Monomial, GaussianRational] | None = None, system=None):
        clean = {}
        if terms:
            for mono, coef in terms.items():
                if type(coef) is not GaussianRational:
                    coef = GaussianRational.coerce(coef)
                if coef.re or coef.im:
                    clean[mono] = coef
        self.terms = clean
        self.system = system
        self._hash = None

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, system=None) -> "OperatorPoly":
        return cls({}, system)

    @classmethod
    def const(cls, value, system=None) -> "OperatorPoly":
        return cls({ONE: GaussianRational.coerce(value)}, system)

    @classmethod
    def position(cls, system: ParticleSystem, particle: int, axis: int) -> "OperatorPoly":
        system.check_index(particle, axis)
        return cls({Monomial(pos=(((particle, axis), 1),)): GaussianRational(1)}, system)

    @classmethod
    def momentum(cls, system: ParticleSystem, particle: int, axis: int) -> "OperatorPoly":
        system.check_index(particle, axis)
        return cls({Monomial(mom=(((particle, axis), 1),)): GaussianRational(1)}, system)

    @classmethod
    def canonical(cls, system: ParticleSystem, index: CanonicalIndex) -> "OperatorPoly":
        ctor = cls.position if index.kind == "z" else cls.momentum
        return ctor(system, index.particle, index.axis)

    @classmethod
    def symbol(cls, name: str, axis: int, system=None) -> "OperatorPoly":
        if name not in SYMBOL_NAMES:
            raise ValueError(f"unknown formal symbol {name!r}")
        return cls({Monomial(syms=((FormalSymbol(name, axis), 1),)): GaussianRational(1)}, system)

    @classmethod
    def atom(cls, system, name: str, coeffs: Mapping[int, Rational], offset=None) -> "OperatorPoly":
        if system is not None:
            for j in coeffs:
                system.check_index(j)
        atom = PotentialAtom.make(name, coeffs, offset)
        return cls({Monomial(atoms=(atom,)): GaussianRational(1)}, system)

    # -- arithmetic ---------------------------------------------------
    @staticmethod
    def _lift(value, system=None) -> "OperatorPoly":
        if isinstance(value, OperatorPoly):
            return value
        return OperatorPoly.const(value, system)

    def __add__(self, other):
        other = OperatorPoly._lift(other)
        system = _combine_systems(self.system, other.system)
        terms = dict(self.terms)
        for mono, coef in other.terms.items():
            terms[mono] = terms[mono] + coef if mono in terms else coef
        return OperatorPoly(terms, system)

    __radd__ = __add__

    def __neg__(self):
        return OperatorPoly({m: -c for m, c in self.terms.items()}, self.system)

    def __sub__(self, other):
        return self + (-OperatorPoly._lift(other))

    def __rsub__(self, other):
        return OperatorPoly._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, OperatorPoly):
            coef = GaussianRational.coerce(other)
            return OperatorPoly({m: c * coef for m, c in self.terms.items()}, self.system)
        system = _combine_systems(self.system, other.system)
        out: dict = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                cab = ca * cb
                for mono, c in _mul_monomials(ma, mb):
                    c = cab if c is _UNIT else c * cab
                    if mono in out:
                        out[mono] = out[mono] + c
                    else:
                        out[mono] = c
        return OperatorPoly(out, system)

    def __rmul__(self, other):
        # scalars commute with everything
        return self * other

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = OperatorPoly.const(1, self.system)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- queries ------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, OperatorPoly):
            return self.terms == other.terms
        try:
            return self.terms == OperatorPoly.const(other).terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda mc: mc[0].sort_key())

    def has_atoms(self) -> bool:
        return any(m.atoms for m in self.terms)

    def has_symbols(self) -> bool:
        return any(m.syms for m in self.terms)

    def indices(self) -> set:
        """All canonical indices appearing as explicit factors."""
        out = set()
        for mono in self.terms:
            out.update(CanonicalIndex("z", p, a) for (p, a), _ in mono.pos)
            out.update(CanonicalIndex("p", p, a) for (p, a), _ in mono.mom)
        return out

    def atom_support(self) -> set:
        out = set()
        for mono in self.terms:
            for atom in mono.atoms:
                out |= atom.support
        return out

    def scalar_value(self) -> GaussianRational:
        """Coefficient of the identity monomial."""
        return self.terms.get(ONE, GaussianRational(0))

    def __repr__(self):
        from .expr import format_poly
        return f"OperatorPoly({format_poly(self)!r})"

    def __str__(self):
        from .expr import format_poly
        return format_poly(self)


def add(a: OperatorPoly, b: OperatorPoly) -> OperatorPoly:
    return a + b


def mul(a: OperatorPoly, b: OperatorPoly) -> OperatorPoly:
    return a * b


def commutator(a: OperatorPoly, b: OperatorPoly) -> OperatorPoly:
    return a * b - b * a


def equals_zero(op: OperatorPoly) -> bool:
    return op.is_zero()


@dataclass(frozen=True)
class VectorImage:
    """Image of a position *vector* z_j: ``sum_i coeffs[i] z_i + offset``."""

    coeffs: tuple  # ((particle, Fraction), ...)
    offset: Offset = ()


@dataclass(frozen=True)
class SubstitutionMap:
    """Kind-preserving affine rewrite of canonical operators.

    ``images`` sends a :class:`CanonicalIndex` to an :class:`OperatorPoly`; missing
    indices map to themselves.  Atom arguments are rewritten through
    ``vector_images`` (position vectors), left alone when ``norm_preserving`` is set
    (rotations) or when no position is touched at all.
    """

    images: Mapping
    vector_images: Mapping | None = None
    norm_preserving: bool = False
    target: ParticleSystem | None = None

    def __post_init__(self):
        for idx, img in self.images.items():
            for mono in img.terms:
                if mono.atoms:
                    raise SubstitutionError(f"image of {idx} contains a potential atom")
                if idx.kind == "z" and mono.mom:
                    raise SubstitutionError(f"image of {idx} contains momentum factors")
                if idx.kind == "p" and mono.pos:
                    raise SubstitutionError(f"image of {idx} contains position factors")

    def touches_positions(self) -> bool:
        return any(idx.kind == "z" for idx in self.images)


def _rewrite_atom(atom: PotentialAtom, smap: SubstitutionMap, d: int) -> PotentialAtom:
    if smap.vector_images is None:
        if smap.norm_preserving or not smap.touches_positions():
            return atom
        raise SubstitutionError(f"substitution cannot rewrite potential atom {atom.name}")
    coeffs: Counter = Counter()
    naxes = max(d, len(atom.offset))
    offset = [Counter() for _ in range(naxes)]
    for ax, terms in enumerate(atom.offset):
        for sym, c in terms:
            offset[ax][sym] += c
    for j, c in atom.coeffs:
        image = smap.vector_images.get(j)
        if image is None:
            coeffs[j] += c
            continue
        for i, t in image.coeffs:
            coeffs[i] += c * t
        for ax, terms in enumerate(image.offset):
            for sym, t in terms:
                offset[ax][sym] += c * t
    return PotentialAtom.make(atom.name, dict(coeffs), offset)


def substitute(op: OperatorPoly, smap: SubstitutionMap) -> OperatorPoly:
    """Rewrite ``op`` term by term through ``smap`` and re-collect."""
    system = smap.target if smap.target is not None else op.system
    d = system.d if system is not None else 3
    cache: dict = {}

    def image(idx: CanonicalIndex) -> OperatorPoly:
        img = smap.images.get(idx)
        if img is None:
            ctor = OperatorPoly.position if idx.kind == "z" else OperatorPoly.momentum
            if system is None:
                raise SubstitutionError("operator has no ambient particle system")
            return ctor(system, idx.particle, idx.axis)
        return img

    def power(idx: CanonicalIndex, e: int) -> OperatorPoly:
        key = (idx, e)
        if key not in cache:
            cache[key] = image(idx) ** e
        return cache[key]

    out = OperatorPoly.zero(system)
    for mono, coef in op.terms.items():
        term = OperatorPoly.const(coef, system)
        for (p, a), e in mono.pos:
            term = term * power(CanonicalIndex("z", p, a), e)
        if mono.atoms:
            atoms = _sorted_atoms(_rewrite_atom(at, smap, d) for at in mono.atoms)
            term = term * OperatorPoly({Monomial(atoms=atoms): GaussianRational(1)}, system)
        for (p, a), e in mono.mom:
            term = term * power(CanonicalIndex("p", p, a), e)
        if mono.syms:
            term = term * OperatorPoly({Monomial(syms=mono.syms): GaussianRational(1)}, system)
        out = out + term
    return OperatorPoly(out.terms, system)


def vector(system: ParticleSystem, kind: str, particle: int) -> list:
    """Components of z[j] or p[j] as a list of operators."""
    ctor = OperatorPoly.position if kind == "z" else OperatorPoly.momentum
    return [ctor(system, particle, a) for a in system.axes]


def dot(u, v) -> OperatorPoly:
    """Component sum ``u_x v_x + ...`` with operand order preserved."""
    out = OperatorPoly.zero()
    for a, b in zip(u, v, strict=True):
        out = out + a * b
    return out


def cross(u, v) -> list:
    if len(u) != 3 or len(v) != 3:
        raise ValueError("cross product needs three-dimensional vectors")
    return [u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0]]
