"""Galilei-group actions as substitutions and the physicality classifier.

An observable is physical when it is unchanged by every selected symmetry family
(translations, rotations) and by Galilean boosts.  Translations and boosts are
exact substitutions with formal parameters ``a`` and ``v``; rotations are taken to
first order in the nilpotent parameter ``theta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .algebra import (CanonicalIndex, FormalSymbol, OperatorPoly, ParticleSystem,
                      SubstitutionMap, VectorImage, as_fraction, commutator, substitute)

__all__ = [
    "ParticleSystem", "SymmetrySelection", "GeneratorResult", "PhysicalityVerdict",
    "InconsistentRotationCheck", "translation_action", "boost_action", "rotation_action",
    "angular_momentum", "is_invariant", "classify",
]


class InconsistentRotationCheck(AssertionError):
    """Theta substitution and angular-momentum commutators disagree."""


@dataclass(frozen=True)
class SymmetrySelection:
    translations: bool = True
    rotations: bool = True
    boosts: bool = True

    def validate(self, system: ParticleSystem):
        if not (self.translations or self.rotations or self.boosts):
            raise ValueError("select at least one symmetry family")
        if self.rotations and system.d < 2:
            raise ValueError("rotations need d >= 2")

    def families(self) -> list[str]:
        out = []
        if self.translations:
            out.append("translation")
        if self.rotations:
            out.append("rotation")
        if self.boosts:
            out.append("boost")
        return out


@dataclass(frozen=True)
class GeneratorResult:
    invariant: bool
    residual: OperatorPoly


@dataclass(frozen=True)
class PhysicalityVerdict:
    per_generator: dict = field(default_factory=dict)

    @property
    def is_physical(self) -> bool:
        return all(r.invariant for r in self.per_generator.values())


def _parameter(name: str, axis: int, system, value):
    if value is None:
        return OperatorPoly.symbol(name, axis, system)
    return OperatorPoly.const(value, system)


def translation_action(system: ParticleSystem, shift: Sequence | None = None) -> SubstitutionMap:
    """z[j] -> z[j] + a for every particle; momenta untouched.

    ``shift`` replaces the formal parameter by a concrete rational vector.
    """
    if shift is not None:
        shift = [as_fraction(s) for s in shift]
        if len(shift) != system.d:
            raise ValueError(f"shift needs {system.d} components")
    images = {}
    for j in range(1, system.n + 1):
        for a in system.axes:
            images[CanonicalIndex("z", j, a)] = (
                OperatorPoly.position(system, j, a)
                + _parameter("a", a, system, None if shift is None else shift[a - 1]))
    if shift is None:
        offset = tuple(((FormalSymbol("a", a), Fraction(1)),) for a in system.axes)
    else:
        offset = tuple(((None, s),) if s else () for s in shift)
    vec = {j: VectorImage(((j, Fraction(1)),), offset) for j in range(1, system.n + 1)}
    return SubstitutionMap(images, vec)


def boost_action(system: ParticleSystem, velocity: Sequence | None = None) -> SubstitutionMap:
    """p[j] -> p[j] + m_j v at the time origin; positions untouched."""
    if velocity is not None:
        velocity = [as_fraction(s) for s in velocity]
    images = {}
    for j in range(1, system.n + 1):
        m = system.mass(j)
        for a in system.axes:
            v = _parameter("v", a, system, None if velocity is None else velocity[a - 1])
            images[CanonicalIndex("p", j, a)] = OperatorPoly.momentum(system, j, a) + v * m
    return SubstitutionMap(images)


def _theta_cross(system, theta, comps):
    """First-order rotation increment theta x w for one vector's components."""
    if system.d == 3:
        tx, ty, tz = theta
        x, y, z = comps
        return [ty * z - tz * y, tz * x - tx * z, tx * y - ty * x]
    (tz,) = theta
    x, y = comps
    return [-(tz * y), tz * x]


def rotation_action(system: ParticleSystem) -> SubstitutionMap:
    """w -> w + theta x w for every z[j] and p[j], to first order in theta.

    In two dimensions only the in-plane generator theta_z exists.
    """
    if system.d == 1:
        raise ValueError("no rotations in one dimension")
    if system.d == 3:
        theta = [OperatorPoly.symbol("theta", a, system) for a in (1, 2, 3)]
    else:
        theta = [OperatorPoly.symbol("theta", 3, system)]
    images = {}
    for j in range(1, system.n + 1):
        for kind, ctor in (("z", OperatorPoly.position), ("p", OperatorPoly.momentum)):
            comps = [ctor(system, j, a) for a in system.axes]
            inc = _theta_cross(system, theta, comps)
            for a, base, extra in zip(system.axes, comps, inc):
                images[CanonicalIndex(kind, j, a)] = base + extra
    return SubstitutionMap(images, norm_preserving=True)


def angular_momentum(system: ParticleSystem) -> list[OperatorPoly]:
    """Total L = sum_j z[j] x p[j] (three components, d = 3 only)."""
    if system.d != 3:
        raise ValueError("angular momentum vector needs d = 3")
    comps = [OperatorPoly.zero(system) for _ in range(3)]
    for j in range(1, system.n + 1):
        z = [OperatorPoly.position(system, j, a) for a in (1, 2, 3)]
        p = [OperatorPoly.momentum(system, j, a) for a in (1, 2, 3)]
        comps[0] = comps[0] + z[1] * p[2] - z[2] * p[1]
        comps[1] = comps[1] + z[2] * p[0] - z[0] * p[2]
        comps[2] = comps[2] + z[0] * p[1] - z[1] * p[0]
    return comps


def is_invariant(op: OperatorPoly, action: SubstitutionMap) -> tuple[bool, OperatorPoly]:
    """Return (invariant?, residual) with residual = action(op) - op."""
    residual = substitute(op, action) - op
    return residual.is_zero(), residual


def _action_for(family: str, system):
    if family == "translation":
        return translation_action(system)
    if family == "rotation":
        return rotation_action(system)
    return boost_action(system)


def classify(op: OperatorPoly, system: ParticleSystem,
             selection: SymmetrySelection = SymmetrySelection()) -> PhysicalityVerdict:
    """Decide membership of ``op`` in the set of physical observables."""
    selection.validate(system)
    results = {}
    for family in selection.families():
        ok, residual = is_invariant(op, _action_for(family, system))
        if family == "rotation" and system.d == 3 and not op.has_atoms():
            by_commutator = all(commutator(op, L).is_zero() for L in angular_momentum(system))
            if by_commutator != ok:
                raise InconsistentRotationCheck(
                    "theta substitution and [O, L] disagree on rotation invariance")
        results[family] = GeneratorResult(ok, residual)
    return PhysicalityVerdict(results)
