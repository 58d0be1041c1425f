"""Centre-of-mass separation by linear point transformations.

A :class:`LinearFrameMap` sends particle positions to ``z'_i = sum_j T_ij z_j`` and
momenta to ``p'_i = sum_j S_ij p_j`` with ``S = (T^-1)^T``, so the canonical
commutators survive.  Exactly one row of ``T`` is the centre of mass; the other
rows sum to zero and are therefore translation invariant.  Operators rewritten in
the new frame use the same index space: ``z[i]`` stands for ``z'_i``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, combinations_with_replacement
from typing import Sequence

from .algebra import (CanonicalIndex, Monomial, OperatorPoly, ParticleSystem, SubstitutionMap,
                      VectorImage, as_fraction, cross, dot, substitute)
from .symmetry import SymmetrySelection, classify

INTERNAL = "internal"
CENTER_OF_MASS = "centerOfMass"


class FrameMapError(ValueError):
    """A proposed frame map violates the linear-frame invariants."""


class CMPositionDependence(ValueError):
    """The operator depends on the centre-of-mass position and cannot be projected."""


def _inverse(matrix):
    """Exact Gauss-Jordan inverse over the rationals."""
    n = len(matrix)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise FrameMapError("T is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv_p = 1 / aug[col][col]
        aug[col] = [x * inv_p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


def _transpose(matrix):
    return tuple(zip(*matrix))


@dataclass(frozen=True)
class LinearFrameMap:
    system: ParticleSystem
    T: tuple
    roles: tuple

    def __post_init__(self):
        n = self.system.n
        T = tuple(tuple(as_fraction(x) for x in row) for row in self.T)
        if len(T) != n or any(len(row) != n for row in T):
            raise FrameMapError(f"T must be {n}x{n}")
        roles = tuple(self.roles)
        if len(roles) != n or any(r not in (INTERNAL, CENTER_OF_MASS) for r in roles):
            raise FrameMapError("roles must list 'internal' or 'centerOfMass' per row")
        if roles.count(CENTER_OF_MASS) != 1:
            raise FrameMapError("exactly one centerOfMass row is required")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "roles", roles)
        inv = _inverse(T)
        object.__setattr__(self, "T_inv", inv)
        object.__setattr__(self, "S", _transpose(inv))
        self._check()

    def _check(self):
        M = self.system.total_mass
        masses = self.system.masses
        for i, (row, role) in enumerate(zip(self.T, self.roles)):
            if role == CENTER_OF_MASS:
                if list(row) != [m / M for m in masses]:
                    raise FrameMapError(f"row {i + 1} must be the mass-weighted centre of mass")
            else:
                if sum(row) != 0:
                    raise FrameMapError(f"internal row {i + 1} must sum to zero")
                if sum(s * m for s, m in zip(self.S[i], masses)) != 0:
                    raise FrameMapError(f"internal momentum {i + 1} is not boost invariant")

    @property
    def cm_index(self) -> int:
        """1-based index of the centre-of-mass row."""
        return self.roles.index(CENTER_OF_MASS) + 1

    @property
    def internal_indices(self) -> list[int]:
        return [i + 1 for i, r in enumerate(self.roles) if r == INTERNAL]

    # -- JSON ---------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "n": self.system.n,
            "masses": [str(m) for m in self.system.masses],
            "T": [[str(x) for x in row] for row in self.T],
            "roles": list(self.roles),
        }

    @classmethod
    def from_json(cls, doc: dict, d: int = 3) -> "LinearFrameMap":
        masses = [as_fraction(str(m)) for m in doc["masses"]]
        if int(doc.get("n", len(masses))) != len(masses):
            raise FrameMapError("'n' does not match the number of masses")
        system = ParticleSystem(tuple(masses), d)
        T = [[as_fraction(str(x)) for x in row] for row in doc["T"]]
        return cls(system, T, tuple(doc["roles"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def jacobi_map(system: ParticleSystem, order: Sequence[int] | None = None) -> LinearFrameMap:
    """Sequential Jacobi vectors: particle k+1 relative to the CM of particles 1..k.

    ``order`` (1-based) changes the sequence in which particles join the cluster.
    """
    n = system.n
    if n < 2:
        raise ValueError("Jacobi coordinates need at least two particles")
    order = list(range(1, n + 1)) if order is None else [int(j) for j in order]
    if sorted(order) != list(range(1, n + 1)):
        raise ValueError(f"order must be a permutation of 1..{n}")
    m = system.masses
    rows = []
    for k in range(1, n):
        cluster = order[:k]
        mk = sum((m[j - 1] for j in cluster), Fraction(0))
        row = [Fraction(0)] * n
        for j in cluster:
            row[j - 1] = -(m[j - 1] / mk)
        row[order[k] - 1] = Fraction(1)
        rows.append(row)
    M = system.total_mass
    rows.append([mj / M for mj in m])
    return LinearFrameMap(system, rows, (INTERNAL,) * (n - 1) + (CENTER_OF_MASS,))


def _linear_substitution(system, pos_matrix, mom_matrix) -> SubstitutionMap:
    """z_j -> sum_i pos[j][i] z_i and p_j -> sum_i mom[j][i] p_i (same map on each axis)."""
    images = {}
    vec = {}
    for j in range(1, system.n + 1):
        prow = pos_matrix[j - 1]
        mrow = mom_matrix[j - 1]
        vec[j] = VectorImage(tuple((i + 1, c) for i, c in enumerate(prow) if c))
        for a in system.axes:
            z = {Monomial(pos=(((i + 1, a), 1),)): c for i, c in enumerate(prow) if c}
            p = {Monomial(mom=(((i + 1, a), 1),)): c for i, c in enumerate(mrow) if c}
            images[CanonicalIndex("z", j, a)] = OperatorPoly(z, system)
            images[CanonicalIndex("p", j, a)] = OperatorPoly(p, system)
    return SubstitutionMap(images, vec)


@dataclass(frozen=True)
class ReducedOperator:
    expression: OperatorPoly
    cm_dependence: str  # none | positionDependent | momentumDependent | both
    frame: LinearFrameMap


def _cm_dependence(op: OperatorPoly, cm: int) -> str:
    pos = any(p == cm for mono in op.terms for (p, _), _ in mono.pos)
    pos = pos or cm in op.atom_support()
    mom = any(p == cm for mono in op.terms for (p, _), _ in mono.mom)
    if pos and mom:
        return "both"
    if pos:
        return "positionDependent"
    if mom:
        return "momentumDependent"
    return "none"


def apply_frame_map(op: OperatorPoly, fmap: LinearFrameMap) -> ReducedOperator:
    """Rewrite ``op`` in the frame coordinates.

    Uses z_j = sum_i (T^-1)_ji z'_i and p_j = sum_i T_ij p'_i.
    """
    mom_matrix = _transpose(fmap.T)  # (S^-1)_ji = T_ij
    smap = _linear_substitution(fmap.system, fmap.T_inv, mom_matrix)
    expr = substitute(op, smap)
    return ReducedOperator(expr, _cm_dependence(expr, fmap.cm_index), fmap)


def to_original(op: OperatorPoly, fmap: LinearFrameMap) -> OperatorPoly:
    """Express a frame-coordinate operator in the original particle variables."""
    smap = _linear_substitution(fmap.system, fmap.T, fmap.S)
    return substitute(op, smap)


def project_cm(reduced: ReducedOperator, rest_frame_momentum: Sequence | None = None) -> OperatorPoly:
    """Replace every P_cm factor by a fixed numeric momentum (default: rest frame)."""
    fmap = reduced.frame
    system = fmap.system
    if reduced.cm_dependence in ("positionDependent", "both"):
        raise CMPositionDependence("operator depends on the centre-of-mass position")
    if rest_frame_momentum is None:
        rest_frame_momentum = [0] * system.d
    q = [as_fraction(x) for x in rest_frame_momentum]
    if len(q) != system.d:
        raise ValueError(f"rest-frame momentum needs {system.d} components")
    cm = fmap.cm_index
    images = {CanonicalIndex("p", cm, a): OperatorPoly.const(q[a - 1], system) for a in system.axes}
    return substitute(reduced.expression, SubstitutionMap(images))


def reduce_hamiltonian(H: OperatorPoly, fmap: LinearFrameMap,
                       rest_frame_momentum: Sequence | None = None) -> OperatorPoly:
    return project_cm(apply_frame_map(H, fmap), rest_frame_momentum)


def internal_vectors(fmap: LinearFrameMap) -> list[list[OperatorPoly]]:
    """Component lists of the frame's internal position vectors z'_i."""
    system = fmap.system
    return [[OperatorPoly.position(system, i, a) for a in system.axes]
            for i in fmap.internal_indices]


def rotational_invariant_basis(system: ParticleSystem, vectors: Sequence,
                               max_degree: int = 2) -> list[OperatorPoly]:
    """Dot products (and, at degree 3, triple products) of the given vectors.

    Every element is checked to be rotation invariant before it is returned.
    """
    if system.d != 3:
        raise ValueError("rotational invariants are generated for d = 3 only")
    if max_degree not in (2, 3):
        raise ValueError("max_degree must be 2 or 3")
    basis = [OperatorPoly(dot(vectors[i], vectors[j]).terms, system)
             for i, j in combinations_with_replacement(range(len(vectors)), 2)]
    if max_degree == 3:
        for i, j, k in combinations(range(len(vectors)), 3):
            triple = dot(vectors[i], cross(vectors[j], vectors[k]))
            basis.append(OperatorPoly(triple.terms, system))
    rot_only = SymmetrySelection(translations=False, rotations=True, boosts=False)
    for element in basis:
        if not classify(element, system, rot_only).is_physical:
            raise AssertionError(f"generated element {element} is not rotation invariant")
    return basis
