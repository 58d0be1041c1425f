import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from relobs.algebra import I, OperatorPoly, ParticleSystem, commutator, substitute
from relobs.expr import parse_and_lower
from relobs.reduction import (CENTER_OF_MASS, INTERNAL, CMPositionDependence, FrameMapError,
                              LinearFrameMap, apply_frame_map, internal_vectors, jacobi_map,
                              project_cm, reduce_hamiltonian, rotational_invariant_basis,
                              to_original)
from relobs.symmetry import SymmetrySelection, boost_action, classify, translation_action

from framegen import random_frame_map

F = Fraction
NO_ROT = SymmetrySelection(translations=True, rotations=False, boosts=True)


def op(text, s):
    return parse_and_lower(text, s)


def test_jacobi_equal_masses_two_body():
    fmap = jacobi_map(ParticleSystem((1, 1), 3))
    assert fmap.T == ((F(-1), F(1)), (F(1, 2), F(1, 2)))
    assert fmap.roles == (INTERNAL, CENTER_OF_MASS)


def test_jacobi_internal_momentum_row():
    fmap = jacobi_map(ParticleSystem((1, 3), 3))
    assert fmap.S[0] == (F(-3, 4), F(1, 4))


def test_jacobi_three_body_rows_sum_to_zero():
    fmap = jacobi_map(ParticleSystem((1, 1, 1), 3))
    assert all(sum(fmap.T[i]) == 0 for i in range(2))


def test_jacobi_order_permutes_cluster():
    s = ParticleSystem((1, 2, 3), 1)
    fmap = jacobi_map(s, (2, 3, 1))
    assert fmap.T[0] == (F(0), F(-1), F(1))
    assert fmap.T[1] == (F(1), F(-2, 5), F(-3, 5))
    with pytest.raises(ValueError):
        jacobi_map(s, (1, 1, 2))


def test_relative_position_maps_to_internal():
    s = ParticleSystem((1, 1), 3)
    red = apply_frame_map(op("z[1].x - z[2].x", s), jacobi_map(s))
    assert red.expression == -op("z[1].x", s)
    assert red.cm_dependence == "none"


def test_kinetic_energy_splits():
    s = ParticleSystem((2, 3), 1)
    red = apply_frame_map(op("1/4*p[1].x^2 + 1/6*p[2].x^2", s), jacobi_map(s))
    mu = F(6, 5)
    assert red.expression == op("1/10*p[2].x^2", s) + op("p[1].x^2", s) * (1 / (2 * mu))
    assert red.cm_dependence == "momentumDependent"
    assert project_cm(red) == op("p[1].x^2", s) * (1 / (2 * mu))
    q = F(3)
    assert project_cm(red, [q]) == op("p[1].x^2", s) * (1 / (2 * mu)) + q * q / 10


def test_cm_position_maps_to_last_row():
    s = ParticleSystem((1, 2, 3), 3)
    red = apply_frame_map(op("1/6*z[1].x + 1/3*z[2].x + 1/2*z[3].x", s), jacobi_map(s))
    assert red.expression == op("z[3].x", s)
    assert red.cm_dependence == "positionDependent"
    with pytest.raises(CMPositionDependence):
        project_cm(red)


def test_two_body_harmonic_reduction():
    s = ParticleSystem((1, 3), 3)
    H = op("1/2*dot(p[1],p[1]) + 1/6*dot(p[2],p[2]) + 5/2*normfn(N2, z[1]-z[2])", s)
    got = reduce_hamiltonian(H, jacobi_map(s))
    assert got == op("2/3*dot(p[1],p[1]) + 5/2*normfn(N2, z[1])", s)


def test_free_particle_reduces_to_nothing():
    s = ParticleSystem((F(5, 2),), 3)
    fmap = LinearFrameMap(s, [[1]], (CENTER_OF_MASS,))
    assert reduce_hamiltonian(op("1/5*dot(p[1],p[1])", s), fmap).is_zero()


def test_three_body_with_atoms_is_physical_after_reduction():
    s = ParticleSystem((1, 2, 3), 3)
    H = op("1/2*dot(p[1],p[1]) + 1/4*dot(p[2],p[2]) + 1/6*dot(p[3],p[3])"
           " + normfn(V, z[1]-z[2]) + normfn(V, z[2]-z[3]) + normfn(W, z[1]-z[3])", s)
    fmap = jacobi_map(s)
    Hp = reduce_hamiltonian(H, fmap)
    assert Hp.has_atoms()
    assert 3 not in {j for j in Hp.atom_support()}
    assert classify(to_original(Hp, fmap), s, NO_ROT).is_physical


def test_frame_map_rejects_invalid_rows():
    s = ParticleSystem((1, 1), 1)
    with pytest.raises(FrameMapError):
        LinearFrameMap(s, [[1, 0], [F(1, 2), F(1, 2)]], (INTERNAL, CENTER_OF_MASS))
    with pytest.raises(FrameMapError):
        LinearFrameMap(s, [[-1, 1], [1, 0]], (INTERNAL, CENTER_OF_MASS))
    with pytest.raises(FrameMapError):
        LinearFrameMap(s, [[-1, 1], [F(1, 2), F(1, 2)]], (INTERNAL, INTERNAL))
    with pytest.raises(FrameMapError):
        LinearFrameMap(ParticleSystem((1, 1, 1), 1), [[-1, 1, 0], [-2, 2, 0], [F(1, 3)] * 3],
                       (INTERNAL, INTERNAL, CENTER_OF_MASS))


def test_frame_map_json_round_trip():
    fmap = random_frame_map(random.Random(3), 4)
    doc = json.loads(fmap.dumps())
    assert "S" not in doc
    back = LinearFrameMap.from_json(doc, 3)
    assert back.T == fmap.T and back.S == fmap.S and back.roles == fmap.roles


def test_invariant_basis_counts():
    s = ParticleSystem((1, 1, 1), 3)
    two = internal_vectors(jacobi_map(s))
    assert len(rotational_invariant_basis(s, two, 2)) == 3
    assert len(rotational_invariant_basis(s, two, 3)) == 3
    s4 = ParticleSystem((1, 1, 1, 1), 3)
    three = internal_vectors(jacobi_map(s4))
    basis = rotational_invariant_basis(s4, three, 3)
    assert len(basis) == 6 + 1
    with pytest.raises(ValueError):
        rotational_invariant_basis(ParticleSystem((1, 1), 2), two, 2)
    with pytest.raises(ValueError):
        rotational_invariant_basis(s, two, 4)


# -- properties over random frame maps -------------------------------------

seeds = st.integers(0, 10_000)


def _primed(fmap, kind, i, a):
    s = fmap.system
    ctor = OperatorPoly.position if kind == "z" else OperatorPoly.momentum
    return to_original(ctor(s, i, a), fmap)


@given(seeds, st.integers(2, 4))
def test_commutators_preserved(seed, n):
    fmap = random_frame_map(random.Random(seed), n, d=2)
    for i in range(1, n + 1):
        for k in range(1, n + 1):
            for a in (1, 2):
                c = commutator(_primed(fmap, "z", i, a), _primed(fmap, "p", k, 1))
                assert c == OperatorPoly.const(I if (i, a) == (k, 1) else 0)


@given(seeds, st.integers(2, 5))
def test_boost_and_translation_decoupling(seed, n):
    fmap = random_frame_map(random.Random(seed), n, d=1)
    s = fmap.system
    B, T = boost_action(s), translation_action(s)
    v = OperatorPoly.symbol("v", 1, s)
    a = OperatorPoly.symbol("a", 1, s)
    for i in range(1, n + 1):
        p_i, z_i = _primed(fmap, "p", i, 1), _primed(fmap, "z", i, 1)
        if i == fmap.cm_index:
            assert substitute(p_i, B) == p_i + s.total_mass * v
            assert substitute(z_i, T) == z_i + a
        else:
            assert substitute(p_i, B) == p_i
            assert substitute(z_i, T) == z_i


@given(seeds, st.integers(2, 4))
def test_reduced_hamiltonian_is_physical(seed, n):
    fmap = random_frame_map(random.Random(seed), n, d=1)
    s = fmap.system
    H = OperatorPoly.zero(s)
    for j in range(1, n + 1):
        H = H + OperatorPoly.momentum(s, j, 1) ** 2 * (1 / (2 * s.mass(j)))
    for j in range(1, n):
        H = H + OperatorPoly.atom(s, "V", {j: 1, j + 1: -1})
    Hp = reduce_hamiltonian(H, fmap)
    assert classify(to_original(Hp, fmap), s, SymmetrySelection(rotations=False)).is_physical


@given(seeds, st.integers(2, 4))
def test_internal_operators_survive_round_trip(seed, n):
    fmap = random_frame_map(random.Random(seed), n, d=1)
    s = fmap.system
    internal = fmap.internal_indices
    X = OperatorPoly.zero(s)
    for k, i in enumerate(internal):
        X = X + OperatorPoly.position(s, i, 1) * OperatorPoly.momentum(s, i, 1) * (k + 1)
    red = apply_frame_map(to_original(X, fmap), fmap)
    assert red.expression == X
    assert red.cm_dependence == "none"
    assert project_cm(red) == X
