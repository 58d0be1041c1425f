from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from relobs.algebra import (I, AmbientMismatch, CanonicalIndex, GaussianRational,
                            NonPolynomialCommutator, OperatorPoly, ParticleSystem,
                            SubstitutionError, SubstitutionMap, add, commutator, cross, dot,
                            equals_zero, mul, substitute, vector)
from relobs.reduction import jacobi_map, apply_frame_map
from relobs.symmetry import boost_action, rotation_action, translation_action

from conftest import polys, systems

S3 = ParticleSystem((1, 1, 1), 3)


def z(j, a, s=S3):
    return OperatorPoly.position(s, j, a)


def p(j, a, s=S3):
    return OperatorPoly.momentum(s, j, a)


def test_additive_identity_and_inverse():
    assert add(z(1, 1), OperatorPoly.zero(S3)) == z(1, 1)
    assert add(z(1, 1), z(1, 1) * -1).is_zero()


def test_symmetrised_product_normal_orders():
    got = z(1, 1) * p(1, 1) + p(1, 1) * z(1, 1)
    assert got == 2 * (z(1, 1) * p(1, 1)) - I


def test_single_ccr_application():
    assert mul(p(1, 1), z(1, 1)) == z(1, 1) * p(1, 1) - I


def test_disjoint_particles_commute():
    assert mul(p(1, 1), z(2, 1)) == z(2, 1) * p(1, 1)


def test_momentum_past_square():
    assert p(1, 1) * z(1, 1) ** 2 == z(1, 1) ** 2 * p(1, 1) - 2 * I * z(1, 1)


def test_commutator_examples():
    assert commutator(z(1, 1), p(1, 1)) == OperatorPoly.const(I)
    assert commutator(z(1, 1), p(2, 2)).is_zero()
    assert commutator(z(1, 1) ** 2, p(1, 1)) == 2 * I * z(1, 1)
    assert equals_zero(commutator(z(1, 1), p(1, 1)) - I)


def test_equals_zero_examples():
    assert equals_zero(OperatorPoly.zero())
    assert equals_zero(z(1, 1) - z(1, 1))


def test_high_power_reordering_matches_iterated_ccr():
    # p^3 z^2 by repeated single swaps
    lhs = p(1, 1) ** 3 * z(1, 1) ** 2
    acc = z(1, 1) ** 2 * p(1, 1) ** 3 - 6 * I * z(1, 1) * p(1, 1) ** 2 - 6 * p(1, 1)
    assert lhs == acc


def test_momentum_crossing_atom_is_rejected():
    V = OperatorPoly.atom(S3, "V", {1: 1, 2: -1})
    with pytest.raises(NonPolynomialCommutator):
        p(1, 1) * V
    # momentum of an uninvolved particle passes freely
    assert p(3, 1) * V == V * p(3, 1)
    # atoms sit to the left of momenta, so V * p needs no reordering
    assert (V * p(1, 1)).terms


def test_atom_sign_normalisation():
    a = OperatorPoly.atom(S3, "V", {1: 1, 2: -1})
    b = OperatorPoly.atom(S3, "V", {1: -1, 2: 1})
    c = OperatorPoly.atom(S3, "V", {1: 2, 2: -2})
    assert a == b
    assert a != c


def test_ambient_mismatch():
    other = ParticleSystem((1, 2), 3)
    with pytest.raises(AmbientMismatch):
        z(1, 1) + OperatorPoly.position(other, 1, 1)


def test_index_out_of_range():
    with pytest.raises(IndexError):
        OperatorPoly.position(S3, 4, 1)
    with pytest.raises(IndexError):
        OperatorPoly.momentum(ParticleSystem((1,), 2), 1, 3)


def test_kind_mixing_substitution_rejected():
    with pytest.raises(SubstitutionError):
        SubstitutionMap({CanonicalIndex("z", 1, 1): p(1, 1)})


def test_substitution_examples():
    shifted = substitute(z(1, 1) - z(2, 1), translation_action(S3))
    assert shifted == z(1, 1) - z(2, 1)
    s = ParticleSystem((Fraction(3, 2), 1), 3)
    boosted = substitute(OperatorPoly.momentum(s, 1, 1), boost_action(s))
    assert boosted == OperatorPoly.momentum(s, 1, 1) + Fraction(3, 2) * OperatorPoly.symbol("v", 1, s)
    rotated = substitute(z(1, 1), rotation_action(S3))
    th = lambda a: OperatorPoly.symbol("theta", a, S3)  # noqa: E731
    assert rotated == z(1, 1) + th(2) * z(1, 3) - th(3) * z(1, 2)


def test_atom_arguments_follow_translation():
    V = OperatorPoly.atom(S3, "V", {1: 1})
    out = substitute(V, translation_action(S3))
    assert out != V
    assert str(out) == "normfn(V, z[1] + a)"
    pair = OperatorPoly.atom(S3, "V", {1: 1, 2: -1})
    assert substitute(pair, translation_action(S3)) == pair


def test_cross_of_vector_with_itself_vanishes():
    zz = cross(vector(S3, "z", 1), vector(S3, "z", 1))
    assert all(c.is_zero() for c in zz)


def test_dot_expansion():
    got = dot(vector(S3, "z", 1), vector(S3, "p", 1))
    assert got == sum((z(1, a) * p(1, a) for a in (1, 2, 3)), OperatorPoly.zero(S3))


def test_gaussian_rational_arithmetic():
    x = GaussianRational(Fraction(1, 2), 3)
    assert x * x.conjugate() == GaussianRational(Fraction(37, 4))
    assert I * I == -1
    assert (x / x) == 1


# -- properties ---------------------------------------------------------

@st.composite
def system_and_three(draw):
    s = draw(systems(max_n=3))
    return s, draw(polys(s)), draw(polys(s)), draw(polys(s))


@given(system_and_three())
def test_distributivity(data):
    _, A, B, C = data
    assert A * (B + C) == A * B + A * C
    assert (B + C) * A == B * A + C * A


@given(system_and_three())
def test_associativity(data):
    _, A, B, C = data
    assert (A * B) * C == A * (B * C)


@given(system_and_three())
def test_commutator_jacobi_identity(data):
    _, A, B, C = data
    total = (commutator(A, commutator(B, C)) + commutator(B, commutator(C, A))
             + commutator(C, commutator(A, B)))
    assert total.is_zero()


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_ccr_soundness(n):
    s = ParticleSystem(tuple(range(1, n + 1)), 3)
    for j in range(1, n + 1):
        for k in range(1, n + 1):
            for a in (1, 2, 3):
                for b in (1, 2, 3):
                    c = commutator(OperatorPoly.position(s, j, a), OperatorPoly.momentum(s, k, b))
                    expected = I if (j, a) == (k, b) else 0
                    assert c == OperatorPoly.const(expected)
                    assert commutator(OperatorPoly.position(s, j, a),
                                      OperatorPoly.position(s, k, b)).is_zero()
                    assert commutator(OperatorPoly.momentum(s, j, a),
                                      OperatorPoly.momentum(s, k, b)).is_zero()


def _actions(s):
    acts = [translation_action(s), boost_action(s)]
    if s.d >= 2:
        acts.append(rotation_action(s))
    if s.n >= 2:
        fmap = jacobi_map(s)
        acts.append(SubstitutionMap({}))  # identity
        acts.append(("frame", fmap))
    return acts


@given(system_and_three(), st.integers(0, 4))
def test_substitution_is_homomorphism(data, which):
    s, A, B, _ = data
    acts = _actions(s)
    act = acts[which % len(acts)]
    if isinstance(act, tuple):
        f = lambda X: apply_frame_map(X, act[1]).expression  # noqa: E731
    else:
        f = lambda X: substitute(X, act)  # noqa: E731
    assert f(A * B) == f(A) * f(B)
    assert f(A + B) == f(A) + f(B)


@given(system_and_three())
def test_theta_nilpotency(data):
    s, A, B, _ = data
    if s.d < 2:
        return
    rot = rotation_action(s)
    out = substitute(A * B, rot) * substitute(A, rot)
    for mono in out.terms:
        assert sum(e for sym, e in mono.syms if sym.name == "theta") <= 1


@given(system_and_three())
def test_canonical_form_has_no_zero_coefficients(data):
    _, A, B, _ = data
    prod = A * B - B * A
    assert all(c for c in prod.terms.values())
    for mono in prod.terms:
        assert list(mono.pos) == sorted(mono.pos)
        assert list(mono.mom) == sorted(mono.mom)
        assert all(e >= 1 for _, e in mono.pos + mono.mom)
