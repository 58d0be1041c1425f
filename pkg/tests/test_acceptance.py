"""Acceptance criteria AC1-AC9, each with its tolerance and runtime bound.

Every test carries an ``ACk`` marker; the terminal summary prints one PASS/FAIL
line per criterion.
"""

from __future__ import annotations

import json
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from cli_cases import CASES, DATA, GOLDEN
from exprgen import random_expression
from relobs.algebra import I, OperatorPoly, ParticleSystem, commutator, substitute
from relobs.cli import main
from relobs.expr import format_ast, parse_and_lower, parse_expression
from relobs.reduction import (CENTER_OF_MASS, INTERNAL, LinearFrameMap, jacobi_map,
                              reduce_hamiltonian, to_original)
from relobs.spectral import (GridModel, HarmonicModel, PairPotential, Particle, bo_solve,
                             cm_ladder_scaling, dominant_peak, full_grid_spectrum, normal_modes,
                             reduced_grid_spectrum, remove_acoustic_modes, satellite_spacing,
                             spectral_function)
from relobs.symmetry import (angular_momentum, boost_action, classify,
                             rotation_action, translation_action)

from framegen import random_frame_map

F = Fraction


@contextmanager
def within(seconds: float):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"took {elapsed:.2f} s, limit {seconds} s"


def grid_model(name: str) -> GridModel:
    return GridModel.from_json(json.loads((DATA / name).read_text()))


def harmonic_model(name: str) -> HarmonicModel:
    return HarmonicModel.from_json(json.loads((DATA / name).read_text()))


# -- AC1: physicality truth table -------------------------------------------------

S2 = ParticleSystem((F(1), F(2)), 3)
S4 = ParticleSystem((F(1), F(2), F(3), F(4)), 3)

# (system, expression, translation, rotation, boost)
TRUTH_TABLE = {
    "relative position": (S2, "z[1].x - z[2].x", True, False, True),
    "single momentum": (S2, "p[1].x", True, False, False),
    "relative velocity": (S2, "p[1].x - 1/2*p[2].x", True, False, True),
    "total momentum": (S2, "p[1].x + p[2].x", True, False, False),
    "squared distance": (S2, "dot(z[1]-z[2], z[1]-z[2])", True, True, True),
    "angular momentum z": (S2, "z[1].x*p[1].y - z[1].y*p[1].x + z[2].x*p[2].y - z[2].y*p[2].x",
                           False, False, False),
    "kinetic energy": (S2, "1/2*dot(p[1],p[1]) + 1/4*dot(p[2],p[2])", True, True, False),
    "hamiltonian with pair atom": (S2, "1/2*dot(p[1],p[1]) + 1/4*dot(p[2],p[2]) + normfn(V, z[1]-z[2])",
                                   True, True, False),
    "centre of mass position": (S2, "1/3*z[1].x + 2/3*z[2].x", False, False, True),
    "triple product": (S4, "dot(z[2]-z[1], cross(z[3]-z[1], z[4]-z[1]))", True, True, True),
}

CONCRETE = {
    "translation": lambda s: translation_action(s, [1, F(-2, 3), 5]),
    "boost": lambda s: boost_action(s, [F(1, 2), 3, -1]),
}


@pytest.mark.AC1
def test_ac1_physicality_truth_table():
    with within(1.0):
        for label, (system, text, *expected) in TRUTH_TABLE.items():
            op = parse_and_lower(text, system)
            verdict = classify(op, system)
            got = [verdict.per_generator[f].invariant for f in ("translation", "rotation", "boost")]
            assert got == expected, label
            assert verdict.is_physical == all(expected), label
            # every residual is the re-substituted operator minus the operator
            for family, action in (("translation", translation_action(system)),
                                   ("rotation", rotation_action(system)),
                                   ("boost", boost_action(system))):
                residual = verdict.per_generator[family].residual
                assert residual == substitute(op, action) - op, (label, family)
                assert residual.is_zero() == verdict.per_generator[family].invariant
            # concrete group elements and angular-momentum commutators agree with the verdicts
            for family, make in CONCRETE.items():
                moved = substitute(op, make(system)) - op
                assert moved.is_zero() == verdict.per_generator[family].invariant, (label, family)
            if not op.has_atoms():
                commutes = all(commutator(op, L).is_zero() for L in angular_momentum(system))
                assert commutes == verdict.per_generator["rotation"].invariant, label


# -- AC2: canonical commutators survive random frame maps ---------------------------

@pytest.mark.AC2
def test_ac2_random_frame_maps_preserve_commutators():
    rng = random.Random(20261018)
    with within(5.0):
        for trial in range(20):
            n = 2 + trial % 4
            fmap = random_frame_map(rng, n, d=3)
            s = fmap.system
            z = {(i, a): to_original(OperatorPoly.position(s, i, a), fmap)
                 for i in range(1, n + 1) for a in s.axes}
            p = {(i, a): to_original(OperatorPoly.momentum(s, i, a), fmap)
                 for i in range(1, n + 1) for a in s.axes}
            zero = OperatorPoly.zero(s)
            for ka, zk in z.items():
                for kb, pk in p.items():
                    want = OperatorPoly.const(I, s) if ka == kb else zero
                    assert commutator(zk, pk) == want
            keys = sorted(z)
            for x, ka in enumerate(keys):
                for kb in keys[x + 1:]:
                    assert commutator(z[ka], z[kb]) == zero
                    assert commutator(p[ka], p[kb]) == zero


# -- AC3: two-body harmonic reduction -----------------------------------------------

@pytest.mark.AC3
def test_ac3_symbolic_two_body_harmonic_reduction():
    s = ParticleSystem((F(1), F(3)), 3)  # reduced mass 3/4
    k = F(5, 2)
    with within(30.0):
        H = parse_and_lower("1/2*dot(p[1],p[1]) + 1/6*dot(p[2],p[2])"
                            " + 5/4*dot(z[1]-z[2], z[1]-z[2])", s)
        want = parse_and_lower("2/3*dot(p[1],p[1]) + 5/4*dot(z[1], z[1])", s)
        got = reduce_hamiltonian(H, jacobi_map(s))
        assert got.sorted_terms() == want.sorted_terms()
        assert want == (OperatorPoly.const(F(1, 2) / F(3, 4), s)
                        * sum((OperatorPoly.momentum(s, 1, a) ** 2 for a in s.axes), OperatorPoly.zero(s))
                        + OperatorPoly.const(k / 2, s)
                        * sum((OperatorPoly.position(s, 1, a) ** 2 for a in s.axes), OperatorPoly.zero(s)))
        atom_form = reduce_hamiltonian(parse_and_lower(
            "1/2*dot(p[1],p[1]) + 1/6*dot(p[2],p[2]) + 5/4*normfn(N2, z[1]-z[2])", s), jacobi_map(s))
        assert atom_form == parse_and_lower("2/3*dot(p[1],p[1]) + 5/4*normfn(N2, z[1])", s)


@pytest.mark.AC3
def test_ac3_reduced_grid_harmonic_gaps():
    k, m1, m2 = 1.0, 1.0, 3.0
    model = GridModel((Particle(m1), Particle(m2)), 40.0, 512,
                      (PairPotential((1, 2), "harmonic", k=k),), count=4)
    with within(30.0):
        gaps = reduced_grid_spectrum(model).gaps()[:3]
    omega = np.sqrt(k / (m1 * m2 / (m1 + m2)))
    assert np.allclose(gaps / (omega * np.arange(1, 4)), 1.0, rtol=0.0, atol=1e-3)


# -- AC4: acoustic sum rule ---------------------------------------------------------

@pytest.mark.AC4
def test_ac4_acoustic_sum_rule():
    with within(1.0):
        ring = harmonic_model("ring8.json")
        pinned = harmonic_model("ring8_pinned.json")
        freqs, vecs = normal_modes(ring)
        pinned_freqs, _ = normal_modes(pinned)
        kept, kept_vecs = remove_acoustic_modes(freqs, vecs)
    assert ring.asr_satisfied and not pinned.asr_satisfied
    assert np.count_nonzero(np.abs(freqs) < 1e-10) == 1
    assert np.count_nonzero(np.abs(pinned_freqs) < 1e-10) == 0
    assert len(kept) == 7 and kept_vecs.shape == (8, 7)


# -- AC5: dispersion and ladder collapse ----------------------------------------------

@pytest.mark.AC5
def test_ac5_sector_dispersion():
    model = grid_model("harmonic_pair.json").with_masses([1, 3]).with_box(40.0, 256)
    M = model.total_mass
    with within(120.0):
        e0 = full_grid_spectrum(model, 0, 1).eigenvalues[0]
        for q in (1, 2, 3, 5, 8):
            P = 2 * np.pi * q / model.L
            eq = full_grid_spectrum(model, q, 1).eigenvalues[0]
            assert (eq - e0) == pytest.approx(P * P / (2 * M), rel=1e-6)


@pytest.mark.AC5
def test_ac5_ladder_exponents():
    with within(120.0):
        fit = cm_ladder_scaling(grid_model("harmonic_pair.json"), [10.0, 20.0, 40.0])
    assert fit["cm_slope"] == pytest.approx(-2.0, abs=0.02)
    assert abs(fit["internal_slope"]) < 0.01


# -- AC6: adiabatic accuracy ordering ---------------------------------------------------

@pytest.mark.AC6
def test_ac6_bo_error_decreases_with_mass_ratio():
    model = grid_model("light_heavy_heavy.json")
    with within(300.0):
        errors = [bo_solve(model, ratio).ground_error for ratio in (10, 100, 1000)]
        far = bo_solve(model, 1e4)
    assert errors[0] > errors[1] > errors[2]
    assert far.relative_error < 1e-3


# -- AC7: spectral-function contrast under box doubling ------------------------------------

@pytest.mark.AC7
def test_ac7_spectral_function_contrast():
    small = grid_model("harmonic_pair.json")
    large = small.with_box(2 * small.L, 2 * small.npts)
    with within(120.0):
        reduced = [spectral_function(m, "reduced", "rel-position", eta=0.01, omega_max=3.0)
                   for m in (small, large)]
        unreduced = [spectral_function(m, "unreduced", "particle-position", eta=0.001, omega_max=0.2)
                     for m in (small, large)]
    assert abs(dominant_peak(reduced[1]) - dominant_peak(reduced[0])) < 1e-6
    ratio = satellite_spacing(unreduced[1]) / satellite_spacing(unreduced[0])
    assert ratio == pytest.approx(0.25, abs=0.05)
    for sf in reduced + unreduced:
        assert abs(sf.integral() - sf.total_weight) < 1e-8


# -- AC8: map independence ----------------------------------------------------------------

@pytest.mark.AC8
def test_ac8_three_body_gaps_do_not_depend_on_frame():
    model = grid_model("harmonic_triple.json")
    s = ParticleSystem(tuple(model.masses), 1)
    skewed = LinearFrameMap(s, [[-1, 1, 0], [-1, 0, 1], [F(1, 6), F(1, 3), F(1, 2)]],
                            (INTERNAL, INTERNAL, CENTER_OF_MASS))
    with within(60.0):
        reference = reduced_grid_spectrum(model, frame=jacobi_map(s)).gaps()
        for frame in (jacobi_map(s, (2, 3, 1)), skewed):
            gaps = reduced_grid_spectrum(model, frame=frame).gaps()
            assert np.max(np.abs(gaps - reference)) < 1e-9


# -- AC9: CLI determinism and expression round trip ------------------------------------------

@pytest.mark.AC9
def test_ac9_golden_reports_and_expression_fixpoint(tmp_path):
    rng = random.Random(9)
    with within(10.0):
        for name, argv in sorted(CASES.items()):
            out = tmp_path / f"{name}.json"
            assert main([*argv, "-o", str(out)]) == 0
            assert out.read_bytes() == (GOLDEN / f"{name}.json").read_bytes(), name
        for _ in range(100):
            ast = parse_expression(random_expression(rng))
            printed = format_ast(ast)
            again = parse_expression(printed)
            assert again == ast
            assert format_ast(again) == printed
