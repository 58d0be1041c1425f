"""Shared fixtures, hypothesis strategies and the per-criterion summary."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import settings, strategies as st

import relobs
from relobs.algebra import GaussianRational, OperatorPoly, ParticleSystem

DATA = Path(relobs.__file__).parent / "data"

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE_RESULTS: dict[str, str] = {}


@pytest.fixture
def data_dir() -> Path:
    return DATA


# -- strategies -------------------------------------------------------

small_fraction = st.fractions(min_value=-5, max_value=5, max_denominator=6)
nonzero_fraction = small_fraction.filter(lambda q: q != 0)
gaussian = st.builds(GaussianRational, small_fraction, small_fraction)


def systems(max_n: int = 3, dims=(1, 2, 3)):
    masses = st.lists(st.fractions(min_value=Fraction(1, 4), max_value=8, max_denominator=4)
                      .filter(lambda m: m > 0), min_size=1, max_size=max_n)
    return st.builds(lambda ms, d: ParticleSystem(tuple(ms), d), masses, st.sampled_from(dims))


@st.composite
def generators(draw, system: ParticleSystem):
    kind = draw(st.sampled_from(("z", "p")))
    j = draw(st.integers(1, system.n))
    a = draw(st.integers(1, system.d))
    ctor = OperatorPoly.position if kind == "z" else OperatorPoly.momentum
    return ctor(system, j, a)


@st.composite
def polys(draw, system: ParticleSystem, max_terms: int = 3, max_degree: int = 2):
    """Random atom-free polynomials: sums of scaled products of canonical operators."""
    out = OperatorPoly.zero(system)
    for _ in range(draw(st.integers(1, max_terms))):
        term = OperatorPoly.const(draw(gaussian), system)
        for _ in range(draw(st.integers(0, max_degree))):
            term = term * draw(generators(system))
        out = out + term
    return out


# -- acceptance summary -----------------------------------------------

def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = next((k for k in report.keywords if k.startswith("AC") and k[2:].isdigit()), None)
    if marker is None:
        return
    prev = ACCEPTANCE_RESULTS.get(marker, "PASS")
    ACCEPTANCE_RESULTS[marker] = "PASS" if (report.passed and prev == "PASS") else "FAIL"


def pytest_configure(config):
    for k in range(1, 10):
        config.addinivalue_line("markers", f"AC{k}: acceptance criterion {k}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k[2:])):
        terminalreporter.write_line(f"{key}: {ACCEPTANCE_RESULTS[key]}")
