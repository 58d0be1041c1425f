"""Broadened transition-weight densities from exact eigenstates.

``A(w) = sum_n |<n|X|0>|^2 g(w - (E_n - E_0))`` with a normalised Gaussian ``g`` of
width ``eta``.  Only poles at or below ``omega_max`` enter, and the frequency grid
extends ten widths past the outermost poles so the discrete integral of ``A``
reproduces the summed weights.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ..errors import ProbeError, UsageError
from .bo import bo_solve, heavy_pair_frame
from ..reduction import jacobi_map
from .grids import (DENSE_LIMIT, Axis, _minimum_image, internal_problem, kinetic_symbol,
                    lowest_eigenpairs, model_system, sector_hamiltonian, separation_vector)
from .models import GridModel, SpectralFunction

VARIANTS = ("unreduced", "reduced", "bo")
PROBES = ("rel-position", "particle-position")
GRID_PER_ETA = 5
TAIL_WIDTHS = 10.0


def probe_pair(model: GridModel) -> tuple[int, int]:
    """Particles whose separation the relative-position probe measures."""
    heavy = model.role_indices("heavy")
    if model.n == 3 and len(heavy) == 2:
        return heavy[0], heavy[1]
    return 1, 2


def _check_probe(variant: str, probe: str, model: GridModel):
    if variant not in VARIANTS:
        raise UsageError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")
    if probe not in PROBES:
        raise ProbeError(f"unknown probe {probe!r}; choose from {', '.join(PROBES)}")
    if probe == "particle-position" and variant != "unreduced":
        raise ProbeError("a single-particle position does not exist once the centre of mass is removed")
    if variant == "unreduced" and model.n != 2:
        raise UsageError("the unreduced variant is assembled for two-particle models only")


# ---------------------------------------------------------------- pole sets

def _reduced_poles(model: GridModel):
    prob = internal_problem(model)
    D = separation_vector(jacobi_map(model_system(model)), *probe_pair(model))
    ys = np.meshgrid(*[ax.points for ax in prob.axes], indexing="ij")
    X = sum(c * y for c, y in zip(D, ys)).ravel()
    size = int(np.prod([ax.n for ax in prob.axes]))
    count = size if size <= DENSE_LIMIT else model.count
    vals, vecs = prob.eigenpairs(model.kinetic, count, model.tol, with_vectors=True)
    amps = vecs.T @ (X * vecs[:, 0])
    return vals - vals[0], np.abs(amps) ** 2


def _bo_poles(model: GridModel):
    res = bo_solve(model, count=None)
    s = res.s_grid
    # nuclear eigenvectors on the same separation grid
    g_s = internal_problem(model, heavy_pair_frame(model)).G[0, 0]
    axis = Axis(*res.metadata["sGrid"])
    t = kinetic_symbol(np.array([[g_s]]), [axis], model.kinetic)
    vals, vecs = lowest_eigenpairs(t, res.surface, len(s), model.tol, with_vectors=True)
    amps = vecs.T @ (s * vecs[:, 0])
    return vals - vals[0], np.abs(amps) ** 2


def position_transform(model: GridModel, f: np.ndarray) -> np.ndarray:
    """``F(theta_q) = N^-1 sum_m exp(-i theta_q m) f(m)`` for every sector ``q`` (fft order)."""
    return np.fft.fft(f) / model.npts


def sawtooth(model: GridModel) -> np.ndarray:
    """Zero-mean position of one particle on the periodic box, in box coordinates."""
    N = model.npts
    return (np.arange(N) - 0.5 * (N - 1)) * model.h


def _unreduced_poles(model: GridModel, probe: str, omega_max: float):
    N = model.npts
    e0, v0 = scipy.linalg.eigh(sector_hamiltonian(model, 0))
    E0, phi0 = e0[0], v0[:, 0]
    r = np.arange(N)
    poles, weights = [], []
    if probe == "rel-position":
        x = _minimum_image(r * model.h, model.L)
        amps = v0.conj().T @ (x * phi0)
        keep = e0 - E0 <= omega_max
        return e0[keep] - E0, np.abs(amps[keep]) ** 2
    F = position_transform(model, sawtooth(model))
    for q in range(-N // 2, N // 2):
        if q == 0:
            vals, vecs = e0, v0
        else:
            vals, vecs = scipy.linalg.eigh(sector_hamiltonian(model, q))
        keep = vals - E0 <= omega_max
        if not np.any(keep):
            continue
        theta = 2.0 * np.pi * q / N
        overlap = vecs[:, keep].conj().T @ (np.exp(1j * theta * r) * phi0)
        poles.append(vals[keep] - E0)
        weights.append(np.abs(F[q % N] * overlap) ** 2)
    return np.concatenate(poles), np.concatenate(weights)


# ---------------------------------------------------------------- density

def _default_omega_max(model: GridModel, variant: str) -> float:
    if variant == "bo":
        levels = bo_solve(model).nuclear_levels
    else:
        levels = internal_problem(model).eigenpairs(model.kinetic, model.count, model.tol)[0]
    return float(levels[-1] - levels[0])


def broadened(poles, weights, eta: float, omega_max: float) -> tuple[np.ndarray, np.ndarray]:
    lo = min(0.0, float(np.min(poles))) - TAIL_WIDTHS * eta
    hi = omega_max + TAIL_WIDTHS * eta
    d = eta / GRID_PER_ETA
    omega = lo + d * np.arange(int(np.ceil((hi - lo) / d)) + 1)
    A = np.zeros_like(omega)
    norm = 1.0 / (np.sqrt(2.0 * np.pi) * eta)
    for w0, wt in zip(poles, weights):
        if wt == 0.0:
            continue
        A += wt * norm * np.exp(-0.5 * ((omega - w0) / eta) ** 2)
    return omega, A


def spectral_function(model: GridModel, variant: str = "reduced", probe: str = "rel-position",
                      eta: float | None = None, omega_max: float | None = None) -> SpectralFunction:
    """Lehmann density of ``probe`` from the ground state of the chosen description.

    ``unreduced`` uses every total-momentum sector of the two-body box, ``reduced``
    the internal Hamiltonian, ``bo`` the adiabatic nuclear levels of a
    one-light/two-heavy model (probe: heavy separation).
    """
    _check_probe(variant, probe, model)
    if omega_max is None:
        omega_max = _default_omega_max(model, variant)
    if not omega_max > 0:
        raise UsageError("omega_max must be positive")
    if eta is None:
        eta = 0.01 * omega_max
    if not eta > 0:
        raise UsageError("broadening eta must be positive")
    if variant == "unreduced":
        poles, weights = _unreduced_poles(model, probe, omega_max)
    elif variant == "reduced":
        poles, weights = _reduced_poles(model)
    else:
        poles, weights = _bo_poles(model)
    keep = poles <= omega_max
    poles, weights = poles[keep], weights[keep]
    order = np.lexsort((weights, poles))
    poles, weights = poles[order], weights[order]
    omega, A = broadened(poles, weights, eta, omega_max)
    meta = {"L": model.L, "Npts": model.npts, "omegaMax": float(omega_max),
            "kinetic": model.kinetic, "poleCount": int(len(poles))}
    return SpectralFunction(omega, A, float(eta), probe, variant, poles, weights, meta)


def peaks(sf: SpectralFunction, rel_height: float = 1e-3) -> list[tuple[float, float]]:
    """Local maxima as (position, height), refined by a parabola through log A."""
    A = sf.values
    top = float(np.max(A)) if A.size else 0.0
    out = []
    for i in range(1, len(A) - 1):
        if A[i] > A[i - 1] and A[i] >= A[i + 1] and A[i] > rel_height * top:
            l0, l1, l2 = np.log(A[i - 1]), np.log(A[i]), np.log(A[i + 1])
            denom = l0 - 2 * l1 + l2
            shift = 0.5 * (l0 - l2) / denom if denom < 0 else 0.0
            out.append((float(sf.omega[i] + shift * sf.d_omega),
                        float(np.exp(l1 - 0.25 * (l0 - l2) * shift))))
    return out


def dominant_peak(sf: SpectralFunction) -> float:
    found = peaks(sf)
    if not found:
        raise UsageError("spectral function has no peak")
    return max(found, key=lambda p: p[1])[0]


def satellite_spacing(sf: SpectralFunction) -> float:
    """Distance between the two lowest-frequency peaks."""
    found = sorted(p for p, _ in peaks(sf))
    if len(found) < 2:
        raise UsageError("fewer than two peaks resolved")
    return found[1] - found[0]
