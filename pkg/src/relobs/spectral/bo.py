"""Clamped-heavy-particle (Born-Oppenheimer) solver for one light and two heavy particles.

Internal coordinates after removing the centre of mass are the heavy separation
``s = x_b - x_a`` and the light coordinate relative to the heavy pair's centre of
mass, ``rho``.  In this frame the kinetic energy has no cross term, so the exact
internal Hamiltonian is ``T_s + h(s)`` with ``h(s) = T_rho + V``.  The adiabatic
surface is the ground eigenvalue of ``h(s)`` (heavy-heavy repulsion included).
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import scipy.linalg

from ..algebra import ParticleSystem
from ..errors import ModelError, NumericalError
from ..reduction import LinearFrameMap, jacobi_map
from .grids import Axis, dense_hamiltonian, internal_problem, kinetic_symbol, lowest_eigenpairs
from .models import BOResult, GridModel

ELECTRONIC_RESIDUAL = 1e-10
S_POINTS = 64
S_WIDTHS = 8.0


def _roles(model: GridModel) -> tuple[int, int, int]:
    light = model.role_indices("light")
    heavy = model.role_indices("heavy")
    if model.n != 3 or len(light) != 1 or len(heavy) != 2:
        raise ModelError("the adiabatic solver needs one 'light' and two 'heavy' particles")
    return light[0], heavy[0], heavy[1]


def with_mass_ratio(model: GridModel, ratio: float) -> GridModel:
    """Copy of ``model`` whose heavy particles weigh ``ratio`` light masses."""
    light, ha, hb = _roles(model)
    m = model.masses[light - 1]
    r = Fraction(str(ratio))
    masses = [m * r if i + 1 in (ha, hb) else mi for i, mi in enumerate(model.masses)]
    return model.with_masses(masses)


def heavy_pair_frame(model: GridModel) -> LinearFrameMap:
    """Frame with rows (s, rho, R_cm)."""
    light, ha, hb = _roles(model)
    return jacobi_map(ParticleSystem(tuple(model.masses), 1), (ha, hb, light))


class _Electronic:
    """Light-particle Hamiltonian on the rho grid at a clamped separation."""

    def __init__(self, model: GridModel, frame: LinearFrameMap):
        self.rho = Axis.centered(model.L, model.npts)
        prob = internal_problem(model, frame, (Axis(0.0, 1.0, 1), self.rho))
        self.G = prob.G
        self.pairs = prob.pair_terms
        self.t = kinetic_symbol(np.array([[prob.G[1, 1]]]), [self.rho], model.kinetic)
        self.T = dense_hamiltonian(self.t, np.zeros(self.t.shape))

    def potential(self, s: float) -> tuple[np.ndarray, float]:
        """Light-particle potential on the rho grid and the s-only (heavy-heavy) part."""
        y = self.rho.points
        V = np.zeros_like(y)
        const = 0.0
        for (ds, dr), pot in self.pairs:
            if dr == 0.0:
                const += float(pot(ds * s))
            else:
                V = V + pot(ds * s + dr * y)
        return V, const

    def solve(self, s: float, with_vector: bool = False):
        V, const = self.potential(s)
        H = self.T.copy()
        H[np.diag_indices_from(H)] += V
        vals, vecs = scipy.linalg.eigh(H, subset_by_index=[0, 0])
        phi = vecs[:, 0]
        res = np.linalg.norm(H @ phi - vals[0] * phi)
        if res > ELECTRONIC_RESIDUAL:
            raise NumericalError(f"electronic solve at s = {s:.6g} has residual {res:.2e}")
        if phi.sum() < 0:
            phi = -phi
        return vals[0], const, phi


def bo_surface(model: GridModel, s_values, frame: LinearFrameMap | None = None):
    """Adiabatic surface, bare electronic energy and electronic ground states at each s."""
    frame = heavy_pair_frame(model) if frame is None else frame
    el = _Electronic(model, frame)
    surface, electronic, states = [], [], []
    for s in np.asarray(s_values, dtype=float):
        e, const, phi = el.solve(float(s))
        electronic.append(e)
        surface.append(e + const)
        states.append(phi)
    surface = np.array(surface)
    if not np.all(np.isfinite(surface)):
        raise NumericalError("adiabatic surface is not finite")
    return surface, np.array(electronic), np.array(states)


def _separation_axis(model: GridModel, frame: LinearFrameMap) -> Axis:
    """Heavy-separation grid centred on the surface minimum, spanning +-8 oscillator widths."""
    el = _Electronic(model, frame)
    coarse = np.linspace(0.05, 0.45 * model.L, 120)
    surf = np.array([sum(el.solve(s)[:2]) for s in coarse])
    k = int(np.argmin(surf))
    if k == 0 or k == len(coarse) - 1:
        raise ModelError("adiabatic surface has no interior minimum: the heavy pair is unbound")
    # refine the minimum and curvature by a local quadratic fit
    fine = np.linspace(coarse[k - 1], coarse[k + 1], 9)
    fsurf = np.array([sum(el.solve(s)[:2]) for s in fine])
    c2, c1, _ = np.polyfit(fine, fsurf, 2)
    if c2 <= 0:
        raise ModelError("adiabatic surface is not convex at its minimum")
    s0 = -c1 / (2 * c2)
    g_s = el.G[0, 0]
    omega = np.sqrt(2 * c2 * g_s)
    sigma = np.sqrt(g_s / omega)
    half = S_WIDTHS * sigma
    lo = max(s0 - half, 1e-3)
    hi = s0 + half
    return Axis(lo, hi - lo, S_POINTS)


def bo_solve(model: GridModel, mass_ratio: float | None = None, count: int | None = None) -> BOResult:
    """Adiabatic nuclear levels and the exact internal levels on the same (s, rho) grid."""
    if mass_ratio is not None:
        model = with_mass_ratio(model, mass_ratio)
    count = model.count if count is None else count
    frame = heavy_pair_frame(model)
    s_axis = _separation_axis(model, frame)
    surface, electronic, states = bo_surface(model, s_axis.points, frame)

    el_G = internal_problem(model, frame, (s_axis, Axis.centered(model.L, model.npts)))
    t_s = kinetic_symbol(np.array([[el_G.G[0, 0]]]), [s_axis], model.kinetic)
    nuclear, _ = lowest_eigenpairs(t_s, surface, count, model.tol)
    exact, _ = lowest_eigenpairs(el_G.kinetic(model.kinetic), el_G.potential(), count, model.tol)
    meta = {
        "massRatio": None if mass_ratio is None else float(mass_ratio),
        "masses": [str(m) for m in model.masses],
        "sGrid": [float(s_axis.lo), float(s_axis.length), s_axis.n],
        "rhoGrid": [-0.5 * model.L, float(model.L), model.npts],
        "kinetic": model.kinetic,
    }
    return BOResult(s_axis.points, surface, electronic, states, nuclear, exact, meta)
