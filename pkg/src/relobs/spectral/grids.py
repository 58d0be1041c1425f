"""Grid Hamiltonians: momentum-sector blocks of the two-body box and reduced internal grids.

Kinetic energy is diagonal in the plane-wave basis of each periodic axis.  The
default ``fourier`` symbol is the exact ``k^2/2m``; ``fd2`` uses the symbol of the
second-order central difference.  Potentials are diagonal on grid points.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, lobpcg

from ..errors import FitDegeneracy, NumericalError, UsageError
from ..reduction import LinearFrameMap, jacobi_map
from ..algebra import ParticleSystem
from .models import GridModel, SpectrumResult

DENSE_LIMIT = 2048


@dataclass(frozen=True)
class Axis:
    """Uniform periodic axis: ``n`` points from ``lo`` with spacing ``length / n``."""

    lo: float
    length: float
    n: int

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def points(self) -> np.ndarray:
        return self.lo + self.h * np.arange(self.n)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, self.h)

    @classmethod
    def centered(cls, L: float, n: int) -> "Axis":
        return cls(-0.5 * L, L, n)


def kinetic_symbol(G: np.ndarray, axes: Sequence[Axis], kind: str = "fourier") -> np.ndarray:
    """Plane-wave eigenvalues of ``1/2 sum_ab G_ab p_a p_b`` on the product grid."""
    if kind not in ("fourier", "fd2"):
        raise UsageError(f"the {kind!r} scheme has no grid kinetic symbol; it applies to "
                         "internal spectra only")
    G = np.atleast_2d(np.asarray(G, dtype=float))
    dim = len(axes)
    ks = np.meshgrid(*[ax.wavenumbers for ax in axes], indexing="ij")
    t = np.zeros(ks[0].shape)
    for a in range(dim):
        h = axes[a].h
        if kind == "fourier":
            t += 0.5 * G[a, a] * ks[a] ** 2
        else:
            t += G[a, a] * (1.0 - np.cos(ks[a] * h)) / h ** 2
    for a in range(dim):
        for b in range(a + 1, dim):
            if G[a, b] == 0.0:
                continue
            if kind == "fourier":
                ka = _drop_nyquist(ks[a], axes[a])
                kb = _drop_nyquist(ks[b], axes[b])
            else:
                ka = np.sin(ks[a] * axes[a].h) / axes[a].h
                kb = np.sin(ks[b] * axes[b].h) / axes[b].h
            t += G[a, b] * ka * kb
    return t


def _drop_nyquist(k: np.ndarray, axis: Axis) -> np.ndarray:
    # the Nyquist mode has no partner -k, so first derivatives leave it out
    if axis.n % 2 == 0:
        k = np.where(np.isclose(np.abs(k), np.pi / axis.h), 0.0, k)
    return k


def kinetic_stencil(mass: float, axis: Axis, kind: str) -> np.ndarray:
    """First column ``c(delta)`` of the circulant one-particle kinetic matrix."""
    t = kinetic_symbol(np.array([[1.0 / mass]]), [axis], kind)
    n = axis.n
    delta = np.arange(n)
    c = (np.cos(np.outer(delta, axis.wavenumbers) * axis.h) @ t) / n
    return 0.5 * (c + c[(-delta) % n])


# ---------------------------------------------------------------- solvers

def dense_hamiltonian(t: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Dense real-symmetric matrix of ``F^-1 t F + V`` on the flattened grid."""
    shape = t.shape
    n = t.size
    eye = np.eye(n).reshape((n,) + shape)
    axes = tuple(range(1, len(shape) + 1))
    K = np.fft.ifftn(t[None] * np.fft.fftn(eye, axes=axes), axes=axes).real.reshape(n, n)
    H = 0.5 * (K + K.T)
    H[np.diag_indices(n)] += V.ravel()
    return H


def _residuals(apply, vals, vecs):
    return np.array([np.linalg.norm(apply(vecs[:, i]) - vals[i] * vecs[:, i])
                     for i in range(len(vals))])


def _batched(fn, shape):
    """Lift ``fn`` acting on one grid array to vectors and column blocks."""
    n = int(np.prod(shape))

    def apply(x):
        x = np.asarray(x)
        if x.ndim == 1:
            return fn(x.reshape(shape)[None]).reshape(n)
        cols = x.shape[1]
        return fn(x.T.reshape((cols,) + shape)).reshape(cols, n).T
    return apply


def _lobpcg(apply, precond, n: int, count: int, tol: float, dtype, seed: int):
    block = count + max(4, count // 2)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, block))
    if dtype is complex:
        X = X + 1j * rng.standard_normal((n, block))
    A = LinearOperator((n, n), matvec=apply, matmat=apply, dtype=dtype)
    M = LinearOperator((n, n), matvec=precond, matmat=precond, dtype=dtype)
    res_tol = max(tol, 1e-12) ** 0.5 * 1e-2
    vals, vecs = lobpcg(A, X, M=M, largest=False, tol=res_tol, maxiter=2000)
    order = np.argsort(vals)
    vals, vecs = vals[order][:count], vecs[:, order][:, :count]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    res = _residuals(apply, vals, vecs)
    if np.max(res) > 10 * res_tol * max(1.0, np.max(np.abs(vals))):
        raise NumericalError(f"eigensolver did not converge (residual {np.max(res):.2e})")
    return vals, vecs


def lowest_eigenpairs(t: np.ndarray, V: np.ndarray, count: int, tol: float = 1e-10,
                      with_vectors: bool = False, seed: int = 0):
    """Lowest ``count`` eigenpairs of the grid Hamiltonian ``F^-1 t F + V``.

    Small grids are diagonalised densely; larger ones use LOBPCG with the inverse
    kinetic symbol as preconditioner, started from a seeded random block so that
    results do not depend on the run.
    """
    shape = t.shape
    n = t.size
    count = min(count, n)
    if n <= DENSE_LIMIT:
        H = dense_hamiltonian(t, V)
        vals, vecs = scipy.linalg.eigh(H, subset_by_index=[0, count - 1])
        return (vals, vecs) if with_vectors else (vals, None)

    ax = tuple(range(1, len(shape) + 1))
    shift = max(1.0, float(np.max(np.abs(V))))
    inv = 1.0 / (t + shift)
    apply = _batched(lambda u: np.fft.ifftn(t * np.fft.fftn(u, axes=ax), axes=ax).real + V * u, shape)
    precond = _batched(lambda u: np.fft.ifftn(inv * np.fft.fftn(u, axes=ax), axes=ax).real, shape)
    vals, vecs = _lobpcg(apply, precond, n, count, tol, float, seed)
    return (vals, vecs) if with_vectors else (vals, None)


# ---------------------------------------------------------------- plane-wave Galerkin

def _band(n: int) -> np.ndarray:
    """Wave indices kept by the Galerkin basis: |j| < n/2 (the Nyquist mode is dropped)."""
    return np.concatenate([np.arange(0, n // 2), np.arange(-(n // 2) + 1, 0)])


def band_limited_potential(potential, axes: Sequence[Axis], rtol: float = 1e-14,
                           max_factor: int = 64) -> np.ndarray:
    """Potential on the doubled grid carrying exactly its Fourier modes ``|q| < n``.

    Those are the only modes coupling two basis plane waves.  They are computed on
    ever finer grids until they stop changing, then resynthesised on the doubled
    grid, where products with basis functions are alias-free.
    """
    wide = [np.arange(-(ax.n - 1), ax.n) for ax in axes]
    prev = None
    factor = 2
    while True:
        fine = tuple(Axis(ax.lo, ax.length, factor * ax.n) for ax in axes)
        V = potential(fine)
        coef = np.fft.fftn(V) / V.size
        coef = coef[np.ix_(*[w % f.n for w, f in zip(wide, fine)])]
        if prev is not None:
            scale = max(1.0, float(np.max(np.abs(coef))))
            if np.max(np.abs(coef - prev)) <= rtol * scale or factor >= max_factor:
                break
        prev = coef
        factor *= 2
    doubled = tuple(2 * ax.n for ax in axes)
    spec = np.zeros(doubled, dtype=complex)
    spec[np.ix_(*[w % d for w, d in zip(wide, doubled)])] = coef * np.prod(doubled)
    return np.fft.ifftn(spec).real


def galerkin_eigenpairs(G: np.ndarray, axes: Sequence[Axis], potential, count: int,
                        tol: float = 1e-10, with_vectors: bool = False, seed: int = 0):
    """Variational eigenpairs in the plane-wave basis ``|k_a| < pi / h_a``.

    The basis for ``n`` points lies inside the basis for ``2n`` points, so
    eigenvalues can only go down as the grid is refined (given exact potential
    matrix elements, see :func:`band_limited_potential`).  ``potential`` maps a tuple
    of axes to the potential sampled on their product grid.  Eigenvectors are
    returned as real grid values on ``axes`` with unit Euclidean norm.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    dim = len(axes)
    bands = [_band(ax.n) for ax in axes]
    fine = [Axis(ax.lo, ax.length, 2 * ax.n) for ax in axes]
    V = band_limited_potential(potential, axes)
    ks = np.meshgrid(*[2 * np.pi * b / ax.length for b, ax in zip(bands, axes)], indexing="ij")
    t = sum(0.5 * G[a, b] * ks[a] * ks[b] for a in range(dim) for b in range(dim))
    shape = t.shape
    n = t.size
    count = min(count, n)
    fine_index = np.ix_(*[b % f.n for b, f in zip(bands, fine)])
    ax = tuple(range(1, dim + 1))

    def apply_block(c):
        spec = np.zeros((c.shape[0],) + V.shape, dtype=complex)
        spec[(slice(None),) + fine_index] = c
        prod = np.fft.fftn(V * np.fft.ifftn(spec, axes=ax), axes=ax)
        return t * c + prod[(slice(None),) + fine_index]

    apply = _batched(apply_block, shape)
    if n <= DENSE_LIMIT:
        H = apply(np.eye(n, dtype=complex))
        H = 0.5 * (H + H.conj().T)
        vals, vecs = scipy.linalg.eigh(H, subset_by_index=[0, count - 1])
    else:
        inv = 1.0 / (t + max(1.0, float(np.max(np.abs(V)))))
        precond = _batched(lambda c: inv * c, shape)
        vals, vecs = _lobpcg(apply, precond, n, count, tol, complex, seed)
    if not with_vectors:
        return vals, None
    return vals, _plane_waves_to_grid(vecs, bands, axes)


def _plane_waves_to_grid(coeffs: np.ndarray, bands, axes) -> np.ndarray:
    shape = tuple(len(b) for b in bands)
    grid_shape = tuple(ax.n for ax in axes)
    index = np.ix_(*[b % ax.n for b, ax in zip(bands, axes)])
    out = np.empty((int(np.prod(grid_shape)), coeffs.shape[1]))
    for col in range(coeffs.shape[1]):
        spec = np.zeros(grid_shape, dtype=complex)
        spec[index] = coeffs[:, col].reshape(shape)
        psi = np.fft.ifftn(spec).ravel()
        # the eigenfunctions of a real Hamiltonian are real up to a global phase
        k = int(np.argmax(np.abs(psi)))
        psi = (psi * np.exp(-1j * np.angle(psi[k]))).real
        out[:, col] = psi / np.linalg.norm(psi)
    return out


# ---------------------------------------------------------------- two-body sectors

def _pair_potential_on_relative(model: GridModel, r: np.ndarray) -> np.ndarray:
    V = np.zeros_like(r, dtype=float)
    for pot in model.potentials:
        V = V + pot(r)
    return V


def _minimum_image(x: np.ndarray, L: float) -> np.ndarray:
    return (x + 0.5 * L) % L - 0.5 * L


def _require_two_body(model: GridModel):
    if model.n != 2:
        raise UsageError("the unreduced box is only assembled for two-particle models")


def sector_hamiltonian(model: GridModel, sector: int) -> np.ndarray:
    """Block of the two-body box Hamiltonian with total quasi-momentum ``2 pi sector / L``.

    Basis ``|r; q> = N^-1/2 sum_n exp(i theta n) |x1 = n + r, x2 = n>`` with
    ``theta = 2 pi q / N``; ``r`` is the relative grid offset.
    """
    _require_two_body(model)
    N = model.npts
    if not -N // 2 <= sector < N // 2:
        raise UsageError(f"sector index {sector} outside [{-N // 2}, {N // 2 - 1}]")
    axis = Axis(0.0, model.L, N)
    m1, m2 = (float(m) for m in model.masses)
    c1 = kinetic_stencil(m1, axis, model.kinetic)
    c2 = kinetic_stencil(m2, axis, model.kinetic)
    theta = 2.0 * np.pi * sector / N
    idx = np.arange(N)
    delta = (idx[:, None] - idx[None, :]) % N           # r' - r
    phase = np.exp(1j * theta * np.arange(N))          # exp(i theta s), s = r - r' mod N
    H = c1[delta] + c2[(-delta) % N] * np.conj(phase[(-delta) % N])
    r = _minimum_image(idx * model.h, model.L)
    H[np.diag_indices(N)] += _pair_potential_on_relative(model, r)
    return 0.5 * (H + H.conj().T)


def full_grid_hamiltonian(model: GridModel) -> np.ndarray:
    """Dense two-particle box Hamiltonian on the (x1, x2) grid (small boxes only)."""
    _require_two_body(model)
    N = model.npts
    axis = Axis(0.0, model.L, N)
    mats = []
    for m in model.masses:
        c = kinetic_stencil(float(m), axis, model.kinetic)
        mats.append(scipy.linalg.circulant(c))
    eye = np.eye(N)
    H = np.kron(mats[0], eye) + np.kron(eye, mats[1])
    i1, i2 = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    r = _minimum_image((i1 - i2).ravel() * model.h, model.L)
    H[np.diag_indices(N * N)] += _pair_potential_on_relative(model, r)
    return 0.5 * (H + H.T)


def sector_momentum(model: GridModel, sector: int) -> float:
    return 2.0 * np.pi * sector / model.L


def full_grid_spectrum(model: GridModel, sector: int = 0, count: int | None = None,
                       with_vectors: bool = False) -> SpectrumResult:
    """Lowest eigenvalues of one total-momentum block of the two-body box."""
    count = model.count if count is None else count
    H = sector_hamiltonian(model, sector)
    count = min(count, model.npts)
    vals, vecs = scipy.linalg.eigh(H, subset_by_index=[0, count - 1])
    return SpectrumResult(vals, sector, vecs if with_vectors else None, {
        "variant": "full", "L": model.L, "Npts": model.npts, "kinetic": model.kinetic,
        "P": sector_momentum(model, sector), "count": count})


# ---------------------------------------------------------------- reduced grids

@dataclass(frozen=True)
class InternalProblem:
    """Internal Hamiltonian ``1/2 p^T G p + sum V_pair(D . y)`` on a product grid."""

    G: np.ndarray
    pair_terms: tuple   # ((D vector, potential), ...)
    axes: tuple

    def potential(self) -> np.ndarray:
        ys = np.meshgrid(*[ax.points for ax in self.axes], indexing="ij")
        V = np.zeros(ys[0].shape)
        for D, pot in self.pair_terms:
            r = sum(c * y for c, y in zip(D, ys))
            V = V + pot(r)
        return V

    def kinetic(self, kind: str) -> np.ndarray:
        return kinetic_symbol(self.G, self.axes, kind)

    def sampled(self, axes) -> np.ndarray:
        return InternalProblem(self.G, self.pair_terms, tuple(axes)).potential()

    def eigenpairs(self, kind: str, count: int, tol: float = 1e-10, with_vectors: bool = False):
        """Lowest eigenpairs with the collocation (``fourier``/``fd2``) or ``galerkin`` scheme."""
        if kind == "galerkin":
            return galerkin_eigenpairs(self.G, self.axes, self.sampled, count, tol, with_vectors)
        return lowest_eigenpairs(self.kinetic(kind), self.potential(), count, tol, with_vectors)


def model_system(model: GridModel) -> ParticleSystem:
    return ParticleSystem(tuple(model.masses), 1)


def separation_vector(frame: LinearFrameMap, a: int, b: int) -> tuple:
    """Coefficients D with ``x_a - x_b = sum_k D_k y_k`` over the internal coordinates."""
    internal = [i - 1 for i in frame.internal_indices]
    return tuple(float(frame.T_inv[a - 1][k] - frame.T_inv[b - 1][k]) for k in internal)


def internal_problem(model: GridModel, frame: LinearFrameMap | None = None,
                     axes: Sequence[Axis] | None = None) -> InternalProblem:
    """Internal-coordinate Hamiltonian of ``model`` in the frame ``frame`` (default Jacobi)."""
    if frame is None:
        frame = jacobi_map(model_system(model))
    if [Fraction(m) for m in frame.system.masses] != list(model.masses):
        raise UsageError("frame map masses differ from the model masses")
    internal = [i - 1 for i in frame.internal_indices]
    T = np.array([[float(x) for x in row] for row in frame.T])
    inv_m = np.array([1.0 / float(m) for m in model.masses])
    TI = T[internal]
    G = TI @ np.diag(inv_m) @ TI.T
    pair_terms = tuple((separation_vector(frame, *pot.pair), pot) for pot in model.potentials)
    if axes is None:
        axes = [Axis.centered(model.L, model.npts) for _ in internal]
    return InternalProblem(G, pair_terms, tuple(axes))


def reduced_grid_spectrum(model: GridModel, count: int | None = None,
                          frame: LinearFrameMap | None = None,
                          axes: Sequence[Axis] | None = None,
                          with_vectors: bool = False) -> SpectrumResult:
    """Spectrum of the CM-free internal Hamiltonian on the relative-coordinate grid."""
    count = model.count if count is None else count
    prob = internal_problem(model, frame, axes)
    vals, vecs = prob.eigenpairs(model.kinetic, count, model.tol, with_vectors)
    return SpectrumResult(vals, "reduced", vecs, {
        "variant": "reduced", "L": model.L, "Npts": model.npts, "kinetic": model.kinetic,
        "axes": [[ax.lo, ax.length, ax.n] for ax in prob.axes], "count": len(vals)})


def bound_states(model: GridModel, spectrum: SpectrumResult, fraction: float = 0.999) -> list[int]:
    """Indices of reduced two-body states that are bound.

    A state counts as bound when it lies below the continuum threshold (the pair
    potential at infinite separation) and carries at least ``fraction`` of its norm
    within ``|r| < L/4``.
    """
    if spectrum.eigenvectors is None:
        raise UsageError("bound-state detection needs eigenvectors")
    if model.n != 2:
        raise UsageError("bound-state detection is defined for two-body models")
    threshold = sum(p.asymptote for p in model.potentials)
    r = Axis.centered(model.L, model.npts).points
    inner = np.abs(r) < model.L / 4
    out = []
    for n, E in enumerate(spectrum.eigenvalues):
        psi = spectrum.eigenvectors[:, n]
        weight = np.sum(np.abs(psi[inner]) ** 2) / np.sum(np.abs(psi) ** 2)
        if E < threshold and weight >= fraction:
            out.append(n)
    return out


def _power_of_two(x: float) -> int:
    return max(64, 1 << int(round(np.log2(max(x, 1.0)))))


def cm_ladder_scaling(model: GridModel, lengths: Sequence[float]) -> dict:
    """Log-log slopes of the CM ladder spacing and of the internal gap versus box length.

    The grid spacing of ``model`` is kept while the box grows, so only the box
    length changes between runs.
    """
    lengths = [float(x) for x in lengths]
    if len(lengths) < 3 or len(set(lengths)) != len(lengths):
        raise FitDegeneracy("the scaling fit needs at least three distinct box lengths")
    ratios = np.array(lengths[1:]) / np.array(lengths[:-1])
    if not np.allclose(ratios, ratios[0], rtol=1e-9):
        raise FitDegeneracy("box lengths must form a geometric progression")
    _require_two_body(model)
    h = model.h
    cm_gaps, internal_gaps = [], []
    for L in lengths:
        m = model.with_box(L, _power_of_two(L / h))
        e0 = full_grid_spectrum(m, 0, 2).eigenvalues
        e1 = full_grid_spectrum(m, 1, 1).eigenvalues
        cm_gaps.append(e1[0] - e0[0])
        internal_gaps.append(e0[1] - e0[0])
    logL = np.log(lengths)
    cm_slope = float(np.polyfit(logL, np.log(cm_gaps), 1)[0])
    internal_slope = float(np.polyfit(logL, np.log(internal_gaps), 1)[0])
    return {"lengths": lengths, "cm_spacing": [float(x) for x in cm_gaps],
            "internal_gap": [float(x) for x in internal_gaps],
            "cm_slope": cm_slope, "internal_slope": internal_slope}
