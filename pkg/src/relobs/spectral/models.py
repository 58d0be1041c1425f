"""Numerical model definitions and result containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from ..errors import ModelError

ASR_TOL = 1e-12
# collocation with the exact k^2/2m symbol, collocation with the three-point
# difference symbol, or the variational plane-wave scheme (internal grids only)
KINETIC_SCHEMES = ("fourier", "fd2", "galerkin")


def _exact(x) -> Fraction:
    return Fraction(str(x))


@dataclass(frozen=True)
class Particle:
    mass: Fraction
    role: str = "particle"

    def __post_init__(self):
        object.__setattr__(self, "mass", _exact(self.mass))
        if self.mass <= 0:
            raise ModelError("particle masses must be positive")


@dataclass(frozen=True)
class PairPotential:
    """``harmonic``: k/2 r^2; ``softCoulomb``: strength / sqrt(r^2 + width^2)."""

    pair: tuple
    kind: str
    k: float = 0.0
    strength: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in ("harmonic", "softCoulomb"):
            raise ModelError(f"unknown potential type {self.kind!r}")
        if len(self.pair) != 2 or self.pair[0] == self.pair[1]:
            raise ModelError("a pair potential needs two distinct particles")
        if self.kind == "softCoulomb" and not self.width > 0:
            raise ModelError("soft-Coulomb width must be positive")
        object.__setattr__(self, "pair", tuple(int(p) for p in self.pair))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "harmonic":
            return 0.5 * self.k * r * r
        return self.strength / np.sqrt(r * r + self.width * self.width)

    @property
    def asymptote(self) -> float:
        """Value at infinite separation."""
        return np.inf if self.kind == "harmonic" and self.k > 0 else 0.0

    def to_json(self) -> dict:
        params = {"k": self.k} if self.kind == "harmonic" else {
            "strength": self.strength, "width": self.width}
        return {"pair": list(self.pair), "type": self.kind, "params": params}


@dataclass(frozen=True)
class GridModel:
    """Few-body model on a periodic 1D box (d = 1)."""

    particles: tuple
    L: float
    npts: int
    potentials: tuple = ()
    kinetic: str = "fourier"
    count: int = 6
    tol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "particles", tuple(self.particles))
        object.__setattr__(self, "potentials", tuple(self.potentials))
        n = len(self.particles)
        if n not in (2, 3):
            raise ModelError("grid models hold two or three particles")
        if not self.L > 0:
            raise ModelError("box length must be positive")
        if self.npts < 64 or self.npts & (self.npts - 1):
            raise ModelError("points per axis must be a power of two and at least 64")
        if self.kinetic not in KINETIC_SCHEMES:
            raise ModelError(f"kinetic must be one of {', '.join(KINETIC_SCHEMES)}")
        for pot in self.potentials:
            if not all(1 <= p <= n for p in pot.pair):
                raise ModelError(f"pair {pot.pair} refers to a missing particle")

    @property
    def n(self) -> int:
        return len(self.particles)

    @property
    def masses(self) -> list[Fraction]:
        return [p.mass for p in self.particles]

    @property
    def total_mass(self) -> float:
        return float(sum(self.masses))

    @property
    def h(self) -> float:
        return self.L / self.npts

    def with_box(self, L: float, npts: int) -> "GridModel":
        return GridModel(self.particles, L, npts, self.potentials, self.kinetic, self.count, self.tol)

    def with_masses(self, masses) -> "GridModel":
        parts = tuple(Particle(m, p.role) for m, p in zip(masses, self.particles))
        return GridModel(parts, self.L, self.npts, self.potentials, self.kinetic, self.count, self.tol)

    def role_indices(self, role: str) -> list[int]:
        return [i + 1 for i, p in enumerate(self.particles) if p.role == role]

    def to_json(self) -> dict:
        return {
            "particles": [{"mass": str(p.mass), "role": p.role} for p in self.particles],
            "box": {"L": self.L, "Npts": self.npts},
            "potential": [p.to_json() for p in self.potentials],
            "solver": {"count": self.count, "tol": self.tol, "kinetic": self.kinetic},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GridModel":
        try:
            particles = [Particle(p["mass"], p.get("role", "particle")) for p in doc["particles"]]
            box = doc["box"]
            pots = []
            for entry in doc.get("potential", []):
                params = entry.get("params", {})
                pots.append(PairPotential(tuple(entry["pair"]), entry["type"],
                                          k=float(params.get("k", 0.0)),
                                          strength=float(params.get("strength", 0.0)),
                                          width=float(params.get("width", 1.0))))
            solver = doc.get("solver", {})
            return cls(tuple(particles), float(box["L"]), int(box["Npts"]), tuple(pots),
                       solver.get("kinetic", "fourier"), int(solver.get("count", 6)),
                       float(solver.get("tol", 1e-10)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModelError):
                raise
            raise ModelError(f"malformed grid model: {exc}") from exc


@dataclass(frozen=True)
class HarmonicModel:
    """Masses and force constants of a 1D chain or ring."""

    masses: np.ndarray
    K: np.ndarray
    asr_enforced: bool = True

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=float)
        K = np.asarray(self.K, dtype=float)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "K", K)
        n = len(masses)
        if n < 1 or K.shape != (n, n):
            raise ModelError("K must be square with one row per mass")
        if np.any(masses <= 0):
            raise ModelError("masses must be positive")
        if not np.allclose(K, K.T, rtol=0.0, atol=ASR_TOL):
            raise ModelError("force-constant matrix must be symmetric")
        if self.asr_enforced and np.any(np.abs(K.sum(axis=1)) > ASR_TOL):
            raise ModelError("acoustic sum rule violated: a row of K does not sum to zero")

    @property
    def asr_satisfied(self) -> bool:
        return bool(np.all(np.abs(self.K.sum(axis=1)) <= ASR_TOL))

    @classmethod
    def ring(cls, n: int, k: float = 1.0, mass: float = 1.0, onsite: float = 0.0) -> "HarmonicModel":
        """Nearest-neighbour ring; ``onsite`` adds a diagonal pinning term."""
        K = np.zeros((n, n))
        for i in range(n):
            j = (i + 1) % n
            K[i, i] += k
            K[j, j] += k
            K[i, j] -= k
            K[j, i] -= k
        K += onsite * np.eye(n)
        return cls(np.full(n, mass), K, asr_enforced=(onsite == 0.0))

    @classmethod
    def from_json(cls, doc: dict) -> "HarmonicModel":
        try:
            if "ring" in doc:
                r = doc["ring"]
                return cls.ring(int(r["n"]), float(r.get("k", 1.0)), float(r.get("mass", 1.0)),
                                float(r.get("onsite", 0.0)))
            return cls(np.array(doc["masses"], dtype=float), np.array(doc["K"], dtype=float),
                       bool(doc.get("asrEnforced", True)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModelError):
                raise
            raise ModelError(f"malformed harmonic model: {exc}") from exc


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    sector: object  # total-momentum index or "reduced"
    eigenvectors: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    def gaps(self) -> np.ndarray:
        return self.eigenvalues[1:] - self.eigenvalues[0]


@dataclass
class BOResult:
    s_grid: np.ndarray
    surface: np.ndarray            # electronic energy plus heavy-heavy repulsion
    electronic: np.ndarray         # electronic energy alone
    electronic_states: np.ndarray  # ground-state light wavefunction per sample, shape (ns, nrho)
    nuclear_levels: np.ndarray
    exact_levels: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def ground_error(self) -> float:
        return float(abs(self.nuclear_levels[0] - self.exact_levels[0]))

    @property
    def relative_error(self) -> float:
        return self.ground_error / abs(float(self.exact_levels[0]))


@dataclass
class SpectralFunction:
    omega: np.ndarray
    values: np.ndarray
    eta: float
    probe: str
    variant: str
    poles: np.ndarray
    weights: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def d_omega(self) -> float:
        return float(self.omega[1] - self.omega[0])

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def integral(self) -> float:
        return float(np.sum(self.values) * self.d_omega)
