"""Normal modes of harmonic chains and removal of the acoustic zero modes."""

from __future__ import annotations

import numpy as np

from ..errors import UnstableModel
from .models import HarmonicModel

ZERO_MODE_TOL = 1e-10
NEGATIVE_TOL = 1e-12


def normal_modes(model: HarmonicModel) -> tuple[np.ndarray, np.ndarray]:
    """Frequencies (ascending) and mass-weighted mode vectors (columns).

    ``omega^2`` values within ``NEGATIVE_TOL`` of zero are set to exactly zero so
    that round-off cannot push a symmetry zero mode above the zero-mode threshold.
    """
    inv_sqrt_m = 1.0 / np.sqrt(model.masses)
    D = model.K * np.outer(inv_sqrt_m, inv_sqrt_m)
    w2, vecs = np.linalg.eigh(0.5 * (D + D.T))
    if np.any(w2 < -NEGATIVE_TOL):
        raise UnstableModel(f"force constants are not positive semidefinite (omega^2 = {w2.min():.3e})")
    w2 = np.where(np.abs(w2) <= NEGATIVE_TOL, 0.0, w2)
    return np.sqrt(w2), vecs


def acoustic_mask(frequencies: np.ndarray) -> np.ndarray:
    return np.abs(np.asarray(frequencies)) < ZERO_MODE_TOL


def remove_acoustic_modes(frequencies, mode_vectors=None):
    """Drop modes with ``|omega| < 1e-10``; returns frequencies, or (frequencies, vectors)."""
    frequencies = np.asarray(frequencies)
    keep = ~acoustic_mask(frequencies)
    if mode_vectors is None:
        return frequencies[keep]
    return frequencies[keep], np.asarray(mode_vectors)[:, keep]
