"""Grid and normal-mode numerics for few-body models in one dimension."""

from .bo import bo_solve, bo_surface, heavy_pair_frame, with_mass_ratio
from .grids import (Axis, bound_states, cm_ladder_scaling, full_grid_hamiltonian,
                    full_grid_spectrum, internal_problem, reduced_grid_spectrum,
                    sector_hamiltonian)
from .lehmann import dominant_peak, peaks, satellite_spacing, spectral_function
from .models import (BOResult, GridModel, HarmonicModel, PairPotential, Particle,
                     SpectralFunction, SpectrumResult)
from .phonons import normal_modes, remove_acoustic_modes

__all__ = [
    "Axis", "BOResult", "GridModel", "HarmonicModel", "PairPotential", "Particle",
    "SpectralFunction", "SpectrumResult", "bo_solve", "bo_surface", "bound_states",
    "cm_ladder_scaling", "dominant_peak", "full_grid_hamiltonian", "full_grid_spectrum",
    "heavy_pair_frame", "internal_problem", "normal_modes", "peaks", "reduced_grid_spectrum",
    "remove_acoustic_modes", "satellite_spacing", "sector_hamiltonian", "spectral_function",
    "with_mass_ratio",
]
