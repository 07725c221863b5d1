"""Phase-space Monte Carlo for 1D trapped Lennard-Jones particles.

Quantum canonical averages (energy, kinetic energy, density profiles) are
computed by classical Metropolis sampling of positions, with momenta
integrated analytically against a mean-field harmonic-oscillator
commutation function and a nearest-neighbor loop expansion of the
wave-function symmetrization factor.
"""

from .model import (
    ModelParams,
    ParameterError,
    SingularConfigurationError,
    build_params,
    particle_derivatives,
    particle_energy,
    potential_total,
)
from .meanfield import LocalMode, MomentumPolynomial, compute_modes, hermite, locate_minimum, w_sho_polynomial
from .symmetrization import SymTerm, classical_dimer_weight, enumerate_terms
from .quadrature import IntegratedWeight, gaussian_moment, integrate_particle, integrated_weight, weight_components
from .observables import DensityHistogram, DensityProfile, accumulate_density, energy_terms
from .sampler import RunConfig, RunResult, Variant, metropolis_cycle, run, run_multi, tune_step
from .oracle import (
    EigenSpectrum,
    GridRefinementError,
    TruncationWarning,
    canonical_average,
    grid_diagonalize,
    read_spectrum,
    sho_exact_energy,
)

__all__ = [
    "ModelParams",
    "ParameterError",
    "SingularConfigurationError",
    "build_params",
    "potential_total",
    "particle_energy",
    "particle_derivatives",
    "LocalMode",
    "MomentumPolynomial",
    "compute_modes",
    "hermite",
    "locate_minimum",
    "w_sho_polynomial",
    "SymTerm",
    "enumerate_terms",
    "classical_dimer_weight",
    "IntegratedWeight",
    "gaussian_moment",
    "integrate_particle",
    "integrated_weight",
    "weight_components",
    "DensityHistogram",
    "DensityProfile",
    "accumulate_density",
    "energy_terms",
    "RunConfig",
    "RunResult",
    "Variant",
    "metropolis_cycle",
    "run",
    "run_multi",
    "tune_step",
    "EigenSpectrum",
    "GridRefinementError",
    "TruncationWarning",
    "sho_exact_energy",
    "grid_diagonalize",
    "canonical_average",
    "read_spectrum",
]
