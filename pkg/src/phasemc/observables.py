"""Estimators accumulated by the sampler: energies and the density profile."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, potential_total
from .quadrature import IntegratedWeight


@dataclass
class DensityHistogram:
    """Weighted position histogram over [-q_max, q_max].

    num holds the per-bin weighted counts, den the shared weight sum, and
    overflow the weight falling outside the binned range.  The normalized
    profile integrates to N (all particles add their weight each sample).
    """

    q_max: float
    n_bins: int
    num: np.ndarray = field(init=False)
    den: float = field(init=False, default=0.0)
    overflow: float = field(init=False, default=0.0)

    def __post_init__(self):
        self.num = np.zeros(self.n_bins)

    @property
    def bin_width(self) -> float:
        return 2.0 * self.q_max / self.n_bins

    @property
    def centers(self) -> np.ndarray:
        return -self.q_max + (np.arange(self.n_bins) + 0.5) * self.bin_width

    def add(self, q: np.ndarray, w: float):
        idx = np.floor((np.asarray(q) + self.q_max) / self.bin_width).astype(int)
        inside = (idx >= 0) & (idx < self.n_bins)
        np.add.at(self.num, idx[inside], w)
        self.overflow += w * int(np.sum(~inside))
        self.den += w

    def rho(self) -> np.ndarray:
        """Density normalized so that the integral over q equals N."""
        return self.num / (self.den * self.bin_width)


@dataclass
class DensityProfile:
    """Finalized density with per-bin block-statistics errors."""

    centers: np.ndarray
    rho: np.ndarray
    rho_err: np.ndarray
    bin_width: float
    n_particles: int
    overflow_fraction: float

    @property
    def rho_per_particle(self) -> np.ndarray:
        return self.rho / self.n_particles

    def integral(self) -> float:
        return float(np.sum(self.rho) * self.bin_width)


def energy_terms(q: np.ndarray, modes, weight: IntegratedWeight, p: ModelParams):
    """Potential and kinetic numerators U(q) * w and K-companion for one sample.

    Returned in absolute units (exp(log_scale) applied); the sampler uses a
    run-level reference scale instead to stay in floating-point range.
    """
    scale = math.exp(weight.log_scale)
    w = weight.weight_rel * scale
    return potential_total(q, p) * w, weight.kinetic_rel * scale


def accumulate_density(q: np.ndarray, weight: IntegratedWeight, hist: DensityHistogram) -> DensityHistogram:
    """Add one configuration's weight to each particle's bin."""
    hist.add(q, weight.weight_rel * math.exp(weight.log_scale))
    return hist
