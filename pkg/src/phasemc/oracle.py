"""Independent reference results: exact oscillator sums and grid spectra.

grid_diagonalize builds the N*d-dimensional Schroedinger Hamiltonian on a
uniform grid with a second-order finite-difference kinetic term and the
diagonal potential.  For N = 1 that is a single tridiagonal matrix.  For
N = 2 the grid is laid out in rotated coordinates X = (q1+q2)/sqrt(2),
x = (q1-q2)/sqrt(2), where the Laplacian keeps its form and the potential
(omega^2/2)(X^2+x^2) + u2(sqrt(2) x) stays diagonal; the finite-difference
Hamiltonian is then an exact Kronecker sum of two tridiagonal operators
and its eigenvalues are exactly all pairwise sums of the 1D eigenvalues.
Exchange q1 <-> q2 maps to x -> -x, so each eigenstate's exchange parity
is the parity of its relative-coordinate factor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .model import ModelParams, _pair_lj


class TruncationWarning(UserWarning):
    """The supplied spectrum is too short for the requested temperature."""


class GridRefinementError(RuntimeError):
    """Grid eigenvalues failed the self-convergence check."""


@dataclass
class EigenSpectrum:
    """Sorted energy eigenvalues, with an optional additive shift and
    exchange parity labels (+1 symmetric, -1 antisymmetric, 0 unknown)."""

    energies: np.ndarray
    shift: float = 0.0
    parity: np.ndarray | None = None

    def __post_init__(self):
        self.energies = np.asarray(self.energies, dtype=float)
        if self.energies.size == 0:
            raise ValueError("empty spectrum")
        if not np.all(np.isfinite(self.energies)):
            raise ValueError("non-finite eigenvalue")
        order = np.argsort(self.energies)
        self.energies = self.energies[order]
        if self.parity is not None:
            self.parity = np.asarray(self.parity)[order]

    def __len__(self):
        return self.energies.size


def sho_exact_energy(beta: float, omega: float) -> float:
    """Thermal energy of one harmonic oscillator, (hw/2) coth(beta hw / 2).

    Computed as the Boltzmann sum over E_n = hw (n + 1/2) to convergence.
    """
    if not (beta > 0 and omega > 0):
        raise ValueError("beta and omega must be positive")
    bw = beta * omega
    num = 0.0
    den = 0.0
    n = 0
    while True:
        w = math.exp(-bw * n)
        num += (n + 0.5) * w
        den += w
        n += 1
        if w < 1e-18 * den or n > 10_000_000:
            break
    return omega * num / den


def _tridiag_eigs(pot: np.ndarray, h: float, count: int):
    """Lowest eigenvalues/vectors of -(1/2) d2/dx2 + pot on a uniform grid."""
    d = pot + 1.0 / (h * h)
    e = np.full(pot.size - 1, -0.5 / (h * h))
    count = min(count, pot.size)
    vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1))
    return vals, vecs


def _relative_potential(x: np.ndarray, p: ModelParams, cap: float) -> np.ndarray:
    """(omega^2/2) x^2 + u2(sqrt(2) x) with the core capped for the grid."""
    v = 0.5 * p.omega**2 * x * x
    r2 = 2.0 * x * x
    r2 = np.maximum(r2, 1e-12)
    lj = _pair_lj(r2, p.epsilon)
    return v + np.minimum(lj, cap)


def grid_diagonalize(
    p: ModelParams,
    extent: float = 8.0,
    spacing: float = 0.01,
    count: int = 50,
    verify_convergence: bool = False,
    convergence_tol: float | None = None,
) -> EigenSpectrum:
    """Lowest eigenvalues of the trapped system for N <= 2 on a uniform grid.

    extent and spacing are in units r_e (the rotated axes use the same
    grid for N = 2).  verify_convergence re-solves on a refined grid and
    raises GridRefinementError if the ground state moved more than
    convergence_tol (default 1e-3 epsilon).
    """
    if p.n_particles not in (1, 2):
        raise ValueError("grid diagonalization supports N = 1 or 2 only")
    if spacing <= 0 or extent <= spacing:
        raise ValueError("need extent > spacing > 0")

    spec = _grid_solve(p, extent, spacing, count)
    if verify_convergence:
        tol = convergence_tol if convergence_tol is not None else 1e-3 * p.epsilon
        finer = _grid_solve(p, extent, spacing / 2.0, min(count, 4))
        shift = abs(spec.energies[0] - finer.energies[0])
        if shift > tol:
            raise GridRefinementError(
                f"ground state moved {shift:.3e} under grid halving (tol {tol:.3e})"
            )
    return spec


def _grid_solve(p: ModelParams, extent: float, spacing: float, count: int) -> EigenSpectrum:
    npts = int(round(2.0 * extent / spacing)) + 1
    if p.n_particles == 1:
        x = np.linspace(-extent, extent, npts)
        pot = 0.5 * p.omega**2 * x * x
        vals, _ = _tridiag_eigs(pot, x[1] - x[0], count)
        return EigenSpectrum(energies=vals[:count])

    # N = 2: rotated axes; the pair core acts as a wall, capped far above
    # every eigenvalue of interest
    cap = 1e4 * max(p.epsilon, p.omega**2 * extent**2)
    x = np.linspace(-extent, extent, npts)
    h = x[1] - x[0]
    com_pot = 0.5 * p.omega**2 * x * x
    rel_pot = _relative_potential(x, p, cap)
    com_vals, _ = _tridiag_eigs(com_pot, h, count)
    rel_vals, rel_vecs = _tridiag_eigs(rel_pot, h, count)
    # parity of the relative factor under x -> -x
    overlap = np.sum(rel_vecs * rel_vecs[::-1, :], axis=0)
    rel_parity = np.where(overlap > 0, 1, -1)

    total = com_vals[:, None] + rel_vals[None, :]
    parity = np.broadcast_to(rel_parity[None, :], total.shape)
    flat = total.ravel()
    order = np.argsort(flat)[:count]
    return EigenSpectrum(energies=flat[order], parity=parity.ravel()[order])


def canonical_average(spec: EigenSpectrum, beta: float, shift: float | None = None) -> float:
    """Thermal average energy over a finite spectrum.

    shift (default: the spectrum's own shift field) is added to every
    level; Boltzmann weights use the unshifted energies, so the shift is a
    pure additive constant.  A TruncationWarning is emitted when the top
    of the spectrum still carries weight above 1e-6.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if shift is None:
        shift = spec.shift
    e = spec.energies
    tail = math.exp(-beta * (e[-1] - e[0]))
    if tail > 1e-6:
        warnings.warn(
            f"spectrum truncation weight {tail:.2e} at beta={beta:g}; average is biased low",
            TruncationWarning,
            stacklevel=2,
        )
    w = np.exp(-beta * (e - e[0]))
    return float(np.sum((e + shift) * w) / np.sum(w))


def read_spectrum(path) -> EigenSpectrum:
    """Eigenvalue file: one real per line, '#' comment/header lines."""
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            values.append(float(line))
    return EigenSpectrum(energies=np.array(values))
