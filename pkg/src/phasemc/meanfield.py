"""Per-particle effective oscillators and the single-mode commutation function.

Each configuration maps every particle onto an instantaneous harmonic
oscillator: a fixed number of Newton iterations walks q_j to the local
minimum of its energy share U_j, and the curvature there defines the mode
frequency omega_j = sqrt(U_j'') and the scaled displacement
Q_j = sqrt(omega_j) (q_j - qbar_j).  Particles whose curvature is not
positive, whose energy excess U_j(q_j) - Ubar_j reaches the cut-off, or
whose Newton walk leaves the finite domain are flagged inactive and carry a
unit commutation function.

The single active mode's commutation function is

    W(P, Q) = sqrt(2) e^{-iPQ} e^{bw (P^2+Q^2)/2} e^{-(P^2+Q^2)/2}
              * sum_n [ i^n e^{-bw (n+1/2)} / (2^n n!) ] H_n(P) H_n(Q)

with bw = beta hbar omega_j and H_n the physicists' Hermite polynomials.
Multiplied by the Maxwell-Boltzmann factor e^{-bw P^2/2} the Gaussian width
in P collapses to exactly 1, which is the form carried by
MomentumPolynomial for the analytic momentum integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    ModelParams,
    chain_derivatives_at,
    chain_energies_at,
    particle_derivatives_at,
    particle_energies_at,
    particle_energy_all,
)


@dataclass
class LocalMode:
    """Effective oscillator of one particle in one configuration."""

    active: bool
    q_bar: float = 0.0
    u_bar: float = 0.0
    curvature: float = 0.0
    omega_j: float = 0.0
    Q_j: float = 0.0


@dataclass
class Modes:
    """Vectorized local modes for a whole configuration."""

    active: np.ndarray  # bool (N,)
    q_bar: np.ndarray
    u_bar: np.ndarray
    curvature: np.ndarray
    omega: np.ndarray  # sqrt(curvature) where active, 0 elsewhere
    Q: np.ndarray  # sqrt(omega_j) * (q_j - qbar_j) where active

    def __getitem__(self, j: int) -> LocalMode:
        if not self.active[j]:
            return LocalMode(active=False)
        return LocalMode(
            active=True,
            q_bar=float(self.q_bar[j]),
            u_bar=float(self.u_bar[j]),
            curvature=float(self.curvature[j]),
            omega_j=float(self.omega[j]),
            Q_j=float(self.Q[j]),
        )


def compute_modes(q: np.ndarray, p: ModelParams) -> Modes:
    """Newton minimum search and mode assembly for every particle at once.

    Each Newton step is backtracked (halved) while it would increase U_j:
    for a quadratic well the full step always lowers U_j so the backtracking
    never engages, but near the pair potential's inflection a full step can
    catapult the iterate into a neighbor's repulsive core, where Newton
    would then converge on the singularity instead of the local minimum.
    """
    q = np.asarray(q, dtype=float)
    x = q.copy()
    u_x = particle_energies_at(x, q, p)
    for _ in range(p.newton_iters):
        grad, hess = particle_derivatives_at(x, q, p)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(hess != 0.0, grad / hess, 0.0)
        step = np.where(np.isfinite(step), step, 0.0)
        x_new = x - step
        u_new = particle_energies_at(x_new, q, p)
        for _ in range(30):
            worse = np.isfinite(u_x) & ~(u_new <= u_x + 1e-12 * np.abs(u_x))
            if not np.any(worse):
                break
            step = np.where(worse, 0.5 * step, step)
            x_new = x - step
            u_new = particle_energies_at(x_new, q, p)
        x, u_x = x_new, u_new
        bad = ~np.isfinite(x)
        if np.any(bad):
            x[bad] = np.nan

    finite = np.isfinite(x)
    xs = np.where(finite, x, q)
    _, hess = particle_derivatives_at(xs, q, p)
    u_bar = particle_energies_at(xs, q, p)
    u_here = particle_energy_all(q, p)

    # the cut applies to the actual energy excess and to the quadratic-model
    # excess lambda (q - qbar)^2 / 2 = hbar omega_j Q_j^2 / 2; the two agree
    # for a true quadratic well, and the second one catches Newton walks that
    # hopped into a different (equally deep) well, where the oscillator
    # expansion about the far minimum is meaningless
    quad_excess = 0.5 * np.where(hess > 0.0, hess, 0.0) * (q - xs) ** 2
    active = (
        finite
        & (hess > 0.0)
        & (u_here - u_bar < p.u_cut_energy)
        & (quad_excess < p.u_cut_energy)
    )
    omega = np.where(active, np.sqrt(np.where(hess > 0.0, hess, 1.0)), 0.0)
    Q = np.where(active, np.sqrt(omega) * (q - xs), 0.0)
    if p.q_cut is not None:
        active &= np.abs(Q) < p.q_cut
        omega = np.where(active, omega, 0.0)
        Q = np.where(active, Q, 0.0)
    return Modes(
        active=active,
        q_bar=np.where(active, xs, 0.0),
        u_bar=np.where(active, u_bar, 0.0),
        curvature=np.where(active, hess, 0.0),
        omega=omega,
        Q=Q,
    )


def locate_minimum(j: int, q: np.ndarray, p: ModelParams) -> LocalMode:
    """Local mode of particle j (0-based); inactive modes mean W_j = 1."""
    return compute_modes(q, p)[j]


@dataclass
class ChainModes:
    """Local modes for a batch of chains, all arrays shaped (M, N)."""

    active: np.ndarray
    omega: np.ndarray
    Q: np.ndarray


def compute_modes_chains(Q: np.ndarray, p: ModelParams, u_here: np.ndarray | None = None) -> ChainModes:
    """Batched version of compute_modes over chain rows.

    u_here may pass in precomputed per-particle energies at Q to save one
    evaluation.  Same Newton backtracking and activity rules as the
    single-configuration path.
    """
    X = Q.copy()
    u_x = chain_energies_at(X, Q, p) if u_here is None else u_here.copy()
    for _ in range(p.newton_iters):
        grad, hess = chain_derivatives_at(X, Q, p)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(hess != 0.0, grad / hess, 0.0)
        step = np.where(np.isfinite(step), step, 0.0)
        x_new = X - step
        u_new = chain_energies_at(x_new, Q, p)
        for _ in range(30):
            worse = np.isfinite(u_x) & ~(u_new <= u_x + 1e-12 * np.abs(u_x))
            if not np.any(worse):
                break
            step = np.where(worse, 0.5 * step, step)
            x_new = X - step
            u_new = chain_energies_at(x_new, Q, p)
        X, u_x = x_new, u_new
        bad = ~np.isfinite(X)
        if np.any(bad):
            X[bad] = np.nan

    finite = np.isfinite(X)
    xs = np.where(finite, X, Q)
    _, hess = chain_derivatives_at(xs, Q, p)
    u_bar = chain_energies_at(xs, Q, p)
    u_q = chain_energies_at(Q, Q, p) if u_here is None else u_here
    quad_excess = 0.5 * np.where(hess > 0.0, hess, 0.0) * (Q - xs) ** 2
    active = (
        finite
        & (hess > 0.0)
        & (u_q - u_bar < p.u_cut_energy)
        & (quad_excess < p.u_cut_energy)
    )
    omega = np.where(active, np.sqrt(np.where(hess > 0.0, hess, 1.0)), 0.0)
    Qs = np.where(active, np.sqrt(omega) * (Q - xs), 0.0)
    if p.q_cut is not None:
        active = active & (np.abs(Qs) < p.q_cut)
        omega = np.where(active, omega, 0.0)
        Qs = np.where(active, Qs, 0.0)
    return ChainModes(active=active, omega=omega, Q=Qs)


def hermite(n: int, z):
    """Physicists' Hermite polynomial H_n(z) by upward recurrence.

    Accepts scalars or arrays; stable for the orders used here (n <= ~20).
    """
    if n < 0:
        raise ValueError("Hermite order must be >= 0")
    z = np.asarray(z, dtype=float)
    h_prev = np.ones_like(z)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * z
    for k in range(1, n):
        h, h_prev = 2.0 * z * h - 2.0 * k * h_prev, h
    return h if h.ndim else float(h)


def hermite_coefficients(n_max: int) -> np.ndarray:
    """Monomial coefficient table: H_n(z) = sum_k coef[n, k] z^k."""
    coef = np.zeros((n_max + 1, n_max + 1))
    coef[0, 0] = 1.0
    if n_max >= 1:
        coef[1, 1] = 2.0
    for n in range(1, n_max):
        coef[n + 1, 1:] += 2.0 * coef[n, :-1]
        coef[n + 1, :] -= 2.0 * n * coef[n - 1, :]
    return coef


@dataclass
class MomentumPolynomial:
    """Gaussian x phase x polynomial form of one mode's momentum integrand.

    Represents e^{prefactor_log} e^{-alpha P^2/2} e^{i P phase} sum_k c_k P^k
    in the scaled momentum P.  alpha is the combined width of the
    Maxwell-Boltzmann factor and the commutation function (exactly 1 for an
    active mode); the commutation function alone is recovered by dividing
    the Maxwell-Boltzmann factor back out, see evaluate_w.
    """

    coefficients: np.ndarray  # complex, c_0 .. c_K
    alpha: float
    phase: float  # Q' in e^{iP Q'}
    prefactor_log: float
    beta_omega: float
    Q: float

    def evaluate_mbw(self, P):
        """Maxwell-Boltzmann times commutation function at scaled momentum P."""
        P = np.asarray(P, dtype=complex)
        poly = np.polynomial.polynomial.polyval(P, self.coefficients)
        return np.exp(self.prefactor_log - 0.5 * self.alpha * P**2 + 1j * P * self.phase) * poly

    def evaluate_w(self, P):
        """Commutation function W(P, Q) itself (Maxwell-Boltzmann removed)."""
        P = np.asarray(P, dtype=complex)
        return self.evaluate_mbw(P) * np.exp(0.5 * self.beta_omega * P**2)


def w_sho_polynomial(mode: LocalMode, beta_hbar_omega: float, n_max: int) -> MomentumPolynomial:
    """Momentum-polynomial data of one active mode's commutation function.

    The returned object carries the Maxwell-Boltzmann combined integrand;
    the series is truncated at Hermite order n_max.
    """
    if not mode.active:
        raise ValueError("w_sho_polynomial requires an active mode")
    bw = beta_hbar_omega
    Q = mode.Q_j
    hcoef = hermite_coefficients(n_max)
    hq = np.array([hermite(n, Q) for n in range(n_max + 1)])
    # series coefficients i^n e^{-bw n} / (2^n n!); the e^{-bw/2} and the
    # Q-Gaussian growth are pulled into the log prefactor to avoid overflow
    n = np.arange(n_max + 1)
    cn = (1j**n) * np.exp(-bw * n) / (2.0**n * np.array([math.factorial(k) for k in n]))
    coeffs = (cn * hq) @ hcoef
    pref = 0.5 * math.log(2.0) + 0.5 * (bw - 1.0) * Q * Q - 0.5 * bw
    return MomentumPolynomial(
        coefficients=coeffs.astype(complex),
        alpha=1.0,
        phase=-Q,
        prefactor_log=pref,
        beta_omega=bw,
        Q=Q,
    )
