"""Analytic momentum integration of Maxwell-Boltzmann x W x symmetrization.

Every per-particle momentum integral reduces to Gaussian moments

    int dP e^{-alpha P^2/2} e^{i Qp P} P^n
      = sqrt(2 pi) alpha^{-(n+1)/2} e^{-Qp^2/2 alpha}
        * sum_m n! (i Qp/sqrt(alpha))^{n-2m} / ((2m)! (n-2m)!) * (2m-1)!!

with (-1)!! = 1.  For an active mode the commutation-function series is
expanded into monomials of the scaled momentum and each monomial dispatched
to such a moment with combined width alpha = 1; dimer phase factors shift
the phase argument (rescaled by sqrt(omega_j) for active modes, raw for
inactive ones where the bare Maxwell-Boltzmann width beta applies).

The per-configuration weight w(q) is the sign-weighted sum over
symmetrization terms of the product of per-particle integrals, normalized
so that the classical monomer case gives w = 1 exactly.  The exchange
phases are integrated against the bare thermal momentum width for every
particle, so each dimer contributes the Gaussian exp(-2 pi q_sep^2 /
Lambda_th^2) regardless of the pair's commutation factors; coupling the
phases into an active mode's momentum envelope would instead suppress
exchange by the zero-point width and erase the dimer effects this method
resolves.  Kinetic insertions act on the commutation factors only; the
exchange factors enter numerators as pure multiplicative weights.

Conjugation symmetry under p -> -p makes every term real; the imaginary
residual is checked against 1e-10 relative before being discarded.
Products are accumulated as log-magnitudes relative to the (strictly
positive) monomer product, which keeps many-particle weights
representable.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .meanfield import (
    ChainModes,
    LocalMode,
    Modes,
    MomentumPolynomial,
    compute_modes,
    hermite_coefficients,
    w_sho_polynomial,
)
from .model import ModelParams
from .symmetrization import SymTerm

# tolerance for the provably-zero imaginary residual of assembled weights
IMAG_TOL = 1e-10


def _double_factorial_odd(m: int) -> float:
    """(2m-1)!! with the (-1)!! = 1 convention."""
    out = 1.0
    for k in range(3, 2 * m, 2):
        out *= k
    return out if m > 0 else 1.0


def gaussian_moment(alpha: float, qp: complex, n: int) -> complex:
    """Moment of a Gaussian with an oscillating phase, see module docstring.

    qp may be complex; alpha must be positive.
    """
    if not alpha > 0:
        raise ValueError(f"Gaussian width alpha must be positive, got {alpha}")
    if n < 0:
        raise ValueError(f"moment order must be >= 0, got {n}")
    ra = math.sqrt(alpha)
    total = 0.0 + 0.0j
    for m in range(n // 2 + 1):
        total += (
            math.factorial(n)
            * (1j * qp / ra) ** (n - 2 * m)
            / (math.factorial(2 * m) * math.factorial(n - 2 * m))
            * _double_factorial_odd(m)
        )
    return math.sqrt(2.0 * math.pi) * ra ** -(n + 1) * cmath.exp(-(qp * qp) / (2.0 * alpha)) * total


@lru_cache(maxsize=8)
def _moment_poly_matrix(k_max: int) -> np.ndarray:
    """F[k, t] so that sum_t F[k, t] (i qp)^t is the moment's polynomial part
    at alpha = 1 (the e^{-qp^2/2} sqrt(2 pi) prefactor handled separately)."""
    F = np.zeros((k_max + 1, k_max + 1))
    for k in range(k_max + 1):
        for m in range(k // 2 + 1):
            F[k, k - 2 * m] = (
                math.factorial(k)
                / (math.factorial(2 * m) * math.factorial(k - 2 * m))
                * _double_factorial_odd(m)
            )
    return F


class WeightTables:
    """Immutable coefficient tables for a given Hermite truncation order."""

    def __init__(self, n_max: int):
        self.n_max = n_max
        self.k_max = n_max + 2  # one P^2 kinetic insertion on top of H_{n_max}
        hcoef = hermite_coefficients(n_max)
        F = _moment_poly_matrix(self.k_max)
        # AF[n, t]: polynomial (in i*qp) of the moment-integrated H_n(P);
        # AF2 is the same with the P^2 kinetic insertion
        self.AF = hcoef @ F[: n_max + 1, :]
        self.AF2 = hcoef @ F[2 : n_max + 3, :]
        n = np.arange(n_max + 1)
        self.inv_norm = 1.0 / (2.0**n * np.array([math.factorial(int(v)) for v in n]))
        self.i_pow = 1j**n


@lru_cache(maxsize=8)
def get_tables(n_max: int) -> WeightTables:
    return WeightTables(n_max)


def _hermite_rows(z: np.ndarray, n_max: int) -> np.ndarray:
    """H_n(z) for n = 0..n_max, stacked as rows over the batch z."""
    z = np.asarray(z, dtype=float)
    out = np.empty((n_max + 1,) + z.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 2.0 * z
    for n in range(1, n_max):
        out[n + 1] = 2.0 * z * out[n] - 2.0 * n * out[n - 1]
    return out


def _eval_active(beta_omega, Q, phi_scaled, omega, beta, tables):
    """Batched per-particle integrals for active modes.

    Returns (pref, val0, val2): the normalized integral is e^pref * val0 and
    the kinetic (p^2/2m) insertion is e^pref * val2.  val0 is complex with a
    provably-zero imaginary part and strictly positive real part when
    phi_scaled = 0.
    """
    bw = np.asarray(beta_omega, dtype=float)
    Q = np.asarray(Q, dtype=float)
    phi = np.asarray(phi_scaled, dtype=float)
    omega = np.asarray(omega, dtype=float)
    s = phi - Q
    k = np.arange(tables.k_max + 1)
    powers = (1j * s)[None, :] ** k[:, None]
    M0 = tables.AF @ powers
    M2 = tables.AF2 @ powers
    hq = _hermite_rows(Q, tables.n_max)
    coef = (tables.i_pow * tables.inv_norm)[:, None] * np.exp(-bw[None, :] * np.arange(tables.n_max + 1)[:, None])
    raw0 = np.sum(coef * hq * M0, axis=0)
    raw2 = np.sum(coef * hq * M2, axis=0)
    pref = 0.5 * np.log(2.0 * beta * omega) + 0.5 * (bw - 1.0) * Q * Q - 0.5 * bw - 0.5 * s * s
    return pref, raw0, 0.5 * omega * raw2


def _eval_inactive(phi_raw, beta):
    """Batched integrals for unit commutation function (Maxwell-Boltzmann)."""
    c = np.asarray(phi_raw, dtype=float)
    pref = -c * c / (2.0 * beta)
    val0 = np.ones_like(c, dtype=complex)
    val2 = ((1.0 - c * c / beta) / (2.0 * beta)).astype(complex)
    return pref, val0, val2


def _eval_contexts(modes: Modes, phi_raw: np.ndarray, idx: np.ndarray, p: ModelParams, tables: WeightTables):
    """Integrals for a batch of (particle, phase) contexts.

    idx selects the particle of each context; phi_raw is the raw momentum
    phase coefficient (sum of dimer separations touching that particle).
    """
    act = modes.active[idx]
    pref = np.empty(idx.size)
    val0 = np.empty(idx.size, dtype=complex)
    val2 = np.empty(idx.size, dtype=complex)
    if np.any(act):
        ia = np.where(act)[0]
        jj = idx[ia]
        om = modes.omega[jj]
        pref[ia], val0[ia], val2[ia] = _eval_active(
            p.beta * om, modes.Q[jj], phi_raw[ia] * np.sqrt(om), om, p.beta, tables
        )
    if np.any(~act):
        ii = np.where(~act)[0]
        pref[ii], val0[ii], val2[ii] = _eval_inactive(phi_raw[ii], p.beta)
    return pref, val0, val2


@dataclass
class WeightComponents:
    """Loop-order components of the integrated weight, monomer-relative.

    log_scale is the log of the strictly positive monomer product; wb[b]
    and kb[b] are the order-(b+1) group sums of term weights and kinetic
    numerators divided by that product.  Statistics signs are not applied
    here.
    """

    log_scale: float
    wb: np.ndarray  # shape (3,): monomer, dimer sum, double-dimer sum
    kb: np.ndarray
    # per-term detail in enumeration order (monomer first, then dimers
    # left to right, then double dimers)
    term_orders: np.ndarray
    term_weights: np.ndarray
    term_kinetics: np.ndarray


def weight_components(q_sorted: np.ndarray, modes: Modes, p: ModelParams, tables: WeightTables | None = None) -> WeightComponents:
    """All loop-order weight components of one sorted configuration."""
    if tables is None:
        tables = get_tables(p.hermite_order)
    n = q_sorted.size
    beta = p.beta

    # monomer pass: every particle with zero phase
    idx_all = np.arange(n)
    pref0, val00, val20 = _eval_contexts(modes, np.zeros(n), idx_all, p, tables)
    mono = val00.real
    if np.any(mono <= 0.0):
        # truncated series dipped non-positive (far outside the active
        # window); treat as a hard numerical failure rather than guess
        raise FloatingPointError("non-positive monomer commutation factor")
    imag_scale = np.abs(mono) + np.abs(val20.real)
    if np.any(np.abs(val00.imag) + np.abs(val20.imag) > 1e-9 * imag_scale):
        raise FloatingPointError("commutation factor has a non-negligible imaginary part")
    kappa = val20.real / mono
    log_scale = float(np.sum(pref0) + np.sum(np.log(mono)))
    ksum = float(np.sum(kappa))

    wb = np.array([1.0, 0.0, 0.0])
    kb = np.array([ksum, 0.0, 0.0])
    term_orders = [1]
    term_weights = [1.0]
    term_kinetics = [ksum]

    if p.sym_order >= 2 and n >= 2:
        q_sep = q_sorted[:-1] - q_sorted[1:]
        # thermal-width phase integrals: the two members of dimer d carry
        # e^{-q_sep^2/(2 beta)} each; kinetic insertions act on the
        # commutation factors only, exchange factors are pure weights
        R = np.exp(-q_sep * q_sep / beta)
        Kd = ksum * R
        wb[1] = float(np.sum(R))
        kb[1] = float(np.sum(Kd))
        term_orders += [2] * (n - 1)
        term_weights += list(R)
        term_kinetics += list(Kd)

        if p.sym_order >= 3 and n >= 4:
            for j in range(n - 3):
                for k in range(j + 2, n - 1):
                    w2 = R[j] * R[k]
                    k2 = ksum * w2
                    wb[2] += w2
                    kb[2] += k2
                    term_orders.append(3)
                    term_weights.append(w2)
                    term_kinetics.append(k2)

    return WeightComponents(
        log_scale=log_scale,
        wb=wb,
        kb=kb,
        term_orders=np.array(term_orders),
        term_weights=np.array(term_weights),
        term_kinetics=np.array(term_kinetics),
    )


def weight_components_chains(Q: np.ndarray, modes: ChainModes, p: ModelParams, tables: WeightTables):
    """Loop-order weight components for a batch of sorted chains.

    Returns (log_scale (M,), wb (M, 3), kb (M, 3)) with the same
    monomer-relative conventions as WeightComponents.
    """
    M, n = Q.shape
    beta = p.beta
    act = modes.active.ravel()
    pref = np.zeros(M * n)
    val0 = np.ones(M * n, dtype=complex)
    val2 = np.full(M * n, 1.0 / (2.0 * beta), dtype=complex)
    if np.any(act):
        om = modes.omega.ravel()[act]
        qs = modes.Q.ravel()[act]
        pref[act], val0[act], val2[act] = _eval_active(
            beta * om, qs, np.zeros(om.size), om, beta, tables
        )
    mono = val0.real.reshape(M, n)
    if np.any(mono <= 0.0):
        raise FloatingPointError("non-positive monomer commutation factor")
    if np.sum(np.abs(val0.imag)) + np.sum(np.abs(val2.imag)) > 1e-9 * np.sum(np.abs(mono)):
        raise FloatingPointError("commutation factor has a non-negligible imaginary part")
    kappa = (val2.real.reshape(M, n)) / mono
    log_scale = np.sum(pref.reshape(M, n), axis=1) + np.sum(np.log(mono), axis=1)
    ksum = np.sum(kappa, axis=1)

    wb = np.zeros((M, 3))
    kb = np.zeros((M, 3))
    wb[:, 0] = 1.0
    kb[:, 0] = ksum
    if p.sym_order >= 2 and n >= 2:
        q_sep = Q[:, :-1] - Q[:, 1:]
        R = np.exp(-q_sep * q_sep / beta)
        wb[:, 1] = np.sum(R, axis=1)
        kb[:, 1] = ksum * wb[:, 1]
        if p.sym_order >= 3 and n >= 4:
            for j in range(n - 3):
                for k in range(j + 2, n - 1):
                    wb[:, 2] += R[:, j] * R[:, k]
        kb[:, 2] = ksum * wb[:, 2]
    return log_scale, wb, kb


@dataclass
class IntegratedWeight:
    """Momentum-integrated configuration weight in log-magnitude form.

    The physical weight is sign * exp(log_magnitude); kinetic_rel and the
    per-term arrays are stored relative to exp(log_scale) (the positive
    monomer product), so the kinetic-weighted companion integral is
    kinetic_rel * exp(log_scale).
    """

    log_scale: float
    weight_rel: float
    kinetic_rel: float
    term_orders: np.ndarray
    term_weights: np.ndarray
    term_kinetics: np.ndarray

    @property
    def sign(self) -> int:
        return 1 if self.weight_rel >= 0 else -1

    @property
    def log_magnitude(self) -> float:
        if self.weight_rel == 0.0:
            return -math.inf
        return self.log_scale + math.log(abs(self.weight_rel))

    @property
    def value(self) -> float:
        """w(q) itself; may under/overflow for extreme parameters."""
        return self.weight_rel * math.exp(self.log_scale)


def integrated_weight(q: np.ndarray, modes: Modes, sym_terms: list[SymTerm], p: ModelParams) -> IntegratedWeight:
    """Assemble w(q) and its kinetic companion from explicit terms.

    Accepts any list of SymTerm (signs included); the classical monomer
    with all modes inactive gives exactly weight_rel = 1, log_scale = 0.
    Exchange phases integrate at the thermal width (see module docstring).
    """
    q = np.asarray(q, dtype=float)
    tables = get_tables(p.hermite_order)
    n = q.size
    beta = p.beta

    pref0, val00, val20 = _eval_contexts(modes, np.zeros(n), np.arange(n), p, tables)
    mono = val00.real
    if np.any(mono <= 0.0):
        raise FloatingPointError("non-positive monomer commutation factor")
    kappa = val20.real / mono
    log_scale = float(np.sum(pref0) + np.sum(np.log(mono)))
    ksum = float(np.sum(kappa))

    # the commutation factors are assembled in complex arithmetic; their
    # imaginary residual is provably zero and checked before discarding
    imag = float(np.sum(np.abs(val00.imag)))
    if imag > IMAG_TOL * float(np.sum(np.abs(mono))):
        raise FloatingPointError(
            f"integrated weight imaginary residual {imag:.3e} exceeds tolerance"
        )

    total = 0.0
    kin_total = 0.0
    orders, weights, kinetics = [], [], []
    for term in sym_terms:
        w_t = 1.0
        for c in term.phases.values():
            w_t *= math.exp(-c * c / (2.0 * beta))
        k_t = ksum * w_t
        w_t *= term.sign
        k_t *= term.sign
        total += w_t
        kin_total += k_t
        orders.append(term.order)
        weights.append(w_t)
        kinetics.append(k_t)

    return IntegratedWeight(
        log_scale=log_scale,
        weight_rel=total,
        kinetic_rel=kin_total,
        term_orders=np.array(orders),
        term_weights=np.array(weights),
        term_kinetics=np.array(kinetics),
    )


def integrate_particle(
    mode: LocalMode,
    w_poly: MomentumPolynomial | None,
    dimer_phases,
    kinetic_order: int,
    beta: float,
) -> complex:
    """Raw momentum integral of MB x W x dimer phases x p^kinetic_order.

    dimer_phases is a sequence of raw phase coefficients c (factors
    e^{i c p}); for an active mode they are rescaled internally into the
    mode's momentum units.  With an inactive mode (w_poly None) and no
    phases, kinetic_order = 0 recovers the bare Maxwell-Boltzmann
    normalization sqrt(2 pi / beta).
    """
    if kinetic_order not in (0, 2):
        raise ValueError("kinetic_order must be 0 or 2")
    c_sum = float(np.sum(dimer_phases)) if len(dimer_phases) else 0.0
    if w_poly is None or not mode.active:
        return gaussian_moment(beta, c_sum, kinetic_order)
    om = mode.omega_j
    qp = c_sum * math.sqrt(om) + w_poly.phase
    total = 0.0 + 0.0j
    for k, ck in enumerate(w_poly.coefficients):
        total += ck * gaussian_moment(w_poly.alpha, qp, k + kinetic_order)
    jac = math.sqrt(om) * om ** (kinetic_order // 2)
    return jac * math.exp(w_poly.prefactor_log) * total


def make_w_polynomials(modes: Modes, p: ModelParams) -> list[MomentumPolynomial | None]:
    """Per-particle commutation polynomials (None where inactive)."""
    out = []
    for j in range(modes.active.size):
        if modes.active[j]:
            out.append(w_sho_polynomial(modes[j], p.beta * modes.omega[j], p.hermite_order))
        else:
            out.append(None)
    return out
