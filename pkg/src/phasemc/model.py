"""Physical model: harmonic trap plus Lennard-Jones pairs in reduced units.

Internal units are hbar = m = r_e = 1, where r_e = 2^(1/6) sigma is the pair
equilibrium separation.  The two physical inputs are the de Boer length
L_dB = 2^(1/6) hbar / (r_e sqrt(m eps)) and the dimensionless trap frequency
trap_ratio = omega r_e sqrt(m/eps); together with the inverse temperature
beta_lj = beta hbar omega_LJ they fix every derived scale:

    eps      = 2^(1/3) / L_dB^2
    omega    = trap_ratio * sqrt(eps)
    omega_LJ = sqrt(72 eps)           (curvature frequency of the pair well)
    beta     = beta_lj / omega_LJ
    Lambda_th = sqrt(2 pi beta)       (thermal de Broglie wavelength)

The trap is U1 = (omega^2/2) sum_j q_j^2 and the pair potential is
u2(r) = eps [ (1/r)^12 - 2 (1/r)^6 ], with every pair interacting unless an
explicit cut-off radius is set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Two particles closer than this (units r_e) are treated as coincident; the
# r^-12 core makes closer approaches meaningless at double precision.
COINCIDENCE_THRESHOLD = 1e-6


class ParameterError(ValueError):
    """A model or run parameter is outside its allowed domain."""


class SingularConfigurationError(ValueError):
    """Two particles (nearly) coincide, making the pair potential singular."""


@dataclass
class ModelParams:
    """All physical and algorithmic parameters in reduced units.

    u_cut is stored in units of hbar*omega (trap quanta); u_cut_energy is the
    same threshold converted to reduced energy units.  ``u_cut=None`` selects
    the default 5 hbar*omega, dropping to 2 hbar*omega for beta_lj < 2 where
    large displacements otherwise spoil the oscillator expansion.
    """

    n_particles: int
    de_boer: float
    trap_ratio: float
    beta_lj: float
    dimension: int = 1
    hermite_order: int = 6
    newton_iters: int = 6
    u_cut: float | None = None
    sym_order: int = 1
    statistics: str = "boson"
    lj_rcut: float | None = None
    q_cut: float | None = None  # optional direct cut on |Q_j|; None disables

    # derived, filled in __post_init__
    epsilon: float = field(init=False)
    omega: float = field(init=False)
    omega_lj: float = field(init=False)
    beta: float = field(init=False)
    lambda_th: float = field(init=False)
    u_cut_energy: float = field(init=False)

    def __post_init__(self):
        if self.n_particles < 1:
            raise ParameterError(f"n_particles must be >= 1, got {self.n_particles}")
        if self.dimension != 1:
            raise ParameterError("only dimension = 1 is implemented")
        for name in ("de_boer", "trap_ratio", "beta_lj"):
            v = getattr(self, name)
            if not (v > 0) or not math.isfinite(v):
                raise ParameterError(f"{name} must be positive and finite, got {v}")
        if self.hermite_order < 0:
            raise ParameterError(f"hermite_order must be >= 0, got {self.hermite_order}")
        if self.newton_iters < 1:
            raise ParameterError(f"newton_iters must be >= 1, got {self.newton_iters}")
        if self.sym_order not in (1, 2, 3):
            raise ParameterError(f"sym_order must be 1, 2 or 3, got {self.sym_order}")
        if self.statistics not in ("boson", "fermion"):
            raise ParameterError(f"statistics must be 'boson' or 'fermion', got {self.statistics!r}")
        if self.lj_rcut is not None and not self.lj_rcut > 0:
            raise ParameterError(f"lj_rcut must be positive, got {self.lj_rcut}")

        self.epsilon = 2.0 ** (1.0 / 3.0) / self.de_boer**2
        self.omega = self.trap_ratio * math.sqrt(self.epsilon)
        self.omega_lj = math.sqrt(72.0 * self.epsilon)
        self.beta = self.beta_lj / self.omega_lj
        self.lambda_th = math.sqrt(2.0 * math.pi * self.beta)
        if self.u_cut is None:
            self.u_cut = 5.0 if self.beta_lj >= 2.0 else 2.0
        if not self.u_cut > 0:
            raise ParameterError(f"u_cut must be positive, got {self.u_cut}")
        self.u_cut_energy = self.u_cut * self.omega


def build_params(de_boer, trap_ratio, beta_lj, n_particles=1, **kwargs) -> ModelParams:
    """Construct a fully derived parameter set from the physical inputs."""
    return ModelParams(
        n_particles=n_particles,
        de_boer=de_boer,
        trap_ratio=trap_ratio,
        beta_lj=beta_lj,
        **kwargs,
    )


def check_configuration(q: np.ndarray, n_particles: int | None = None) -> np.ndarray:
    """Validate a position vector: finite entries, no coincident pair."""
    q = np.asarray(q, dtype=float)
    if q.ndim != 1:
        raise ValueError("positions must be a 1D array for d = 1")
    if n_particles is not None and q.size != n_particles:
        raise ValueError(f"expected {n_particles} positions, got {q.size}")
    if not np.all(np.isfinite(q)):
        raise SingularConfigurationError("non-finite particle position")
    if q.size > 1:
        # nearest approach is between neighbors in sorted order
        qs = np.sort(q)
        if np.min(np.diff(qs)) < COINCIDENCE_THRESHOLD:
            raise SingularConfigurationError(
                f"particle pair closer than {COINCIDENCE_THRESHOLD} r_e"
            )
    return q


def _pair_lj(r2: np.ndarray, epsilon: float) -> np.ndarray:
    """LJ pair energy from squared separation: eps [(1/r)^12 - 2 (1/r)^6]."""
    inv6 = r2 ** -3
    return epsilon * (inv6 * inv6 - 2.0 * inv6)


def _pair_lj_d1(x: np.ndarray, epsilon: float) -> np.ndarray:
    """First derivative of the pair energy with respect to the separation x."""
    inv = 1.0 / x
    inv7 = inv**7
    return 12.0 * epsilon * (inv7 - inv7 * inv**6)


def _pair_lj_d2(r2: np.ndarray, epsilon: float) -> np.ndarray:
    """Second derivative of the pair energy with respect to the separation."""
    inv2 = 1.0 / r2
    inv8 = inv2**4
    inv14 = inv8 * inv2**3
    return epsilon * (156.0 * inv14 - 84.0 * inv8)


def _pair_matrix(q: np.ndarray, p: ModelParams):
    """Squared separations and the interaction mask (cut-off, no self pairs)."""
    dx = q[:, None] - q[None, :]
    r2 = dx * dx
    mask = ~np.eye(q.size, dtype=bool)
    if np.any(r2[mask] < COINCIDENCE_THRESHOLD**2):
        raise SingularConfigurationError("coincident particles in pair sum")
    if p.lj_rcut is not None:
        mask &= r2 < p.lj_rcut**2
    return dx, r2, mask


def potential_total(q: np.ndarray, p: ModelParams) -> float:
    """Total potential energy: trap plus all interacting LJ pairs (no shift)."""
    q = np.asarray(q, dtype=float)
    trap = 0.5 * p.omega**2 * float(np.dot(q, q))
    if q.size < 2:
        return trap
    _, r2, mask = _pair_matrix(q, p)
    # each pair appears twice in the matrix
    pair = 0.5 * float(np.sum(np.where(mask, _pair_lj(np.where(mask, r2, 1.0), p.epsilon), 0.0)))
    return trap + pair


def particle_energy_all(q: np.ndarray, p: ModelParams) -> np.ndarray:
    """Per-particle energies U_j = u1(q_j) + (1/2) sum_k u2(q_j, q_k).

    The half share of every pair makes sum_j U_j equal the total potential
    exactly.
    """
    q = np.asarray(q, dtype=float)
    u = 0.5 * p.omega**2 * q * q
    if q.size > 1:
        _, r2, mask = _pair_matrix(q, p)
        pair = np.where(mask, _pair_lj(np.where(mask, r2, 1.0), p.epsilon), 0.0)
        u = u + 0.5 * pair.sum(axis=1)
    return u


def particle_energy(j: int, q: np.ndarray, p: ModelParams) -> float:
    """Energy share of particle j (0-based index)."""
    return float(particle_energy_all(q, p)[j])


def particle_derivatives_all(q: np.ndarray, p: ModelParams):
    """Gradient and curvature of every U_j with respect to its own coordinate."""
    q = np.asarray(q, dtype=float)
    grad = p.omega**2 * q.copy()
    hess = np.full(q.size, p.omega**2)
    if q.size > 1:
        dx, r2, mask = _pair_matrix(q, p)
        safe = np.where(mask, dx, 1.0)
        grad = grad + 0.5 * np.where(mask, _pair_lj_d1(safe, p.epsilon), 0.0).sum(axis=1)
        hess = hess + 0.5 * np.where(mask, _pair_lj_d2(np.where(mask, r2, 1.0), p.epsilon), 0.0).sum(axis=1)
    return grad, hess


def particle_derivatives(j: int, q: np.ndarray, p: ModelParams):
    """Analytic (gradient, hessian) of U_j in q_j; scalars for d = 1."""
    grad, hess = particle_derivatives_all(q, p)
    return float(grad[j]), float(hess[j])


def particle_energy_at(j: int, x: float, q: np.ndarray, p: ModelParams) -> float:
    """U_j evaluated with particle j displaced to x, all others fixed."""
    qj = np.asarray(q, dtype=float).copy()
    qj[j] = x
    return float(particle_energy_all(qj, p)[j])


def particle_derivatives_at(x: np.ndarray, q: np.ndarray, p: ModelParams):
    """Gradient/curvature of each U_j at trial coordinates x (vector over j).

    Used by the Newton minimum search: particle j sits at x[j] while the
    field of the other particles is frozen at q.  Pairs outside the cut-off
    at the frozen positions stay excluded so the searched landscape matches
    the sampled potential.
    """
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    grad = p.omega**2 * x.copy()
    hess = np.full(x.size, p.omega**2)
    if q.size > 1:
        dx = x[:, None] - q[None, :]
        r2 = dx * dx
        mask = ~np.eye(q.size, dtype=bool)
        if p.lj_rcut is not None:
            dq = q[:, None] - q[None, :]
            mask &= dq * dq < p.lj_rcut**2
        # a Newton iterate may step onto a neighbor; clamp rather than raise,
        # the huge resulting gradient pushes the next iterate back out
        tiny = r2 < COINCIDENCE_THRESHOLD**2
        if np.any(tiny & mask):
            r2 = np.where(tiny, COINCIDENCE_THRESHOLD**2, r2)
            dx = np.where(tiny, np.where(dx >= 0, COINCIDENCE_THRESHOLD, -COINCIDENCE_THRESHOLD), dx)
        grad = grad + 0.5 * np.where(mask, _pair_lj_d1(np.where(mask, dx, 1.0), p.epsilon), 0.0).sum(axis=1)
        hess = hess + 0.5 * np.where(mask, _pair_lj_d2(np.where(mask, r2, 1.0), p.epsilon), 0.0).sum(axis=1)
    return grad, hess


def particle_energies_at(x: np.ndarray, q: np.ndarray, p: ModelParams) -> np.ndarray:
    """U_j at trial coordinates x (vector over j), other particles frozen at q."""
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    u = 0.5 * p.omega**2 * x * x
    if q.size > 1:
        dx = x[:, None] - q[None, :]
        r2 = dx * dx
        mask = ~np.eye(q.size, dtype=bool)
        if p.lj_rcut is not None:
            dq = q[:, None] - q[None, :]
            mask &= dq * dq < p.lj_rcut**2
        r2 = np.where(r2 < COINCIDENCE_THRESHOLD**2, COINCIDENCE_THRESHOLD**2, r2)
        u = u + 0.5 * np.where(mask, _pair_lj(np.where(mask, r2, 1.0), p.epsilon), 0.0).sum(axis=1)
    return u


def chain_energies_at(X: np.ndarray, Q: np.ndarray, p: ModelParams) -> np.ndarray:
    """U_j at trial coordinates X for a batch of chains (both (M, N))."""
    u = 0.5 * p.omega**2 * X * X
    n = Q.shape[1]
    if n > 1:
        dx = X[:, :, None] - Q[:, None, :]
        r2 = dx * dx
        mask = ~np.eye(n, dtype=bool)[None, :, :]
        if p.lj_rcut is not None:
            dq = Q[:, :, None] - Q[:, None, :]
            mask = mask & (dq * dq < p.lj_rcut**2)
        r2 = np.where(r2 < COINCIDENCE_THRESHOLD**2, COINCIDENCE_THRESHOLD**2, r2)
        u = u + 0.5 * np.sum(np.where(mask, _pair_lj(np.where(mask, r2, 1.0), p.epsilon), 0.0), axis=2)
    return u


def chain_derivatives_at(X: np.ndarray, Q: np.ndarray, p: ModelParams):
    """Batched gradient/curvature of U_j at trial coordinates X (chains in rows)."""
    grad = p.omega**2 * X.copy()
    hess = np.full_like(X, p.omega**2)
    n = Q.shape[1]
    if n > 1:
        dx = X[:, :, None] - Q[:, None, :]
        r2 = dx * dx
        mask = ~np.eye(n, dtype=bool)[None, :, :]
        if p.lj_rcut is not None:
            dq = Q[:, :, None] - Q[:, None, :]
            mask = mask & (dq * dq < p.lj_rcut**2)
        tiny = r2 < COINCIDENCE_THRESHOLD**2
        if np.any(tiny & mask):
            r2 = np.where(tiny, COINCIDENCE_THRESHOLD**2, r2)
            dx = np.where(tiny, np.where(dx >= 0, COINCIDENCE_THRESHOLD, -COINCIDENCE_THRESHOLD), dx)
        grad = grad + 0.5 * np.sum(np.where(mask, _pair_lj_d1(np.where(mask, dx, 1.0), p.epsilon), 0.0), axis=2)
        hess = hess + 0.5 * np.sum(np.where(mask, _pair_lj_d2(np.where(mask, r2, 1.0), p.epsilon), 0.0), axis=2)
    return grad, hess


def chain_potential_total(Q: np.ndarray, p: ModelParams) -> np.ndarray:
    """Total potential energy per chain row."""
    u = 0.5 * p.omega**2 * np.sum(Q * Q, axis=1)
    n = Q.shape[1]
    if n > 1:
        dx = Q[:, :, None] - Q[:, None, :]
        r2 = dx * dx
        mask = ~np.eye(n, dtype=bool)[None, :, :]
        if p.lj_rcut is not None:
            mask = mask & (r2 < p.lj_rcut**2)
        r2 = np.where(r2 < COINCIDENCE_THRESHOLD**2, COINCIDENCE_THRESHOLD**2, r2)
        u = u + 0.5 * np.sum(np.where(mask, _pair_lj(np.where(mask, r2, 1.0), p.epsilon), 0.0), axis=(1, 2))
    return u


def move_delta_energy(q_sorted: np.ndarray, i: int, x_new: float, p: ModelParams) -> float:
    """Energy change for moving particle i (positions sorted) to x_new.

    With a pair cut-off only the window of neighbors within lj_rcut of the
    old and new positions is summed, so the cost per trial move does not
    grow with system size.
    """
    x_old = q_sorted[i]
    d_trap = 0.5 * p.omega**2 * (x_new * x_new - x_old * x_old)
    n = q_sorted.size
    if n == 1:
        return d_trap
    eps = p.epsilon
    if p.lj_rcut is None:
        dx_new = x_new - q_sorted
        dx_old = x_old - q_sorted
        dx_new[i] = 1.0
        dx_old[i] = 1.0
        if np.min(np.abs(dx_new)) < COINCIDENCE_THRESHOLD:
            return math.inf
        e_new = _pair_lj(dx_new * dx_new, eps)
        e_old = _pair_lj(dx_old * dx_old, eps)
        e_new[i] = 0.0
        e_old[i] = 0.0
        return d_trap + float(e_new.sum() - e_old.sum())

    rc = p.lj_rcut
    total = d_trap
    for x, sgn in ((x_new, +1.0), (x_old, -1.0)):
        lo = np.searchsorted(q_sorted, x - rc, side="left")
        hi = np.searchsorted(q_sorted, x + rc, side="right")
        window = q_sorted[lo:hi]
        dx = x - window
        if lo <= i < hi:
            dx = np.delete(dx, i - lo)
        if dx.size:
            if sgn > 0 and np.min(np.abs(dx)) < COINCIDENCE_THRESHOLD:
                return math.inf
            total += sgn * float(_pair_lj(dx * dx, eps).sum())
    return total
