"""Metropolis Monte Carlo over configurations with umbrella reweighting.

The chain samples the classical Boltzmann weight e^{-beta U(q)} with one
attempted single-particle move per particle and cycle.  Every eval_stride
cycles the momentum-integrated weight w(q) and the observable numerators
are computed, and quantum averages come out as ratios of canonical
averages, <A>_w = <A w> / <w>.

The run is split into n_blocks blocks and the error bar on every ratio is
twice the standard deviation of the per-block ratios divided by
sqrt(n_blocks) (a ~96% confidence interval).  Blocks are contiguous
segments of n_chains independent chains driven in lockstep (the umbrella
weight carries large fluctuations, so throughput comes from vectorizing
across chains; chains are statistically independent, which only
strengthens the block error estimate).  Several reweighting variants
(classical, monomer, +dimers, +double dimers, either statistics) can be
accumulated on one shared set of chains, which is exact because the
sampling weight does not depend on the variant, and makes small
between-variant differences measurable through correlated block
statistics.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .meanfield import compute_modes_chains
from .model import (
    COINCIDENCE_THRESHOLD,
    ModelParams,
    chain_potential_total,
    move_delta_energy,
    _pair_lj,
)
from .observables import DensityProfile
from .quadrature import get_tables, weight_components_chains


@dataclass
class RunConfig:
    """Chain-length and bookkeeping knobs for one Monte Carlo run."""

    n_blocks: int = 500
    cycles_per_block: int = 600
    eval_stride: int = 6
    step_size: float | None = None  # None: tuned toward 50% acceptance
    rng_seed: int = 1
    equilibration_cycles: int | None = None  # None: 10% of per-chain cycles, floor 300
    n_chains: int = 100
    max_step: float = 2.0
    density_bins: int = 200
    density_qmax: float = 4.0

    def __post_init__(self):
        if self.n_blocks < 2:
            raise ValueError("n_blocks must be >= 2")
        if self.eval_stride < 1:
            raise ValueError("eval_stride must be >= 1")
        if self.cycles_per_block < self.eval_stride:
            raise ValueError("cycles_per_block must be >= eval_stride")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.n_chains < 1:
            raise ValueError("n_chains must be >= 1")


@dataclass(frozen=True)
class Variant:
    """One reweighting target evaluated on the shared chain."""

    commutation: bool = True  # False: classical, W = 1 and monomer only
    sym_order: int = 1
    statistics: str = "boson"

    @property
    def label(self) -> str:
        if not self.commutation:
            return "classical"
        name = {1: "quantum-monomer", 2: "quantum-dimer", 3: "quantum-double-dimer"}[self.sym_order]
        return name if self.sym_order == 1 else f"{name}/{self.statistics}"


@dataclass
class BlockAccumulator:
    """Per-block numerator/denominator sums for one variant."""

    n_blocks: int
    n_bins: int
    den: np.ndarray = field(init=False)
    num_u: np.ndarray = field(init=False)
    num_k: np.ndarray = field(init=False)
    dens: np.ndarray = field(init=False)
    overflow: float = field(init=False, default=0.0)
    counts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.den = np.zeros(self.n_blocks)
        self.num_u = np.zeros(self.n_blocks)
        self.num_k = np.zeros(self.n_blocks)
        self.dens = np.zeros((self.n_blocks, self.n_bins))
        self.counts = np.zeros(self.n_blocks, dtype=int)


@dataclass
class RunResult:
    """Umbrella-ratio estimates with block-statistics error bars."""

    variant: Variant
    seed: int
    step_size: float
    acceptance: float
    n_evals: int
    e_mean: float
    e_err: float
    k_mean: float
    k_err: float
    u_mean: float
    u_err: float
    denom_mean: float  # in the run's internal reference scale
    denom_err: float
    density: DensityProfile
    flags: list[str]
    block_den: np.ndarray
    block_num_u: np.ndarray
    block_num_k: np.ndarray
    elapsed_seconds: float


def _ratio_stats(num: np.ndarray, den: np.ndarray):
    """Pooled ratio estimate and 2 sigma / sqrt(B) block error."""
    total = float(np.sum(num)) / float(np.sum(den))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = num / den
    ratios = ratios[np.isfinite(ratios)]
    if ratios.size < 2:
        return total, math.inf
    err = 2.0 * float(np.std(ratios, ddof=1)) / math.sqrt(ratios.size)
    return total, err


def _sweep_chains(Q: np.ndarray, p: ModelParams, step: float, n_cycles: int, rng) -> int:
    """n_cycles Metropolis cycles on every chain row in lockstep.

    Rows stay sorted ascending; accepted moves that break the order
    trigger a per-row re-sort (identical particles, relabeling only).
    """
    M, n = Q.shape
    beta = p.beta
    eps = p.epsilon
    rc2 = None if p.lj_rcut is None else p.lj_rcut**2
    self_col = np.eye(n, dtype=bool)
    accepted = 0
    disp = rng.uniform(-step, step, size=(n_cycles, n, M))
    unif = rng.random(size=(n_cycles, n, M))
    for c in range(n_cycles):
        for i in range(n):
            x_old = Q[:, i]
            x_new = x_old + disp[c, i]
            du = 0.5 * p.omega**2 * (x_new * x_new - x_old * x_old)
            if n > 1:
                dxn = x_new[:, None] - Q
                dxo = x_old[:, None] - Q
                r2n = dxn * dxn
                r2o = dxo * dxo
                mask = ~self_col[i]
                if rc2 is None:
                    mn = mask
                    mo = mask
                else:
                    mn = mask & (r2n < rc2)
                    mo = mask & (r2o < rc2)
                coincident = np.any(mask & (r2n < COINCIDENCE_THRESHOLD**2), axis=1)
                e_n = np.sum(np.where(mn, _pair_lj(np.where(mn, r2n, 1.0), eps), 0.0), axis=1)
                e_o = np.sum(np.where(mo, _pair_lj(np.where(mo, r2o, 1.0), eps), 0.0), axis=1)
                du = du + e_n - e_o
                du = np.where(coincident, np.inf, du)
            with np.errstate(over="ignore"):
                accept = (du <= 0.0) | (unif[c, i] < np.exp(-beta * np.minimum(du, 700.0 / beta)))
            if not np.any(accept):
                continue
            accepted += int(np.sum(accept))
            Q[accept, i] = x_new[accept]
            broken = accept.copy()
            ordered = np.ones(M, dtype=bool)
            if i > 0:
                ordered &= Q[:, i] >= Q[:, i - 1]
            if i < n - 1:
                ordered &= Q[:, i] <= Q[:, i + 1]
            broken &= ~ordered
            if np.any(broken):
                Q[broken] = np.sort(Q[broken], axis=1)
    return accepted


def _initial_chains(p: ModelParams, m: int) -> np.ndarray:
    """Evenly spaced chains at the pair equilibrium distance, trap-centered."""
    n = p.n_particles
    row = (np.arange(n) - 0.5 * (n - 1)) * (1.0 if n > 1 else 0.0)
    return np.tile(row, (m, 1))


def tune_step(p: ModelParams, rc: RunConfig | None = None, rng=None) -> float:
    """Pilot-run step size targeting 50% acceptance, capped at max_step."""
    rc = rc or RunConfig()
    rng = rng or np.random.default_rng(12345)
    m = min(rc.n_chains, 32)
    Q = _initial_chains(p, m)
    step = min(0.4 / math.sqrt(p.beta * p.omega**2 + 1.0), rc.max_step)
    _sweep_chains(Q, p, step, 30, rng)
    for _ in range(10):
        acc = _sweep_chains(Q, p, step, 10, rng) / (10.0 * p.n_particles * m)
        step = float(np.clip(step * math.exp(1.5 * (acc - 0.5)), 1e-4, rc.max_step))
    return step


def _variant_values(variant: Variant, wb: np.ndarray, kb: np.ndarray):
    """Signed sums over loop orders, vectorized over chains ((M,3) inputs)."""
    s = 1.0 if variant.statistics == "boson" else -1.0
    w = wb[:, 0].copy()
    k = kb[:, 0].copy()
    if variant.sym_order >= 2:
        w += s * wb[:, 1]
        k += s * kb[:, 1]
    if variant.sym_order >= 3:
        w += wb[:, 2]
        k += kb[:, 2]
    return w, k


def _chains_for_blocks(n_blocks: int, requested: int) -> int:
    """Largest chain count <= requested that divides n_blocks."""
    m = min(requested, n_blocks)
    while n_blocks % m:
        m -= 1
    return m


def run_multi(p: ModelParams, rc: RunConfig, variants: list[Variant]) -> list[RunResult]:
    """Sample independent chains in lockstep, accumulating every variant."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(rc.rng_seed)
    tables = get_tables(p.hermite_order)
    n = p.n_particles
    beta = p.beta
    need_quantum = any(v.commutation for v in variants)
    max_order = max((v.sym_order for v in variants if v.commutation), default=1)
    p_eval = p if p.sym_order == max_order else _with_sym_order(p, max_order)

    m = _chains_for_blocks(rc.n_blocks, rc.n_chains)
    segments = rc.n_blocks // m
    step = rc.step_size if rc.step_size is not None else tune_step(p, rc, np.random.default_rng(rc.rng_seed + 7))

    Q = _initial_chains(p, m)
    per_chain_cycles = segments * rc.cycles_per_block
    equil = (
        rc.equilibration_cycles
        if rc.equilibration_cycles is not None
        else max(300, per_chain_cycles // 10)
    )

    # equilibrate all chains, collecting the weight scale for the reference
    log_scales = []
    done = 0
    while done < equil:
        chunk = min(5 * rc.eval_stride, equil - done)
        _sweep_chains(Q, p, step, chunk, rng)
        done += chunk
        if need_quantum and done > equil // 2:
            modes = compute_modes_chains(Q, p_eval)
            ls, _, _ = weight_components_chains(Q, modes, p_eval, tables)
            log_scales.append(ls)
    log_ref = float(np.median(np.concatenate(log_scales))) if log_scales else 0.0

    accs = [BlockAccumulator(rc.n_blocks, rc.density_bins) for _ in variants]
    q_max = rc.density_qmax
    bin_w = 2.0 * q_max / rc.density_bins
    accepted = 0
    n_evals = 0
    classical_k = n / (2.0 * beta)
    evals_per_block = rc.cycles_per_block // rc.eval_stride
    leftover = rc.cycles_per_block % rc.eval_stride

    for s in range(segments):
        block_ids = np.arange(m) * segments + s
        for _ in range(evals_per_block):
            accepted += _sweep_chains(Q, p, step, rc.eval_stride, rng)
            if need_quantum:
                modes = compute_modes_chains(Q, p_eval)
                ls, wb, kb = weight_components_chains(Q, modes, p_eval, tables)
                scale = np.exp(ls - log_ref)
            u_here = chain_potential_total(Q, p)
            idx = np.floor((Q + q_max) / bin_w).astype(int)
            inside = (idx >= 0) & (idx < rc.density_bins)
            idx_safe = np.clip(idx, 0, rc.density_bins - 1)
            n_evals += m
            for v, acc in zip(variants, accs):
                if v.commutation:
                    w_rel, k_rel = _variant_values(v, wb, kb)
                    w = w_rel * scale
                    k = k_rel * scale
                else:
                    w = np.ones(m)
                    k = np.full(m, classical_k)
                # block ids are distinct (one per chain), plain indexing is safe
                acc.den[block_ids] += w
                acc.num_u[block_ids] += u_here * w
                acc.num_k[block_ids] += k
                acc.counts[block_ids] += 1
                w_bins = np.where(inside, w[:, None], 0.0)
                np.add.at(
                    acc.dens,
                    (np.repeat(block_ids, n), idx_safe.ravel()),
                    w_bins.ravel(),
                )
                acc.overflow += float(np.sum(np.where(~inside, w[:, None], 0.0)))
        if leftover:
            accepted += _sweep_chains(Q, p, step, leftover, rng)

    elapsed = time.perf_counter() - t0
    acc_rate = accepted / ((per_chain_cycles + equil) * n * m)
    results = []
    for v, acc in zip(variants, accs):
        e_mean, e_err = _ratio_stats(acc.num_u + acc.num_k, acc.den)
        u_mean, u_err = _ratio_stats(acc.num_u, acc.den)
        k_mean, k_err = _ratio_stats(acc.num_k, acc.den)
        per_eval = acc.den / np.maximum(acc.counts, 1)
        denom_mean = float(np.mean(per_eval))
        denom_err = 2.0 * float(np.std(per_eval, ddof=1)) / math.sqrt(rc.n_blocks)
        flags = []
        if abs(denom_mean) < 2.0 * denom_err:
            flags.append("pole")

        den_tot = float(np.sum(acc.den))
        rho = acc.dens.sum(axis=0) / (den_tot * bin_w)
        with np.errstate(divide="ignore", invalid="ignore"):
            block_rho = acc.dens / acc.den[:, None]
        ok = np.isfinite(block_rho).all(axis=1)
        nb_ok = int(np.sum(ok))
        if nb_ok >= 2:
            rho_err = 2.0 * np.std(block_rho[ok], axis=0, ddof=1) / math.sqrt(nb_ok) / bin_w
        else:
            rho_err = np.full(rc.density_bins, np.inf)
        binned_weight = den_tot * n
        density = DensityProfile(
            centers=-q_max + (np.arange(rc.density_bins) + 0.5) * bin_w,
            rho=rho,
            rho_err=rho_err,
            bin_width=bin_w,
            n_particles=n,
            overflow_fraction=float(acc.overflow / binned_weight) if binned_weight != 0.0 else 0.0,
        )
        results.append(
            RunResult(
                variant=v,
                seed=rc.rng_seed,
                step_size=step,
                acceptance=acc_rate,
                n_evals=n_evals,
                e_mean=e_mean,
                e_err=e_err,
                k_mean=k_mean,
                k_err=k_err,
                u_mean=u_mean,
                u_err=u_err,
                denom_mean=denom_mean,
                denom_err=denom_err,
                density=density,
                flags=flags,
                block_den=acc.den.copy(),
                block_num_u=acc.num_u.copy(),
                block_num_k=acc.num_k.copy(),
                elapsed_seconds=elapsed,
            )
        )
    return results


def _with_sym_order(p: ModelParams, order: int) -> ModelParams:
    return ModelParams(
        n_particles=p.n_particles,
        de_boer=p.de_boer,
        trap_ratio=p.trap_ratio,
        beta_lj=p.beta_lj,
        dimension=p.dimension,
        hermite_order=p.hermite_order,
        newton_iters=p.newton_iters,
        u_cut=p.u_cut,
        sym_order=order,
        statistics=p.statistics,
        lj_rcut=p.lj_rcut,
        q_cut=p.q_cut,
    )


def run(p: ModelParams, rc: RunConfig, mode: str = "quantum") -> RunResult:
    """Single-variant run; mode is 'quantum' (uses p.sym_order/statistics) or 'classical'."""
    if mode not in ("quantum", "classical"):
        raise ValueError(f"mode must be 'quantum' or 'classical', got {mode!r}")
    variant = (
        Variant(commutation=True, sym_order=p.sym_order, statistics=p.statistics)
        if mode == "quantum"
        else Variant(commutation=False)
    )
    return run_multi(p, rc, [variant])[0]


def metropolis_cycle(q: np.ndarray, p: ModelParams, rc: RunConfig, rng=None) -> int:
    """One cycle (one attempted move per particle) on a sorted configuration.

    Single-configuration form of the chain sweep, kept for direct use and
    testing; q is modified in place.
    """
    rng = rng or np.random.default_rng()
    step = rc.step_size if rc.step_size is not None else 0.1
    n = q.size
    accepted = 0
    for i in range(n):
        x_new = q[i] + rng.uniform(-step, step)
        du = move_delta_energy(q, i, x_new, p)
        if du <= 0.0 or rng.random() < math.exp(-p.beta * du):
            q[i] = x_new
            accepted += 1
            if (i > 0 and x_new < q[i - 1]) or (i < n - 1 and x_new > q[i + 1]):
                q.sort()
    return accepted
