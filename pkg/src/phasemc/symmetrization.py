"""Loop expansion of the wave-function symmetrization factor.

Order a = 1 keeps the monomer (distinguishable particles), a = 2 adds the
N-1 nearest-neighbor dimer transpositions, and a = 3 adds the
non-overlapping double dimers.  A dimer on the sorted pair (j, j+1)
contributes the momentum phase e^{i q_sep p_j} e^{-i q_sep p_{j+1}} with
q_sep = q_j - q_{j+1}; the parity factor is +1 for bosons, and for fermions
(-1)^(b-1) with b the number of transposed pairs in the term.

Positions are indexed in ascending coordinate order, so "nearest neighbor"
always means adjacent in the sorted configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class SymTerm:
    """One term of the truncated symmetrization sum.

    order is the loop-group label b (1 monomer, 2 single dimer, 3 double
    dimer); phases maps particle index -> coefficient c of its momentum
    phase factor e^{i c p}.
    """

    sign: int
    order: int
    phases: dict[int, float] = field(default_factory=dict)


def _dimer_phases(q: np.ndarray, j: int) -> dict[int, float]:
    q_sep = float(q[j] - q[j + 1])
    return {j: q_sep, j + 1: -q_sep}


def enumerate_terms(q: np.ndarray, a: int, statistics: str) -> list[SymTerm]:
    """All symmetrization terms of order <= a for a sorted configuration."""
    if a not in (1, 2, 3):
        raise ValueError(f"symmetrization order must be 1, 2 or 3, got {a}")
    if statistics not in ("boson", "fermion"):
        raise ValueError(f"unknown statistics {statistics!r}")
    q = np.asarray(q, dtype=float)
    if q.size > 1 and np.any(np.diff(q) < 0):
        raise ValueError("positions must be sorted ascending")
    sgn = 1 if statistics == "boson" else -1
    n = q.size

    terms = [SymTerm(sign=1, order=1)]
    if a >= 2:
        for j in range(n - 1):
            terms.append(SymTerm(sign=sgn, order=2, phases=_dimer_phases(q, j)))
    if a >= 3:
        # two dimers may not share a particle: second pair starts at j+2
        for j in range(n - 3):
            for k in range(j + 2, n - 1):
                phases = _dimer_phases(q, j)
                phases.update(_dimer_phases(q, k))
                terms.append(SymTerm(sign=sgn * sgn, order=3, phases=phases))
    return terms


def classical_dimer_weight(q_sep: float, lambda_th: float) -> float:
    """Momentum-integrated dimer factor when no commutation function acts.

    Integrating the dimer phases of one pair against Maxwell-Boltzmann
    momenta gives exp(-2 pi q_sep^2 / Lambda_th^2); exchange is therefore
    negligible unless neighbors sit within a thermal wavelength.
    """
    return math.exp(-2.0 * math.pi * q_sep * q_sep / (lambda_th * lambda_th))
