"""Closed-form weighted pressure on full shifts and the carpet dimension formulas.

On a full shift the weighted objective ``sum_i a_i H(q_i) + E f`` splits by
the chain rule into conditional entropies of coordinate ``l`` given
coordinates ``< l``, each weighted by ``b_{k-l+1}``.  Maximizing one
coordinate at a time from the last to the first is a nested log-sum-exp.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import (
    BernoulliMeasure,
    CylinderPotential,
    SpecError,
    SpongeSpec,
    WeightVector,
    digit_key,
    potential_values,
)


@dataclass(frozen=True, eq=False)
class NestedPressureResult:
    value: float
    # conditionals[l][prefix] maps coordinate l+1 (0-based l) to its probability
    conditionals: list[dict[tuple[int, ...], dict[int, float]]]
    optimal_measure: BernoulliMeasure

    def to_dict(self) -> dict:
        tree = []
        for level in self.conditionals:
            tree.append(
                {digit_key(prefix): {str(c): q for c, q in sorted(row.items())} for prefix, row in sorted(level.items())}
            )
        return {
            "value": self.value,
            "optimal_measure": self.optimal_measure.to_mapping(),
            "conditionals": tree,
        }


def nested_pressure(spec: SpongeSpec, a: WeightVector, f: CylinderPotential | np.ndarray | None = None) -> NestedPressureResult:
    """Weighted pressure ``sup_p {h^a(p) + <p, f>}`` over Bernoulli measures, in closed form."""
    a.check_against(spec)
    fv = potential_values(spec, f)
    k = spec.k
    b = a.partial_sums

    # values[l] : prefix of length l -> W_l(prefix); children grouped in lexicographic order
    values: dict[tuple[int, ...], float] = {d: float(v) for d, v in zip(spec.digits, fv)}
    conditionals: list[dict] = [None] * k
    for l in range(k, 0, -1):
        c = b[k - l]
        groups: dict[tuple[int, ...], list[tuple[int, float]]] = {}
        for prefix in sorted(values):
            groups.setdefault(prefix[: l - 1], []).append((prefix[l - 1], values[prefix]))
        parent: dict[tuple[int, ...], float] = {}
        cond: dict[tuple[int, ...], dict[int, float]] = {}
        for pre, children in groups.items():
            scaled = np.array([w for _, w in children]) / c
            z = logsumexp(scaled)
            parent[pre] = c * float(z)
            probs = np.exp(scaled - z)
            probs /= probs.sum()
            cond[pre] = {coord: float(q) for (coord, _), q in zip(children, probs)}
        conditionals[l - 1] = cond
        values = parent

    p = np.ones(spec.n_digits)
    for j, d in enumerate(spec.digits):
        for l in range(1, k + 1):
            p[j] *= conditionals[l - 1][d[: l - 1]][d[l - 1]]
    p /= p.sum()
    return NestedPressureResult(values[()], conditionals, BernoulliMeasure(spec, p))


def column_counts(spec: SpongeSpec) -> np.ndarray:
    """Number of digits above each element of the coarsest alphabet."""
    return np.bincount(spec.level_index(spec.k))


def mcmullen_dimension(spec: SpongeSpec) -> float:
    if spec.k != 2:
        raise SpecError(f"the two-base dimension formula needs k=2, got k={spec.k}")
    m1, m2 = spec.bases
    theta = math.log(m1) / math.log(m2)
    t = column_counts(spec)
    t = t[t > 0]
    return float(logsumexp(theta * np.log(t))) / math.log(m1)


def box_dimension_closed_form(spec: SpongeSpec) -> float:
    """Box dimension ``sum_j log(N_j / N_{j-1}) / log m_j`` with ``N_j`` the number of length-j prefixes.

    For ``k=2`` this is ``log_{m1} s + log_{m2}(N/s)``.
    """
    sizes = [1] + [len(spec.alphabet(spec.k - j + 1)) for j in range(1, spec.k + 1)]
    return sum(
        (math.log(sizes[j]) - math.log(sizes[j - 1])) / math.log(spec.bases[j - 1])
        for j in range(1, spec.k + 1)
    )


def full_shift_pressure(g: np.ndarray) -> float:
    """Classical pressure ``log sum_u exp g(u)`` of a depth-one potential on a full shift."""
    return float(logsumexp(np.asarray(g, dtype=float)))


def barral_feng_identity_check(spec: SpongeSpec, a: WeightVector, f: CylinderPotential | np.ndarray | None = None) -> float:
    """``|(a_1+a_2) P(S, a_1/(a_1+a_2) Phi) - nested_pressure|`` for a two-level full shift.

    ``Phi(u) = log sum_{d over u} exp(f(d)/a_1)`` is the fibre potential on
    the factor.
    """
    if spec.k != 2:
        raise SpecError(f"the fibre-pressure identity needs k=2, got k={spec.k}")
    a.check_against(spec)
    a1, a2 = a.a
    fv = potential_values(spec, f)
    cols = spec.level_index(2)
    phi = np.array([logsumexp(fv[cols == u] / a1) for u in range(len(spec.alphabet(2)))])
    rhs = (a1 + a2) * full_shift_pressure(a1 / (a1 + a2) * phi)
    return abs(rhs - nested_pressure(spec, a, fv).value)
