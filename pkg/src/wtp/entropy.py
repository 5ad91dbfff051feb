"""Shannon entropy, Markov entropy rates and weighted entropies (all in nats)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    DEFAULT_BUDGET,
    BernoulliMeasure,
    BudgetExceeded,
    MarkovMeasure,
    SpecError,
    SpongeSpec,
    WeightVector,
    pushforward,
)


def xlogx(p: np.ndarray) -> np.ndarray:
    """Elementwise ``p ln p`` with ``0 ln 0 = 0``."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise SpecError("probability vector has negative entries")
    return float(max(-xlogx(p).sum(), 0.0))


def marginal_entropies(spec: SpongeSpec, p) -> np.ndarray:
    """Shannon entropy of every level marginal, level 1 first."""
    return np.array([shannon_entropy(pushforward(spec, p, i)) for i in range(1, spec.k + 1)])


def bernoulli_weighted_entropy(spec: SpongeSpec, a: WeightVector, p: BernoulliMeasure | np.ndarray) -> float:
    a.check_against(spec)
    return float(np.dot(a.a, marginal_entropies(spec, p)))


def markov_entropy_rate(m: MarkovMeasure) -> float:
    return float(-(m.stationary * xlogx(m.transition).sum(axis=1)).sum())


@dataclass(frozen=True)
class EntropyBracket:
    lower: float
    upper: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError("bracket endpoints must be finite")
        if self.lower > self.upper + 1e-12:
            raise ValueError(f"inverted bracket [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, other: "EntropyBracket", slack: float = 0.0) -> bool:
        return self.lower - slack <= other.lower and other.upper <= self.upper + slack

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "n": self.n}


def _block_entropies(rows: np.ndarray, transition: np.ndarray, masks: np.ndarray, steps: int, budget: int):
    """Entropies of successive block distributions of a function of a Markov chain.

    ``rows[b]`` is the joint vector P(block b, current hidden state = .).
    Yields the entropy of the current block distribution, then extends by
    one observed symbol ``steps`` times.
    """
    rows = rows[rows.sum(axis=1) > 0]
    yield shannon_entropy(rows.sum(axis=1))
    for _ in range(steps):
        if rows.shape[0] * masks.shape[0] * masks.shape[1] > budget:
            raise BudgetExceeded(
                f"block enumeration needs {rows.shape[0] * masks.shape[0]} blocks "
                f"x {masks.shape[1]} states, budget is {budget}"
            )
        moved = rows @ transition
        rows = (moved[:, None, :] * masks[None, :, :]).reshape(-1, masks.shape[1])
        rows = rows[rows.sum(axis=1) > 0]
        yield shannon_entropy(rows.sum(axis=1))


def hidden_marginal_entropy_bounds(
    m: MarkovMeasure, spec: SpongeSpec, level: int, n: int, budget: int = DEFAULT_BUDGET
) -> EntropyBracket:
    """Birch bracket for the entropy rate of the level-``level`` projection of ``m``.

    With ``n`` conditioning symbols, ``upper = H(Y_{n+1} | Y_1..Y_n)`` and
    ``lower = H(Y_{n+1} | Y_2..Y_n, X_1)``; both are exact enumerations over
    blocks, the upper one nonincreasing and the lower one nondecreasing in ``n``.
    """
    if n < 1:
        raise SpecError(f"block length must be >= 1, got {n}")
    idx = spec.level_index(level)
    masks = (idx[None, :] == np.arange(len(spec.alphabet(level)))[:, None]).astype(float)
    P, pi = m.transition, m.stationary

    up = list(_block_entropies(pi[None, :] * masks, P, masks, n, budget))
    low = list(_block_entropies(np.diag(pi), P, masks, n, budget))
    upper = max(up[n] - up[n - 1], 0.0)
    lower = min(max(low[n] - low[n - 1], 0.0), upper)
    return EntropyBracket(lower, upper, n)


def markov_weighted_entropy(
    spec: SpongeSpec, a: WeightVector, m: MarkovMeasure, n: int, budget: int = DEFAULT_BUDGET
) -> EntropyBracket:
    a.check_against(spec)
    lo = hi = 0.0
    for level, w in enumerate(a.a, start=1):
        if w == 0.0:
            continue
        br = hidden_marginal_entropy_bounds(m, spec, level, n, budget)
        lo += w * br.lower
        hi += w * br.upper
    return EntropyBracket(lo, hi, n)
