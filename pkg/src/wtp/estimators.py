"""Direct-definition estimators: weighted cylinders, counting, Monte Carlo, box counting.

Symbolic metric convention: on every level shift ``d(x, y) = exp(-min{j : x_j != y_j})``.
For any radius in ``(1/e, 1)`` the weighted Bowen ball of order ``n`` is then
exactly the weighted cylinder below, so no radius parameter appears.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import (
    DEFAULT_BUDGET,
    BernoulliMeasure,
    BudgetExceeded,
    SpecError,
    SpongeSpec,
    WeightVector,
    allowed_matrix,
    pushforward,
)


class SubadditivityError(ArithmeticError):
    """A potential sampler violated sub-additivity beyond tolerance."""


def as_indices(spec: SpongeSpec, x) -> np.ndarray:
    """Digit sequence as indices into ``spec.digits`` (accepts indices or digit tuples)."""
    x = list(x) if not isinstance(x, np.ndarray) else x
    if len(x) and isinstance(x[0], (tuple, list)):
        return np.array([spec.index_of(d) for d in x], dtype=np.intp)
    x = np.asarray(x, dtype=np.intp)
    if x.size and (x.min() < 0 or x.max() >= spec.n_digits):
        raise SpecError("digit index out of range")
    return x


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


@dataclass(frozen=True)
class WeightedCylinder:
    """Segment ``i`` is a word over the level-``i`` alphabet (as alphabet indices)."""

    n: int
    segments: tuple[tuple[int, ...], ...]

    def lengths(self) -> list[int]:
        return [len(s) for s in self.segments]


def weighted_cylinder_of(spec: SpongeSpec, a: WeightVector, x, n: int) -> WeightedCylinder:
    a.check_against(spec)
    x = as_indices(spec, x)
    t = a.schedule(n)
    if len(x) < t[-1]:
        raise SpecError(f"sequence of length {len(x)} is shorter than t_k({n}) = {t[-1]}")
    segments = tuple(
        tuple(int(u) for u in spec.level_index(i)[x[t[i - 1] : t[i]]]) for i in range(1, spec.k + 1)
    )
    return WeightedCylinder(n, segments)


def _level_log_probs(spec: SpongeSpec, p: np.ndarray) -> list[np.ndarray]:
    """``log q_i`` on each level alphabet, level 1 being ``log p`` itself."""
    out = []
    for level in range(1, spec.k + 1):
        q = pushforward(spec, p, level)
        with np.errstate(divide="ignore"):
            out.append(np.log(q))
    return out


def cylinder_log_mass(spec: SpongeSpec, a: WeightVector, measure: BernoulliMeasure, cyl: WeightedCylinder) -> float:
    logs = _level_log_probs(spec, measure.p)
    return math.fsum(float(logs[i][list(seg)].sum()) if seg else 0.0 for i, seg in enumerate(cyl.segments))


def cylinder_mass(spec: SpongeSpec, a: WeightVector, measure: BernoulliMeasure, cyl: WeightedCylinder) -> float:
    return math.exp(cylinder_log_mass(spec, a, measure, cyl))


def weighted_cylinder_count(
    spec: SpongeSpec, a: WeightVector, n: int, allowed=None, budget: int = DEFAULT_BUDGET
) -> tuple[int, float]:
    """Number of order-``n`` weighted cylinders meeting the shift, and ``log(count)/n``.

    ``allowed`` restricts transitions between consecutive digits; counting
    then runs forward over subsets of hidden digits consistent with the
    observed (projected) word, so counts are exact integers.
    """
    if n < 1:
        raise SpecError(f"n must be >= 1, got {n}")
    a.check_against(spec)
    A = allowed_matrix(spec, allowed)
    lengths = a.segment_lengths(n)
    if A is None or A.all():
        count = 1
        for size, length in zip(spec.alphabet_sizes(), lengths):
            count *= size**length
        return count, math.log(count) / n

    nd = spec.n_digits
    states: dict[frozenset, int] = {}
    first = True
    for level, length in enumerate(lengths, start=1):
        idx = spec.level_index(level)
        fibres = [frozenset(np.flatnonzero(idx == u).tolist()) for u in range(len(spec.alphabet(level)))]
        for _ in range(length):
            nxt: dict[frozenset, int] = {}
            if first:
                for j in range(nd):
                    nxt[frozenset([j])] = 1
                first = False
            else:
                for S, c in states.items():
                    succ = frozenset(np.flatnonzero(A[sorted(S)].any(axis=0)).tolist())
                    for fib in fibres:
                        T = succ & fib
                        if T:
                            nxt[T] = nxt.get(T, 0) + c
            if len(nxt) * nd > budget:
                raise BudgetExceeded(f"subset construction reached {len(nxt)} subsets")
            states = nxt
        # first segment is always nonempty because a_1 > 0
    count = sum(states.values())
    return count, math.log(count) / n


def min_information_rate(
    spec: SpongeSpec, a: WeightVector, measure: BernoulliMeasure, n: int, support=None
) -> float:
    """``min_x -(1/n) log mu(C_n(x))`` over order-``n`` weighted cylinders.

    If every cylinder has mass at most ``exp(-n s)``, ``s`` bounds the weighted
    topological entropy from below on the measure's support.
    """
    a.check_against(spec)
    if support is not None:
        sup = [spec.index_of(d) for d in support]
        if np.any(measure.p[sup] == 0):
            raise SpecError("measure gives zero mass to a digit of its claimed support")
    lengths = a.segment_lengths(n)
    logs = _level_log_probs(spec, measure.p)
    total = math.fsum(length * float(np.max(lg)) for length, lg in zip(lengths, logs))
    return -total / n if total != 0 else 0.0


def sample_orbit(measure: BernoulliMeasure, length: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. digit indices; zero-mass digits are never drawn."""
    support = np.flatnonzero(measure.p > 0)
    probs = measure.p[support] / measure.p[support].sum()
    return support[rng.choice(len(support), size=length, p=probs)]


def _information_along(spec: SpongeSpec, a: WeightVector, logs: list[np.ndarray], x: np.ndarray, n: int) -> float:
    t = a.schedule(n)
    total = 0.0
    for i in range(1, spec.k + 1):
        seg = spec.level_index(i)[x[t[i - 1] : t[i]]]
        total -= float(logs[i - 1][seg].sum())
    return total


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    mean = math.fsum(values) / len(values)
    if len(values) < 2:
        return mean, float("nan")
    return mean, float(np.std(values, ddof=1) / math.sqrt(len(values)))


def brin_katok_mc(
    spec: SpongeSpec,
    a: WeightVector,
    measure: BernoulliMeasure,
    n: int,
    samples: int,
    seed: int,
    workers: int = 1,
) -> tuple[float, float]:
    """Sample mean and standard error of ``-(1/n) log mu(B_n(x))`` over ``mu``-typical ``x``.

    Sample ``s`` uses its own generator stream, so results do not depend on
    ``workers``.
    """
    if n < 1 or samples < 1:
        raise SpecError("n and samples must be >= 1")
    a.check_against(spec)
    logs = _level_log_probs(spec, measure.p)
    length = a.schedule(n)[-1]

    def one(s: int) -> float:
        x = sample_orbit(measure, length, make_rng(seed, s))
        return _information_along(spec, a, logs, x, n) / n

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            values = np.array(list(pool.map(one, range(samples))))
    else:
        values = np.array([one(s) for s in range(samples)])
    return _mean_stderr(values)


def joined_partition_information(spec: SpongeSpec, a: WeightVector, measure: BernoulliMeasure, x, N: int) -> float:
    """``-log mu`` of the join of level partitions, level ``i`` over positions ``0..t_i(N)-1``.

    Position ``j`` is constrained at every level ``i`` with ``j < t_i(N)``; the
    finest such level determines the rest, so only it contributes.
    """
    x = as_indices(spec, x)
    t = a.schedule(N)
    if len(x) < t[-1]:
        raise SpecError("sequence too short for the requested N")
    logs = _level_log_probs(spec, measure.p)
    finest = np.searchsorted(np.array(t[1:]), np.arange(t[-1]), side="right")
    total = 0.0
    for level in range(1, spec.k + 1):
        pos = np.flatnonzero(finest == level - 1)
        total -= float(logs[level - 1][spec.level_index(level)[x[pos]]].sum())
    return total


def smb_information_path(
    spec: SpongeSpec, a: WeightVector, measure: BernoulliMeasure, x, N_list: Sequence[int]
) -> list[tuple[int, float]]:
    """Normalized information ``(1/N) I(x)`` of the weighted join for every ``N``."""
    a.check_against(spec)
    x = as_indices(spec, x)
    out = []
    for N in N_list:
        if N < 1:
            raise SpecError("N must be >= 1")
        out.append((int(N), joined_partition_information(spec, a, measure, x, N) / N))
    return out


@dataclass(frozen=True)
class SubadditivePotentialSampler:
    """``log_phi(x, n)`` evaluates ``log phi_n`` on a digit-index prefix of length ``>= n``."""

    log_phi: Callable[[np.ndarray, int], float]
    name: str = "custom"

    def check(self, x: np.ndarray, n: int, m: int, tol: float = 1e-9) -> None:
        lhs = self.log_phi(x, n + m)
        rhs = self.log_phi(x, n) + self.log_phi(x[n:], m)
        if lhs > rhs + tol:
            raise SubadditivityError(f"{self.name}: log phi_{n + m} = {lhs} > {rhs}")

    @classmethod
    def additive(cls, f: np.ndarray) -> "SubadditivePotentialSampler":
        f = np.asarray(f, dtype=float)
        return cls(lambda x, n: float(f[x[:n]].sum()), "additive")

    @classmethod
    def zero(cls) -> "SubadditivePotentialSampler":
        return cls(lambda x, n: 0.0, "zero")

    @classmethod
    def matrix_cocycle(cls, matrices: Sequence[np.ndarray]) -> "SubadditivePotentialSampler":
        """``log ||M_{x_0} ... M_{x_{n-1}}||`` for nonnegative matrices (operator 1-norm)."""
        mats = [np.asarray(M, dtype=float) for M in matrices]

        def log_phi(x, n):
            prod = np.eye(mats[0].shape[0])
            log_scale = 0.0
            for j in x[:n]:
                prod = prod @ mats[j]
                s = np.abs(prod).max()
                if s == 0:
                    return -math.inf
                prod /= s
                log_scale += math.log(s)
            return log_scale + math.log(np.linalg.norm(prod, 1))

        return cls(log_phi, "matrix cocycle")


@dataclass(frozen=True)
class FeketeResult:
    n: tuple[int, ...]
    estimates: tuple[float, ...]
    stderr: tuple[float, ...]
    running_min: tuple[float, ...]

    @property
    def best_upper(self) -> float:
        return self.running_min[-1]


def fekete_rate(
    sampler: SubadditivePotentialSampler,
    measure: BernoulliMeasure,
    n_list: Sequence[int],
    samples: int,
    seed: int,
    sigmas: float = 3.0,
) -> FeketeResult:
    """Monte-Carlo ``(1/n) E[log phi_n]`` and its running minimum.

    Every sample is spot-checked for pointwise sub-additivity, and the
    averaged sequence is checked for ``E_{n+m} <= E_n + E_m`` within
    ``sigmas`` standard errors; either violation raises ``SubadditivityError``.
    """
    ns = sorted(set(int(n) for n in n_list))
    if not ns or ns[0] < 1:
        raise SpecError("n_list must contain positive integers")
    length = ns[-1]
    totals = np.zeros((samples, len(ns)))
    for s in range(samples):
        x = sample_orbit(measure, length, make_rng(seed, s))
        for j, n in enumerate(ns):
            totals[s, j] = sampler.log_phi(x, n)
        for n in ns:
            for m in ns:
                if n + m <= length:
                    sampler.check(x, n, m)
    means = totals.mean(axis=0)
    errs = totals.std(axis=0, ddof=1) / math.sqrt(samples) if samples > 1 else np.zeros(len(ns))
    pos = {n: j for j, n in enumerate(ns)}
    for n in ns:
        for m in ns:
            if n + m in pos:
                i, j, l = pos[n], pos[m], pos[n + m]
                noise = sigmas * math.sqrt(errs[i] ** 2 + errs[j] ** 2 + errs[l] ** 2)
                if means[l] > means[i] + means[j] + noise + 1e-9:
                    raise SubadditivityError(f"E[log phi_{n + m}] exceeds E[log phi_{n}] + E[log phi_{m}]")
    est = means / np.array(ns)
    err = errs / np.array(ns)
    return FeketeResult(tuple(ns), tuple(est.tolist()), tuple(err.tolist()), tuple(np.minimum.accumulate(est).tolist()))


def generate_sponge_points(spec: SpongeSpec, depth: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Lower-left corners ``sum_{n<=depth} diag(m)^{-n} u_n`` of all depth-``depth`` cells."""
    if depth < 0:
        raise SpecError("depth must be >= 0")
    if depth * math.log(spec.n_digits) > math.log(budget):
        raise BudgetExceeded(f"{spec.n_digits}^{depth} points exceed budget {budget}")
    D = np.array(spec.digits, dtype=float)
    m = np.array(spec.bases, dtype=float)
    pts = np.zeros((1, spec.k))
    for level in range(1, depth + 1):
        pts = (pts[:, None, :] + (D / m**level)[None, :, :]).reshape(-1, spec.k)
    return pts


def box_counts(points: np.ndarray, j_list: Sequence[int]) -> list[int]:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out = []
    for j in j_list:
        side = 2**j
        cells = np.clip(np.floor(points * side).astype(np.int64), 0, side - 1)
        if cells.shape[1] * j <= 62:
            # pack each cell into one integer; 1-D unique is far faster than unique(axis=0)
            out.append(int(np.unique(cells @ (side ** np.arange(cells.shape[1], dtype=np.int64))).size))
        else:
            out.append(int(np.unique(cells, axis=0).shape[0]))
    return out


def box_counting_estimate(points: np.ndarray, j_list: Sequence[int]) -> float:
    """Least-squares slope of ``log N(2^-j)`` against ``j log 2``."""
    j_list = list(j_list)
    if len(j_list) < 2:
        raise SpecError("box counting needs at least two scales")
    if len(points) == 0:
        raise SpecError("no points")
    counts = box_counts(points, j_list)
    slope, _ = np.polyfit(np.array(j_list) * math.log(2), np.log(counts), 1)
    return float(slope)
