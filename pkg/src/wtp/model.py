"""Symbolic codings of self-affine sponges: digit sets, factor chains, weights, measures.

Level ``i`` (1-based) of a sponge with ``k`` coordinates keeps the first
``k - i + 1`` coordinates of every digit, so level 1 is the digit set itself
and level ``k`` is the coarsest factor (the first coordinate only).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

Digit = tuple[int, ...]


DEFAULT_BUDGET = 10**7


class SpecError(ValueError):
    """Invalid sponge description, weight vector or measure."""


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed its configured state budget."""


def digit_key(d: Sequence[int]) -> str:
    return ",".join(str(int(c)) for c in d)


def parse_digit_key(key: str) -> Digit:
    try:
        return tuple(int(c) for c in key.split(","))
    except ValueError as exc:
        raise SpecError(f"bad digit key {key!r}") from exc


@dataclass(frozen=True)
class SpongeSpec:
    """Expansion bases ``m_1 <= ... <= m_k`` and an admissible digit set.

    Digits are stored sorted lexicographically; every array indexed by
    digit in this package follows that order.
    """

    bases: tuple[int, ...]
    digits: tuple[Digit, ...]

    def __init__(self, bases: Iterable[int], digits: Iterable[Sequence[int]]):
        bases = tuple(int(m) for m in bases)
        digits = tuple(sorted({tuple(int(c) for c in d) for d in digits}))
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "digits", digits)
        self._validate()

    def _validate(self) -> None:
        if not self.bases:
            raise SpecError("at least one base is required")
        if any(m < 2 for m in self.bases):
            raise SpecError(f"bases must be >= 2, got {self.bases}")
        if any(x > y for x, y in zip(self.bases, self.bases[1:])):
            raise SpecError(f"bases must be nondecreasing, got {self.bases}")
        if not self.digits:
            raise SpecError("digit set is empty")
        for d in self.digits:
            if len(d) != self.k:
                raise SpecError(f"digit {d} does not have {self.k} coordinates")
            for c, m in zip(d, self.bases):
                if not 0 <= c < m:
                    raise SpecError(f"digit {d} out of range for bases {self.bases}")

    @property
    def k(self) -> int:
        return len(self.bases)

    @property
    def n_digits(self) -> int:
        return len(self.digits)

    def _check_level(self, level: int) -> None:
        if not 1 <= level <= self.k:
            raise SpecError(f"level must be in 1..{self.k}, got {level}")

    def project(self, d: Sequence[int], level: int) -> Digit:
        self._check_level(level)
        return tuple(d[: self.k - level + 1])

    @cached_property
    def _levels(self) -> list[tuple[tuple[Digit, ...], np.ndarray]]:
        out = []
        for level in range(1, self.k + 1):
            images = [self.project(d, level) for d in self.digits]
            alphabet = tuple(sorted(set(images)))
            pos = {u: j for j, u in enumerate(alphabet)}
            index = np.array([pos[u] for u in images], dtype=np.intp)
            index.setflags(write=False)
            out.append((alphabet, index))
        return out

    def alphabet(self, level: int) -> tuple[Digit, ...]:
        """Sorted level alphabet ``A_i``."""
        self._check_level(level)
        return self._levels[level - 1][0]

    def level_index(self, level: int) -> np.ndarray:
        """Position in ``alphabet(level)`` of the projection of every digit."""
        self._check_level(level)
        return self._levels[level - 1][1]

    def alphabet_sizes(self) -> list[int]:
        return [len(self.alphabet(i)) for i in range(1, self.k + 1)]

    def index_of(self, d: Sequence[int]) -> int:
        try:
            return self.digits.index(tuple(d))
        except ValueError:
            raise SpecError(f"{tuple(d)} is not an admissible digit") from None

    def without(self, d: Sequence[int]) -> "SpongeSpec":
        rest = [e for e in self.digits if e != tuple(d)]
        return SpongeSpec(self.bases, rest)

    @classmethod
    def full(cls, bases: Sequence[int]) -> "SpongeSpec":
        import itertools

        return cls(bases, itertools.product(*(range(m) for m in bases)))

    def to_dict(self) -> dict:
        return {"bases": list(self.bases), "digits": [list(d) for d in self.digits]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "SpongeSpec":
        try:
            return cls(data["bases"], data["digits"])
        except (KeyError, TypeError) as exc:
            raise SpecError(f"malformed sponge description: {exc}") from exc


def project_digit(spec: SpongeSpec, d: Sequence[int], level: int) -> Digit:
    if tuple(d) not in spec.digits:
        raise SpecError(f"{tuple(d)} is not an admissible digit")
    return spec.project(d, level)


@dataclass(frozen=True)
class WeightVector:
    """Weights ``a_1 > 0, a_i >= 0`` with partial sums ``b_i`` and schedule ``t_i(n)``."""

    a: tuple[float, ...]

    def __init__(self, a: Iterable[float]):
        a = tuple(float(x) for x in a)
        if not a:
            raise SpecError("weight vector is empty")
        if not all(math.isfinite(x) for x in a):
            raise SpecError(f"weights must be finite, got {a}")
        if a[0] <= 0:
            raise SpecError(f"a_1 must be > 0, got {a[0]}")
        if any(x < 0 for x in a[1:]):
            raise SpecError(f"a_i must be >= 0 for i >= 2, got {a}")
        object.__setattr__(self, "a", a)

    def __len__(self) -> int:
        return len(self.a)

    @property
    def partial_sums(self) -> tuple[float, ...]:
        return tuple(math.fsum(self.a[: i + 1]) for i in range(len(self.a)))

    def schedule(self, n: int) -> list[int]:
        """``[t_0(n), t_1(n), ..., t_k(n)]`` with ``t_i(n) = ceil(b_i n)``."""
        if n < 0:
            raise SpecError(f"n must be >= 0, got {n}")
        return [0] + [math.ceil(b * n) for b in self.partial_sums]

    def segment_lengths(self, n: int) -> list[int]:
        t = self.schedule(n)
        return [t[i + 1] - t[i] for i in range(len(self.a))]

    def check_against(self, spec: SpongeSpec) -> None:
        if len(self.a) != spec.k:
            raise SpecError(f"{len(self.a)} weights given for a {spec.k}-level sponge")

    @classmethod
    def parse(cls, text: str, spec: SpongeSpec) -> "WeightVector":
        if text.strip() == "canonical":
            return canonical_weights(spec)
        try:
            w = cls(float(x) for x in text.split(","))
        except ValueError as exc:
            raise SpecError(f"bad weights {text!r}: {exc}") from exc
        w.check_against(spec)
        return w


def canonical_weights(spec: SpongeSpec) -> WeightVector:
    """Weights under which weighted entropy is the Ledrappier-Young dimension."""
    inv = [1.0 / math.log(m) for m in spec.bases]
    k = spec.k
    a = [inv[k - 1]] + [inv[k - i] - inv[k - i + 1] for i in range(2, k + 1)]
    # Clamp roundoff from equal bases.
    return WeightVector([a[0]] + [max(x, 0.0) for x in a[1:]])


def _as_probability(p: np.ndarray, size: int, what: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (size,):
        raise SpecError(f"{what} must have shape ({size},), got {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise SpecError(f"{what} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > 1e-12:
        raise SpecError(f"{what} sums to {p.sum()!r}, not 1")
    return p


@dataclass(frozen=True, eq=False)
class BernoulliMeasure:
    """Product measure on the digit full shift; ``p`` follows ``spec.digits`` order."""

    spec: SpongeSpec
    p: np.ndarray

    def __post_init__(self):
        p = _as_probability(self.p, self.spec.n_digits, "Bernoulli vector").copy()
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def uniform(cls, spec: SpongeSpec) -> "BernoulliMeasure":
        return cls(spec, np.full(spec.n_digits, 1.0 / spec.n_digits))

    @classmethod
    def point_mass(cls, spec: SpongeSpec, d: Sequence[int]) -> "BernoulliMeasure":
        p = np.zeros(spec.n_digits)
        p[spec.index_of(d)] = 1.0
        return cls(spec, p)

    @classmethod
    def from_mapping(cls, spec: SpongeSpec, mapping: Mapping[str, float]) -> "BernoulliMeasure":
        p = np.zeros(spec.n_digits)
        for key, value in mapping.items():
            p[spec.index_of(parse_digit_key(key))] = float(value)
        return cls(spec, p)

    def to_mapping(self) -> dict[str, float]:
        return {digit_key(d): float(x) for d, x in zip(self.spec.digits, self.p)}


def pushforward(spec: SpongeSpec, measure: BernoulliMeasure | np.ndarray, level: int) -> np.ndarray:
    """Marginal of a digit distribution on ``alphabet(level)``."""
    p = measure.p if isinstance(measure, BernoulliMeasure) else np.asarray(measure, dtype=float)
    idx = spec.level_index(level)
    return np.bincount(idx, weights=p, minlength=len(spec.alphabet(level)))


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """Left fixed probability vector of a row-stochastic matrix."""
    n = transition.shape[0]
    system = np.vstack([transition.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Stationary Markov chain on the digits.

    Zero entries of ``transition`` define the forbidden transitions; a
    transition matrix with a positive entry where ``allowed`` is False is
    rejected.
    """

    spec: SpongeSpec
    transition: np.ndarray
    stationary: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.spec.n_digits
        P = np.array(self.transition, dtype=float)
        if P.shape != (n, n) or not np.all(np.isfinite(P)) or np.any(P < 0):
            raise SpecError("transition must be a nonnegative square matrix over the digits")
        if np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-12:
            raise SpecError("transition rows must sum to 1")
        if self.stationary is None:
            pi = stationary_distribution(P)
        else:
            pi = _as_probability(self.stationary, n, "stationary vector").copy()
        if np.max(np.abs(pi @ P - pi)) > 1e-10:
            raise SpecError("stationary vector is not invariant under the transition")
        P.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "stationary", pi)

    @classmethod
    def iid(cls, measure: BernoulliMeasure) -> "MarkovMeasure":
        n = measure.spec.n_digits
        return cls(measure.spec, np.tile(measure.p, (n, 1)), measure.p)


@dataclass(frozen=True, eq=False)
class CylinderPotential:
    """Depth-one potential ``f(d)``; ``values`` follows ``spec.digits`` order."""

    spec: SpongeSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.spec.n_digits,):
            raise SpecError(f"potential must have {self.spec.n_digits} values")
        if not np.all(np.isfinite(v)):
            raise SpecError("potential has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls, spec: SpongeSpec) -> "CylinderPotential":
        return cls(spec, np.zeros(spec.n_digits))

    @classmethod
    def from_mapping(cls, spec: SpongeSpec, mapping: Mapping[str, float]) -> "CylinderPotential":
        v = np.zeros(spec.n_digits)
        for key, value in mapping.items():
            v[spec.index_of(parse_digit_key(key))] = float(value)
        return cls(spec, v)

    def to_mapping(self) -> dict[str, float]:
        return {digit_key(d): float(x) for d, x in zip(self.spec.digits, self.values)}

    def __add__(self, c: float) -> "CylinderPotential":
        return CylinderPotential(self.spec, self.values + c)


def potential_values(spec: SpongeSpec, f) -> np.ndarray:
    """Accept ``None`` (zero), a ``CylinderPotential`` or an array."""
    if f is None:
        return np.zeros(spec.n_digits)
    if isinstance(f, CylinderPotential):
        return np.asarray(f.values)
    return CylinderPotential(spec, f).values


def allowed_matrix(spec: SpongeSpec, allowed) -> np.ndarray | None:
    """Normalize an allowed-transition relation to a boolean matrix (``None`` = full shift)."""
    if allowed is None:
        return None
    A = np.asarray(allowed).astype(bool)
    n = spec.n_digits
    if A.shape != (n, n):
        raise SpecError(f"transition relation must be {n}x{n}")
    if not A.any(axis=1).all():
        raise SpecError("every digit needs at least one allowed successor")
    return A
