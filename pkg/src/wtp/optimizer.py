"""Numerical maximization of ``h^a(mu) + int f dmu`` over Bernoulli and Markov measures.

This is deliberately independent of :mod:`wtp.closedform`: it never uses the
nested recursion, only the objective and its gradient.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .closedform import nested_pressure
from .entropy import bernoulli_weighted_entropy, markov_weighted_entropy
from .model import (
    DEFAULT_BUDGET,
    BernoulliMeasure,
    MarkovMeasure,
    SpecError,
    SpongeSpec,
    WeightVector,
    allowed_matrix,
    potential_values,
    pushforward,
)

CLAMP = 1e-300
TIE_GAP = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 20000
    step: float = 0.5
    backtrack: float = 0.5
    kkt_tol: float = 1e-8
    seed: int = 0
    jitter: float = 1e-3

    def __post_init__(self):
        if self.max_iters < 1:
            raise SpecError("max_iters must be >= 1")
        if not (self.step > 0 and self.kkt_tol > 0 and 0 < self.backtrack < 1 and self.jitter >= 0):
            raise SpecError("step and tolerances must be positive, backtrack in (0, 1)")


@dataclass(eq=False)
class OptimizerResult:
    p: np.ndarray
    value: float
    kkt_residual: float
    iterations: int
    converged: bool
    trace: list[float] = field(default_factory=list)
    ties: list[tuple[bool, ...]] = field(default_factory=list)
    transition: np.ndarray | None = None
    bracket: object = None
    label: str = "maximum"

    def to_dict(self, spec: SpongeSpec | None = None) -> dict:
        out = {
            "value": self.value,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "label": self.label,
            "p": self.p.tolist(),
        }
        if spec is not None:
            out["p"] = BernoulliMeasure(spec, self.p / self.p.sum()).to_mapping()
        if self.transition is not None:
            out["transition"] = self.transition.tolist()
        if self.bracket is not None:
            out["bracket"] = self.bracket.to_dict()
        if self.ties:
            out["ties"] = [list(t) for t in self.ties]
        return out

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "objective"])
        for i, v in enumerate(self.trace):
            w.writerow([i, f"{v:.12g}"])
        return buf.getvalue()


def weighted_objective(spec: SpongeSpec, a: WeightVector, p, f=None) -> float:
    p = p.p if isinstance(p, BernoulliMeasure) else np.asarray(p, dtype=float)
    return bernoulli_weighted_entropy(spec, a, p) + float(np.dot(p, potential_values(spec, f)))


def weighted_objective_gradient(spec: SpongeSpec, a: WeightVector, p, f=None) -> np.ndarray:
    """Partial derivatives ``f(d) - sum_i a_i (1 + log q_i(d))``.

    Entries whose required marginal vanishes are ``+inf``; callers treat a
    non-finite entry as a boundary flag.
    """
    a.check_against(spec)
    p = p.p if isinstance(p, BernoulliMeasure) else np.asarray(p, dtype=float)
    grad = potential_values(spec, f).astype(float).copy()
    for level, w in enumerate(a.a, start=1):
        if w == 0.0:
            continue
        q = pushforward(spec, p, level)[spec.level_index(level)]
        with np.errstate(divide="ignore"):
            grad -= w * (1.0 + np.log(q))
    return grad


def _kkt(grad: np.ndarray, p: np.ndarray, support: np.ndarray) -> float:
    g = grad[support]
    return float(np.max(np.abs(g - np.dot(g, p[support])))) if g.size else 0.0


def _initial_point(n: int, cfg: OptimizerConfig, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed))
    p = (1.0 - cfg.jitter) / n + cfg.jitter * rng.dirichlet(np.ones(n))
    return p / p.sum()


def maximize_bernoulli(spec: SpongeSpec, a: WeightVector, f=None, cfg: OptimizerConfig | None = None) -> OptimizerResult:
    """Exponentiated-gradient ascent on the simplex with halving backtracking.

    Steps are accepted only if the objective does not decrease; the run
    stops when the KKT residual drops below ``cfg.kkt_tol`` or no step size
    above machine resolution improves the objective.
    """
    cfg = cfg or OptimizerConfig()
    a.check_against(spec)
    fv = potential_values(spec, f)
    p = _initial_point(spec.n_digits, cfg, cfg.seed)
    support = p > 0
    obj = weighted_objective(spec, a, p, fv)
    trace = [obj]
    supports: dict[tuple[bool, ...], float] = {}
    kkt = np.inf
    it = 0
    while it < cfg.max_iters:
        grad = weighted_objective_gradient(spec, a, p, fv)
        kkt = _kkt(grad, p, support)
        if kkt <= cfg.kkt_tol:
            break
        g = np.where(support, grad, -np.inf)
        g = g - g[support].max()
        eta = cfg.step
        accepted = False
        while eta > 1e-14:
            trial = np.where(support, p * np.exp(eta * g), 0.0)
            trial /= trial.sum()
            trial_obj = weighted_objective(spec, a, trial, fv)
            if trial_obj >= obj:
                accepted = True
                break
            eta *= cfg.backtrack
        if not accepted:
            break
        it += 1
        p, obj = trial, trial_obj
        trace.append(obj)
        small = support & (p < CLAMP)
        if small.any():
            supports[tuple(support)] = obj
            support = support & ~small
            p = np.where(support, p, 0.0)
            p /= p.sum()
            obj = weighted_objective(spec, a, p, fv)
    supports[tuple(support)] = obj
    ties = [s for s, v in supports.items() if s != tuple(support) and abs(v - obj) <= TIE_GAP]
    if ties:
        ties.insert(0, tuple(support))
    return OptimizerResult(
        p=p,
        value=obj,
        kkt_residual=kkt,
        iterations=it,
        converged=kkt <= cfg.kkt_tol,
        trace=trace,
        ties=ties,
    )


def _rows_from_logits(theta: np.ndarray, allowed: np.ndarray) -> np.ndarray:
    logits = np.full(allowed.shape, -np.inf)
    logits[allowed] = theta
    logits -= logits.max(axis=1, keepdims=True)
    P = np.exp(logits)
    return P / P.sum(axis=1, keepdims=True)


def maximize_markov(
    spec: SpongeSpec,
    a: WeightVector,
    f=None,
    allowed=None,
    n: int = 6,
    cfg: OptimizerConfig | None = None,
    budget: int = DEFAULT_BUDGET,
    iid: bool = False,
) -> OptimizerResult:
    """Ascent over transition rows with the midpoint of the Birch bracket as objective.

    ``allowed`` is a boolean digit-by-digit relation (``None`` = full shift).
    On constrained shifts the result is a lower-bound witness only.  With
    ``iid=True`` all rows are tied together, which is exactly the Bernoulli
    problem.
    """
    cfg = cfg or OptimizerConfig()
    a.check_against(spec)
    fv = potential_values(spec, f)
    A = allowed_matrix(spec, allowed)
    full = A is None or bool(A.all())

    if iid:
        if not full:
            raise SpecError("i.i.d. rows require the full shift")
        res = maximize_bernoulli(spec, a, fv, cfg)
        chain = MarkovMeasure.iid(BernoulliMeasure(spec, res.p / res.p.sum()))
        res.transition = np.array(chain.transition)
        res.bracket = markov_weighted_entropy(spec, a, chain, n, budget)
        return res

    if A is None:
        A = np.ones((spec.n_digits, spec.n_digits), dtype=bool)

    def evaluate(theta):
        chain = MarkovMeasure(spec, _rows_from_logits(theta, A))
        br = markov_weighted_entropy(spec, a, chain, n, budget)
        return br, chain, float(np.dot(chain.stationary, fv))

    def negative(theta):
        br, _, energy = evaluate(theta)
        return -(br.midpoint + energy)

    rng = np.random.Generator(np.random.Philox(cfg.seed))
    theta0 = cfg.jitter * rng.standard_normal(int(A.sum()))
    trace: list[float] = []
    opt = minimize(
        negative,
        theta0,
        method="L-BFGS-B",
        callback=lambda th: trace.append(-negative(th)),
        options={"maxiter": cfg.max_iters, "gtol": cfg.kkt_tol, "ftol": 1e-15},
    )
    br, chain, energy = evaluate(opt.x)
    kkt = float(np.max(np.abs(opt.jac))) if opt.jac is not None else np.inf
    if full:
        ceiling = nested_pressure(spec, a, fv).value
        if br.lower + energy > ceiling + 1e-9:
            raise RuntimeError(
                f"Markov lower bound {br.lower + energy} exceeds the closed-form pressure {ceiling}"
            )
    return OptimizerResult(
        p=np.array(chain.stationary),
        value=br.midpoint + energy,
        kkt_residual=kkt,
        iterations=int(opt.nit),
        converged=bool(opt.success) or kkt <= 10 * cfg.kkt_tol,
        trace=trace,
        transition=np.array(chain.transition),
        bracket=br,
        label="maximum" if full else "lower bound witness",
    )
