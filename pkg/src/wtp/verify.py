"""Verification matrix run by ``wtp verify``.

Each check cross-examines two independent routes (closed form vs optimizer,
formula vs counting, Monte Carlo vs exact) on the supplied sponge and
returns a :class:`Check`.  Checks that do not apply to the sponge (e.g. the
two-level identity on a three-level sponge) are reported as skipped.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import closedform, estimators, optimizer
from .entropy import bernoulli_weighted_entropy
from .model import BernoulliMeasure, SpongeSpec, WeightVector, canonical_weights


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str
    skipped: bool = False

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "skipped": self.skipped, "detail": self.detail}


def _skip(name: str, why: str) -> Check:
    return Check(name, True, why, skipped=True)


def power_iteration_log_radius(allowed: np.ndarray, iters: int = 5000) -> float:
    """``log`` spectral radius of a 0/1 matrix by normalized power iteration."""
    M = np.asarray(allowed, dtype=float)
    v = np.ones(M.shape[0])
    log_growth = 0.0
    for _ in range(iters):
        w = M @ v
        s = w.sum()
        log_growth, v = math.log(s / v.sum()), w / s
    return log_growth


def check_closed_vs_optimizer(spec, a, seed, workers=1) -> Check:
    closed = closedform.nested_pressure(spec, a).value
    opt = optimizer.maximize_bernoulli(spec, a, cfg=optimizer.OptimizerConfig(seed=seed))
    gap = abs(closed - opt.value)
    return Check("closed_form_vs_optimizer", gap <= 1e-6, f"closed={closed:.12g} optimizer={opt.value:.12g} gap={gap:.3g}")


def check_exhaustive_subsets(spec, a, seed, workers=1) -> Check:
    name = "exhaustive_subsets"
    if spec.k != 2:
        return _skip(name, "needs k=2")
    grid = SpongeSpec.full(spec.bases).digits
    if len(grid) > 12:
        return _skip(name, f"{len(grid)}-cell grid too large for exhaustive enumeration")
    bad = 0
    cases = 0
    for r in range(1, len(grid) + 1):
        for sub in itertools.combinations(grid, r):
            s = SpongeSpec(spec.bases, sub)
            cases += 1
            dim = closedform.mcmullen_dimension(s)
            nested = closedform.nested_pressure(s, canonical_weights(s)).value
            box = closedform.box_dimension_closed_form(s)
            t = closedform.column_counts(s)
            t = t[t > 0]
            equal = bool(np.all(t == t[0]))
            ok = abs(dim - nested) <= 1e-9 and dim <= box + 1e-12
            ok &= (abs(box - dim) <= 1e-12) == equal
            bad += not ok
    return Check(name, bad == 0, f"{cases} digit subsets, {bad} failures")


def check_identity(spec, a, seed, workers=1) -> Check:
    name = "fibre_pressure_identity"
    if spec.k != 2:
        return _skip(name, "needs k=2")
    rng = estimators.make_rng(seed, 3)
    worst = max(
        closedform.barral_feng_identity_check(spec, a, rng.normal(size=spec.n_digits)) for _ in range(100)
    )
    return Check(name, worst <= 1e-10, f"max residual over 100 potentials {worst:.3g}")


def check_gradient(spec, a, seed, workers=1) -> Check:
    rng = estimators.make_rng(seed, 4)
    worst = 0.0
    h = 1e-6
    for _ in range(20):
        p = rng.dirichlet(np.ones(spec.n_digits)) * 0.9 + 0.1 / spec.n_digits
        f = rng.normal(size=spec.n_digits)
        g = optimizer.weighted_objective_gradient(spec, a, p, f)
        for j in range(spec.n_digits):
            e = np.zeros(spec.n_digits)
            e[j] = h
            fd = (optimizer.weighted_objective(spec, a, p + e, f) - optimizer.weighted_objective(spec, a, p - e, f)) / (2 * h)
            worst = max(worst, abs(fd - g[j]) / max(abs(g[j]), 1.0))
    return Check("gradient_finite_differences", worst <= 1e-6, f"max relative error {worst:.3g}")


def check_sandwich(spec, a, seed, workers=1) -> Check:
    res = closedform.nested_pressure(spec, a)
    slack_c = sum(math.log(s) for s in spec.alphabet_sizes())
    lines, ok = [], True
    for n in (50, 200, 1000):
        lo = estimators.min_information_rate(spec, a, res.optimal_measure, n)
        _, rate = estimators.weighted_cylinder_count(spec, a, n)
        good = lo <= res.value + slack_c / n and res.value <= rate + slack_c / n
        ok &= good
        lines.append(f"n={n}: min-info {lo:.6g}, value {res.value:.6g}, count rate {rate:.6g}, slack {slack_c / n:.3g}")
    return Check("sandwich", ok, "; ".join(lines))


def check_brin_katok(spec, a, seed, workers=1) -> Check:
    res = closedform.nested_pressure(spec, a)
    uniform = BernoulliMeasure.uniform(spec)
    parts, ok = [], True
    for label, mu, target in (
        ("optimal", res.optimal_measure, res.value),
        ("uniform", uniform, bernoulli_weighted_entropy(spec, a, uniform)),
    ):
        mean, se = estimators.brin_katok_mc(spec, a, mu, 2000, 1000, seed, workers=workers)
        good = abs(mean - target) <= 4 * se if se > 0 else abs(mean - target) <= 1e-9
        ok &= good
        parts.append(f"{label}: mean={mean:.6g} target={target:.6g} se={se:.3g}")
    return Check("brin_katok", ok, "; ".join(parts))


def check_smb(spec, a, seed, workers=1) -> Check:
    mu = BernoulliMeasure.uniform(spec)
    target = bernoulli_weighted_entropy(spec, a, mu)
    x = estimators.sample_orbit(mu, a.schedule(5000)[-1], estimators.make_rng(seed, 7))
    (_, end), = estimators.smb_information_path(spec, a, mu, x, [5000])
    return Check("smb_path", abs(end - target) <= 0.02, f"endpoint={end:.6g} target={target:.6g}")


def classical_allowed(spec: SpongeSpec) -> np.ndarray | None:
    """Forbid the first digit from following itself (a golden-mean-type constraint)."""
    if spec.n_digits < 2:
        return None
    A = np.ones((spec.n_digits, spec.n_digits), dtype=bool)
    A[0, 0] = False
    return A


def check_classical(spec, a, seed, workers=1) -> Check:
    classical = WeightVector([1.0] + [0.0] * (spec.k - 1))
    f = estimators.make_rng(seed, 8).normal(size=spec.n_digits)
    gap = abs(closedform.nested_pressure(spec, classical, f).value - closedform.full_shift_pressure(f))
    ok = gap <= 1e-12
    detail = f"full-shift gap {gap:.3g}"
    A = classical_allowed(spec)
    if A is not None:
        res = optimizer.maximize_markov(spec, classical, allowed=A, n=1, cfg=optimizer.OptimizerConfig(seed=seed))
        oracle = power_iteration_log_radius(A)
        ok &= abs(res.value - oracle) <= 1e-4
        detail += f"; SFT optimizer={res.value:.10g} log radius={oracle:.10g}"
    return Check("classical_reduction", ok, detail)


def check_monotone_deletion(spec, a, seed, workers=1) -> Check:
    value = closedform.nested_pressure(spec, a).value
    opt = optimizer.maximize_bernoulli(spec, a, cfg=optimizer.OptimizerConfig(seed=seed))
    worst = 0.0
    for d in spec.digits if spec.n_digits > 1 else ():
        smaller = spec.without(d)
        worst = max(worst, closedform.nested_pressure(smaller, a).value - value)
    ok = worst <= 1e-12 and abs(opt.value - value) <= 1e-6
    return Check("digit_deletion_monotone", ok, f"max increase {worst:.3g}; optimizer gap {abs(opt.value - value):.3g}")


def box_scales(spec: SpongeSpec) -> tuple[int, range]:
    if spec.k == 2 and spec.bases == (2, 3):
        return 8, range(2, 7)
    depth = max(1, int(math.log(2e5) / math.log(max(spec.n_digits, 2))))
    finest = int(depth * math.log2(min(spec.bases))) - 2
    return depth, range(2, max(finest, 3) + 1)


def check_box_counting(spec, a, seed, workers=1) -> Check:
    name = "box_counting"
    if spec.k != 2:
        return _skip(name, "geometric cross-check calibrated for k=2")
    depth, scales = box_scales(spec)
    pts = estimators.generate_sponge_points(spec, depth)
    est = estimators.box_counting_estimate(pts, scales)
    target = closedform.box_dimension_closed_form(spec)
    return Check(name, abs(est - target) <= 0.08, f"slope={est:.6g} closed form={target:.6g} (depth {depth})")


def check_mc_determinism(spec, a, seed, workers=1) -> Check:
    res = closedform.nested_pressure(spec, a)
    one = estimators.brin_katok_mc(spec, a, res.optimal_measure, 200, 64, seed, workers=1)
    many = estimators.brin_katok_mc(spec, a, res.optimal_measure, 200, 64, seed, workers=4)
    again = estimators.brin_katok_mc(spec, a, res.optimal_measure, 200, 64, seed, workers=1)
    return Check("determinism", one == many == again, f"1-thread {one} vs 4-thread {many}")


CHECKS = (
    check_closed_vs_optimizer,
    check_exhaustive_subsets,
    check_identity,
    check_gradient,
    check_sandwich,
    check_brin_katok,
    check_smb,
    check_classical,
    check_monotone_deletion,
    check_box_counting,
    check_mc_determinism,
)


def run_checks(spec: SpongeSpec, a: WeightVector | None = None, seed: int = 0, workers: int = 1) -> list[Check]:
    a = a or canonical_weights(spec)
    return [check(spec, a, seed, workers) for check in CHECKS]
