import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wtp.entropy import (
    EntropyBracket,
    bernoulli_weighted_entropy,
    hidden_marginal_entropy_bounds,
    markov_entropy_rate,
    markov_weighted_entropy,
    shannon_entropy,
)
from wtp.model import BernoulliMeasure, BudgetExceeded, MarkovMeasure, SpecError, SpongeSpec, WeightVector, canonical_weights

from conftest import UNIFORM_WEIGHTED_ENTROPY

# Non-lumpable chain on the carpet digits: the column process has real hidden memory.
HIDDEN_P = np.array([[0.1, 0.8, 0.1], [0.5, 0.1, 0.4], [0.3, 0.3, 0.4]])


def test_shannon_examples():
    assert shannon_entropy([1 / 3] * 3) == pytest.approx(math.log(3), abs=1e-15)
    assert shannon_entropy([1.0, 0.0]) == 0.0
    assert shannon_entropy([2 / 3, 1 / 3]) == pytest.approx(0.6365142, abs=1e-7)
    with pytest.raises(SpecError):
        shannon_entropy([1.5, -0.5])


def test_bernoulli_weighted_entropy_examples(carpet, carpet_weights):
    uniform = BernoulliMeasure.uniform(carpet)
    assert bernoulli_weighted_entropy(carpet, carpet_weights, uniform) == pytest.approx(UNIFORM_WEIGHTED_ENTROPY, abs=1e-14)
    assert bernoulli_weighted_entropy(carpet, carpet_weights, uniform) == pytest.approx(1.33892, abs=1e-5)
    p = np.array([0.2, 0.5, 0.3])
    assert bernoulli_weighted_entropy(carpet, WeightVector([1, 0]), p) == pytest.approx(shannon_entropy(p), abs=1e-15)
    assert bernoulli_weighted_entropy(carpet, carpet_weights, BernoulliMeasure.point_mass(carpet, (1, 1))) == 0.0


def test_weighted_entropy_bound_attained_on_product_sets():
    spec = SpongeSpec.full((2, 3, 4))
    a = canonical_weights(spec)
    bound = sum(w * math.log(s) for w, s in zip(a.a, spec.alphabet_sizes()))
    assert bernoulli_weighted_entropy(spec, a, BernoulliMeasure.uniform(spec)) == pytest.approx(bound, abs=1e-13)
    rng = np.random.default_rng(1)
    for _ in range(20):
        assert bernoulli_weighted_entropy(spec, a, rng.dirichlet(np.ones(spec.n_digits))) < bound


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 1))
def test_weighted_entropy_concave(seed, lam):
    rng = np.random.default_rng(seed)
    spec = SpongeSpec((2, 3, 5), [d for d in SpongeSpec.full((2, 3, 5)).digits if rng.random() < 0.4] or [(0, 0, 0)])
    a = WeightVector(rng.uniform(0.01, 2, size=3))
    p, q = rng.dirichlet(np.ones(spec.n_digits), size=2)
    mix = bernoulli_weighted_entropy(spec, a, lam * p + (1 - lam) * q)
    assert mix >= lam * bernoulli_weighted_entropy(spec, a, p) + (1 - lam) * bernoulli_weighted_entropy(spec, a, q) - 1e-12
    bound = sum(w * math.log(s) for w, s in zip(a.a, spec.alphabet_sizes()))
    assert mix <= bound + 1e-12


def test_markov_entropy_rate_examples(carpet):
    p = np.array([0.2, 0.5, 0.3])
    assert markov_entropy_rate(MarkovMeasure.iid(BernoulliMeasure(carpet, p))) == pytest.approx(shannon_entropy(p), abs=1e-15)
    cycle = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=float)
    assert markov_entropy_rate(MarkovMeasure(carpet, cycle)) == 0.0
    coin = SpongeSpec((2,), [(0,), (1,)])
    assert markov_entropy_rate(MarkovMeasure(coin, np.full((2, 2), 0.5))) == pytest.approx(math.log(2), abs=1e-15)


def _brute_bracket(m, spec, level, n):
    """Conditional block entropies from the full joint law of (X_1..X_{n+1})."""
    nd = spec.n_digits
    proj = spec.level_index(level)
    joint_y, joint_y_short = {}, {}
    joint_xy, joint_xy_short = {}, {}
    for xs in itertools.product(range(nd), repeat=n + 1):
        pr = m.stationary[xs[0]]
        for u, v in zip(xs, xs[1:]):
            pr *= m.transition[u, v]
        if pr == 0:
            continue
        ys = tuple(proj[x] for x in xs)
        joint_y[ys] = joint_y.get(ys, 0) + pr
        joint_y_short[ys[:-1]] = joint_y_short.get(ys[:-1], 0) + pr
        key = (xs[0],) + ys[1:]
        joint_xy[key] = joint_xy.get(key, 0) + pr
        joint_xy_short[key[:-1]] = joint_xy_short.get(key[:-1], 0) + pr

    def H(d):
        return -sum(v * math.log(v) for v in d.values() if v > 0)

    return H(joint_xy) - H(joint_xy_short), H(joint_y) - H(joint_y_short)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_hidden_bracket_matches_enumeration(carpet, n):
    m = MarkovMeasure(carpet, HIDDEN_P)
    lower, upper = _brute_bracket(m, carpet, 2, n)
    br = hidden_marginal_entropy_bounds(m, carpet, 2, n)
    assert br.lower == pytest.approx(lower, abs=1e-12)
    assert br.upper == pytest.approx(upper, abs=1e-12)


def test_hidden_bracket_iid_is_exact(carpet):
    p = BernoulliMeasure(carpet, [0.2, 0.5, 0.3])
    m = MarkovMeasure.iid(p)
    for n in (1, 2, 4):
        br = hidden_marginal_entropy_bounds(m, carpet, 2, n)
        assert br.lower == pytest.approx(shannon_entropy([0.7, 0.3]), abs=1e-12)
        assert br.upper == pytest.approx(shannon_entropy([0.7, 0.3]), abs=1e-12)


def test_hidden_bracket_identity_level(carpet):
    m = MarkovMeasure(carpet, HIDDEN_P)
    br = hidden_marginal_entropy_bounds(m, carpet, 1, 1)
    assert br.lower == pytest.approx(markov_entropy_rate(m), abs=1e-13)
    assert br.upper == pytest.approx(markov_entropy_rate(m), abs=1e-13)


def test_hidden_bracket_narrows_and_nests(carpet):
    m = MarkovMeasure(carpet, HIDDEN_P)
    brackets = [hidden_marginal_entropy_bounds(m, carpet, 2, n) for n in range(1, 13)]
    assert brackets[7].width < brackets[3].width
    for small, big in zip(brackets, brackets[1:]):
        assert small.contains(big, slack=1e-12)
        assert big.width <= small.width + 1e-12


def test_hidden_bracket_budget(carpet):
    m = MarkovMeasure(carpet, HIDDEN_P)
    with pytest.raises(BudgetExceeded):
        hidden_marginal_entropy_bounds(m, carpet, 2, 20, budget=1000)
    with pytest.raises(SpecError):
        hidden_marginal_entropy_bounds(m, carpet, 2, 0)


def test_markov_weighted_entropy(carpet, carpet_weights):
    p = BernoulliMeasure(carpet, [0.2, 0.5, 0.3])
    br = markov_weighted_entropy(carpet, carpet_weights, MarkovMeasure.iid(p), 3)
    exact = bernoulli_weighted_entropy(carpet, carpet_weights, p)
    assert br.lower == pytest.approx(exact, abs=1e-12) and br.upper == pytest.approx(exact, abs=1e-12)

    m = MarkovMeasure(carpet, HIDDEN_P)
    br = markov_weighted_entropy(carpet, WeightVector([1, 0]), m, 2)
    assert br.lower == pytest.approx(markov_entropy_rate(m), abs=1e-13)
    assert br.upper == pytest.approx(markov_entropy_rate(m), abs=1e-13)

    rng = np.random.default_rng(7)
    chain = MarkovMeasure(carpet, rng.dirichlet(np.ones(3), size=3))
    b6 = markov_weighted_entropy(carpet, carpet_weights, chain, 6)
    b10 = markov_weighted_entropy(carpet, carpet_weights, chain, 10)
    assert b6.contains(b10, slack=1e-12)
    assert b10.to_dict() == {"lower": b10.lower, "upper": b10.upper, "n": 10}


def test_bracket_rejects_inverted():
    with pytest.raises(ValueError):
        EntropyBracket(1.0, 0.5, 1)
