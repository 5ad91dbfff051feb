import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from wtp.closedform import (
    barral_feng_identity_check,
    box_dimension_closed_form,
    column_counts,
    mcmullen_dimension,
    nested_pressure,
)
from wtp.entropy import bernoulli_weighted_entropy
from wtp.model import SpecError, SpongeSpec, WeightVector, canonical_weights
from wtp.optimizer import weighted_objective

from conftest import MCMULLEN_BOX, MCMULLEN_DIM


def slsqp_pressure(spec, a, f):
    """Independent oracle: SLSQP on the simplex with softmax-free direct constraints."""
    n = spec.n_digits
    res = minimize(
        lambda p: -weighted_objective(spec, a, np.clip(p, 1e-15, None) / np.clip(p, 1e-15, None).sum(), f),
        np.full(n, 1 / n),
        method="SLSQP",
        bounds=[(1e-12, 1)] * n,
        constraints=[{"type": "eq", "fun": lambda p: p.sum() - 1}],
        options={"ftol": 1e-14, "maxiter": 500},
    )
    return -res.fun


def test_carpet_value(carpet, carpet_weights):
    res = nested_pressure(carpet, carpet_weights)
    assert res.value == pytest.approx(MCMULLEN_DIM, abs=1e-13)
    assert res.value == pytest.approx(1.34967, abs=2e-5)
    q = res.conditionals[0][()]
    theta = 2 ** (math.log(2) / math.log(3))
    assert q[0] == pytest.approx(theta / (1 + theta), abs=1e-14)
    assert (q[0], q[1]) == pytest.approx((0.6076, 0.3924), abs=1e-4)
    assert res.conditionals[1][(0,)] == pytest.approx({0: 0.5, 2: 0.5})


def test_conditionals_chain_to_measure(carpet_weights):
    spec = SpongeSpec((2, 3, 5), [(0, 0, 1), (0, 1, 1), (0, 2, 3), (1, 0, 0), (1, 1, 4), (1, 1, 2)])
    res = nested_pressure(spec, canonical_weights(spec), np.arange(6) * 0.3)
    for j, d in enumerate(spec.digits):
        prod = 1.0
        for l in range(3):
            prod *= res.conditionals[l][d[:l]][d[l]]
        assert prod == pytest.approx(res.optimal_measure.p[j], abs=1e-12)
    for level in res.conditionals:
        for row in level.values():
            assert sum(row.values()) == pytest.approx(1.0, abs=1e-14)
    json.dumps(res.to_dict())


def test_classical_reduction(carpet, rng):
    for _ in range(10):
        f = rng.normal(size=3) * 5
        assert nested_pressure(carpet, WeightVector([1, 0]), f).value == pytest.approx(math.log(np.exp(f).sum()), abs=1e-12)


def test_constant_shift(carpet, carpet_weights, rng):
    f = rng.normal(size=3)
    base = nested_pressure(carpet, carpet_weights, f).value
    for c in (-3.0, 0.5, 40.0):
        assert nested_pressure(carpet, carpet_weights, f + c).value == pytest.approx(base + c, abs=1e-12)


def test_no_overflow_with_large_potentials(carpet, carpet_weights):
    f = np.array([800.0, -900.0, 750.0])
    v = nested_pressure(carpet, carpet_weights, f).value
    assert math.isfinite(v) and v >= 800.0


def test_maximizer_attains_value(carpet, carpet_weights):
    res = nested_pressure(carpet, carpet_weights)
    assert bernoulli_weighted_entropy(carpet, carpet_weights, res.optimal_measure) == pytest.approx(res.value, abs=1e-10)


@pytest.mark.filterwarnings("ignore:Values in x were outside bounds")
@pytest.mark.parametrize("seed", range(5))
def test_against_slsqp_oracle(seed):
    rng = np.random.default_rng(seed)
    full = SpongeSpec.full((2, 3, 4)).digits
    spec = SpongeSpec((2, 3, 4), [full[i] for i in rng.choice(len(full), 7, replace=False)])
    a = WeightVector(rng.uniform(0.1, 1.5, size=3))
    f = rng.normal(size=7)
    assert nested_pressure(spec, a, f).value == pytest.approx(slsqp_pressure(spec, a, f), abs=1e-7)


def test_degenerate_zero_weights():
    spec = SpongeSpec((2, 2, 2), [(0, 0, 1), (0, 1, 1), (1, 1, 0)])
    a = canonical_weights(spec)
    assert a.a[1:] == (0.0, 0.0)
    assert nested_pressure(spec, a).value == pytest.approx(math.log(3) / math.log(2), abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_monotone_under_digit_deletion(seed):
    rng = np.random.default_rng(seed)
    full = SpongeSpec.full((2, 3, 3)).digits
    spec = SpongeSpec((2, 3, 3), [full[i] for i in rng.choice(len(full), rng.integers(2, 10), replace=False)])
    a = WeightVector(rng.uniform(0.05, 2, size=3))
    f = rng.normal(size=spec.n_digits)
    value = nested_pressure(spec, a, f).value
    for j, d in enumerate(spec.digits):
        keep = [i for i in range(spec.n_digits) if i != j]
        assert nested_pressure(spec.without(d), a, f[keep]).value <= value + 1e-12


def test_mcmullen_examples(carpet):
    assert mcmullen_dimension(carpet) == pytest.approx(MCMULLEN_DIM, abs=1e-14)
    assert mcmullen_dimension(SpongeSpec.full((2, 3))) == pytest.approx(2.0, abs=1e-14)
    one_column = SpongeSpec((2, 5), [(1, 0), (1, 3), (1, 4)])
    assert mcmullen_dimension(one_column) == pytest.approx(math.log(3) / math.log(5), abs=1e-14)
    with pytest.raises(SpecError):
        mcmullen_dimension(SpongeSpec((2, 3, 5), [(0, 0, 0)]))


def test_box_dimension_examples(carpet):
    assert box_dimension_closed_form(carpet) == pytest.approx(MCMULLEN_BOX, abs=1e-14)
    assert box_dimension_closed_form(carpet) == pytest.approx(1.3690703, abs=1e-7)
    assert box_dimension_closed_form(SpongeSpec.full((2, 3))) == pytest.approx(2.0, abs=1e-14)
    graph = SpongeSpec((3, 4), [(0, 1), (1, 3), (2, 0)])
    assert box_dimension_closed_form(graph) == pytest.approx(1.0, abs=1e-14)


def test_dimension_vs_box_all_subsets_of_3x4():
    grid = SpongeSpec.full((3, 4)).digits
    for r in range(1, 5):
        for sub in itertools.combinations(grid, r):
            s = SpongeSpec((3, 4), sub)
            t = column_counts(s)
            t = t[t > 0]
            dim, box = mcmullen_dimension(s), box_dimension_closed_form(s)
            assert dim == pytest.approx(nested_pressure(s, canonical_weights(s)).value, abs=1e-9)
            assert dim <= box + 1e-12
            assert (abs(dim - box) <= 1e-12) == bool(np.all(t == t[0]))


def test_identity_examples(carpet, carpet_weights, rng):
    assert barral_feng_identity_check(carpet, carpet_weights) <= 1e-12
    for _ in range(100):
        assert barral_feng_identity_check(carpet, carpet_weights, rng.normal(size=3) * 3) <= 1e-10
    a = WeightVector([0.7, 0.0])
    f = rng.normal(size=3)
    assert barral_feng_identity_check(carpet, a, f) <= 1e-12
    assert nested_pressure(carpet, a, f).value == pytest.approx(0.7 * math.log(np.exp(f / 0.7).sum()), abs=1e-12)
