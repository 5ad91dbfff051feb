"""Weighted topological pressure, weighted entropy and dimensions of self-affine sponges."""
from .closedform import (
    barral_feng_identity_check,
    box_dimension_closed_form,
    mcmullen_dimension,
    nested_pressure,
)
from .entropy import (
    EntropyBracket,
    bernoulli_weighted_entropy,
    hidden_marginal_entropy_bounds,
    markov_entropy_rate,
    markov_weighted_entropy,
    shannon_entropy,
)
from .model import (
    BernoulliMeasure,
    BudgetExceeded,
    CylinderPotential,
    MarkovMeasure,
    SpecError,
    SpongeSpec,
    WeightVector,
    canonical_weights,
    project_digit,
    pushforward,
)
from .optimizer import OptimizerConfig, maximize_bernoulli, maximize_markov

__all__ = [
    "BernoulliMeasure",
    "BudgetExceeded",
    "CylinderPotential",
    "EntropyBracket",
    "MarkovMeasure",
    "OptimizerConfig",
    "SpecError",
    "SpongeSpec",
    "WeightVector",
    "barral_feng_identity_check",
    "bernoulli_weighted_entropy",
    "box_dimension_closed_form",
    "canonical_weights",
    "hidden_marginal_entropy_bounds",
    "markov_entropy_rate",
    "markov_weighted_entropy",
    "maximize_bernoulli",
    "maximize_markov",
    "mcmullen_dimension",
    "nested_pressure",
    "project_digit",
    "pushforward",
    "shannon_entropy",
]
