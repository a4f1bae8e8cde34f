"""InfoLM scoring and meta-evaluation."""

from ._infolm import (
    InfoLMError,
    ab_divergence,
    alpha_divergence,
    evaluate_measure,
    fisher_rao,
    gamma_divergence,
    jeffreys_kl,
    kendall,
    kl_divergence,
    lp_distance,
    pearson,
    preset,
    preset_names,
    run_cli,
    score,
    spearman,
    temperature_softmax,
    williams_test,
)

__all__ = [
    "InfoLMError",
    "ab_divergence",
    "alpha_divergence",
    "evaluate_measure",
    "fisher_rao",
    "gamma_divergence",
    "jeffreys_kl",
    "kendall",
    "kl_divergence",
    "lp_distance",
    "pearson",
    "preset",
    "preset_names",
    "run_cli",
    "score",
    "spearman",
    "temperature_softmax",
    "williams_test",
]
