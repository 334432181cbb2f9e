"""Self-supervised text anomaly detection via a jointly trained RMD/RTD discriminator."""

from date_ad._core import (  # noqa: F401
    aupr,
    auroc,
    collision_bound,
    default_config,
    empirical_collision_rate,
    gen_patterns,
    preprocess,
    r_ratio,
    run_experiment,
    score_file,
    write_synth_corpus,
)

__all__ = [
    "aupr",
    "auroc",
    "collision_bound",
    "default_config",
    "empirical_collision_rate",
    "gen_patterns",
    "preprocess",
    "r_ratio",
    "run_experiment",
    "score_file",
    "write_synth_corpus",
]
