"""GARI augmentation of correlated detector error models and NMS decoding."""

from .augment import (
    CorrelatedModel,
    GariModel,
    build_correlated,
    build_gari,
    load_model,
    save_model,
    table_stats,
    verify_equivalence,
)
from .decoder import DecodeOutcome, DecoderConfig, decode
from .dem import DemModel, ErrorMechanism, load_dem, parse_dem
from .ensemble import EnsembleConfig, ensemble_decode
from .harness import ExperimentConfig, ExperimentReport, ci99, ler_per_round, run_experiment

__all__ = [
    "CorrelatedModel", "GariModel", "build_correlated", "build_gari", "load_model",
    "save_model", "table_stats", "verify_equivalence", "DecodeOutcome", "DecoderConfig",
    "decode", "DemModel", "ErrorMechanism", "load_dem", "parse_dem", "EnsembleConfig",
    "ensemble_decode", "ExperimentConfig", "ExperimentReport", "ci99", "ler_per_round",
    "run_experiment",
]
