"""Temporal hypergraph pattern prediction.

Typical use::

    g = normalize_time(ingest_benson_graph(*find_benson_files("data/tags-ask-ubuntu")))
    instances = balance_classes(enumerate_instances(g))
    model = HIT(ModelConfig(task="q1", time_scale=g.time_range))
    result = train(model, g, train_split, valid_split, TrainConfig())
"""

from .baselines import FEATURE_NAMES, feature_table, train_heuristic_head
from .config import ConfigError, RunConfig, load_config
from .hypergraph import (HypergraphFormatError, TemporalHyperedge, TemporalHypergraph, find_benson_files,
                         ingest_benson, ingest_benson_graph, load_cache, normalize_time, save_cache, stats)
from .interpret import CategoryReport, rank_categories
from .metrics import auc_1v1, confusion_matrix, grad_check, mae_log, mean_std
from .model import HIT, CheckpointError, ModelConfig, load_checkpoint, save_checkpoint
from .patterns import (LabeledInstance, Pattern, SplitConfig, Triplet, balance_classes, enumerate_instances,
                       label_triplet)
from .training import TrainConfig, TrainingDivergedError, evaluate, train
from .walks import SamplerConfig, Walk, WalkSet, enumerate_walks, sample_walks, walk_probability

__version__ = "0.1.0"

__all__ = [
    "FEATURE_NAMES", "feature_table", "train_heuristic_head",
    "ConfigError", "RunConfig", "load_config",
    "HypergraphFormatError", "TemporalHyperedge", "TemporalHypergraph", "find_benson_files", "ingest_benson",
    "ingest_benson_graph", "load_cache", "normalize_time", "save_cache", "stats",
    "CategoryReport", "rank_categories",
    "auc_1v1", "confusion_matrix", "grad_check", "mae_log", "mean_std",
    "HIT", "CheckpointError", "ModelConfig", "load_checkpoint", "save_checkpoint",
    "LabeledInstance", "Pattern", "SplitConfig", "Triplet", "balance_classes", "enumerate_instances",
    "label_triplet",
    "TrainConfig", "TrainingDivergedError", "evaluate", "train",
    "SamplerConfig", "Walk", "WalkSet", "enumerate_walks", "sample_walks", "walk_probability",
]
