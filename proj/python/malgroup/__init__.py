"""Opcode-histogram malware detection: parsing, feature selection,
size clustering, and per-cluster classifiers."""

from malgroup._core import (
    classify,
    cluster,
    default_scenario_json,
    evaluate,
    generate_dataset,
    ingest,
    kmeans_1d,
    parse_disassembly,
    select_features,
    sweep,
    train,
)

__all__ = [
    "classify",
    "cluster",
    "default_scenario_json",
    "evaluate",
    "generate_dataset",
    "ingest",
    "kmeans_1d",
    "parse_disassembly",
    "select_features",
    "sweep",
    "train",
]
