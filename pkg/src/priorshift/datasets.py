"""Bundled reference data: test-set class priors of common text-classification
benchmarks and a content-free score fixture."""
from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .core import PriorVector

PRIOR_NAMES = ("trec", "sst2", "agnews", "dbpedia")


def _load(name):
    if name not in PRIOR_NAMES:
        raise KeyError(f"unknown bundled prior {name!r}; choose from {PRIOR_NAMES}")
    text = resources.files(__package__).joinpath("data", "priors", f"{name}.json").read_text()
    return json.loads(text)


def prior_table(name: str) -> dict:
    """Raw published entry: ``class_names``, rounded ``probs`` and ``test_samples``."""
    return _load(name)


def bundled_prior(name: str) -> tuple[PriorVector, tuple[str, ...]]:
    """Published class prior, renormalized (the rounded values need not sum to 1)."""
    d = _load(name)
    probs = np.asarray(d["probs"], dtype=np.float64)
    return PriorVector(probs / probs.sum()), tuple(d["class_names"])


def content_free_path():
    """Path to a score file with content-free inputs ("[MASK]", "N/A", "")."""
    return resources.files(__package__).joinpath("data", "content_free_sst2.jsonl")
