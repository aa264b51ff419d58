"""Evaluation metrics: Pearson correlation (DA) and MCC (CED)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Dataset, Task, LABEL_ERR, LABEL_NOT

CED_THRESHOLD = 0.5


def pearson(preds: Sequence[float], golds: Sequence[float]) -> float:
    """Sample Pearson correlation; constant input is an error."""
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} vs {len(golds)}")
    if len(preds) < 2:
        raise ValueError("need at least 2 points")
    p = np.asarray(preds, dtype=np.float64)
    g = np.asarray(golds, dtype=np.float64)
    dp = p - p.mean()
    dg = g - g.mean()
    den = math.sqrt(float(dp @ dp) * float(dg @ dg))
    if den == 0.0:
        raise ValueError("undefined correlation: constant series")
    return float(dp @ dg) / den


def mcc(pred_labels: Sequence[str], gold_labels: Sequence[str]) -> float:
    """Matthews correlation with ERR as the positive class.

    Any zero factor in the denominator yields 0 by convention.
    """
    if len(pred_labels) != len(gold_labels):
        raise ValueError(f"length mismatch: {len(pred_labels)} vs {len(gold_labels)}")
    if not pred_labels:
        raise ValueError("empty label lists")
    tp = fp = tn = fn = 0
    for pred, gold in zip(pred_labels, gold_labels):
        if pred == LABEL_ERR:
            if gold == LABEL_ERR:
                tp += 1
            else:
                fp += 1
        else:
            if gold == LABEL_ERR:
                fn += 1
            else:
                tn += 1
    den_sq = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if den_sq == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(den_sq)


@dataclass(frozen=True)
class EvalReport:
    metric: str
    value: float
    count: int
    per_pair: dict[str, float]


def _metric_for(task: Task, preds: list[float], dataset_samples) -> float:
    if task is Task.DA:
        return pearson(preds, [float(s.label) for s in dataset_samples])
    decisions = [LABEL_ERR if p >= CED_THRESHOLD else LABEL_NOT for p in preds]
    return mcc(decisions, [s.label for s in dataset_samples])


def evaluate(preds: dict[str, float], gold: Dataset, task: Task) -> EvalReport:
    """Overall metric plus a per-language-pair breakdown."""
    missing = [s.id for s in gold if s.id not in preds]
    if missing:
        raise ValueError(f"predictions missing for ids: {missing[:10]}")
    samples = list(gold)
    overall = _metric_for(task, [preds[s.id] for s in samples], samples)
    per_pair: dict[str, float] = {}
    pairs: dict[str, list] = {}
    for s in samples:
        pairs.setdefault(s.lang_pair, []).append(s)
    for pair, members in pairs.items():
        per_pair[pair] = _metric_for(task, [preds[s.id] for s in members], members)
    name = "pearson" if task is Task.DA else "mcc"
    return EvalReport(metric=name, value=overall, count=len(samples), per_pair=per_pair)
