"""Greedy forward ensembling over prediction sets.

Candidates are sorted by their development-set metric; starting from the
best single model, the next candidate in sorted order joins the
(uniformly averaged) ensemble only while the dev metric strictly
improves, up to a step cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .data import Dataset, Task
from .evalmetrics import evaluate


@dataclass(frozen=True)
class PredictionSet:
    model_id: str
    scores: dict[str, float]


@dataclass(frozen=True)
class EnsembleSelection:
    members: tuple[str, ...]
    trajectory: tuple[float, ...]
    task: Task
    max_steps: int


def average_predictions(members: list[PredictionSet]) -> PredictionSet:
    """Uniform per-id mean; id sets must agree exactly."""
    if not members:
        raise ValueError("no prediction sets to average")
    base_ids = set(members[0].scores)
    for m in members[1:]:
        ids = set(m.scores)
        if ids != base_ids:
            diff = sorted((ids ^ base_ids))[:10]
            raise ValueError(f"prediction id mismatch between {members[0].model_id} and {m.model_id}: {diff}")
    n = len(members)
    averaged = {
        sid: sum(m.scores[sid] for m in members) / n for sid in members[0].scores
    }
    model_id = "+".join(m.model_id for m in members)
    return PredictionSet(model_id=model_id, scores=averaged)


def _dev_metric(preds: PredictionSet, dev: Dataset, task: Task) -> float:
    try:
        return evaluate(preds.scores, dev, task).value
    except ValueError as exc:
        raise ValueError(f"model {preds.model_id}: {exc}") from exc


def greedy_select(candidates: list[PredictionSet], dev: Dataset, task: Task, max_steps: int) -> EnsembleSelection:
    """Greedy forward selection; deterministic, ties broken by model id."""
    if not candidates:
        raise ValueError("no candidates")
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    single = {c.model_id: _dev_metric(c, dev, task) for c in candidates}
    scored = sorted(candidates, key=lambda c: (-single[c.model_id], c.model_id))
    members = [scored[0]]
    best = single[scored[0].model_id]
    trajectory = [best]
    for nxt in scored[1:]:
        if len(members) >= max_steps:
            break
        tentative = members + [nxt]
        value = _dev_metric(average_predictions(tentative), dev, task)
        if value > best:
            members = tentative
            best = value
            trajectory.append(value)
        else:
            break
    return EnsembleSelection(
        members=tuple(m.model_id for m in members),
        trajectory=tuple(trajectory),
        task=task,
        max_steps=max_steps,
    )


# -- prediction TSV I/O ------------------------------------------------

PREDICTION_HEADER = "id\tscore"


def predictions_to_tsv(preds: PredictionSet) -> str:
    lines = [PREDICTION_HEADER]
    for sid, score in preds.scores.items():
        lines.append(f"{sid}\t{score:.17g}")
    return "\n".join(lines) + "\n"


def load_predictions(path: str | Path, model_id: str | None = None) -> PredictionSet:
    path = Path(path)
    lines = [ln for ln in path.read_text(encoding="utf-8").split("\n") if ln]
    if not lines or lines[0] != PREDICTION_HEADER:
        raise ValueError(f"{path}: missing or malformed prediction header")
    scores: dict[str, float] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 2:
            raise ValueError(f"line {lineno}: expected 2 fields")
        scores[fields[0]] = float(fields[1])
    return PredictionSet(model_id=model_id or path.stem, scores=scores)
