"""Feature-enhanced linear prediction head.

Input per sample is [sentence embedding ; z-scored uncertainty
features]; a single linear layer predicts the DA score (least squares)
or the ERR probability (logistic). Training is full-batch gradient
descent from zero initialization, so retraining is bit-reproducible.

The encoder is pluggable: the built-in toy encoder is a signed
hashed bag-of-tokens; an external encoder can supply embeddings via a
TSV keyed by sample id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, QESample, Task, TokenSeq, LABEL_ERR
from .features import (
    FeatureVector,
    N_FEATURES,
    NormalizationStats,
    apply_normalizer,
    fit_normalizer,
)
from .seeding import fnv1a64

DEFAULT_DIM = 256


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.1
    epochs: int = 500
    l2: float = 1e-4


@dataclass(frozen=True)
class EncoderConfig:
    kind: str = "toy"  # "toy" or "external"
    dim: int = DEFAULT_DIM


def toy_encode(src: TokenSeq, mt: TokenSeq, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Signed hashed bag-of-tokens over ``src ++ <sep> ++ mt``, L2-normalized.

    Each token lands in bucket hash % dim with sign from the hash's top
    bit; an all-zero accumulation stays zero.
    """
    if dim < 8:
        raise ValueError("embedding dimension must be >= 8")
    vec = np.zeros(dim)
    for tok in tuple(src) + ("<sep>",) + tuple(mt):
        h = fnv1a64(tok)
        sign = -1.0 if (h >> 63) & 1 else 1.0
        vec[h % dim] += sign
    norm = float(np.linalg.norm(vec))
    return vec / norm if norm > 0 else vec


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class HeadModel:
    task: Task
    weights: np.ndarray  # length = encoder dim + 21
    bias: float
    encoder: EncoderConfig
    norm_stats: NormalizationStats
    hyper: TrainConfig

    def to_json(self) -> dict:
        return {
            "task": self.task.value,
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "encoder": {"kind": self.encoder.kind, "dim": self.encoder.dim},
            "norm_stats": {"means": list(self.norm_stats.means), "stds": list(self.norm_stats.stds)},
            "hyper": {"lr": self.hyper.lr, "epochs": self.hyper.epochs, "l2": self.hyper.l2},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "HeadModel":
        return cls(
            task=Task(doc["task"]),
            weights=np.asarray(doc["weights"], dtype=np.float64),
            bias=float(doc["bias"]),
            encoder=EncoderConfig(kind=doc["encoder"]["kind"], dim=doc["encoder"]["dim"]),
            norm_stats=NormalizationStats(
                means=tuple(doc["norm_stats"]["means"]), stds=tuple(doc["norm_stats"]["stds"])
            ),
            hyper=TrainConfig(**doc["hyper"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "HeadModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _embedding_for(sample: QESample, encoder: EncoderConfig, embeddings: dict[str, np.ndarray] | None) -> np.ndarray:
    if encoder.kind == "external":
        if embeddings is None or sample.id not in embeddings:
            raise ValueError(f"no external embedding for id {sample.id!r}")
        emb = embeddings[sample.id]
        if emb.shape != (encoder.dim,):
            raise ValueError(f"embedding for {sample.id!r} has wrong dimension")
        return emb
    return toy_encode(sample.src, sample.mt, encoder.dim)


def _input_vector(sample: QESample, feats: FeatureVector, encoder: EncoderConfig, stats: NormalizationStats, embeddings=None) -> np.ndarray:
    return np.concatenate([_embedding_for(sample, encoder, embeddings), apply_normalizer(feats, stats)])


def train_head(
    train: Dataset,
    feats: dict[str, FeatureVector],
    task: Task,
    hyper: TrainConfig = TrainConfig(),
    encoder: EncoderConfig = EncoderConfig(),
    embeddings: dict[str, np.ndarray] | None = None,
) -> HeadModel:
    """Fit the linear head with deterministic full-batch gradient descent.

    DA minimizes mean squared error; CED minimizes mean cross-entropy of
    the sigmoid output (ERR = 1). L2 decay applies to the weights only.
    """
    if len(train) == 0:
        raise ValueError("empty training set")
    if train.task is not task:
        raise ValueError("dataset task does not match requested task")
    missing = [s.id for s in train if s.id not in feats]
    if missing:
        raise ValueError(f"features missing for ids: {missing[:5]}")
    if task is Task.CED:
        labels = {s.label for s in train}
        if len(labels) < 2:
            raise ValueError("CED training data must contain both classes")

    rows = [feats[s.id] for s in train]
    stats = fit_normalizer(rows) if len(rows) >= 2 else NormalizationStats(
        means=tuple(map(float, rows[0])), stds=(0.0,) * N_FEATURES
    )
    X = np.stack([_input_vector(s, feats[s.id], encoder, stats, embeddings) for s in train])
    if task is Task.DA:
        y = np.array([float(s.label) for s in train])
    else:
        y = np.array([1.0 if s.label == LABEL_ERR else 0.0 for s in train])

    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    for epoch in range(hyper.epochs):
        z = X @ w + b
        if task is Task.DA:
            err = z - y
            loss = float(np.mean(err * err) + hyper.l2 * w @ w)
            grad_w = 2.0 * (X.T @ err) / n + 2.0 * hyper.l2 * w
            grad_b = 2.0 * float(np.mean(err))
        else:
            p = _sigmoid(z)
            eps = 1e-12
            loss = float(-np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)) + hyper.l2 * w @ w)
            err = p - y
            grad_w = (X.T @ err) / n + 2.0 * hyper.l2 * w
            grad_b = float(np.mean(err))
        if not np.isfinite(loss):
            raise ValueError(f"non-finite training loss at epoch {epoch}")
        w = w - hyper.lr * grad_w
        b = b - hyper.lr * grad_b

    return HeadModel(task=task, weights=w, bias=b, encoder=encoder, norm_stats=stats, hyper=hyper)


def predict(model: HeadModel, sample: QESample, feats: FeatureVector, embeddings: dict[str, np.ndarray] | None = None) -> float:
    """DA: raw linear score. CED: sigmoid probability of ERR."""
    v = _input_vector(sample, feats, model.encoder, model.norm_stats, embeddings)
    if v.shape != model.weights.shape:
        raise ValueError("input dimension does not match model weights")
    z = float(model.weights @ v + model.bias)
    if model.task is Task.DA:
        return z
    return float(_sigmoid(np.array([z]))[0])


CED_THRESHOLD = 0.5


def decide(probability: float) -> str:
    """Binary decision at the fixed 0.5 threshold (>= 0.5 -> ERR)."""
    from .data import LABEL_NOT

    return LABEL_ERR if probability >= CED_THRESHOLD else LABEL_NOT


# -- external embedding TSV -------------------------------------------


def load_embeddings(path: str | Path) -> dict[str, np.ndarray]:
    """Read an ``id<TAB>v1..vD`` table produced by an external encoder."""
    out: dict[str, np.ndarray] = {}
    dim = None
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line:
            continue
        fields = line.split("\t")
        if dim is None:
            dim = len(fields) - 1
            if dim < 1:
                raise ValueError(f"line {lineno}: no embedding values")
        elif len(fields) - 1 != dim:
            raise ValueError(f"line {lineno}: inconsistent embedding dimension")
        out[fields[0]] = np.array([float(v) for v in fields[1:]])
    if not out:
        raise ValueError(f"{path}: empty embedding file")
    return out
