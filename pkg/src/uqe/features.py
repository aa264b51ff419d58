"""The 21 uncertainty features and their normalization.

Three groups per (source, translation) pair:

* dp_*      — mean / population std / mean-over-std of the forced-decode
              step log-probabilities;
* mc_*      — mean / std / combo of three series over N stochastic
              dropout decodes: similarity to the translation, average
              inner similarity among the decodes, and per-decode mean
              step log-probability;
* noise_*   — the same three series over N decodes of noised inputs with
              fixed model weights.

Feature extraction is a pure function of (sample, model, mlm, config):
per-sample seeds are derived from the base seed and the sample id, so a
dataset extracts identically for any worker count or ordering.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .data import QESample, TokenSeq
from .glassbox import NoiseConfig, UnigramMLM, force_decode, greedy_translate, mc_dropout_samples, generate_noised_input
from .seeding import mix
from .similarity import sim

# standard deviations below this are treated as zero (combo guard,
# normalization guard)
STD_EPS = 1e-9


class FeatureVector(NamedTuple):
    dp_mean: float
    dp_std: float
    dp_combo: float
    mc_sim_mean: float
    mc_sim_std: float
    mc_sim_combo: float
    mc_sim_inner_mean: float
    mc_sim_inner_std: float
    mc_sim_inner_combo: float
    mc_pstep_mean: float
    mc_pstep_std: float
    mc_pstep_combo: float
    noise_sim_mean: float
    noise_sim_std: float
    noise_sim_combo: float
    noise_sim_inner_mean: float
    noise_sim_inner_std: float
    noise_sim_inner_combo: float
    noise_pstep_mean: float
    noise_pstep_std: float
    noise_pstep_combo: float


FEATURE_NAMES: tuple[str, ...] = FeatureVector._fields
N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class FeatureConfig:
    n_mc: int = 8
    dropout_rate: float = 0.3
    n_noise: int = 8
    noise: NoiseConfig = NoiseConfig(rounds=2, p_insert=0.15, p_delete=0.15)
    base_seed: int = 0

    def __post_init__(self):
        if self.n_mc < 2 or self.n_noise < 2:
            raise ValueError("n_mc and n_noise must be >= 2")

    def to_json(self) -> dict:
        return {
            "n_mc": self.n_mc,
            "dropout_rate": self.dropout_rate,
            "n_noise": self.n_noise,
            "noise_rounds": self.noise.rounds,
            "p_insert": self.noise.p_insert,
            "p_delete": self.noise.p_delete,
            "base_seed": self.base_seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FeatureConfig":
        return cls(
            n_mc=doc["n_mc"],
            dropout_rate=doc["dropout_rate"],
            n_noise=doc["n_noise"],
            noise=NoiseConfig(
                rounds=doc["noise_rounds"],
                p_insert=doc["p_insert"],
                p_delete=doc["p_delete"],
            ),
            base_seed=doc["base_seed"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "FeatureConfig":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


# -- per-sequence statistics ------------------------------------------


def expectation(values: Sequence[float]) -> float:
    """Arithmetic mean of a step log-probability sequence."""
    if len(values) == 0:
        raise ValueError("empty sequence")
    return float(np.mean(values))


def std_dev(values: Sequence[float]) -> float:
    """Population std via the moment form, radicand clamped at 0."""
    if len(values) == 0:
        raise ValueError("empty sequence")
    arr = np.asarray(values, dtype=np.float64)
    radicand = float(np.mean(arr * arr) - np.mean(arr) ** 2)
    return math.sqrt(max(radicand, 0.0))


def combo(values: Sequence[float]) -> float:
    """Mean over std; 0 when the std is (numerically) zero."""
    s = std_dev(values)
    if s < STD_EPS:
        return 0.0
    return expectation(values) / s


def sample_stats(values: Sequence[float]) -> tuple[float, float, float]:
    """(mean, population std, mean/std) over a sample series, N >= 2."""
    if len(values) < 2:
        raise ValueError("need at least 2 values")
    return expectation(values), std_dev(values), combo(values)


# -- feature groups ----------------------------------------------------


def _inner_sims(outputs: list[TokenSeq]) -> list[float]:
    n = len(outputs)
    table = [[sim(outputs[i], outputs[j]) for j in range(n)] for i in range(n)]
    # the inner sum includes j = i
    return [sum(row) / n for row in table]


def mc_features(model, src: TokenSeq, mt: TokenSeq, cfg: FeatureConfig, seed: int | None = None) -> tuple[float, ...]:
    """Nine dropout-sampling features: stats of sim, inner-sim, pstep series."""
    base = cfg.base_seed if seed is None else seed
    samples = mc_dropout_samples(model, src, cfg.n_mc, cfg.dropout_rate, mix(base, "mc"))
    outputs = [s.tokens for s in samples]
    sims = [sim(mt, out) for out in outputs]
    inner = _inner_sims(outputs)
    pstep = [expectation(s.step_logprobs) for s in samples]
    return sample_stats(sims) + sample_stats(inner) + sample_stats(pstep)


def noise_features(model, mlm: UnigramMLM, src: TokenSeq, mt: TokenSeq, cfg: FeatureConfig, seed: int | None = None) -> tuple[float, ...]:
    """Nine noised-input features; model weights fixed, inputs perturbed."""
    base = cfg.base_seed if seed is None else seed
    decodes = [
        greedy_translate(model, generate_noised_input(src, cfg.noise, mlm, mix(base, "noise", i)))
        for i in range(cfg.n_noise)
    ]
    outputs = [d.tokens for d in decodes]
    sims = [sim(mt, out) for out in outputs]
    inner = _inner_sims(outputs)
    pstep = [expectation(d.step_logprobs) for d in decodes]
    return sample_stats(sims) + sample_stats(inner) + sample_stats(pstep)


def extract_features(sample: QESample, model, mlm: UnigramMLM, cfg: FeatureConfig) -> FeatureVector:
    """Full 21-feature vector for one sample; order- and worker-independent."""
    if not sample.src or not sample.mt:
        raise ValueError(f"sample {sample.id}: empty source or translation")
    sample_seed = mix(cfg.base_seed, sample.id)
    dp = force_decode(model, sample.src, sample.mt)
    dp_stats = (expectation(dp), std_dev(dp), combo(dp))
    mc = mc_features(model, sample.src, sample.mt, cfg, seed=sample_seed)
    noise = noise_features(model, mlm, sample.src, sample.mt, cfg, seed=sample_seed)
    return FeatureVector(*(dp_stats + mc + noise))


# -- normalization -----------------------------------------------------


@dataclass(frozen=True)
class NormalizationStats:
    means: tuple[float, ...]
    stds: tuple[float, ...]

    def __post_init__(self):
        if len(self.means) != N_FEATURES or len(self.stds) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} entries")
        if any(s < 0 for s in self.stds):
            raise ValueError("negative std")


def fit_normalizer(rows: Sequence[FeatureVector]) -> NormalizationStats:
    """Per-feature mean and population std over training rows."""
    if len(rows) < 2:
        raise ValueError("need at least 2 rows to fit normalization")
    mat = np.asarray(rows, dtype=np.float64)
    return NormalizationStats(
        means=tuple(float(v) for v in mat.mean(axis=0)),
        stds=tuple(float(v) for v in mat.std(axis=0)),
    )


def apply_normalizer(v: FeatureVector, stats: NormalizationStats) -> np.ndarray:
    """Z-score; features with (near-)zero training std map to 0."""
    arr = np.asarray(v, dtype=np.float64)
    means = np.asarray(stats.means)
    stds = np.asarray(stats.stds)
    guarded = stds >= STD_EPS
    out = np.zeros(N_FEATURES)
    out[guarded] = (arr[guarded] - means[guarded]) / stds[guarded]
    return out


# -- feature table I/O -------------------------------------------------

FEATURE_HEADER = "\t".join(("id",) + FEATURE_NAMES)


def features_to_tsv(rows: dict[str, FeatureVector]) -> str:
    lines = [FEATURE_HEADER]
    for sid, vec in rows.items():
        lines.append("\t".join((sid,) + tuple(f"{v:.17g}" for v in vec)))
    return "\n".join(lines) + "\n"


def load_features(path: str | Path) -> dict[str, FeatureVector]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != FEATURE_HEADER:
        raise ValueError(f"{path}: missing or malformed feature header")
    rows: dict[str, FeatureVector] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 1 + N_FEATURES:
            raise ValueError(f"line {lineno}: expected {1 + N_FEATURES} fields")
        rows[fields[0]] = FeatureVector(*(float(v) for v in fields[1:]))
    return rows
