"""Glass-box translation model abstraction.

Provides forced decoding, greedy translation, Monte Carlo dropout
sampling, and noised-input generation against a pluggable model
interface, plus two desk-scale implementations: a trainable lexical
bigram toy model and a constant-probability model for tests. A unigram
masked-LM stub fills ``<mask>`` tokens produced by the noiser.

All randomness flows through explicit seeds (see :mod:`uqe.seeding`);
every operation here is a pure function of its arguments.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .data import TokenSeq
from .seeding import mix

MASK_TOKEN = "<mask>"
UNK_TOKEN = "<unk>"

# probability floor applied before every log so step values stay finite
PROB_FLOOR = 1e-9


@dataclass(frozen=True)
class DropoutSpec:
    """Dropout-on specification; ``None`` elsewhere means dropout off."""

    rate: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {self.rate}")


@dataclass(frozen=True)
class DecodeSample:
    tokens: TokenSeq
    step_logprobs: tuple[float, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.step_logprobs):
            raise ValueError("token and log-probability lengths disagree")


@dataclass(frozen=True)
class NoiseConfig:
    rounds: int
    p_insert: float
    p_delete: float

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        for name in ("p_insert", "p_delete"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


class GlassboxModel(Protocol):
    """Minimal surface a translation model must expose."""

    def force_decode(
        self, src: TokenSeq, mt: TokenSeq, dropout: DropoutSpec | None = None
    ) -> tuple[float, ...]: ...

    def greedy_translate(
        self, src: TokenSeq, dropout: DropoutSpec | None = None
    ) -> DecodeSample: ...


def _floored_log(p: float) -> float:
    return float(np.log(max(p, PROB_FLOOR)))


class ToyLexicalModel:
    """Positional lexical model with a target bigram prior.

    The step-t distribution over target tokens v is

        p(v) ∝ T[x_t][v]^lam * B[prev][v]^(1 - lam)

    where T is the source-to-target translation table and B the target
    bigram table (last row = begin-of-sentence). Treated as immutable
    after construction.
    """

    def __init__(
        self,
        src_vocab: tuple[str, ...],
        tgt_vocab: tuple[str, ...],
        trans_table: np.ndarray,
        bigram_table: np.ndarray,
        lam: float,
        alpha: float,
        floor: float = PROB_FLOOR,
    ):
        if UNK_TOKEN not in src_vocab:
            raise ValueError(f"source vocabulary must contain {UNK_TOKEN}")
        if trans_table.shape != (len(src_vocab), len(tgt_vocab)):
            raise ValueError("translation table shape does not match vocabularies")
        if bigram_table.shape != (len(tgt_vocab) + 1, len(tgt_vocab)):
            raise ValueError("bigram table must have one row per target token plus BOS")
        for name, table in (("trans_table", trans_table), ("bigram_table", bigram_table)):
            if not np.allclose(table.sum(axis=1), 1.0, atol=1e-9):
                raise ValueError(f"{name} rows must sum to 1")
        self.src_vocab = src_vocab
        self.tgt_vocab = tgt_vocab
        self.trans_table = np.asarray(trans_table, dtype=np.float64)
        self.bigram_table = np.asarray(bigram_table, dtype=np.float64)
        self.lam = float(lam)
        self.alpha = float(alpha)
        self.floor = float(floor)
        self._src_index = {t: i for i, t in enumerate(src_vocab)}
        self._tgt_index = {t: i for i, t in enumerate(tgt_vocab)}
        self._bos_row = len(tgt_vocab)

    # -- decoding ------------------------------------------------------

    def _effective_trans(self, dropout: DropoutSpec | None) -> np.ndarray:
        if dropout is None or dropout.rate == 0.0:
            return self.trans_table
        return self.perturbed_trans_table(dropout.rate, dropout.seed)

    def perturbed_trans_table(self, rate: float, seed: int) -> np.ndarray:
        """Dropout realization: mask table entries to the floor, renormalize.

        Bernoulli draws come from a seeded generator in row-major order,
        so the perturbed view is a pure function of (rate, seed).
        """
        rng = np.random.Generator(np.random.PCG64(seed))
        mask = rng.random(self.trans_table.shape) < rate
        table = np.where(mask, self.floor, self.trans_table)
        return table / table.sum(axis=1, keepdims=True)

    def _step_dist(self, trans: np.ndarray, src_idx: int, prev_row: int) -> np.ndarray:
        weights = trans[src_idx] ** self.lam * self.bigram_table[prev_row] ** (1.0 - self.lam)
        return weights / weights.sum()

    def _src_idx(self, token: str) -> int:
        return self._src_index.get(token, self._src_index[UNK_TOKEN])

    def force_decode(
        self, src: TokenSeq, mt: TokenSeq, dropout: DropoutSpec | None = None
    ) -> tuple[float, ...]:
        if not src or not mt:
            raise ValueError("force_decode requires non-empty source and translation")
        trans = self._effective_trans(dropout)
        values = []
        prev_row = self._bos_row
        for t, tok in enumerate(mt):
            src_idx = self._src_idx(src[min(t, len(src) - 1)])
            dist = self._step_dist(trans, src_idx, prev_row)
            tgt_idx = self._tgt_index.get(tok)
            p = dist[tgt_idx] if tgt_idx is not None else self.floor
            values.append(_floored_log(p))
            prev_row = tgt_idx if tgt_idx is not None else self._bos_row
        return tuple(values)

    def greedy_translate(
        self, src: TokenSeq, dropout: DropoutSpec | None = None
    ) -> DecodeSample:
        """Decode exactly |src| steps, argmax with lexicographic tie-break."""
        if not src:
            raise ValueError("greedy_translate requires a non-empty source")
        trans = self._effective_trans(dropout)
        tokens: list[str] = []
        logprobs: list[float] = []
        prev_row = self._bos_row
        for tok in src:
            dist = self._step_dist(trans, self._src_idx(tok), prev_row)
            best = np.flatnonzero(dist == dist.max())
            chosen = min(best, key=lambda i: self.tgt_vocab[i])
            tokens.append(self.tgt_vocab[chosen])
            logprobs.append(_floored_log(dist[chosen]))
            prev_row = int(chosen)
        return DecodeSample(tokens=tuple(tokens), step_logprobs=tuple(logprobs))

    # -- persistence ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "src_vocab": list(self.src_vocab),
            "tgt_vocab": list(self.tgt_vocab),
            "trans_table": self.trans_table.tolist(),
            "bigram_table": self.bigram_table.tolist(),
            "lambda": self.lam,
            "alpha": self.alpha,
            "floor": self.floor,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ToyLexicalModel":
        return cls(
            src_vocab=tuple(doc["src_vocab"]),
            tgt_vocab=tuple(doc["tgt_vocab"]),
            trans_table=np.asarray(doc["trans_table"], dtype=np.float64),
            bigram_table=np.asarray(doc["bigram_table"], dtype=np.float64),
            lam=doc["lambda"],
            alpha=doc["alpha"],
            floor=doc.get("floor", PROB_FLOOR),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ToyLexicalModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


class ConstantModel:
    """Assigns probability p to every step; echoes the source. Test aid."""

    def __init__(self, p: float):
        if not 0.0 < p <= 1.0:
            raise ValueError("p must be in (0, 1]")
        self.p = p

    def force_decode(self, src, mt, dropout=None):
        if not src or not mt:
            raise ValueError("force_decode requires non-empty source and translation")
        return tuple([_floored_log(self.p)] * len(mt))

    def greedy_translate(self, src, dropout=None):
        if not src:
            raise ValueError("greedy_translate requires a non-empty source")
        return DecodeSample(tokens=tuple(src), step_logprobs=tuple([_floored_log(self.p)] * len(src)))


def train_toy_model(
    corpus: list[tuple[TokenSeq, TokenSeq]], alpha: float, lam: float
) -> ToyLexicalModel:
    """Estimate the toy model from a parallel corpus.

    Translation counts pair tokens position-wise up to the shorter
    length; both tables get add-alpha smoothing over the target
    vocabulary.
    """
    if not corpus:
        raise ValueError("corpus is empty")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    src_vocab = tuple(sorted({t for src, _ in corpus for t in src} | {UNK_TOKEN}))
    tgt_vocab = tuple(sorted({t for _, tgt in corpus for t in tgt}))
    if not tgt_vocab:
        raise ValueError("corpus has no target tokens")
    s_idx = {t: i for i, t in enumerate(src_vocab)}
    t_idx = {t: i for i, t in enumerate(tgt_vocab)}
    V = len(tgt_vocab)
    trans = np.zeros((len(src_vocab), V))
    bigram = np.zeros((V + 1, V))
    bos = V
    for src, tgt in corpus:
        for s_tok, t_tok in zip(src, tgt):
            trans[s_idx[s_tok], t_idx[t_tok]] += 1
        prev = bos
        for t_tok in tgt:
            cur = t_idx[t_tok]
            bigram[prev, cur] += 1
            prev = cur
    trans = (trans + alpha) / (trans.sum(axis=1, keepdims=True) + alpha * V)
    bigram = (bigram + alpha) / (bigram.sum(axis=1, keepdims=True) + alpha * V)
    return ToyLexicalModel(src_vocab, tgt_vocab, trans, bigram, lam=lam, alpha=alpha)


def force_decode(model, src, mt, dropout: DropoutSpec | None = None) -> tuple[float, ...]:
    return model.force_decode(src, mt, dropout)


def greedy_translate(model, src, dropout: DropoutSpec | None = None) -> DecodeSample:
    return model.greedy_translate(src, dropout)


def toy_dropout_perturb(model: ToyLexicalModel, rate: float, seed: int) -> ToyLexicalModel:
    """Value snapshot of the model with a dropout-perturbed table."""
    return ToyLexicalModel(
        src_vocab=model.src_vocab,
        tgt_vocab=model.tgt_vocab,
        trans_table=model.perturbed_trans_table(rate, seed),
        bigram_table=model.bigram_table,
        lam=model.lam,
        alpha=model.alpha,
        floor=model.floor,
    )


def mc_dropout_samples(
    model, src: TokenSeq, n: int, rate: float, base_seed: int
) -> list[DecodeSample]:
    """N stochastic greedy decodes; sample i uses seed mix(base_seed, i).

    rate 0 takes the dropout-off path: all samples are identical.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if rate == 0.0:
        return [model.greedy_translate(src, None)] * n
    return [
        model.greedy_translate(src, DropoutSpec(rate=rate, seed=mix(base_seed, i)))
        for i in range(n)
    ]


class UnigramMLM:
    """Unigram masked-LM stub: fills each mask from a fixed distribution."""

    def __init__(self, vocab: tuple[str, ...], probs: np.ndarray):
        if len(vocab) == 0:
            raise ValueError("unigram table is empty")
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != (len(vocab),) or not np.isclose(probs.sum(), 1.0, atol=1e-9):
            raise ValueError("probs must be a distribution over vocab")
        self.vocab = vocab
        self.probs = probs
        self._cum = np.cumsum(probs)

    @classmethod
    def from_corpus(cls, sentences: list[TokenSeq]) -> "UnigramMLM":
        counts: dict[str, int] = {}
        for sent in sentences:
            for tok in sent:
                counts[tok] = counts.get(tok, 0) + 1
        if not counts:
            raise ValueError("corpus has no tokens")
        vocab = tuple(sorted(counts))
        raw = np.array([counts[t] for t in vocab], dtype=np.float64)
        probs = (raw + 1.0) / (raw.sum() + len(vocab))  # add-1 smoothing
        return cls(vocab, probs)

    def fill(self, tokens: TokenSeq, seed: int) -> TokenSeq:
        """Replace each <mask> left to right by a seeded unigram draw."""
        if MASK_TOKEN not in tokens:
            return tokens
        rng = random.Random(seed)
        out = []
        for tok in tokens:
            if tok == MASK_TOKEN:
                i = int(np.searchsorted(self._cum, rng.random(), side="right"))
                out.append(self.vocab[min(i, len(self.vocab) - 1)])
            else:
                out.append(tok)
        return tuple(out)

    def to_json(self) -> dict:
        return {"vocab": list(self.vocab), "probs": self.probs.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "UnigramMLM":
        return cls(tuple(doc["vocab"]), np.asarray(doc["probs"], dtype=np.float64))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "UnigramMLM":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def unigram_mlm_fill(mlm: UnigramMLM, tokens: TokenSeq, seed: int) -> TokenSeq:
    return mlm.fill(tokens, seed)


def generate_noised_input(
    x: TokenSeq, cfg: NoiseConfig, mlm: UnigramMLM, seed: int
) -> TokenSeq:
    """Post-edit the input: rounds of random deletions and mask insertions.

    Per round, every current token is deleted with p_delete, then each of
    the k+1 gap positions receives a <mask> with p_insert; draws come
    from one seeded generator, left to right, deletions before
    insertions. Masks inserted earlier remain eligible for deletion. If
    everything is deleted a single <mask> is kept so the masked LM always
    has something to fill; finally all masks are filled by the MLM.
    """
    if not x:
        raise ValueError("input must be non-empty")
    rng = random.Random(seed)
    cur = list(x)
    for _ in range(cfg.rounds):
        cur = [tok for tok in cur if not rng.random() < cfg.p_delete]
        out: list[str] = []
        for gap in range(len(cur) + 1):
            if rng.random() < cfg.p_insert:
                out.append(MASK_TOKEN)
            if gap < len(cur):
                out.append(cur[gap])
        cur = out
    if not cur:
        cur = [MASK_TOKEN]
    return mlm.fill(tuple(cur), mix(seed, "mlm-fill"))
