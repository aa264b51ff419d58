"""Domain types and dataset handling.

Datasets live in a plain TSV format (``id  lang_pair  src  mt  label``);
sentences are whitespace-tokenized token tuples. Two tasks exist:
real-valued quality scoring (DA) and binary critical-error detection
(CED, labels NOT / ERR).
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

TokenSeq = tuple[str, ...]

LABEL_NOT = "NOT"
LABEL_ERR = "ERR"

DATASET_HEADER = "id\tlang_pair\tsrc\tmt\tlabel"

_LANG_PAIR_RE = re.compile(r"^[a-z]{2}-[a-z]{2}$")


class Task(str, Enum):
    DA = "da"
    CED = "ced"


def tokenize(text: str) -> TokenSeq:
    """Split on runs of whitespace; tabs/newlines collapse into separators."""
    return tuple(text.split())


def detokenize(tokens: TokenSeq) -> str:
    return " ".join(tokens)


@dataclass(frozen=True)
class QESample:
    id: str
    lang_pair: str
    src: TokenSeq
    mt: TokenSeq
    label: float | str


@dataclass(frozen=True)
class Dataset:
    task: Task
    samples: tuple[QESample, ...]

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


def _parse_label(raw: str, task: Task, lineno: int) -> float | str:
    if task is Task.DA:
        try:
            return float(raw)
        except ValueError:
            raise ValueError(f"line {lineno}: unparsable DA label {raw!r}")
    if raw not in (LABEL_NOT, LABEL_ERR):
        raise ValueError(f"line {lineno}: CED label must be NOT or ERR, got {raw!r}")
    return raw


def load_dataset(path: str | Path, task: Task) -> Dataset:
    """Read a dataset TSV. Raises ValueError naming the offending line."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != DATASET_HEADER:
        raise ValueError(f"{path}: missing or malformed header line")
    if len(lines) == 1:
        raise ValueError(f"{path}: no data rows after header")
    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 5:
            raise ValueError(f"line {lineno}: expected 5 fields, got {len(fields)}")
        sid, pair, src, mt, label = fields
        if not _LANG_PAIR_RE.match(pair):
            raise ValueError(f"line {lineno}: bad lang_pair {pair!r}")
        samples.append(
            QESample(
                id=sid,
                lang_pair=pair,
                src=tokenize(src),
                mt=tokenize(mt),
                label=_parse_label(label, task, lineno),
            )
        )
    return Dataset(task=task, samples=tuple(samples))


def format_label(label: float | str) -> str:
    return label if isinstance(label, str) else repr(label)


def dataset_to_tsv(dataset: Dataset) -> str:
    rows = [DATASET_HEADER]
    for s in dataset:
        rows.append(
            "\t".join(
                (s.id, s.lang_pair, detokenize(s.src), detokenize(s.mt), format_label(s.label))
            )
        )
    return "\n".join(rows) + "\n"


def upsample_minority(dataset: Dataset, seed: int) -> Dataset:
    """Duplicate minority-class samples per language pair until balanced.

    Each minority sample appears floor(maj/min) times; the remainder is
    drawn without replacement from the minority set with the given seed.
    Output keeps the original samples first, duplicates appended.
    """
    if dataset.task is not Task.CED:
        raise ValueError("upsampling applies to CED datasets only")
    pairs: dict[str, list[QESample]] = {}
    for s in dataset:
        pairs.setdefault(s.lang_pair, []).append(s)
    rng = random.Random(seed)
    duplicates: list[QESample] = []
    for pair, members in pairs.items():
        by_class = {LABEL_NOT: [], LABEL_ERR: []}
        for s in members:
            by_class[s.label].append(s)
        n_not, n_err = len(by_class[LABEL_NOT]), len(by_class[LABEL_ERR])
        if n_not == 0 or n_err == 0:
            raise ValueError(f"language pair {pair} has samples of only one class")
        minority = by_class[LABEL_ERR] if n_err < n_not else by_class[LABEL_NOT]
        maj, mino = max(n_not, n_err), min(n_not, n_err)
        reps = maj // mino
        for s in minority:
            duplicates.extend([s] * (reps - 1))
        remainder = maj - reps * mino
        if remainder:
            duplicates.extend(rng.sample(minority, remainder))
    return Dataset(task=Task.CED, samples=dataset.samples + tuple(duplicates))


class MixStrategy(str, Enum):
    AS_IS = "as-is"
    ENGLISH_FIRST = "english-first"


def mix_multilingual(datasets: list[Dataset], strategy: MixStrategy) -> Dataset:
    """Concatenate datasets; ENGLISH_FIRST puts the English side as source."""
    if not datasets:
        raise ValueError("no datasets to mix")
    task = datasets[0].task
    if any(d.task is not task for d in datasets):
        raise ValueError("datasets mix DA and CED tasks")
    out: list[QESample] = []
    for d in datasets:
        for s in d:
            if strategy is MixStrategy.ENGLISH_FIRST:
                left, right = s.lang_pair.split("-")
                if left == "en":
                    pass
                elif right == "en":
                    s = replace(s, src=s.mt, mt=s.src, lang_pair=f"{right}-{left}")
                else:
                    raise ValueError(f"language pair {s.lang_pair} has no English side")
            out.append(s)
    return Dataset(task=task, samples=tuple(out))
