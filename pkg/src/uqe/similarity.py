"""Meteor-style sentence similarity (exact unigram matching only).

The score combines a recall-weighted harmonic mean of unigram precision
and recall with a fragmentation penalty over match chunks:

    Fmean   = 10 P R / (R + 9 P)
    penalty = 0.5 (chunks / m)^3
    score   = Fmean (1 - penalty)

where m counts matched unigrams under a greedy leftmost alignment (each
hypothesis token, left to right, matches the leftmost unmatched
identical reference token) and chunks counts maximal match runs
contiguous and order-preserving in both sequences.

No stemming, synonymy, or paraphrase matching: the metric is fully
self-contained and deterministic. The first argument is the reference;
the score is not symmetric.

The inner loop is compiled (``_simcore``) when the extension is
available; set UQE_PURE_KERNELS=1 to force the pure-Python fallback.
"""

from __future__ import annotations

import os
from collections.abc import Sequence

import numpy as np


def _load_backend():
    if os.environ.get("UQE_PURE_KERNELS") != "1":
        try:
            from . import _simcore

            return _simcore, "cython"
        except ImportError:
            pass
    from . import _simpy

    return _simpy, "python"


_KERNEL, KERNEL_BACKEND = _load_backend()


def sim(reference: Sequence[str], hypothesis: Sequence[str]) -> float:
    """Similarity in [0, 1]; both empty -> 1, exactly one empty -> 0."""
    if not reference and not hypothesis:
        return 1.0
    if not reference or not hypothesis:
        return 0.0
    ids: dict[str, int] = {}
    ref_ids = np.fromiter((ids.setdefault(t, len(ids)) for t in reference), np.int64, len(reference))
    hyp_ids = np.fromiter((ids.setdefault(t, len(ids)) for t in hypothesis), np.int64, len(hypothesis))
    return _KERNEL.sim_from_ids(ref_ids, hyp_ids)
