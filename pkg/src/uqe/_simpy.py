"""Pure-Python fallback for the similarity kernel.

Mirrors ``_simcore.pyx`` exactly; kept in sync by the backend-parity
tests.
"""

from __future__ import annotations


def sim_from_ids(ref, hyp) -> float:
    """Similarity score for non-empty id sequences (see similarity.sim)."""
    ref = list(ref)
    hyp = list(hyp)
    nr, nh = len(ref), len(hyp)
    used = [False] * nr
    match = [-1] * nh
    m = 0
    for j, tok in enumerate(hyp):
        for i in range(nr):
            if not used[i] and ref[i] == tok:
                used[i] = True
                match[j] = i
                m += 1
                break
    if m == 0:
        return 0.0

    p = m / nh
    r = m / nr
    fmean = 10.0 * p * r / (r + 9.0 * p)

    chunks = 0
    prev_i = prev_j = -2
    for j, i in enumerate(match):
        if i < 0:
            continue
        if not (j == prev_j + 1 and i == prev_i + 1):
            chunks += 1
        prev_j, prev_i = j, i

    frag = chunks / m
    penalty = 0.5 * frag * frag * frag
    return fmean * (1.0 - penalty)
