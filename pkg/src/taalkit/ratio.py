"""Stroke-ratio scoring: cosine similarity against reference stroke ratios.

Each tala's theka has a fixed stroke-count ratio (e.g. 3 Dha : 3 Dhin :
1 Tin : 1 Na for Tintal).  Counting strokes in a transcription and taking
the cosine against each reference vector identifies the tala from counts
alone, ignoring order; it is orders of magnitude cheaper than alignment.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .alignment import RankedResult, TalaScore
from .talas import StrokeSequence, TalaDefinition, builtin_talas, stroke_histogram


def cosine_similarity(R, T) -> float:
    """Cosine of the angle between a reference ratio and a test count vector.

    Scale-invariant by construction.  An all-zero test vector scores 0 by
    convention (nothing in the vocabulary was observed); an all-zero
    reference is rejected.
    """
    R = np.asarray(R, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if R.shape != T.shape:
        raise ValueError(f"dimension mismatch: {R.shape} vs {T.shape}")
    nr = np.linalg.norm(R)
    if nr == 0.0:
        raise ValueError("reference ratio vector is all-zero")
    nt = np.linalg.norm(T)
    if nt == 0.0:
        return 0.0
    return float(np.dot(R, T) / (nr * nt))


def identify_tala_ratio(
    seq: StrokeSequence | Sequence[str],
    talas: Sequence[TalaDefinition] | None = None,
    *,
    gharana_equiv: bool = True,
) -> RankedResult:
    """Rank candidate talas by cosine similarity of stroke ratios.

    For each tala the sequence is histogrammed over that tala's vocabulary
    (after mapping gharana stroke variants to their canonical names) and
    scored by cosine against the reference ratio.  The ranking key is
    ``cosine * coverage`` where coverage is the in-vocabulary fraction of
    strokes; this damping keeps a tala with a tiny vocabulary from winning
    on a handful of accidental matches.  The raw cosine is reported
    alongside.
    """
    talas = builtin_talas() if talas is None else list(talas)
    if not talas:
        raise ValueError("at least one tala required")
    names = seq.names if isinstance(seq, StrokeSequence) else tuple(seq)
    if not names:
        raise ValueError("empty sequence")
    entries = []
    for t in talas:
        mapped = [t.canonical_stroke(n) for n in names] if gharana_equiv else list(names)
        counts, oov = stroke_histogram(mapped, t.stroke_vocabulary)
        coverage = (len(mapped) - oov) / len(mapped)
        cos = cosine_similarity(np.asarray(t.reference_ratio), counts)
        entries.append((t, TalaScore(tala=t.name, score=cos, normalized=cos * coverage, coverage=coverage)))
    entries.sort(key=lambda e: (-e[1].normalized, e[0].matra_count, e[0].name))
    flags = ("low_confidence",) if entries[0][1].normalized == 0.0 else ()
    return RankedResult(method="ratio", ranking=tuple(s for _, s in entries), flags=flags)
