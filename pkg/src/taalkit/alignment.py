"""Needleman-Wunsch matching for tala identification, plus an LCS baseline.

A transcribed stroke sequence is compared against a tala's theka by global
alignment with match +1, mismatch -1, gap -2.  Because a recording can
enter the cycle at any beat, every cyclic rotation of the theka is tried
and the best one kept.  An m-stroke frame slides over the transcription;
per-offset best scores are grouped into blocks of m offsets whose maxima
are averaged into the final matching score, which tolerates missing or
spurious strokes in individual frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .talas import StrokeSequence, TalaDefinition, builtin_talas

MATCH_SCORE = 1
MISMATCH_SCORE = -1
GAP_PENALTY = -2


def _names(seq) -> tuple[str, ...]:
    if isinstance(seq, StrokeSequence):
        return seq.names
    return tuple(s if isinstance(s, str) else s.name for s in seq)


def nw_score_matrix(x_ref, y) -> np.ndarray:
    """Full (m+1)x(w+1) global-alignment score matrix for two sequences.

    ``S[i][j]`` is the best score aligning the first ``i`` strokes of
    ``x_ref`` with the first ``j`` strokes of ``y``.
    """
    xs, ys = _names(x_ref), _names(y)
    if not xs or not ys:
        raise ValueError("empty sequence")
    m, w = len(xs), len(ys)
    S = np.zeros((m + 1, w + 1), dtype=np.int64)
    S[:, 0] = GAP_PENALTY * np.arange(m + 1)
    S[0, :] = GAP_PENALTY * np.arange(w + 1)
    for i in range(1, m + 1):
        for j in range(1, w + 1):
            sub = MATCH_SCORE if xs[i - 1] == ys[j - 1] else MISMATCH_SCORE
            S[i, j] = max(
                S[i - 1, j - 1] + sub,
                S[i - 1, j] + GAP_PENALTY,
                S[i, j - 1] + GAP_PENALTY,
            )
    return S


def nw_score(x_ref, y) -> int:
    """Optimal global-alignment score of two stroke sequences."""
    return int(nw_score_matrix(x_ref, y)[-1, -1])


def nw_align(x_ref, y) -> tuple[int, list[tuple[str | None, str | None]]]:
    """Score plus one optimal alignment recovered by backtracking.

    Gaps appear as ``None``.  The sum of per-column scores along the
    returned path equals ``nw_score(x_ref, y)`` by construction.
    """
    xs, ys = _names(x_ref), _names(y)
    S = nw_score_matrix(xs, ys)
    i, j = len(xs), len(ys)
    path: list[tuple[str | None, str | None]] = []
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            sub = MATCH_SCORE if xs[i - 1] == ys[j - 1] else MISMATCH_SCORE
            if S[i, j] == S[i - 1, j - 1] + sub:
                path.append((xs[i - 1], ys[j - 1]))
                i, j = i - 1, j - 1
                continue
        if i > 0 and S[i, j] == S[i - 1, j] + GAP_PENALTY:
            path.append((xs[i - 1], None))
            i -= 1
        else:
            path.append((None, ys[j - 1]))
            j -= 1
    path.reverse()
    return int(S[-1, -1]), path


def batch_nw_scores(ref_ids: np.ndarray, win_ids: np.ndarray) -> np.ndarray:
    """Alignment scores for every (reference row, window row) pair.

    ``ref_ids`` is (R, m) and ``win_ids`` is (W, w); returns an (R, W)
    integer matrix.  Vectorizes the row recurrence: the left-neighbor
    dependency ``new[j] = max(cand[j], new[j-1] + gap)`` is a running
    maximum of ``cand[j] - gap*j``, so each DP row costs a handful of
    array ops instead of a Python loop over columns.
    """
    R, m = ref_ids.shape
    W, w = win_ids.shape
    match = np.where(
        ref_ids[:, None, :, None] == win_ids[None, :, None, :],
        MATCH_SCORE,
        MISMATCH_SCORE,
    ).astype(np.int64).reshape(R * W, m, w)
    offs = GAP_PENALTY * np.arange(w + 1, dtype=np.int64)
    prev = np.broadcast_to(offs, (R * W, w + 1)).copy()
    for i in range(1, m + 1):
        cand = np.maximum(prev[:, :-1] + match[:, i - 1, :], prev[:, 1:] + GAP_PENALTY)
        shifted = np.empty_like(prev)
        shifted[:, 0] = GAP_PENALTY * i
        shifted[:, 1:] = cand - offs[1:]
        np.maximum.accumulate(shifted, axis=1, out=shifted)
        prev = shifted + offs
    return prev[:, -1].reshape(R, W)


@dataclass(frozen=True)
class MatchResult:
    """Sliding-frame matching outcome for one tala."""

    sigma_nw: float
    per_window_max: tuple[int, ...]
    short_input: bool = False

    @property
    def window_count(self) -> int:
        return len(self.per_window_max)


@dataclass(frozen=True)
class TalaScore:
    tala: str
    score: float
    normalized: float
    coverage: float | None = None

    def to_dict(self) -> dict:
        d = {"tala": self.tala, "score": self.score, "normalized": self.normalized}
        if self.coverage is not None:
            d["coverage"] = self.coverage
        return d


@dataclass(frozen=True)
class RankedResult:
    method: str
    ranking: tuple[TalaScore, ...]
    flags: tuple[str, ...] = ()

    @property
    def best(self) -> TalaScore:
        return self.ranking[0]


def _symbol_ids(names: Sequence[str], table: dict[str, int]) -> np.ndarray:
    out = np.empty(len(names), dtype=np.int64)
    for k, n in enumerate(names):
        if n not in table:
            table[n] = len(table)
        out[k] = table[n]
    return out


def sliding_match_score(
    transcribed: StrokeSequence | Sequence[str],
    tala: TalaDefinition,
    *,
    gharana_equiv: bool = True,
) -> MatchResult:
    """Score a transcription against one tala with the sliding-frame scheme.

    Windows of ``m`` consecutive strokes are taken at every start offset
    (hop 1); each is aligned against all ``m`` cyclic rotations of the
    theka and the best rotation kept.  Offsets are then grouped into
    ``ceil((n-m+1)/m)`` consecutive blocks of ``m`` and the block maxima
    are averaged.  Inputs shorter than one cycle fall back to the single
    available alignment and are flagged ``short_input``.
    """
    names = _names(transcribed)
    if not names:
        raise ValueError("empty sequence")
    if gharana_equiv:
        names = tuple(tala.canonical_stroke(n) for n in names)
    m = tala.matra_count
    theka = tala.theka_names

    table: dict[str, int] = {}
    theka_ids = _symbol_ids(theka, table)
    seq_ids = _symbol_ids(names, table)
    rotations = np.stack([np.roll(theka_ids, -r) for r in range(m)])

    n = len(names)
    if n < m:
        scores = batch_nw_scores(rotations, seq_ids[None, :])
        best = int(scores.max())
        return MatchResult(sigma_nw=float(best), per_window_max=(best,), short_input=True)

    windows = np.lib.stride_tricks.sliding_window_view(seq_ids, m)
    scores = batch_nw_scores(rotations, windows)  # (m rotations, n-m+1 offsets)
    best_per_offset = scores.max(axis=0)
    k = math.ceil(len(best_per_offset) / m)
    block_maxima = tuple(int(best_per_offset[b * m:(b + 1) * m].max()) for b in range(k))
    return MatchResult(sigma_nw=float(np.mean(block_maxima)), per_window_max=block_maxima)


def identify_tala_nw(
    transcribed: StrokeSequence | Sequence[str],
    talas: Sequence[TalaDefinition] | None = None,
    *,
    gharana_equiv: bool = True,
) -> RankedResult:
    """Rank candidate talas by normalized sliding match score.

    Scores are divided by each tala's matra count so cycles of different
    lengths are commensurable.  Ties break by ascending matra count, then
    name.  A negative best score means the input matched nothing and the
    result carries a ``low_confidence`` flag.
    """
    talas = builtin_talas() if talas is None else list(talas)
    if not talas:
        raise ValueError("at least one tala required")
    entries = []
    short = False
    for t in talas:
        r = sliding_match_score(transcribed, t, gharana_equiv=gharana_equiv)
        short = short or r.short_input
        entries.append((t, TalaScore(tala=t.name, score=r.sigma_nw, normalized=r.sigma_nw / t.matra_count)))
    entries.sort(key=lambda e: (-e[1].normalized, e[0].matra_count, e[0].name))
    flags = []
    if entries[0][1].normalized < 0:
        flags.append("low_confidence")
    if short:
        flags.append("short_input")
    return RankedResult(method="nw", ranking=tuple(s for _, s in entries), flags=tuple(flags))


def lcs_baseline_score(x, y) -> int:
    """Longest-common-subsequence length; the order-only baseline."""
    xs, ys = _names(x), _names(y)
    if not xs or not ys:
        return 0
    prev = [0] * (len(ys) + 1)
    for a in xs:
        cur = [0]
        for j, b in enumerate(ys, start=1):
            cur.append(prev[j - 1] + 1 if a == b else max(prev[j], cur[-1]))
        prev = cur
    return prev[-1]
