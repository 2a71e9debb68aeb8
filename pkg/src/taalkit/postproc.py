"""Frame-label post-processing, onset extraction, and collar-based onset F1.

This is the bridge from a frame classifier to a stroke sequence: isolated
frame flips are smoothed away, label changes become onset events, and the
quiet release tail of each stroke is relabeled to the reserved "No-stroke"
class once the amplitude envelope drops below 3% of the segment peak.

Evaluation follows the usual onset-detection protocol: an estimated onset
counts as correct when it lies within a +/-50 ms collar of an unmatched
reference onset of the same class, with the pairing chosen by maximum
bipartite matching so no event is used twice.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .talas import NO_STROKE, StrokeLabel

DEFAULT_HOP_SECONDS = 0.010
DEFAULT_COLLAR_SECONDS = 0.050
NO_STROKE_AMPLITUDE_FRACTION = 0.03
COLLAR_SLACK_SECONDS = 1e-9


def within_collar(ref_time: float, est_time: float, collar: float) -> bool:
    """Inclusive collar test with a nanosecond slack.

    The slack absorbs float representation dust (1.05 - 1.0 lands a shade
    above 0.05) so that a difference of exactly one collar always matches;
    it is six orders of magnitude below any annotation resolution.
    """
    return abs(ref_time - est_time) <= collar + COLLAR_SLACK_SECONDS


@dataclass(frozen=True)
class FrameLabelSequence:
    """Per-frame class labels at a fixed hop, as indices into a vocabulary."""

    labels: tuple[int, ...]
    hop_seconds: float = DEFAULT_HOP_SECONDS
    vocabulary: tuple[StrokeLabel, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(int(v) for v in self.labels))
        if not self.labels:
            raise ValueError("frame label sequence is empty")
        if self.hop_seconds <= 0:
            raise ValueError("hop_seconds must be positive")
        if self.vocabulary:
            n = len(self.vocabulary)
            bad = [v for v in self.labels if not 0 <= v < n]
            if bad:
                raise ValueError(f"labels {sorted(set(bad))} outside vocabulary of size {n}")

    def __len__(self) -> int:
        return len(self.labels)

    def name_of(self, label_id: int) -> str:
        if self.vocabulary:
            return self.vocabulary[label_id].name
        return str(label_id)

    def no_stroke_id(self) -> int | None:
        for s in self.vocabulary:
            if s.name == NO_STROKE:
                return s.id
        return None

    def replace_labels(self, labels: Sequence[int]) -> "FrameLabelSequence":
        return FrameLabelSequence(tuple(labels), self.hop_seconds, self.vocabulary)


@dataclass(frozen=True)
class OnsetAnnotation:
    """Timed, labeled onset events, sorted by time."""

    events: tuple[tuple[float, str], ...]

    def __post_init__(self):
        events = tuple((float(t), str(lab)) for t, lab in self.events)
        object.__setattr__(self, "events", events)
        times = [t for t, _ in events]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("onset times must be non-decreasing")
        if any(lab == NO_STROKE for _, lab in events):
            raise ValueError(f"{NO_STROKE} cannot appear as an onset event")

    def __len__(self) -> int:
        return len(self.events)

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.events)

    @property
    def classes(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for _, lab in self.events:
            seen.setdefault(lab)
        return tuple(seen)


def smooth_labels(frames: FrameLabelSequence) -> FrameLabelSequence:
    """Repair isolated single-frame label flips.

    One sequential left-to-right pass: an interior frame whose neighbors
    agree with each other but not with it takes the neighbors' label.
    Repairs propagate within the pass ([A,B,A,B,A] collapses to all A),
    and the pass is idempotent.  First and last frames are never changed.
    """
    labels = list(frames.labels)
    for i in range(1, len(labels) - 1):
        if labels[i - 1] == labels[i + 1] and labels[i] != labels[i - 1]:
            labels[i] = labels[i - 1]
    return frames.replace_labels(labels)


def onsets_from_frames(frames: FrameLabelSequence) -> OnsetAnnotation:
    """Emit an onset event wherever the frame label changes class.

    Frame ``i`` starts an event at ``i * hop_seconds`` when its label
    differs from frame ``i-1`` (frame 0 counts when it is not No-stroke).
    Transitions into No-stroke are stroke releases, not onsets, and emit
    nothing.
    """
    ns = frames.no_stroke_id()
    events = []
    prev = None
    for i, lab in enumerate(frames.labels):
        if lab != prev and lab != ns:
            events.append((i * frames.hop_seconds, frames.name_of(lab)))
        prev = lab
    return OnsetAnnotation(tuple(events))


def label_no_stroke(frames: FrameLabelSequence, envelope: Sequence[float]) -> FrameLabelSequence:
    """Relabel each stroke's quiet tail to No-stroke using a 3% threshold.

    Within each inter-onset segment (a maximal run of one label), once the
    amplitude envelope first falls below 3% of the segment's peak, that
    frame and everything after it in the segment become No-stroke.  An
    all-zero segment is silence and relabels entirely.
    """
    env = np.asarray(envelope, dtype=np.float64)
    if env.ndim != 1 or len(env) != len(frames):
        raise ValueError(f"envelope length {env.shape} does not match frame count {len(frames)}")
    if np.any(env < 0):
        raise ValueError("envelope amplitudes must be non-negative")
    ns = frames.no_stroke_id()
    if ns is None:
        raise ValueError(f"vocabulary has no {NO_STROKE!r} label to assign")

    labels = list(frames.labels)
    n = len(labels)
    start = 0
    while start < n:
        end = start
        while end < n and labels[end] == labels[start]:
            end += 1
        if labels[start] != ns:
            peak = env[start:end].max()
            if peak == 0.0:
                labels[start:end] = [ns] * (end - start)
            else:
                thresh = NO_STROKE_AMPLITUDE_FRACTION * peak
                for i in range(start, end):
                    if env[i] < thresh:
                        labels[i:end] = [ns] * (end - i)
                        break
        start = end
    return frames.replace_labels(labels)


def _max_matching(ref_times: Sequence[float], est_times: Sequence[float], collar: float) -> int:
    """Size of a maximum bipartite matching between onset lists.

    Edges join events within the collar (inclusive); Kuhn's augmenting-path
    algorithm, plenty for per-class event counts.
    """
    adj = [
        [j for j, te in enumerate(est_times) if within_collar(tr, te, collar)]
        for tr in ref_times
    ]
    match_est = [-1] * len(est_times)

    def try_augment(i: int, visited: list[bool]) -> bool:
        for j in adj[i]:
            if not visited[j]:
                visited[j] = True
                if match_est[j] == -1 or try_augment(match_est[j], visited):
                    match_est[j] = i
                    return True
        return False

    matched = 0
    for i in range(len(ref_times)):
        if try_augment(i, [False] * len(est_times)):
            matched += 1
    return matched


@dataclass(frozen=True)
class ClassScore:
    precision: float
    recall: float
    f1: float
    n_ref: int
    n_est: int
    n_match: int


@dataclass(frozen=True)
class OnsetEvaluation:
    per_class: dict[str, ClassScore]
    precision: float
    recall: float
    f1: float
    weighted_f1: float


def _prf(n_match: int, n_est: int, n_ref: int) -> tuple[float, float, float]:
    p = n_match / n_est if n_est else 0.0
    r = n_match / n_ref if n_ref else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def onset_f1(
    reference: OnsetAnnotation,
    estimate: OnsetAnnotation,
    collar_seconds: float = DEFAULT_COLLAR_SECONDS,
) -> OnsetEvaluation:
    """Per-class and averaged precision/recall/F1 with a time collar.

    Events match when their class agrees and their times differ by at most
    ``collar_seconds`` (inclusive), under maximum bipartite matching.  The
    headline averages are unweighted means over classes present in the
    reference; ``weighted_f1`` weights those classes by reference support.
    """
    if collar_seconds <= 0:
        raise ValueError("collar must be positive")
    classes = list(reference.classes)
    for c in estimate.classes:
        if c not in classes:
            classes.append(c)
    per_class: dict[str, ClassScore] = {}
    for c in classes:
        rt = [t for t, lab in reference.events if lab == c]
        et = [t for t, lab in estimate.events if lab == c]
        n = _max_matching(rt, et, collar_seconds)
        p, r, f = _prf(n, len(et), len(rt))
        per_class[c] = ClassScore(p, r, f, len(rt), len(et), n)

    in_ref = [per_class[c] for c in classes if per_class[c].n_ref > 0]
    if in_ref:
        precision = float(np.mean([s.precision for s in in_ref]))
        recall = float(np.mean([s.recall for s in in_ref]))
        f1 = float(np.mean([s.f1 for s in in_ref]))
        support = np.array([s.n_ref for s in in_ref], dtype=np.float64)
        weighted = float(np.dot([s.f1 for s in in_ref], support) / support.sum())
    else:
        precision = recall = f1 = weighted = 0.0
    return OnsetEvaluation(per_class, precision, recall, f1, weighted)


# --- CSV interchange -------------------------------------------------------

ONSET_CSV_HEADER = "time_sec,label"


def write_onsets_csv(annotation: OnsetAnnotation, dest: str | TextIO) -> None:
    """Write onset events as ``time_sec,label`` rows (6-digit seconds)."""
    own = isinstance(dest, str)
    fh: TextIO = open(dest, "w", encoding="utf-8") if own else dest
    try:
        fh.write(ONSET_CSV_HEADER + "\n")
        for t, lab in annotation.events:
            fh.write(f"{t:.6f},{lab}\n")
    finally:
        if own:
            fh.close()


def read_onsets_csv(src: str | TextIO) -> OnsetAnnotation:
    own = isinstance(src, str)
    fh: TextIO = open(src, "r", encoding="utf-8") if own else src
    try:
        header = fh.readline().strip()
        if header != ONSET_CSV_HEADER:
            raise ValueError(f"expected header {ONSET_CSV_HEADER!r}, got {header!r}")
        events = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            t, lab = line.split(",", 1)
            events.append((float(t), lab))
    finally:
        if own:
            fh.close()
    return OnsetAnnotation(tuple(events))


def onsets_csv_string(annotation: OnsetAnnotation) -> str:
    buf = io.StringIO()
    write_onsets_csv(annotation, buf)
    return buf.getvalue()
