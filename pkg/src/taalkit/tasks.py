"""Synthetic few-shot task distribution for the meta-learner.

Each task is a tiny frame-classification problem shaped like transcription
data.  A global bank of stroke prototypes is drawn once per stream seed; a
task picks a subset of them, jitters each one (its own playing conditions),
and emits frames along a decaying amplitude envelope: a frame at envelope
value a sits at a * prototype + (1 - a) * no_stroke_prototype plus noise.
Frames whose envelope has fallen below 3% of the peak are labeled with the
extra No-stroke class, mirroring how quiet release tails are annotated.

The bank is what makes meta-learning meaningful here: tasks differ in
jitter, imbalance, and sampling noise, but the underlying strokes recur,
so a good initialization transfers while a random one starts from nothing.
By default every task uses the same bank members in the same label order,
the analog of recordings that share a stroke vocabulary; ``member_pool``
and ``fixed_members=False`` produce streams over other (possibly disjoint)
class sets for exercising head re-dimensioning at meta-test.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .postproc import NO_STROKE_AMPLITUDE_FRACTION


@dataclass(frozen=True)
class FewShotTask:
    """One adaptation episode: disjoint support and query frame sets."""

    support_x: np.ndarray
    support_y: np.ndarray
    query_x: np.ndarray
    query_y: np.ndarray
    n_classes: int
    task_id: int = 0

    def __post_init__(self):
        sx, sy = self.support_x, self.support_y
        qx, qy = self.query_x, self.query_y
        if sx.ndim != 2 or qx.ndim != 2 or sx.shape[1] != qx.shape[1]:
            raise ValueError("support and query features must be 2-D with equal width")
        if sy.shape != (sx.shape[0],) or qy.shape != (qx.shape[0],):
            raise ValueError("label shapes do not match feature rows")
        labels = np.concatenate([sy, qy])
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise ValueError(f"labels outside [0, {self.n_classes})")

    @property
    def n_features(self) -> int:
        return self.support_x.shape[1]


@dataclass(frozen=True)
class SyntheticTaskConfig:
    """Knobs of the task distribution; one config defines one stream."""

    n_features: int = 20
    class_range: tuple[int, int] = (6, 6)
    bank_size: int = 12
    member_pool: tuple[int, int] | None = None
    fixed_members: bool = True
    prototype_scale: float = 1.0
    jitter_scale: float = 0.15
    noise_scale: float = 0.1
    decay_rate: float = 4.0
    include_no_stroke: bool = True
    class_frequencies: tuple[float, ...] | None = None
    merge_others: bool = False
    others_pool: int = 3
    support_size: int = 32
    query_size: int = 8
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.class_range
        if self.n_features < 1:
            raise ValueError("n_features must be positive")
        if not 1 <= lo <= hi <= self.bank_size:
            raise ValueError(f"class_range {self.class_range} must fit in bank of {self.bank_size}")
        pool_lo, pool_hi = self.pool_bounds()
        if not 0 <= pool_lo < pool_hi <= self.bank_size:
            raise ValueError(f"member_pool {self.member_pool} outside bank of {self.bank_size}")
        if pool_hi - pool_lo < hi:
            raise ValueError("member_pool smaller than the largest class count")
        if self.support_size < 1 or self.query_size < 1:
            raise ValueError("support and query sizes must be positive")
        if self.noise_scale < 0 or self.jitter_scale < 0:
            raise ValueError("scales must be non-negative")
        if self.decay_rate <= 0:
            raise ValueError("decay_rate must be positive")
        if self.class_frequencies is not None:
            freqs = np.asarray(self.class_frequencies, dtype=np.float64)
            if freqs.size == 0 or np.any(freqs <= 0):
                raise ValueError("class_frequencies must be positive")
        if self.merge_others and self.others_pool < 1:
            raise ValueError("others_pool must be positive")

    def pool_bounds(self) -> tuple[int, int]:
        return (0, self.bank_size) if self.member_pool is None else self.member_pool

    def task_classes(self, stroke_classes: int) -> int:
        """Total label count for a task with the given stroke-class count."""
        return stroke_classes + 1 if self.include_no_stroke else stroke_classes


def synth_task_source(cfg: SyntheticTaskConfig) -> Iterator[FewShotTask]:
    """Infinite deterministic stream of tasks for one config."""
    rng = np.random.default_rng(cfg.seed)
    bank = rng.normal(0.0, cfg.prototype_scale, size=(cfg.bank_size, cfg.n_features))
    no_stroke_proto = rng.normal(0.0, 0.2 * cfg.prototype_scale, size=cfg.n_features)
    lo, hi = cfg.class_range

    pool_lo, pool_hi = cfg.pool_bounds()
    task_id = 0
    while True:
        c = int(rng.integers(lo, hi + 1))
        if cfg.fixed_members:
            members = np.arange(pool_lo, pool_lo + c)
        else:
            members = np.sort(rng.choice(np.arange(pool_lo, pool_hi), size=c, replace=False))
        protos = bank[members] + cfg.jitter_scale * rng.normal(size=(c, cfg.n_features))
        others = None
        if cfg.merge_others and c >= 2:
            complement = np.setdiff1d(np.arange(cfg.bank_size), members[:-1])
            if complement.size:
                pool_members = rng.choice(
                    complement, size=min(cfg.others_pool, complement.size), replace=False
                )
                others = bank[pool_members] + cfg.jitter_scale * rng.normal(
                    size=(pool_members.size, cfg.n_features)
                )

        if cfg.class_frequencies is None:
            probs = np.full(c, 1.0 / c)
        else:
            probs = np.resize(np.asarray(cfg.class_frequencies, dtype=np.float64), c)
            probs = probs / probs.sum()

        n = cfg.support_size + cfg.query_size
        cls = rng.choice(c, size=n, p=probs)
        amp = np.exp(-cfg.decay_rate * rng.random(n))
        base = protos[cls]
        if others is not None:
            in_others = cls == c - 1
            if in_others.any():
                picks = rng.integers(0, others.shape[0], size=int(in_others.sum()))
                base = base.copy()
                base[in_others] = others[picks]
        x = (
            amp[:, None] * base
            + (1.0 - amp)[:, None] * no_stroke_proto
            + cfg.noise_scale * rng.normal(size=(n, cfg.n_features))
        )
        if cfg.include_no_stroke:
            labels = np.where(amp >= NO_STROKE_AMPLITUDE_FRACTION, cls, c).astype(np.int64)
        else:
            labels = cls.astype(np.int64)

        s = cfg.support_size
        yield FewShotTask(
            support_x=x[:s],
            support_y=labels[:s],
            query_x=x[s:],
            query_y=labels[s:],
            n_classes=cfg.task_classes(c),
            task_id=task_id,
        )
        task_id += 1


def take_tasks(source: Iterator[FewShotTask], n: int) -> list[FewShotTask]:
    return [next(source) for _ in range(n)]
