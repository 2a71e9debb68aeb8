"""Canonical tala definitions and the stroke-symbol domain model.

A tala is the rhythmic cycle of a Hindustani composition: ``matra_count``
beats grouped into vibhags, with a canonical stroke pattern (the theka)
that repeats every cycle.  Identification works off two fixed properties
of the theka: the literal stroke order and the stroke-count ratio.

Stroke names are stored as plain ASCII tokens ("Dha", "Tirkita") so file
formats stay stable; display names may carry diacritics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from collections import Counter
from typing import Iterable, Mapping, Sequence

import numpy as np

NO_STROKE = "No-stroke"

# Alternate spellings seen in transcriptions, normalized at parse time.
TOKEN_ALIASES: Mapping[str, str] = {
    "DhaGe": "Dhage",
    "Tirakita": "Tirkita",
}


@dataclass(frozen=True)
class StrokeLabel:
    """A named tabla stroke (bol) with a stable id within its vocabulary."""

    id: int
    name: str

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"stroke id must be non-negative, got {self.id}")
        if not self.name or any(ch.isspace() for ch in self.name):
            raise ValueError(f"stroke name must be a non-empty token, got {self.name!r}")


def make_vocabulary(names: Sequence[str], include_no_stroke: bool = False) -> tuple[StrokeLabel, ...]:
    """Build an ordered stroke vocabulary from unique token names.

    With ``include_no_stroke`` the reserved "No-stroke" label is appended,
    as required for transcription vocabularies.
    """
    names = list(names)
    if include_no_stroke and NO_STROKE not in names:
        names.append(NO_STROKE)
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate stroke names in vocabulary: {names}")
    return tuple(StrokeLabel(i, n) for i, n in enumerate(names))


@dataclass(frozen=True)
class StrokeSequence:
    """An ordered run of strokes, optionally with onset times in seconds."""

    strokes: tuple[StrokeLabel, ...]
    onset_times: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "strokes", tuple(self.strokes))
        if self.onset_times is not None:
            times = tuple(float(t) for t in self.onset_times)
            object.__setattr__(self, "onset_times", times)
            if len(times) != len(self.strokes):
                raise ValueError("onset_times length must match stroke count")
            if any(t < 0 for t in times):
                raise ValueError("onset times must be non-negative")
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError("onset times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.strokes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.strokes)

    @classmethod
    def from_names(cls, names: Iterable[str], onset_times: Sequence[float] | None = None) -> "StrokeSequence":
        """Build a sequence from raw tokens, assigning ids by first appearance."""
        names = list(names)
        ids: dict[str, int] = {}
        strokes = []
        for n in names:
            if n not in ids:
                ids[n] = len(ids)
            strokes.append(StrokeLabel(ids[n], n))
        return cls(tuple(strokes), None if onset_times is None else tuple(onset_times))


@dataclass(frozen=True)
class TalaDefinition:
    """A named rhythmic cycle with its theka and reference stroke ratio.

    ``gharana_equivalents`` maps variant stroke names to the canonical name
    used in the stored theka (e.g. Ta -> Na in Tintal, where some gharanas
    substitute Ta at beats 12-13).  The substitution never changes stroke
    counts or structure, so the reference ratio is fixed.
    """

    name: str
    matra_count: int
    vibhag_lengths: tuple[int, ...]
    theka: tuple[StrokeLabel, ...]
    stroke_vocabulary: tuple[StrokeLabel, ...]
    reference_ratio: tuple[int, ...]
    gharana_equivalents: Mapping[str, str] = field(default_factory=dict)
    display_name: str = ""

    def __post_init__(self):
        if self.matra_count <= 0:
            raise ValueError("matra_count must be positive")
        if sum(self.vibhag_lengths) != self.matra_count:
            raise ValueError(f"{self.name}: vibhag lengths {self.vibhag_lengths} do not sum to {self.matra_count}")
        if len(self.theka) != self.matra_count:
            raise ValueError(f"{self.name}: theka length {len(self.theka)} != matra count {self.matra_count}")
        vocab_names = {s.name for s in self.stroke_vocabulary}
        if len(vocab_names) != len(self.stroke_vocabulary):
            raise ValueError(f"{self.name}: vocabulary names not unique")
        missing = [s.name for s in self.theka if s.name not in vocab_names]
        if missing:
            raise ValueError(f"{self.name}: theka strokes {missing} missing from vocabulary")
        if NO_STROKE in vocab_names:
            raise ValueError(f"{self.name}: {NO_STROKE} is reserved and cannot appear in a tala vocabulary")
        if len(self.reference_ratio) != len(self.stroke_vocabulary):
            raise ValueError(f"{self.name}: ratio length != vocabulary length")
        counts = Counter(s.name for s in self.theka)
        expected = tuple(counts[s.name] for s in self.stroke_vocabulary)
        if tuple(self.reference_ratio) != expected:
            raise ValueError(
                f"{self.name}: reference_ratio {self.reference_ratio} != theka histogram {expected}"
            )
        if not self.display_name:
            object.__setattr__(self, "display_name", self.name)

    @property
    def theka_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.theka)

    def canonical_stroke(self, name: str) -> str:
        """Map a variant stroke name to this tala's canonical name."""
        return self.gharana_equivalents.get(name, name)

    def variant_stroke(self, name: str) -> str:
        """Map a canonical stroke name to its gharana variant, if one exists."""
        for variant, canonical in self.gharana_equivalents.items():
            if canonical == name:
                return variant
        return name

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "display_name": self.display_name,
            "matra_count": self.matra_count,
            "vibhag_lengths": list(self.vibhag_lengths),
            "theka": list(self.theka_names),
            "vocabulary": [s.name for s in self.stroke_vocabulary],
            "reference_ratio": list(self.reference_ratio),
            "gharana_equivalents": dict(self.gharana_equivalents),
        }


def _tala(name, display, vibhags, theka_tokens, vocab_tokens, equivalents=None) -> TalaDefinition:
    vocab = make_vocabulary(vocab_tokens)
    by_name = {s.name: s for s in vocab}
    theka = tuple(by_name[t] for t in theka_tokens)
    ratio = tuple(Counter(theka_tokens)[t] for t in vocab_tokens)
    return TalaDefinition(
        name=name,
        display_name=display,
        matra_count=len(theka_tokens),
        vibhag_lengths=tuple(vibhags),
        theka=theka,
        stroke_vocabulary=vocab,
        reference_ratio=ratio,
        gharana_equivalents=equivalents or {},
    )


# The four cycles covered by the built-in knowledge base.  Compound bols
# (Dhage, Tirkita) are atomic tokens occupying a single matra; that is the
# only reading under which Ektal's ratio [3,1,2,1,1,2,2] sums to 12.
_BUILTIN = (
    _tala(
        "Tintal",
        "Tīntāl",
        [4, 4, 4, 4],
        # |Dha Dhin Dhin Dha|Dha Dhin Dhin Dha|Dha Tin Tin Na|Na Dhin Dhin Dha|
        ["Dha", "Dhin", "Dhin", "Dha",
         "Dha", "Dhin", "Dhin", "Dha",
         "Dha", "Tin", "Tin", "Na",
         "Na", "Dhin", "Dhin", "Dha"],
        ["Dha", "Dhin", "Tin", "Na"],
        equivalents={"Ta": "Na"},
    ),
    _tala(
        "Ektal",
        "Ektāl",
        [2, 2, 2, 2, 2, 2],
        # |Dhin Dhin|Dhage Tirkita|Tun Na|Kat Ta|Dhage Tirkita|Dhin Na|
        ["Dhin", "Dhin", "Dhage", "Tirkita",
         "Tun", "Na", "Kat", "Ta",
         "Dhage", "Tirkita", "Dhin", "Na"],
        ["Dhin", "Tun", "Na", "Kat", "Ta", "Dhage", "Tirkita"],
    ),
    _tala(
        "Jhaptal",
        "Jhaptāl",
        [2, 3, 2, 3],
        # |Dhi Na|Dhi Dhi Na|Ti Na|Dhi Dhi Na|
        ["Dhi", "Na", "Dhi", "Dhi", "Na", "Ti", "Na", "Dhi", "Dhi", "Na"],
        ["Dhi", "Na", "Ti"],
    ),
    _tala(
        "Rupak",
        "Rūpak",
        [3, 2, 2],
        # |Tin Tin Na|Dhi Na|Dhi Na|
        ["Tin", "Tin", "Na", "Dhi", "Na", "Dhi", "Na"],
        ["Tin", "Na", "Dhi"],
    ),
)


def builtin_talas() -> list[TalaDefinition]:
    """Return the four built-in tala definitions (Tintal, Ektal, Jhaptal, Rupak)."""
    return list(_BUILTIN)


def get_tala(name: str) -> TalaDefinition:
    for t in _BUILTIN:
        if t.name == name or t.display_name == name:
            return t
    known = ", ".join(t.name for t in _BUILTIN)
    raise KeyError(f"unknown tala {name!r}; known: {known}")


def stroke_histogram(
    seq: StrokeSequence | Sequence[str],
    vocab: Sequence[StrokeLabel],
) -> tuple[np.ndarray, int]:
    """Count strokes of ``seq`` over an ordered vocabulary.

    Returns ``(counts, oov)`` where ``counts[i]`` is the number of
    occurrences of ``vocab[i]`` and ``oov`` tallies strokes outside the
    vocabulary.
    """
    names = seq.names if isinstance(seq, StrokeSequence) else tuple(seq)
    index = {s.name: i for i, s in enumerate(vocab)}
    counts = np.zeros(len(vocab), dtype=np.int64)
    oov = 0
    for n in names:
        i = index.get(n)
        if i is None:
            oov += 1
        else:
            counts[i] += 1
    return counts, oov


def talas_to_json(talas: Iterable[TalaDefinition] | None = None, indent: int = 2) -> str:
    """Export tala definitions as a JSON document."""
    talas = builtin_talas() if talas is None else list(talas)
    return json.dumps({"talas": [t.to_dict() for t in talas]}, indent=indent, ensure_ascii=False)
