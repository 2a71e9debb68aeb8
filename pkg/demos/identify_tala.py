"""
Identifying a tala from a noisy stroke sequence
===============================================

Render a reference performance, corrupt it the way an imperfect
transcriber would, and ask both identifiers which tala it came from.
"""

from taalkit import (
    NoiseSpec,
    PerformanceSpec,
    builtin_talas,
    corrupt,
    generate_performance,
    identify_tala_nw,
    identify_tala_ratio,
)

# The four built-in talas, each a cycle of named strokes (the theka).
for tala in builtin_talas():
    print(f"{tala.display_name:8s} m={tala.matra_count:2d}  theka: {' '.join(tala.theka_names)}")
print()

# Render three cycles of Jhaptal, starting mid-cycle as a real recording
# might, at 240 strokes per minute.
spec = PerformanceSpec(tala="Jhaptal", cycles=3, start_offset=4, tempo_bpm=240)
clean = generate_performance(spec)
print(f"clean performance: {len(clean)} strokes, first ten: {' '.join(clean.names[:10])}")

# Corrupt it: 10% substitutions, 10% deletions, 5% spurious insertions.
noise = NoiseSpec(p_sub=0.1, p_del=0.1, p_ins=0.05, seed=42)
noisy = corrupt(clean, noise)
print(f"after corruption:  {len(noisy)} strokes, first ten: {' '.join(noisy.names[:10])}")
print()

# The alignment identifier slides an m-stroke window over the input and
# aligns each window against every rotation of each candidate theka.
# The ratio identifier just compares stroke-count histograms by cosine.
for result in (identify_tala_nw(noisy), identify_tala_ratio(noisy)):
    print(f"method: {result.method}")
    for entry in result.ranking:
        print(f"  {entry.tala:8s} score={entry.score:7.3f}  normalized={entry.normalized:6.3f}")
    print(f"  best: {result.best.tala}  flags: {list(result.flags)}")
    print()
