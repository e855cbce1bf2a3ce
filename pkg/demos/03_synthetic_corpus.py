#!/usr/bin/env python3
"""The rule-based corpus generator and its known condition couplings:
kick/snare backbone, tempo-coupled hi-hat, phrase-end tom fills,
crash on phrase starts, and bass doubling every kick."""

from drumgen.encoding import COMPONENTS, quantize_song
from drumgen.synth import STYLES, SynthConfig, synth_corpus, synth_songs

style = STYLES["synthrock"]
cfg = SynthConfig(n_songs=4, bars_per_song=8, meters=((4, 4), (7, 8)),
                  tempo_range=(80, 135), phrase_len=4, seed=42)
songs = synth_songs(style, cfg)

for song in songs:
    b0 = song.bars[0]
    print(f"{song.title}: {b0.numerator}/{b0.denominator} @ {b0.tempo_bpm} BPM, "
          f"marks {[b.phrase_mark[0] for b in song.bars]}")

# Render one song's first bars as a text piano-roll
song = songs[0]
grid = quantize_song(song)
n_show = int(grid.steps_per_bar[:2].sum())
print(f"\nfirst two bars of {song.title}:")
for ci, comp in enumerate(COMPONENTS):
    row = "".join("x" if grid.drum_onsets[t, ci] else "." for t in range(n_show))
    print(f"  {comp:8s} {row}")

# The couplings the model is supposed to pick up
kick_steps = {s for s, c in song.drums if c == "kick"}
bass_steps = {ev[0] for ev in song.bass}
print("\nbass onsets == kick onsets:", bass_steps == kick_steps)

for bar, start, n in zip(song.bars, grid.bar_start, grid.steps_per_bar):
    seg = grid.drum_onsets[start:start + n]
    fill = all(seg[:, COMPONENTS.index(c)].any()
               for c in ("tom_hi", "tom_mid", "tom_lo"))
    crash = bool(seg[0, COMPONENTS.index("crash")])
    print(f"  bar mark={bar.phrase_mark:5s} fill={fill!s:5s} crash={crash}")

# Writing a corpus to disk produces Song JSON files plus a manifest
out = "demo_corpus"
paths = synth_corpus(style, cfg, out)
print(f"\nwrote {len(paths)} song files + manifest under {out}/")
