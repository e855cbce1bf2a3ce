#!/usr/bin/env python3
"""How a song becomes network food: sixteenth-note quantization, the
three drum-word streams, 31-dim condition vectors, and the moving
condition windows."""

import numpy as np

from drumgen.encoding import (Bar, Song, condition_matrix, drum_word_index,
                              encode_condition, encode_sequence,
                              quantize_song, window_post, window_pre,
                              word_components, CONDITION_BLOCKS)

# Two bars: 4/4 at 120 BPM, then 7/8 at 150 BPM (a tempo + meter change)
song = Song(
    title="demo",
    bars=[Bar(4, 4, 120.0, "start"), Bar(7, 8, 150.0, "end")],
    guitar=[(0, 16, 55)],          # mid-register chord held through bar 1
    bass=[(0, 2, 36), (8, 2, 36)],
    drums=[(0, "kick"), (0, "crash"), (4, "snare"), (8, "kick"),
           (12, "snare"), (14, "ohh")],
)

grid = quantize_song(song)
print("steps per bar:", grid.steps_per_bar, "-> total", grid.total_steps)

# Drum words: each stream encodes its sounding subset as a binary index
print("\nstream words at step 0:")
print("  K {kick} ->", drum_word_index("K", {"kick"}))
print("  T {crash} ->", drum_word_index("T", {"crash"}))
print("  T word 9 decodes to", word_components("T", 9))

# Condition vectors: six one-hot blocks, always exactly 6 ones
v = encode_condition(grid, 0)
print("\ncondition at step 0 (downbeat, phrase start):", v.astype(int))
print("ones per block:", [int(v[b].sum()) for b in CONDITION_BLOCKS])

# The windows: past sum vs current+future sum. The meter/tempo change at
# step 16 shows up in the future window a few steps ahead of time.
cond = condition_matrix(grid)
t = 14
print(f"\nat step {t} (two steps before the 7/8 @150 section):")
print("  past window tempo block   :", window_pre(cond, t, 4)[23:28])
print("  future window tempo block :", window_post(cond, t, 4)[23:28])

# The full training encoding: inputs are the previous step's words
seq = encode_sequence(grid, w_p=4, w_f=4)
print("\nencoded length:", len(seq))
print("inputs[0] (silence words):", seq.inputs[0])
print("targets[0] vs inputs[1]:", seq.targets[0], seq.inputs[1])
