#!/usr/bin/env python3
"""Rhythm features and the 2-D style map: per-bar features, per-piece
global aggregates, and an exact t-SNE embedding separating two styles.

Writes features.csv and embedding.csv; also a PNG if matplotlib is around.
"""

import numpy as np

from drumgen.features import (FEATURE_NAMES, GLOBAL_FEATURE_NAMES,
                              bar_features, song_global_features,
                              write_embedding_csv, write_features_csv)
from drumgen.synth import STYLES, SynthConfig, synth_songs
from drumgen.tsne import tsne_embed

# ---------------------------------------------------------------------
# Per-bar features on hand-built patterns
four_floor = np.zeros((16, 9), dtype=bool)
four_floor[[0, 4, 8, 12], 0] = True
offbeat = np.zeros((16, 9), dtype=bool)
offbeat[[2, 6, 10, 14], 0] = True

for name, grid in (("four-on-the-floor", four_floor), ("offbeat kick", offbeat)):
    feats = dict(zip(FEATURE_NAMES, bar_features(grid)))
    print(f"{name}: syncopation={feats['syncopation']:.3f} "
          f"weak_ratio={feats['weak_ratio']:.2f} symmetry={feats['half_symmetry']:.2f}")

# ---------------------------------------------------------------------
# Two synthetic "styles": the stock one, and a sparse slow variant
style = STYLES["synthrock"]
steady = synth_songs(style, SynthConfig(n_songs=8, bars_per_song=8,
                                        tempo_range=(115, 135), seed=1))
sparse = synth_songs(style, SynthConfig(n_songs=8, bars_per_song=8,
                                        tempo_range=(60, 68), seed=2))

rows = [(s.title + "-A", "fast", song_global_features(s)) for s in steady]
rows += [(s.title + "-B", "slow", song_global_features(s)) for s in sparse]
write_features_csv("features.csv", rows)
print(f"\nwrote features.csv ({len(rows)} pieces x {len(GLOBAL_FEATURE_NAMES)} columns)")

# ---------------------------------------------------------------------
# Exact t-SNE with perplexity calibrated per point
emb = tsne_embed([vec for _, _, vec in rows], perplexity=5, iterations=500,
                 rng=np.random.default_rng(0))
print(f"t-SNE finished with KL divergence {emb.kl:.4f}")
write_embedding_csv("embedding.csv", [p for p, _, _ in rows],
                    [g for _, g, _ in rows], emb.coords)
print("wrote embedding.csv")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    for group, marker in (("fast", "o"), ("slow", "D")):
        pts = np.array([c for (_, g, _), c in zip(rows, emb.coords) if g == group])
        plt.scatter(pts[:, 0], pts[:, 1], marker=marker, label=group)
    plt.legend()
    plt.title("rhythm-feature map (exact t-SNE)")
    plt.savefig("embedding.png", dpi=120)
    print("wrote embedding.png")
except ImportError:
    print("matplotlib not installed; skipped the PNG")
