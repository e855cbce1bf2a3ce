"""Per-bar drum rhythm features and per-piece global aggregates.

Feature vector per bar (all values in [0,1]): overall onset density,
per-stream densities, normalized syncopation, weak-position onset ratio,
half-bar symmetry. Global features are the population mean and std of
each bar feature across a piece.
"""

import csv
import io
from functools import lru_cache

import numpy as np

from .encoding import (COMPONENTS, STREAM_NAMES, STREAMS,
                       metrical_class_of_pos, quantize_song)
from .ioutil import atomic_write_text

FEATURE_NAMES = ("density", "density_k", "density_h", "density_t",
                 "syncopation", "weak_ratio", "half_symmetry")
GLOBAL_FEATURE_NAMES = tuple(f"{n}_mean" for n in FEATURE_NAMES) + \
    tuple(f"{n}_std" for n in FEATURE_NAMES)

_STREAM_COLS = {s: np.array([COMPONENTS.index(c) for c in STREAMS[s]])
                for s in STREAM_NAMES}


def metrical_weights(n_steps):
    """Per-position weights: downbeat 0, on-beat -1, half-beat -2, offbeat -3."""
    return tuple(-metrical_class_of_pos(p) for p in range(n_steps))


def lhl_raw_syncopation(pattern, weights):
    """Unnormalized syncopation: each rest on a position metrically
    stronger than its most recent preceding onset scores the weight
    difference."""
    if len(pattern) != len(weights):
        raise ValueError(f"pattern length {len(pattern)} != weights length {len(weights)}")
    score = 0
    last = None
    for sounded, w in zip(pattern, weights):
        if sounded:
            last = w
        elif last is not None and w > last:
            score += w - last
    return score


@lru_cache(maxsize=None)
def _max_raw_syncopation(weights):
    # DP over positions; state = weight of the most recent onset (or None)
    best = {None: 0}
    for w in weights:
        nxt = {}
        for last, sc in best.items():
            if nxt.get(w, -1) < sc:  # place an onset here
                nxt[w] = sc
            gain = w - last if last is not None and w > last else 0
            if nxt.get(last, -1) < sc + gain:  # leave a rest
                nxt[last] = sc + gain
        best = nxt
    return max(best.values())


def lhl_syncopation(pattern, weights=None):
    """Syncopation in [0,1]: raw score over the maximum attainable for
    this bar length's metrical weight profile."""
    pattern = np.asarray(pattern, dtype=bool)
    if weights is None:
        weights = metrical_weights(len(pattern))
    weights = tuple(weights)
    raw = lhl_raw_syncopation(pattern, weights)
    top = _max_raw_syncopation(weights)
    return raw / top if top > 0 else 0.0


def bar_features(bar_grid):
    """7 features for one bar's [steps x 9] component-onset grid."""
    grid = np.asarray(bar_grid, dtype=bool)
    n = grid.shape[0]
    if n < 1:
        raise ValueError("empty bar")
    classes = np.array([metrical_class_of_pos(p) for p in range(n)])

    density = grid.sum() / (n * len(COMPONENTS))
    stream_density = [grid[:, _STREAM_COLS[s]].sum() / (n * len(STREAMS[s]))
                      for s in STREAM_NAMES]

    sync = lhl_syncopation(grid.any(axis=1))

    total_onsets = grid.sum()
    weak = grid[np.isin(classes, (2, 3))].sum()
    weak_ratio = weak / total_onsets if total_onsets else 0.0

    half = n // 2
    if half:
        symmetry = (grid[:half] == grid[n - half:]).mean()
    else:
        symmetry = 1.0

    return np.array([density, *stream_density, sync, weak_ratio, symmetry])


def bar_grids(grid):
    """Split a StepGrid's drum onsets into per-bar [steps x 9] slices."""
    out = []
    for start, n in zip(grid.bar_start, grid.steps_per_bar):
        out.append(grid.drum_onsets[start:start + n])
    return out


def global_features(grid):
    """Population mean and std of each bar feature across a piece's bars."""
    bars = bar_grids(grid)
    if not bars:
        raise ValueError("piece has no bars")
    per_bar = np.stack([bar_features(b) for b in bars])
    return np.concatenate([per_bar.mean(axis=0), per_bar.std(axis=0)])


def song_global_features(song):
    return global_features(quantize_song(song))


# ---------------------------------------------------------------------------
# CSV interfaces

def write_features_csv(path, rows):
    """rows: iterable of (piece_id, group_label, 14-feature vector)."""
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(("piece", "group") + GLOBAL_FEATURE_NAMES)
    for piece, group, vec in rows:
        w.writerow([piece, group] + [repr(float(x)) for x in vec])
    atomic_write_text(path, buf.getvalue())


def read_features_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header[2:]) != GLOBAL_FEATURE_NAMES:
            raise ValueError(f"unexpected features CSV header in {path}")
        return [(row[0], row[1], np.array([float(x) for x in row[2:]]))
                for row in r]


def write_embedding_csv(path, pieces, groups, coords):
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(("piece", "x", "y", "group"))
    for piece, group, (x, y) in zip(pieces, groups, coords):
        w.writerow([piece, repr(float(x)), repr(float(y)), group])
    atomic_write_text(path, buf.getvalue())
