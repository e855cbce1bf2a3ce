"""Symbolic song representation on a sixteenth-note grid and its
one-hot "text word" encodings.

Drums are split into three streams, each encoding the subset of sounding
components at a step as a binary word index. Non-drum context (guitar,
bass, meter, tempo, phrasing) becomes a 31-dim concatenation of one-hot
blocks, summed over moving windows before entering the network.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

COMPONENTS = ("kick", "snare", "chh", "ohh", "ride",
              "crash", "tom_hi", "tom_mid", "tom_lo")

STREAM_NAMES = ("K", "H", "T")
STREAMS = {
    "K": ("kick", "snare"),
    "H": ("chh", "ohh", "ride"),
    "T": ("crash", "tom_hi", "tom_mid", "tom_lo"),
}
VOCAB_SIZES = tuple(2 ** len(STREAMS[s]) for s in STREAM_NAMES)  # (4, 8, 16)

PHRASE_MARKS = ("start", "mid", "end")

# fixed signature list; meters outside it are not encodable
SIGNATURES = ((2, 4), (3, 4), (4, 4), (5, 4), (6, 8), (7, 8), (3, 8), (9, 8), (12, 8))

TEMPO_EDGES = (70.0, 90.0, 110.0, 140.0)  # 5 bins: <70 ... >=140

# condition vector layout: one one-hot block per context kind
GUITAR_BLOCK = slice(0, 5)     # rest, hold, onset-low, onset-mid, onset-high
BASS_BLOCK = slice(5, 10)
METER_BLOCK = slice(10, 14)    # downbeat, on-beat, half-beat, offbeat
SIGNATURE_BLOCK = slice(14, 23)
TEMPO_BLOCK = slice(23, 28)
GROUPING_BLOCK = slice(28, 31)
CONDITION_BLOCKS = (GUITAR_BLOCK, BASS_BLOCK, METER_BLOCK,
                    SIGNATURE_BLOCK, TEMPO_BLOCK, GROUPING_BLOCK)
COND_DIM = 31

BASS_REGISTER_CUTS = (40, 49)    # onset pitch < cut -> lower register class
GUITAR_REGISTER_CUTS = (52, 65)


@dataclass(frozen=True)
class Bar:
    numerator: int
    denominator: int
    tempo_bpm: float
    phrase_mark: str

    def __post_init__(self):
        if self.numerator < 1:
            raise ValueError(f"bar numerator must be positive, got {self.numerator}")
        if self.denominator not in (2, 4, 8, 16):
            raise ValueError(f"bar denominator must be in {{2,4,8,16}}, got {self.denominator}")
        if self.tempo_bpm <= 0:
            raise ValueError(f"tempo must be positive, got {self.tempo_bpm}")
        if self.phrase_mark not in PHRASE_MARKS:
            raise ValueError(f"phrase mark must be one of {PHRASE_MARKS}, got {self.phrase_mark!r}")

    @property
    def steps(self):
        return self.numerator * 16 // self.denominator


@dataclass
class Song:
    """Multi-track piece. Note events are (step, duration_steps, pitch);
    drum onsets are (step, component name). Steps are global and may be
    fractional before quantization."""
    title: str
    bars: list
    guitar: list = field(default_factory=list)
    bass: list = field(default_factory=list)
    drums: list = field(default_factory=list)


@dataclass
class StepGrid:
    bars: list
    steps_per_bar: np.ndarray
    bar_start: np.ndarray
    bar_index: np.ndarray       # per step
    pos_in_bar: np.ndarray      # per step
    metrical_class: np.ndarray  # per step, 0..3
    guitar_class: np.ndarray    # per step, index into the 5-class word
    bass_class: np.ndarray
    drum_onsets: np.ndarray     # bool [total_steps x 9]

    @property
    def total_steps(self):
        return int(self.steps_per_bar.sum())


def snap_step(x):
    """Nearest-step rounding, ties round down: 2.5 -> 2, 2.6 -> 3."""
    return int(math.ceil(x - 0.5))


def metrical_class_of_pos(pos):
    if pos == 0:
        return 0
    if pos % 4 == 0:
        return 1
    if pos % 2 == 0:
        return 2
    return 3


def register_class(pitch, cuts):
    if pitch < cuts[0]:
        return 0
    if pitch < cuts[1]:
        return 1
    return 2


def tempo_bin(bpm):
    return int(np.searchsorted(TEMPO_EDGES, bpm, side="right"))


def _note_classes(events, total, cuts, track):
    """Per-step 5-class word index for one melodic track."""
    sounding_min = np.full(total, np.inf)
    onset = np.zeros(total, dtype=bool)
    for step, dur, pitch in events:
        if not 0 <= pitch <= 127:
            raise ValueError(f"{track} pitch out of range [0,127]: {pitch}")
        s = snap_step(step)
        if not 0 <= s < total:
            raise ValueError(f"{track} event step {step} outside grid of {total} steps")
        d = max(1, snap_step(dur))
        onset[s] = True
        end = min(s + d, total)
        span = sounding_min[s:end]
        np.minimum(span, pitch, out=span)
    classes = np.zeros(total, dtype=np.intp)
    sounding = np.isfinite(sounding_min)
    classes[sounding] = 1  # hold
    for t in np.flatnonzero(onset):
        classes[t] = 2 + register_class(sounding_min[t], cuts)
    return classes


def quantize_song(song):
    """Snap all events of a song onto the global sixteenth-note grid."""
    if not song.bars:
        raise ValueError("song has no bars")
    steps_per_bar = np.array([b.steps for b in song.bars], dtype=np.intp)
    bar_start = np.concatenate([[0], np.cumsum(steps_per_bar)[:-1]])
    total = int(steps_per_bar.sum())

    bar_index = np.repeat(np.arange(len(song.bars)), steps_per_bar)
    pos_in_bar = np.concatenate([np.arange(n) for n in steps_per_bar])
    metrical = np.array([metrical_class_of_pos(p) for p in pos_in_bar], dtype=np.intp)

    guitar = _note_classes(song.guitar, total, GUITAR_REGISTER_CUTS, "guitar")
    bass = _note_classes(song.bass, total, BASS_REGISTER_CUTS, "bass")

    onsets = np.zeros((total, len(COMPONENTS)), dtype=bool)
    for step, comp in song.drums:
        if comp not in COMPONENTS:
            raise ValueError(f"unknown drum component {comp!r}")
        s = snap_step(step)
        if not 0 <= s < total:
            raise ValueError(f"drum event step {step} outside grid of {total} steps")
        onsets[s, COMPONENTS.index(comp)] = True

    return StepGrid(list(song.bars), steps_per_bar, bar_start, bar_index,
                    pos_in_bar, metrical, guitar, bass, onsets)


def drum_word_index(stream, active_components):
    """Binary word encoding: bit i set iff stream component i sounds."""
    comps = STREAMS[stream]
    index = 0
    for c in active_components:
        if c not in comps:
            raise ValueError(f"component {c!r} does not belong to stream {stream}")
        index |= 1 << comps.index(c)
    return index


def word_components(stream, index):
    """Inverse of drum_word_index."""
    comps = STREAMS[stream]
    if not 0 <= index < 2 ** len(comps):
        raise ValueError(f"word index {index} out of range for stream {stream}")
    return tuple(c for i, c in enumerate(comps) if index >> i & 1)


def step_words(onset_row):
    """Three stream word indices for one step's component-onset row."""
    words = []
    for s in STREAM_NAMES:
        active = [c for c in STREAMS[s] if onset_row[COMPONENTS.index(c)]]
        words.append(drum_word_index(s, active))
    return words


def encode_condition(grid, t):
    """31-dim condition vector at step t: six one-hot blocks."""
    if not 0 <= t < grid.total_steps:
        raise IndexError(f"step {t} outside grid of {grid.total_steps} steps")
    bar = grid.bars[grid.bar_index[t]]
    sig = (bar.numerator, bar.denominator)
    if sig not in SIGNATURES:
        raise ValueError(f"time signature {sig[0]}/{sig[1]} not in the supported list")
    v = np.zeros(COND_DIM)
    v[GUITAR_BLOCK.start + grid.guitar_class[t]] = 1.0
    v[BASS_BLOCK.start + grid.bass_class[t]] = 1.0
    v[METER_BLOCK.start + grid.metrical_class[t]] = 1.0
    v[SIGNATURE_BLOCK.start + SIGNATURES.index(sig)] = 1.0
    v[TEMPO_BLOCK.start + tempo_bin(bar.tempo_bpm)] = 1.0
    v[GROUPING_BLOCK.start + PHRASE_MARKS.index(bar.phrase_mark)] = 1.0
    return v


def condition_matrix(grid):
    return np.stack([encode_condition(grid, t) for t in range(grid.total_steps)])


def window_pre(cond, t, w_p):
    """Sum of condition vectors over the past window [t-w_p, t), zero-padded."""
    lo = max(0, t - w_p)
    return cond[lo:t].sum(axis=0) if t > lo else np.zeros(cond.shape[1])


def window_post(cond, t, w_f):
    """Sum over the current-and-future window [t, t+w_f], zero-padded."""
    hi = min(len(cond), t + w_f + 1)
    return cond[t:hi].sum(axis=0)


@dataclass
class EncodedSequence:
    """Aligned per-step training arrays for one piece.

    inputs[t] are the word indices at t-1 (silence words at t=0) and
    targets[t] the words at t, one column per stream.
    """
    inputs: np.ndarray      # [T x 3] int
    targets: np.ndarray     # [T x 3] int
    cond: np.ndarray        # [T x 31]
    pre: np.ndarray         # [T x 31]
    post: np.ndarray        # [T x 31]
    steps_per_bar: np.ndarray

    def __len__(self):
        return len(self.targets)


def encode_sequence(grid, w_p=4, w_f=4):
    total = grid.total_steps
    if total == 0:
        raise ValueError("empty grid")
    targets = np.array([step_words(grid.drum_onsets[t]) for t in range(total)],
                       dtype=np.intp)
    inputs = np.zeros_like(targets)
    inputs[1:] = targets[:-1]
    cond = condition_matrix(grid)
    pre = np.stack([window_pre(cond, t, w_p) for t in range(total)])
    post = np.stack([window_post(cond, t, w_f) for t in range(total)])
    return EncodedSequence(inputs, targets, cond, pre, post, grid.steps_per_bar.copy())


def decode_words(words):
    """Word index triples [T x 3] -> drum onset list [(step, component)]."""
    onsets = []
    for t, row in enumerate(words):
        for s, idx in zip(STREAM_NAMES, row):
            for comp in word_components(s, int(idx)):
                onsets.append((t, comp))
    return onsets


# ---------------------------------------------------------------------------
# Song JSON format

def song_to_dict(song):
    return {
        "title": song.title,
        "bars": [{"num": b.numerator, "den": b.denominator,
                  "bpm": b.tempo_bpm, "phrase": b.phrase_mark}
                 for b in song.bars],
        "guitar": [list(ev) for ev in song.guitar],
        "bass": [list(ev) for ev in song.bass],
        "drums": [[step, comp] for step, comp in song.drums],
    }


def song_from_dict(d):
    bars = [Bar(b["num"], b["den"], b["bpm"], b["phrase"]) for b in d["bars"]]
    return Song(
        title=d.get("title", ""),
        bars=bars,
        guitar=[tuple(ev) for ev in d.get("guitar", [])],
        bass=[tuple(ev) for ev in d.get("bass", [])],
        drums=[(ev[0], ev[1]) for ev in d.get("drums", [])],
    )


def save_song(song, path):
    from .ioutil import atomic_write_text
    atomic_write_text(path, json.dumps(song_to_dict(song), indent=1, sort_keys=True))


def load_song(path):
    with open(path) as fh:
        return song_from_dict(json.load(fh))
