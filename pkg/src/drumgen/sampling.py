"""Seeded, condition-driven sampling of drum sequences with an
adjustable diversity (temperature) parameter."""

from dataclasses import dataclass

import numpy as np

from .encoding import (quantize_song, condition_matrix, window_pre,
                       window_post, step_words)
from .model import forward_step, params_from_checkpoint

ARGMAX_TEMPERATURE = 0.01


@dataclass
class GenerationConfig:
    temperature: float = 1.0
    seed_steps: int = 16
    rng_seed: int = 0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.seed_steps < 1:
            raise ValueError("seed_steps must be >= 1")


@dataclass
class ConditionTrack:
    """Full-piece per-step condition vectors plus bar structure, derived
    from a Song whose drum track may be empty."""
    cond: np.ndarray
    steps_per_bar: np.ndarray
    seed_words: np.ndarray  # [total x 3] word indices from the source drums

    def __len__(self):
        return len(self.cond)


def condition_track_from_song(song):
    grid = quantize_song(song)
    words = np.array([step_words(grid.drum_onsets[t])
                      for t in range(grid.total_steps)], dtype=np.intp)
    return ConditionTrack(condition_matrix(grid), grid.steps_per_bar.copy(), words)


def temperature_adjust(p, temperature):
    """Reweight a probability row: p_i^(1/T), renormalized.

    Temperatures at or below 0.01 collapse to argmax (first index on ties).
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    p = np.asarray(p, dtype=np.float64)
    if temperature <= ARGMAX_TEMPERATURE:
        out = np.zeros_like(p)
        out[int(np.argmax(p))] = 1.0
        return out
    w = p ** (1.0 / temperature)
    return w / w.sum()


def sample_categorical(p, rng):
    """Inverse-CDF draw from a probability row."""
    cdf = np.cumsum(p)
    u = rng.random() * cdf[-1]
    return int(np.searchsorted(cdf, u, side="right"))


def generate(checkpoint, conditions, gen_config, seed_words=None):
    """Sample a full drum-word sequence [T x 3] over the condition track.

    The first seed_steps are copied from seed_words (defaults to the
    condition track's own drums) while warming the recurrent state; every
    later step feeds the sampled words back as the next input. Dropout is
    off throughout.
    """
    params = params_from_checkpoint(checkpoint)
    cfg = params.config
    total = len(conditions)
    seed_steps = gen_config.seed_steps
    if seed_steps > total:
        raise ValueError(f"seed covers {seed_steps} steps but track has {total}")
    if seed_words is None:
        seed_words = conditions.seed_words
    if len(seed_words) < seed_steps:
        raise ValueError(f"need {seed_steps} seed steps, got {len(seed_words)}")

    rng = np.random.default_rng(gen_config.rng_seed)
    cond = conditions.cond
    words = np.zeros((total, 3), dtype=np.intp)
    words[:seed_steps] = np.asarray(seed_words[:seed_steps], dtype=np.intp)

    state = params.zero_state()
    prev = np.zeros(3, dtype=np.intp)  # silence words before step 0
    for t in range(total):
        pre = window_pre(cond, t, cfg.w_past)
        post = window_post(cond, t, cfg.w_future)
        probs = forward_step(params, prev, pre, post, state, training=False)
        if t >= seed_steps:
            for si in range(3):
                row = temperature_adjust(probs[si].data, gen_config.temperature)
                words[t, si] = sample_categorical(row, rng)
        prev = words[t]
    return words
