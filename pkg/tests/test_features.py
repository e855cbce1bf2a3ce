import numpy as np
import numpy.testing as npt
import pytest

from drumgen.encoding import COMPONENTS
from drumgen.features import (FEATURE_NAMES, GLOBAL_FEATURE_NAMES,
                              bar_features, global_features,
                              lhl_raw_syncopation, lhl_syncopation,
                              metrical_weights, read_features_csv,
                              song_global_features, write_features_csv)
from drumgen.synth import STYLES, SynthConfig, synth_songs

CI = {c: i for i, c in enumerate(COMPONENTS)}


def brute_force_lhl_raw(pattern, weights):
    """Independent oracle: enumerate every rest and find its most recent
    preceding onset by direct search."""
    score = 0
    for r in range(len(pattern)):
        if pattern[r]:
            continue
        n = None
        for j in range(r - 1, -1, -1):
            if pattern[j]:
                n = j
                break
        if n is not None and weights[r] > weights[n]:
            score += weights[r] - weights[n]
    return score


def brute_force_max(weights):
    n = len(weights)
    return max(brute_force_lhl_raw([(bits >> i) & 1 for i in range(n)], weights)
               for bits in range(2 ** n))


def grid_with(n_steps, onsets):
    g = np.zeros((n_steps, 9), dtype=bool)
    for step, comp in onsets:
        g[step, CI[comp]] = True
    return g


def test_silent_bar_features():
    f = bar_features(grid_with(16, []))
    npt.assert_array_equal(f[:6], np.zeros(6))
    assert f[6] == 1.0  # empty halves are identical


def test_four_on_the_floor_features():
    f = dict(zip(FEATURE_NAMES,
                 bar_features(grid_with(16, [(0, "kick"), (4, "kick"),
                                             (8, "kick"), (12, "kick")]))))
    assert f["weak_ratio"] == 0.0
    assert f["density_k"] == 4 / (16 * 2)
    assert f["half_symmetry"] == 1.0
    assert f["density"] == 4 / (16 * 9)


def test_single_offgrid_kick_weak_ratio():
    f = dict(zip(FEATURE_NAMES, bar_features(grid_with(16, [(2, "kick")]))))
    assert f["weak_ratio"] == 1.0


def test_empty_bar_rejected():
    with pytest.raises(ValueError):
        bar_features(np.zeros((0, 9), dtype=bool))


def test_features_always_in_unit_interval():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.choice([6, 14, 16, 18]))
        g = rng.random((n, 9)) < 0.3
        f = bar_features(g)
        assert np.all(f >= 0.0) and np.all(f <= 1.0)


def test_lhl_on_beat_patterns_score_zero():
    w = metrical_weights(8)
    assert lhl_syncopation([1, 0, 0, 0, 1, 0, 0, 0], w) == 0.0
    assert lhl_syncopation([0] * 8, w) == 0.0
    assert lhl_syncopation([1] * 8, w) == 0.0


def test_lhl_offbeat_pattern_scores_higher():
    w = metrical_weights(8)
    on = [1, 0, 0, 0, 1, 0, 0, 0]
    off = [0, 1, 0, 0, 0, 1, 0, 0]
    assert lhl_syncopation(off, w) > lhl_syncopation(on, w)
    # exact raw values from the brute-force oracle
    assert lhl_raw_syncopation(on, w) == brute_force_lhl_raw(on, w) == 0
    assert lhl_raw_syncopation(off, w) == brute_force_lhl_raw(off, w) == 4


@pytest.mark.parametrize("n", [6, 8])
def test_lhl_matches_brute_force_exhaustively(n):
    w = metrical_weights(n)
    top = brute_force_max(w)
    for bits in range(2 ** n):
        pattern = [(bits >> i) & 1 for i in range(n)]
        raw = lhl_raw_syncopation(pattern, w)
        assert raw == brute_force_lhl_raw(pattern, w)
        expected = raw / top if top else 0.0
        assert lhl_syncopation(pattern, w) == expected


@pytest.mark.parametrize("n", [6, 8, 14, 16])
def test_lhl_normalizer_matches_brute_force(n):
    from drumgen.features import _max_raw_syncopation
    w = metrical_weights(n)
    assert _max_raw_syncopation(tuple(w)) == brute_force_max(w)


def test_lhl_length_mismatch():
    with pytest.raises(ValueError):
        lhl_raw_syncopation([1, 0], (0,))


def test_global_features_identical_bars():
    g = grid_with(16, [(0, "kick"), (8, "snare")])
    song_bars = [g, g, g]

    class FakeGrid:
        bar_start = np.array([0, 16, 32])
        steps_per_bar = np.array([16, 16, 16])
        drum_onsets = np.concatenate(song_bars)

    gf = global_features(FakeGrid())
    npt.assert_array_equal(gf[7:], np.zeros(7))
    npt.assert_array_equal(gf[:7], bar_features(g))


def test_global_features_mean_and_population_std():
    # densities 0.1 and 0.3 over the "overall density" feature
    g1 = grid_with(10, [])
    g1[:, 0] = [1, 0, 1, 0, 1, 0, 1, 0, 1, 0]
    g1[:4, 1] = True  # 9 onsets / 90 cells = 0.1
    g2 = grid_with(10, [])
    g2[:, :2] = True
    g2[:7, 2] = True  # 27 / 90 = 0.3

    class FakeGrid:
        bar_start = np.array([0, 10])
        steps_per_bar = np.array([10, 10])
        drum_onsets = np.concatenate([g1, g2])

    gf = dict(zip(GLOBAL_FEATURE_NAMES, global_features(FakeGrid())))
    npt.assert_allclose(gf["density_mean"], 0.2)
    npt.assert_allclose(gf["density_std"], 0.1)


def test_single_bar_piece_has_zero_stds():
    song = synth_songs(STYLES["synthrock"],
                       SynthConfig(n_songs=1, bars_per_song=2, seed=1))[0]
    song.bars = song.bars[:1]
    song.drums = [(s, c) for s, c in song.drums if s < song.bars[0].steps]
    song.guitar = [ev for ev in song.guitar if ev[0] < song.bars[0].steps]
    song.bass = [ev for ev in song.bass if ev[0] + ev[1] <= song.bars[0].steps]
    gf = song_global_features(song)
    npt.assert_array_equal(gf[7:], np.zeros(7))


def test_features_csv_roundtrip(tmp_path):
    songs = synth_songs(STYLES["synthrock"], SynthConfig(n_songs=3, seed=4))
    rows = [(s.title, "ground-truth", song_global_features(s)) for s in songs]
    path = tmp_path / "features.csv"
    write_features_csv(path, rows)
    loaded = read_features_csv(path)
    assert [(p, g) for p, g, _ in loaded] == [(p, g) for p, g, _ in rows]
    for (_, _, a), (_, _, b) in zip(loaded, rows):
        npt.assert_array_equal(a, b)  # repr round-trip is exact
