"""Unit tests for templates, time warping, transition selection and sequence warping."""

import numpy as np
import pytest

from src.errors import BadBounds, BadPath, BadShapeParams, EmptySet, LengthMismatch
from src.utils.align import (
    TransitionChoice,
    WarpPath,
    accumulated_cost,
    alignment_mse,
    dtw_align,
    make_template,
    moving_average,
    select_transition,
    template_from_responses,
    transition_sequence,
    transition_values,
    warp_sequence,
)
from src.utils.seqdata import Sequence


def _all_paths(n, m):
    """Every monotone unit-step path from (0, 0) to (n-1, m-1)."""
    paths = []

    def walk(path):
        i, j = path[-1]
        if (i, j) == (n - 1, m - 1):
            paths.append(list(path))
            return
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            if i + di < n and j + dj < m:
                walk(path + [(i + di, j + dj)])

    walk([(0, 0)])
    return paths


class TestTemplate:
    def test_piecewise_linear(self):
        tpl = make_template(100, 30, 0).values
        assert len(tpl) == 100
        assert tpl[15] == pytest.approx(15 / 29)
        assert tpl[0] == 0.0 and tpl[29] == 1.0
        assert np.all(tpl[30:70] == 1.0)
        np.testing.assert_allclose(tpl, tpl[::-1])

    def test_smoothed_is_monotone_with_flat_plateau(self):
        tpl = make_template(100, 30, 5).values
        assert np.all(np.diff(tpl[:50]) >= -1e-12)
        assert np.all(np.diff(tpl[50:]) <= 1e-12)
        np.testing.assert_allclose(tpl[33:67], 1.0)
        np.testing.assert_allclose(tpl, tpl[::-1], atol=1e-12)

    def test_bad_parameters(self):
        with pytest.raises(BadShapeParams):
            make_template(60, 30, 0)
        with pytest.raises(BadShapeParams):
            make_template(100, 1, 0)
        with pytest.raises(BadShapeParams):
            make_template(100, 30, 4)

    def test_moving_average_keeps_constants(self):
        np.testing.assert_allclose(moving_average(np.full(10, 2.0), 5), 2.0)

    def test_template_from_identical_responses(self):
        tpl = make_template(80, 20, 0)
        data = template_from_responses([tpl, tpl], total_len=80, smoothing=0)
        np.testing.assert_allclose(data.values, tpl.values, atol=1e-12)

    def test_template_from_nothing(self):
        with pytest.raises(EmptySet):
            template_from_responses([])


class TestDTW:
    def test_identity(self):
        values = np.array([0.0, 0.2, 1.0, 1.0, 0.3])
        res = dtw_align(values, values)
        assert res.cost == 0.0
        assert res.path.pairs.tolist() == [[i, i] for i in range(5)]
        np.testing.assert_array_equal(res.warped.values, values)

    def test_cost_matches_exhaustive_search(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            n, m = int(rng.integers(2, 7)), int(rng.integers(2, 7))
            src, tpl = rng.uniform(size=n), rng.uniform(size=m)
            best = min(sum((src[i] - tpl[j]) ** 2 for i, j in path) for path in _all_paths(n, m))
            res = dtw_align(src, tpl)
            assert res.cost == pytest.approx(best, abs=1e-12)
            assert sum((src[i] - tpl[j]) ** 2 for i, j in res.path.pairs) == pytest.approx(res.cost, abs=1e-12)

    def test_path_structure(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            src, tpl = rng.uniform(size=int(rng.integers(2, 30))), rng.uniform(size=int(rng.integers(2, 30)))
            pairs = dtw_align(src, tpl).path.pairs
            assert tuple(pairs[0]) == (0, 0)
            assert tuple(pairs[-1]) == (len(src) - 1, len(tpl) - 1)
            steps = np.diff(pairs, axis=0)
            assert set(map(tuple, steps)) <= {(1, 0), (0, 1), (1, 1)}

    def test_table_shape(self):
        assert accumulated_cost(np.zeros(3), np.zeros(4)).shape == (3, 4)

    def test_warped_values_average_matches(self):
        res = dtw_align(np.array([0.0, 0.0, 1.0, 1.0]), np.array([0.0, 1.0]))
        np.testing.assert_array_equal(res.warped.values, [0.0, 1.0])
        assert res.cost == 0.0

    def test_too_short(self):
        with pytest.raises(LengthMismatch):
            dtw_align([1.0], [0.0, 1.0])


class TestWarpPath:
    def test_rejects_bad_start(self):
        with pytest.raises(BadPath):
            WarpPath(np.array([[1, 0], [2, 1]]))

    def test_rejects_jumps(self):
        with pytest.raises(BadPath):
            WarpPath(np.array([[0, 0], [2, 1]]))
        with pytest.raises(BadPath):
            WarpPath(np.array([[0, 0], [0, 0]]))


class TestTransitionSelection:
    def test_rise_keeps_first(self):
        tpl = make_template(100, 30, 0)
        rise = np.clip((np.arange(100) - 20) / 20, 0, 1)
        res = select_transition(dtw_align(rise, tpl), tpl, 30)
        assert res.chosen_transition is TransitionChoice.FIRST
        assert res.transition_frames == (0, 30)

    def test_fall_takes_second_flipped(self):
        tpl = make_template(100, 30, 0)
        fall = np.clip((80 - np.arange(100)) / 20, 0, 1)
        res = select_transition(dtw_align(fall, tpl), tpl, 30)
        assert res.chosen_transition is TransitionChoice.SECOND_FLIPPED
        assert res.transition_frames == (70, 100)
        window = transition_values(res)
        # the flipped window rises like the template's first ramp
        assert window[0] < window[-1]

    def test_tie_keeps_first(self):
        tpl = make_template(100, 30, 0)
        res = select_transition(dtw_align(tpl, tpl), tpl, 30)
        assert res.window_errors == (0.0, 0.0)
        assert res.chosen_transition is TransitionChoice.FIRST

    def test_window_bounds(self):
        tpl = make_template(100, 30, 0)
        with pytest.raises(BadBounds):
            select_transition(dtw_align(tpl, tpl), tpl, 101)


class TestWarpSequence:
    def test_identity_path(self):
        rng = np.random.default_rng(0)
        seq = Sequence('w', rng.normal(size=(2, 3, 6)))
        path = WarpPath(np.array([[i, i] for i in range(6)]))
        np.testing.assert_array_equal(warp_sequence(seq, path).points, seq.points)

    def test_averages_merged_frames_and_resamples(self):
        points = np.zeros((2, 1, 3))
        points[0, 0, :] = [0.0, 2.0, 4.0]
        seq = Sequence('w', points)
        path = WarpPath(np.array([[0, 0], [1, 0], [2, 1]]))
        warped = warp_sequence(seq, path)
        assert warped.points[0, 0, :].tolist() == [1.0, 4.0]
        resampled = warp_sequence(seq, path, target_len=3)
        np.testing.assert_allclose(resampled.points[0, 0, :], [1.0, 2.5, 4.0])

    def test_path_must_cover_sequence(self):
        seq = Sequence('w', np.zeros((2, 1, 4)))
        with pytest.raises(BadPath):
            warp_sequence(seq, WarpPath(np.array([[0, 0], [1, 1]])))

    def test_transition_sequence_is_neutral_first(self):
        T = 100
        fall = np.clip((80 - np.arange(T)) / 20, 0, 1)
        points = np.zeros((2, 2, T))
        points[0, 1, :] = 10.0 + 5.0 * fall
        seq = Sequence('t', points, nose_index=0)
        tpl = make_template(100, 30, 0)
        res = select_transition(dtw_align(fall, tpl), tpl, 30)
        transition = transition_sequence(seq, res, target_len=12)
        assert transition.num_frames == 12
        x = transition.points[0, 1, :]
        assert x[0] < x[-1]


class TestAlignmentMSE:
    def test_mean_of_squared_norms(self):
        tpl = np.array([0.0, 0.5, 1.0])
        aligned = [np.array([0.0, 0.5, 1.0]), np.array([1.0, 0.5, 1.0]), np.array([0.0, 0.0, 0.0])]
        assert alignment_mse(aligned, tpl) == pytest.approx((0.0 + 1.0 + 1.25) / 3)

    def test_loop_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            tpl = rng.uniform(size=10)
            aligned = [rng.uniform(size=10) for _ in range(int(rng.integers(1, 6)))]
            expected = sum(sum((a[t] - tpl[t]) ** 2 for t in range(10)) for a in aligned) / len(aligned)
            assert alignment_mse(aligned, tpl, 10) == pytest.approx(expected, abs=1e-12)

    def test_errors(self):
        with pytest.raises(EmptySet):
            alignment_mse([], np.zeros(3))
        with pytest.raises(LengthMismatch):
            alignment_mse([np.zeros(2)], np.zeros(3))
        with pytest.raises(LengthMismatch):
            alignment_mse([np.zeros(3)], np.zeros(3), window=4)
