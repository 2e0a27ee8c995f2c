import numpy as np
import pytest

from evdetect.core import TimeGrid
from evdetect.postproc import (
    binary_closing,
    binary_opening,
    epoch_pipeline,
    median_filter,
    runs_to_events,
    threshold,
)


from oracles import brute_closing, brute_median, brute_opening


class TestThreshold:
    def test_zero_keeps_positives(self):
        np.testing.assert_array_equal(threshold(np.array([0.1, 0.9]), 0.0), [1, 1])

    def test_one_drops_everything(self):
        np.testing.assert_array_equal(threshold(np.array([0.1, 1.0]), 1.0), [0, 0])

    def test_half(self):
        np.testing.assert_array_equal(threshold(np.array([0.2, 0.6]), 0.5), [0, 1])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            threshold(np.zeros(3), 1.5)


class TestMedianFilter:
    def test_known_sequence(self):
        got = median_filter(np.array([0, 1, 0, 1, 1]), width_s=3.0, fs_out=1.0)
        np.testing.assert_array_equal(got, [0, 0, 1, 1, 1])

    def test_all_ones_unchanged(self):
        np.testing.assert_array_equal(median_filter(np.ones(7), 3.0, 1.0), np.ones(7))

    def test_isolated_spike_removed(self):
        x = np.zeros(9)
        x[4] = 1
        assert median_filter(x, 3.0, 1.0).sum() == 0

    def test_width_one_is_identity(self, rng):
        x = (rng.uniform(size=40) < 0.5).astype(int)
        np.testing.assert_array_equal(median_filter(x, 1.0, 1.0), x)

    def test_width_rounds_up_to_odd(self):
        # 4-sample request behaves as width 5
        x = np.array([1, 1, 0, 0, 0, 1, 1, 1])
        np.testing.assert_array_equal(
            median_filter(x, 4.0, 1.0), brute_median(x, 5)
        )

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            median_filter(np.array([]), 1.0, 1.0)

    def test_matches_brute_force(self, rng):
        for _ in range(200):
            x = (rng.uniform(size=int(rng.integers(1, 64))) < 0.4).astype(int)
            for width in (1, 3, 5, 7):
                np.testing.assert_array_equal(
                    median_filter(x, float(width), 1.0), brute_median(x, width)
                )


class TestMorphology:
    def test_closing_bridges_hole(self):
        got = binary_closing(np.array([1, 1, 0, 1, 1]), 3)
        np.testing.assert_array_equal(got, [1, 1, 1, 1, 1])

    def test_opening_removes_singleton(self):
        got = binary_opening(np.array([0, 1, 0, 0, 0]), 3)
        np.testing.assert_array_equal(got, [0, 0, 0, 0, 0])

    def test_zeros_stay_zeros(self):
        x = np.zeros(10, dtype=int)
        np.testing.assert_array_equal(binary_opening(binary_closing(x, 3), 3), x)

    def test_idempotent(self, rng):
        for _ in range(100):
            x = (rng.uniform(size=32) < 0.5).astype(int)
            for element in (2, 3, 5):
                closed = binary_closing(x, element)
                np.testing.assert_array_equal(binary_closing(closed, element), closed)
                opened = binary_opening(x, element)
                np.testing.assert_array_equal(binary_opening(opened, element), opened)

    def test_extensive_and_anti_extensive(self, rng):
        for _ in range(100):
            x = (rng.uniform(size=48) < 0.5).astype(int)
            closed = binary_closing(x, 4)
            opened = binary_opening(x, 4)
            assert np.all(closed >= x)
            assert np.all(opened <= x)

    def test_matches_brute_force(self, rng):
        for _ in range(200):
            x = (rng.uniform(size=int(rng.integers(1, 64))) < 0.5).astype(int)
            for element in (1, 2, 3, 4, 7):
                np.testing.assert_array_equal(binary_closing(x, element), brute_closing(x, element))
                np.testing.assert_array_equal(binary_opening(x, element), brute_opening(x, element))

    def test_rejects_empty_element(self):
        with pytest.raises(ValueError):
            binary_closing(np.ones(4), 0)


class TestRunsToEvents:
    GRID = TimeGrid(fs_out=1.0, length=5)

    def test_single_run(self):
        events = runs_to_events(np.array([0, 1, 1, 1, 0]), self.GRID, np.full(5, 0.8))
        assert len(events) == 1
        assert events[0].start == pytest.approx(1.0)
        assert events[0].stop == pytest.approx(4.0)

    def test_alternating_runs(self):
        grid = TimeGrid(fs_out=1.0, length=3)
        events = runs_to_events(np.array([1, 0, 1]), grid, np.full(3, 0.5))
        assert len(events) == 2

    def test_all_zero_empty(self):
        assert len(runs_to_events(np.zeros(5), self.GRID, np.zeros(5))) == 0

    def test_confidence_is_mean_probability(self):
        probs = np.array([0.0, 0.6, 0.8, 1.0, 0.0])
        events = runs_to_events(np.array([0, 1, 1, 1, 0]), self.GRID, probs)
        assert events[0].confidence == pytest.approx(0.8)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            runs_to_events(np.ones(4), self.GRID, np.ones(5))

    def test_rasterize_roundtrip_identity(self, rng):
        from evdetect.training import rasterize_support
        from evdetect.core import Event, EventList

        grid = TimeGrid(fs_out=4.0, length=64)
        events = EventList([Event(4.0, 2.0), Event(10.0, 1.5)])
        labels = rasterize_support(events, grid)
        back = runs_to_events(labels, grid, labels)
        assert len(back) == 2
        for original, recovered in zip(events, back):
            assert recovered.start == pytest.approx(original.start)
            assert recovered.stop == pytest.approx(original.stop)


class TestEpochPipeline:
    GRID = TimeGrid(fs_out=1.0, length=12)

    def test_none_equals_threshold_plus_runs(self, rng):
        probs = rng.uniform(size=12)
        got = epoch_pipeline(probs, 0.5, "none", self.GRID)
        expected = runs_to_events(threshold(probs, 0.5), self.GRID, probs)
        assert got == expected

    def test_median_removes_blip_that_none_keeps(self):
        probs = np.zeros(12)
        probs[5] = 0.9  # single-sample blip
        kept = epoch_pipeline(probs, 0.5, "none", self.GRID, median_width_s=3.0)
        removed = epoch_pipeline(probs, 0.5, "median", self.GRID, median_width_s=3.0)
        assert len(kept) == 1 and len(removed) == 0

    def test_morphology_bridges_edge_hole_median_does_not(self):
        # run with a hole one sample in from its start: the median erodes the
        # leading sample and keeps the hole, closing bridges it
        probs = np.array([0.0, 0.9, 0.0, 0.0, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9])
        median = epoch_pipeline(probs, 0.5, "median", self.GRID, median_width_s=3.0)
        morph = epoch_pipeline(probs, 0.5, "morphology", self.GRID, element_s=3.0)
        assert len(morph) == 1
        assert morph[0].start == pytest.approx(1.0)
        assert morph[0].stop == pytest.approx(12.0)
        assert len(median) == 1
        assert median[0].start > 1.0  # lost the leading edge

    def test_unknown_scheme_rejected(self):
        with pytest.raises(ValueError):
            epoch_pipeline(np.zeros(12), 0.5, "fancy", self.GRID)
