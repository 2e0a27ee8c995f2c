import numpy as np
import pytest

from evdetect.simulate import (
    SimConfig,
    generate,
    insert_burst,
    snr_scale,
    synth_artefact,
    synth_background,
    tukey_window,
)


class TestSynthBackground:
    def test_length_and_moments(self):
        rng = np.random.default_rng(0)
        x = synth_background(5120, 256.0, rng)
        assert len(x) == 5120
        assert abs(x.mean()) < 0.05
        assert abs(x.var() - 1.0) <= 0.05

    def test_deterministic(self):
        a = synth_background(2048, 256.0, np.random.default_rng(42))
        b = synth_background(2048, 256.0, np.random.default_rng(42))
        np.testing.assert_array_equal(a, b)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            synth_background(0, 256.0, np.random.default_rng(0))


class TestSynthArtefact:
    def test_length_and_moments(self):
        x = synth_artefact(1024, np.random.default_rng(1))
        assert len(x) == 1024
        assert abs(x.mean()) < 0.05
        assert abs(x.var() - 1.0) <= 0.05

    def test_deterministic(self):
        a = synth_artefact(500, np.random.default_rng(9))
        b = synth_artefact(500, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            synth_artefact(0, np.random.default_rng(0))


class TestTukeyWindow:
    def test_flat_midsection_and_zero_ends(self):
        w = tukey_window(101, taper=0.5)
        assert w[50] == 1.0
        assert w[0] == 0.0
        assert w[-1] == 0.0
        assert np.all((w >= 0.0) & (w <= 1.0))

    def test_known_value_n8(self):
        # direct evaluation of the cosine-taper formula at index 1:
        # 0.5 * (1 - cos(2*pi*k / (taper*(n-1)))) with k=1, taper=0.5, n=8
        expected = 0.5 * (1.0 - np.cos(2.0 * np.pi * 1.0 / (0.5 * 7.0)))
        w = tukey_window(8, taper=0.5)
        assert w[1] == pytest.approx(expected, rel=1e-12)

    def test_symmetry(self):
        w = tukey_window(64, taper=0.5)
        np.testing.assert_allclose(w, w[::-1], atol=1e-15)

    def test_rejects_tiny(self):
        with pytest.raises(ValueError):
            tukey_window(1)


class TestSnrScale:
    def test_equal_powers_zero_db(self):
        assert snr_scale(1.0, 1.0, 0.0) == pytest.approx(1.0)

    def test_equal_powers_six_db(self):
        assert snr_scale(1.0, 1.0, 6.0) == pytest.approx(10.0 ** (-0.3), rel=1e-12)

    def test_rejects_nonpositive_power(self):
        with pytest.raises(ValueError):
            snr_scale(1.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            snr_scale(-1.0, 1.0, 0.0)


class TestInsertBurst:
    def test_empirical_snr_matches_drawn(self, rng):
        for _ in range(50):
            segment = synth_background(2048, 256.0, rng)
            n = int(rng.integers(64, 512))
            start = int(rng.integers(0, 2048 - n))
            burst = synth_artefact(n, rng)
            snr_db = float(rng.uniform(-6, 6))
            background = segment.copy()
            scale = insert_burst(segment, burst, start, snr_db)
            bg_power = np.mean(background[start : start + n] ** 2)
            art_power = np.mean((scale * burst) ** 2)
            empirical_db = 10.0 * np.log10(bg_power / art_power)
            assert abs(empirical_db - snr_db) < 0.5

    def test_burst_must_fit(self):
        with pytest.raises(ValueError):
            insert_burst(np.ones(10), np.ones(8), 5, 0.0)


class TestGenerate:
    def test_zero_event_prob_means_no_annotations(self):
        data = generate(SimConfig(n_segments=20, event_prob=0.0, distractor_prob=0.0, seed=3))
        assert all(len(r.annotations) == 0 for r in data.records)

    def test_certain_single_events_in_duration_range(self):
        cfg = SimConfig(n_segments=100, event_prob=1.0, n_events_choices=(1,), seed=5)
        data = generate(cfg)
        durations = [ev.duration for r in data.records for ev in r.annotations]
        assert len(durations) == 100
        assert all(1.0 <= d <= 6.7 for d in durations)

    def test_deterministic_given_seed(self):
        cfg = SimConfig(n_segments=10, seed=21)
        a, b = generate(cfg), generate(cfg)
        for ra, rb in zip(a.records, b.records):
            assert ra.samples.tobytes() == rb.samples.tobytes()
            assert ra.annotations == rb.annotations

    def test_different_seeds_differ(self):
        a = generate(SimConfig(n_segments=5, seed=1))
        b = generate(SimConfig(n_segments=5, seed=2))
        assert any(
            ra.samples.tobytes() != rb.samples.tobytes() for ra, rb in zip(a.records, b.records)
        )

    def test_annotated_events_never_overlap(self):
        cfg = SimConfig(n_segments=150, event_prob=1.0, n_events_choices=(2,), seed=8)
        data = generate(cfg)
        for record in data.records:
            events = list(record.annotations)
            for i in range(len(events) - 1):
                assert events[i].stop <= events[i + 1].start + 1e-9

    def test_rejects_unfittable_config(self):
        with pytest.raises(ValueError):
            SimConfig(segment_s=10.0, dur_range_s=(1.0, 6.7), n_events_choices=(1, 2))

    def test_record_shape_and_fs(self):
        cfg = SimConfig(n_segments=3, seed=0)
        data = generate(cfg)
        rec = data.records[0]
        assert rec.channels == 1
        assert rec.length == int(cfg.segment_s * cfg.fs)
        assert rec.fs == cfg.fs

    def test_annotations_match_meta_targets(self):
        cfg = SimConfig(n_segments=40, seed=13, event_prob=0.5)
        data = generate(cfg)
        for record in data.records:
            targets = [m for m in data.meta[record.id] if m["kind"] == "target"]
            assert len(targets) == len(record.annotations)
