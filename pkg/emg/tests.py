"""
Tests for the EMG side of the pipeline: filter design and application, the
envelope/normalization/decimation chain, the recording format, synthetic
sessions, perturbations, activity maps and dataset import.
"""

import json
import tempfile
from pathlib import Path

import numpy as np
import yaml
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from scipy import io as scipy_io

from . import dataset
from .dataset import LabeledSegment, Recording, SessionPlan
from .dsp import (
    BiquadCascade, ChannelNormalization, FeatureFrames, FilterSpec, design_bandpass, design_notch, envelope,
    filter_apply, fit_normalization, normalize_decimate, preprocess,
)
from .importers import import_recording, read_descriptor
from .labels import GestureLabel

FS = 1000.0

# ---------------------------
# Test Helpers
# ---------------------------

def recording_factory(channels=4, samples=1000, seed=0, **kwargs):
    rng = np.random.default_rng(seed)
    return Recording(rng.standard_normal((channels, samples)), **kwargs)

def tone(freq, seconds, channels=1, amplitude=1.0):
    t = np.arange(int(seconds * FS)) / FS
    return np.tile(amplitude * np.sin(2 * np.pi * freq * t), (channels, 1))

def steady_state_gain(cascade, freq, seconds=5.0):
    """Output/input amplitude over the last second of a long sinusoid."""
    output = filter_apply(cascade, tone(freq, seconds))[0, -int(FS):]
    return np.sqrt(2 * np.mean(output ** 2))

def db(gain):
    return 20 * np.log10(gain)

def difference_equation(sections, x):
    """Scalar second-order-section recurrence, section after section."""
    for b0, b1, b2, a1, a2 in sections:
        y = np.zeros_like(x)
        for n in range(len(x)):
            y[n] = (b0 * x[n] + b1 * (x[n - 1] if n >= 1 else 0.0) + b2 * (x[n - 2] if n >= 2 else 0.0)
                    - a1 * (y[n - 1] if n >= 1 else 0.0) - a2 * (y[n - 2] if n >= 2 else 0.0))
        x = y
    return x

def assert_error_code(test, code, function, *args, **kwargs):
    with test.assertRaises(ValidationError) as context:
        function(*args, **kwargs)
    test.assertIn(code, [error.code for error in context.exception.error_list])
    return context.exception

# ---------------------------
# Filter Design
# ---------------------------

class FilterSpecTests(SimpleTestCase):
    def test_defaults(self):
        spec = FilterSpec()
        self.assertEqual(
            (spec.sample_rate, spec.notch_freq, spec.notch_q, spec.bp_low, spec.bp_high, spec.bp_order,
             spec.ma_window, spec.decim_factor),
            (1000.0, 60.0, 50.0, 1.0, 200.0, 8, 100, 100),
        )

    def test_every_problem_is_reported(self):
        exc = assert_error_code(self, 'invalid_filter_spec', FilterSpec, bp_low=300.0, bp_order=3, ma_window=0)
        self.assertEqual(len(exc.error_list), 3)
        self.assertEqual({error.code for error in exc.error_list}, {'invalid_filter_spec'})

    def test_notch_above_nyquist(self):
        assert_error_code(self, 'invalid_filter_spec', FilterSpec, notch_freq=600.0)


class NotchTests(SimpleTestCase):
    def setUp(self):
        self.spec = FilterSpec()

    def test_attenuates_line_frequency(self):
        self.assertLessEqual(db(steady_state_gain(design_notch(self.spec), 60.0, seconds=10.0)), -20.0)

    def test_unity_gain_at_dc_and_nyquist(self):
        gains = design_notch(self.spec).magnitude([0.0, FS / 2], FS)
        for gain in gains:
            self.assertLessEqual(abs(db(gain)), 0.1)

    def test_constant_input_passes(self):
        output = filter_apply(design_notch(self.spec), np.ones((1, 5000)))
        self.assertAlmostEqual(output[0, -1], 1.0, delta=0.01)

    def test_narrow_stopband(self):
        self.assertLessEqual(abs(db(steady_state_gain(design_notch(self.spec), 10.0))), 0.5)

    def test_single_stable_section(self):
        cascade = design_notch(self.spec)
        self.assertEqual(len(cascade), 1)
        self.assertTrue(cascade.is_stable())


class BandpassTests(SimpleTestCase):
    def setUp(self):
        self.cascade = design_bandpass(FilterSpec())

    def test_four_stable_sections(self):
        self.assertEqual(len(self.cascade.sections), 4)
        self.assertTrue(self.cascade.is_stable())
        self.assertTrue(np.all(np.abs(self.cascade.poles()) < 1.0))

    def test_blocks_dc(self):
        output = filter_apply(self.cascade, np.ones((1, 10_000)))
        self.assertLess(abs(output[0, -1]), 0.01)

    def test_passband_and_stopband(self):
        self.assertLessEqual(abs(db(steady_state_gain(self.cascade, 50.0))), 1.0)
        self.assertLessEqual(db(steady_state_gain(self.cascade, 400.0)), -40.0)

    def test_half_power_edges(self):
        for edge in (1.0, 200.0):
            with self.subTest(edge=edge):
                gain = self.cascade.magnitude([edge * 0.9, edge, edge * 1.1], FS)
                self.assertTrue(min(gain) < np.sqrt(0.5) < max(gain))

    def test_measured_response_matches_transfer_function(self):
        """Long-sinusoid steady state against |H(f)| at ten probe frequencies, within 0.5 dB."""
        probes = [5.0, 10.0, 20.0, 35.0, 50.0, 80.0, 120.0, 150.0, 180.0, 250.0]
        for design in (design_notch, design_bandpass):
            analytic = design(FilterSpec()).magnitude(probes, FS)
            for freq, expected in zip(probes, analytic):
                with self.subTest(design=design.__name__, freq=freq):
                    measured = steady_state_gain(design(FilterSpec()), freq)
                    self.assertLessEqual(abs(db(measured) - db(expected)), 0.5)

    def test_impulse_response_dies_out(self):
        for design in (design_notch, design_bandpass):
            impulse = np.zeros((1, 20_000))
            impulse[0, 0] = 1.0
            response = filter_apply(design(FilterSpec()), impulse)
            with self.subTest(design=design.__name__):
                self.assertLess(np.max(np.abs(response[0, 10_000:])), 1e-6)


class FilterApplyTests(SimpleTestCase):
    def test_zero_in_zero_out(self):
        output = filter_apply(design_bandpass(FilterSpec()), np.zeros((3, 500)))
        np.testing.assert_array_equal(output, np.zeros((3, 500)))

    def test_identity_section(self):
        impulse = np.zeros((1, 10))
        impulse[0, 0] = 1.0
        identity = BiquadCascade([[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]])
        np.testing.assert_array_equal(filter_apply(identity, impulse), impulse)

    def test_notch_matches_difference_equation(self):
        cascade = design_notch(FilterSpec())
        impulse = np.zeros(300)
        impulse[0] = 1.0
        expected = difference_equation(cascade.sections, impulse)
        np.testing.assert_allclose(filter_apply(cascade, impulse[np.newaxis])[0], expected, rtol=0, atol=1e-12)

    def test_state_carries_over_between_calls(self):
        samples = recording_factory(channels=2, samples=2000).samples
        whole = filter_apply(design_bandpass(FilterSpec()), samples)
        cascade = design_bandpass(FilterSpec())
        pieces = np.concatenate([filter_apply(cascade, samples[:, :700]), filter_apply(cascade, samples[:, 700:])],
                                axis=1)
        np.testing.assert_allclose(pieces, whole, rtol=0, atol=1e-12)

    def test_non_finite_sample_names_channel_and_index(self):
        samples = np.zeros((3, 50))
        samples[2, 17] = np.nan
        exc = assert_error_code(self, 'non_finite_sample', filter_apply, design_notch(FilterSpec()), samples,
                                first_channel=16)
        self.assertEqual((exc.params['channel'], exc.params['index']), (18, 17))

    def test_channel_count_must_match_state(self):
        cascade = design_notch(FilterSpec())
        filter_apply(cascade, np.zeros((2, 10)))
        with self.assertRaises(ValueError):
            filter_apply(cascade, np.zeros((3, 10)))

# ---------------------------
# Envelope, Normalization, Decimation
# ---------------------------

class EnvelopeTests(SimpleTestCase):
    def test_constant_input(self):
        np.testing.assert_allclose(envelope(np.full((1, 300), 0.5), 100), 0.5)

    def test_alternating_input(self):
        signal = np.tile([0.3, -0.3], (1, 150))
        np.testing.assert_allclose(envelope(signal, 100), 0.3)

    def test_impulse_response(self):
        impulse = np.zeros((1, 250))
        impulse[0, 0] = 1.0
        expected = np.zeros(250)
        expected[:100] = 1.0 / np.arange(1, 101)
        np.testing.assert_allclose(envelope(impulse, 100)[0], expected, atol=1e-15)
        self.assertAlmostEqual(envelope(impulse, 100)[0, 99], 0.01)

    def test_nonnegative(self):
        self.assertTrue(np.all(envelope(recording_factory().samples, 100) >= 0.0))

    def test_window_must_be_positive(self):
        with self.assertRaises(ValueError):
            envelope(np.ones((1, 10)), 0)


class NormalizationTests(SimpleTestCase):
    def test_scale_is_channel_max(self):
        norm = fit_normalization([[0.2, 0.5, 0.1], [0.0, 0.0, 0.0]])
        np.testing.assert_array_equal(norm.scales, [0.5, 1.0])

    def test_training_data_reaches_exactly_one(self):
        training = np.abs(recording_factory().samples.astype(np.float64))
        norm = fit_normalization(training)
        np.testing.assert_array_equal((training / norm.scales[:, np.newaxis]).max(axis=1), np.ones(4))

    def test_empty_input(self):
        assert_error_code(self, 'empty_input', fit_normalization, [])

    def test_scales_must_be_positive(self):
        assert_error_code(self, 'invalid_config', ChannelNormalization, [1.0, 0.0])

    def test_dict_round_trip(self):
        norm = fit_normalization([[0.2, 0.5], [3.0, 1.0]])
        self.assertEqual(ChannelNormalization.from_dict(norm.to_dict()), norm)


class DecimationTests(SimpleTestCase):
    def setUp(self):
        self.unit = ChannelNormalization(np.ones(2))

    def test_frame_count(self):
        self.assertEqual(len(normalize_decimate(np.ones((2, 1000)), self.unit, 100)), 10)
        self.assertEqual(len(normalize_decimate(np.ones((2, 1099)), self.unit, 100)), 10)

    def test_last_sample_of_each_block_is_kept(self):
        stream = np.tile(np.arange(300) / 300.0, (2, 1))
        frames = normalize_decimate(stream, self.unit, 100)
        np.testing.assert_allclose(frames.values[:, 0], [99 / 300, 199 / 300, 299 / 300])

    def test_values_beyond_training_max_are_clamped(self):
        frames = normalize_decimate(np.full((2, 100), 2.0), self.unit, 100)
        np.testing.assert_array_equal(frames.values, [[1.0, 1.0]])

    def test_constant_stream(self):
        frames = normalize_decimate(np.full((2, 500), 0.5), self.unit, 100)
        np.testing.assert_array_equal(frames.values, np.full((5, 2), 0.5))

    def test_frames_are_read_only(self):
        frames = normalize_decimate(np.ones((2, 100)), self.unit, 100)
        with self.assertRaises(ValueError):
            frames.values[0, 0] = 0.0


class PreprocessTests(SimpleTestCase):
    def setUp(self):
        self.spec = FilterSpec()

    def test_line_noise_is_removed(self):
        """A pure 60 Hz tone ends up far below activity seen on a reference recording."""
        _, reference = preprocess(recording_factory(channels=4, samples=4000, seed=1), self.spec)
        frames, _ = preprocess(Recording(tone(60.0, 6.0, channels=4)), self.spec, reference)
        self.assertLess(frames.values[20:].max(), 0.1)

    def test_burst_on_one_channel(self):
        rng = np.random.default_rng(2)
        samples = 0.01 * rng.standard_normal((16, 6000))
        samples[7, 2000:4000] += rng.standard_normal(2000)
        frames, _ = preprocess(Recording(samples), self.spec, ChannelNormalization(np.ones(16)))
        burst = frames.values[22:40]
        self.assertTrue(np.all(burst.argmax(axis=1) == 7))

    def test_deterministic(self):
        recording = recording_factory(samples=3000)
        first, first_norm = preprocess(recording, self.spec)
        second, second_norm = preprocess(recording, self.spec)
        self.assertEqual(first, second)
        self.assertEqual(first_norm, second_norm)

    def test_frame_count_and_normalization_reuse(self):
        frames, norm = preprocess(recording_factory(samples=2550), self.spec)
        self.assertEqual(len(frames), 25)
        _, reused = preprocess(recording_factory(samples=2000, seed=3), self.spec, norm)
        self.assertIs(reused, norm)

    def test_chain_is_causal(self):
        recording = recording_factory(samples=3000, seed=4)
        norm = ChannelNormalization(np.ones(4))
        full, _ = preprocess(recording, self.spec, norm)
        truncated, _ = preprocess(Recording(recording.samples[:, :1750]), self.spec, norm)
        np.testing.assert_array_equal(truncated.values, full.values[:17])

    def test_more_channels_than_one_block(self):
        frames, norm = preprocess(recording_factory(channels=40, samples=1000), self.spec)
        self.assertEqual((len(frames), frames.channels, norm.channels), (10, 40, 40))

    def test_sample_rate_mismatch(self):
        assert_error_code(self, 'sample_rate_mismatch', preprocess, recording_factory(sample_rate=2000.0), self.spec)

    def test_values_within_unit_interval(self):
        frames, _ = preprocess(recording_factory(samples=3000, seed=5), self.spec)
        self.assertTrue(np.all((frames.values >= 0.0) & (frames.values <= 1.0)))

# ---------------------------
# Recording Format
# ---------------------------

class RecordingFormatTests(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.path = Path(self.directory.name) / 'session.json'
        self.recording = recording_factory(channels=3, samples=400, subject_id='s1', session_id='2')
        self.segments = [LabeledSegment(GestureLabel.FIST, 10, 100, 0), LabeledSegment(GestureLabel.REST, 150, 300, 1)]

    def tearDown(self):
        self.directory.cleanup()

    def manifest(self):
        return json.loads(self.path.read_text())

    def rewrite_manifest(self, **changes):
        manifest = self.manifest()
        manifest.update(changes)
        self.path.write_text(json.dumps(manifest))

    def test_round_trip_is_bit_identical(self):
        dataset.save(self.path, self.recording, self.segments)
        recording, segments = dataset.load(self.path)
        self.assertEqual(recording, self.recording)
        self.assertEqual(segments, self.segments)

    def test_manifest_is_human_readable(self):
        dataset.save(self.path, self.recording, self.segments)
        manifest = self.manifest()
        self.assertEqual(manifest['magic'], dataset.MAGIC)
        self.assertEqual((manifest['channels'], manifest['samples']), (3, 400))
        self.assertEqual(manifest['labels']['0'], 'fist')

    def test_truncated_payload(self):
        dataset.save(self.path, self.recording, self.segments)
        payload = self.path.with_suffix('.f32')
        payload.write_bytes(payload.read_bytes()[:-8])
        assert_error_code(self, 'shape_mismatch', dataset.load, self.path)

    def test_declared_channel_count_exceeds_payload(self):
        dataset.save(self.path, self.recording, self.segments)
        self.rewrite_manifest(channels=4)
        assert_error_code(self, 'shape_mismatch', dataset.load, self.path)

    def test_checksum_mismatch(self):
        dataset.save(self.path, self.recording, self.segments)
        payload = self.path.with_suffix('.f32')
        data = bytearray(payload.read_bytes())
        data[0] ^= 0xFF
        payload.write_bytes(bytes(data))
        assert_error_code(self, 'checksum_mismatch', dataset.load, self.path)

    def test_bad_magic_and_version(self):
        dataset.save(self.path, self.recording, self.segments)
        self.rewrite_manifest(version=99)
        assert_error_code(self, 'unsupported_version', dataset.load, self.path)
        self.rewrite_manifest(magic='NOPE')
        assert_error_code(self, 'bad_magic', dataset.load, self.path)

    def test_unknown_label(self):
        dataset.save(self.path, self.recording, self.segments)
        manifest = self.manifest()
        manifest['segments'][0]['label'] = 9
        self.path.write_text(json.dumps(manifest))
        assert_error_code(self, 'unknown_label', dataset.load, self.path)

    def test_manifest_missing_fields(self):
        self.path.write_text(json.dumps({'magic': dataset.MAGIC, 'version': dataset.FORMAT_VERSION}))
        assert_error_code(self, 'shape_mismatch', dataset.load, self.path)
        for field in ('channels', 'samples', 'payload', 'sample_rate'):
            with self.subTest(field=field):
                dataset.save(self.path, self.recording, self.segments)
                manifest = self.manifest()
                del manifest[field]
                self.path.write_text(json.dumps(manifest))
                assert_error_code(self, 'shape_mismatch', dataset.load, self.path)

    def test_manifest_non_numeric_fields(self):
        dataset.save(self.path, self.recording, self.segments)
        self.rewrite_manifest(channels='three')
        assert_error_code(self, 'shape_mismatch', dataset.load, self.path)
        dataset.save(self.path, self.recording, self.segments)
        self.rewrite_manifest(sample_rate=None)
        assert_error_code(self, 'shape_mismatch', dataset.load, self.path)

    def test_malformed_segment_entries(self):
        for key in ('label', 'start', 'end'):
            with self.subTest(key=key):
                dataset.save(self.path, self.recording, self.segments)
                manifest = self.manifest()
                del manifest['segments'][0][key]
                self.path.write_text(json.dumps(manifest))
                assert_error_code(self, 'shape_mismatch', dataset.load, self.path)
        dataset.save(self.path, self.recording, self.segments)
        self.rewrite_manifest(segments=[[0, 10, 100]])
        assert_error_code(self, 'shape_mismatch', dataset.load, self.path)

    def test_payload_layout_is_checked(self):
        for changes in ({'dtype': '<f8'}, {'order': 'time_major'}, {'dtype': None}):
            with self.subTest(changes=changes):
                dataset.save(self.path, self.recording, self.segments)
                self.rewrite_manifest(**changes)
                assert_error_code(self, 'shape_mismatch', dataset.load, self.path)

    def test_overlapping_segments(self):
        overlapping =[LabeledSegment(GestureLabel.FIST, 10, 100), LabeledSegment(GestureLabel.OPEN, 90, 120)]
        assert_error_code(self, 'overlapping_segments', dataset.save, self.path, self.recording, overlapping)

    def test_segment_out_of_range(self):
        outside = [LabeledSegment(GestureLabel.FIST, 300, 500)]
        assert_error_code(self, 'segment_out_of_range', dataset.save, self.path, self.recording, outside)

    def test_unwritable_path(self):
        blocker = Path(self.directory.name) / 'file'
        blocker.write_text('')
        assert_error_code(self, 'unwritable_path', dataset.save, blocker / 'session.json', self.recording, [])


class RecordingTests(SimpleTestCase):
    def test_rejects_non_finite_samples(self):
        assert_error_code(self, 'non_finite_sample', Recording, [[0.0, np.inf]])

    def test_rejects_non_matrix(self):
        assert_error_code(self, 'shape_mismatch', Recording, [0.0, 1.0])

    def test_samples_are_read_only(self):
        with self.assertRaises(ValueError):
            recording_factory().samples[0, 0] = 1.0

    def test_str(self):
        self.assertEqual(str(recording_factory(samples=2000, subject_id='s1', session_id='1')), 's1/1 (4 ch, 2 s)')

# ---------------------------
# Session Protocol and Synthesis
# ---------------------------

class SessionPlanTests(SimpleTestCase):
    def test_trials_are_bracketed_by_rest(self):
        holds = SessionPlan(trials=3).sequence(np.random.default_rng(0))
        self.assertEqual(len(holds), 18)
        for trial in range(3):
            labels = [label for t, label in holds if t == trial]
            self.assertEqual(labels[0], GestureLabel.REST)
            self.assertEqual(labels[-1], GestureLabel.REST)
            self.assertEqual(sorted(labels[1:-1]), GestureLabel.hard_gestures())

    def test_invalid_plan(self):
        assert_error_code(self, 'invalid_config', SessionPlan, labeled_duration=6.0)
        assert_error_code(self, 'invalid_config', SessionPlan, trials=0)


class SynthesizeTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.maps = dataset.default_gesture_maps(16, seed=0)
        cls.plan = SessionPlan(trials=2)

    def test_labels_are_centered_three_seconds(self):
        _, segments = dataset.synthesize(self.plan, self.maps, 0.05, seed=1)
        self.assertEqual(len(segments), 12)
        for index, segment in enumerate(segments):
            self.assertEqual(len(segment), 3000)
            self.assertEqual(segment.start, index * 5000 + 1000)
        self.assertEqual([segment.trial for segment in segments], [0] * 6 + [1] * 6)

    def test_same_seed_same_recording(self):
        first = dataset.synthesize(self.plan, self.maps, 0.05, seed=2, interference=0.5, hold_variability=0.1)
        second = dataset.synthesize(self.plan, self.maps, 0.05, seed=2, interference=0.5, hold_variability=0.1)
        self.assertEqual(first, second)

    def test_silent_rest(self):
        maps = dict(self.maps)
        maps[GestureLabel.REST] = np.zeros(16)
        recording, segments = dataset.synthesize(self.plan, maps, 0.0, seed=3)
        for segment in segments:
            if segment.label == GestureLabel.REST:
                self.assertFalse(np.any(recording.samples[:, segment.start:segment.end]))

    def test_active_channels_dominate_the_features(self):
        profile = np.zeros(16)
        profile[1:9] = 1.0
        plan = SessionPlan(trials=2, gestures=(GestureLabel.FIST,), rest_bracketing=False)
        recording, segments = dataset.synthesize(plan, {GestureLabel.FIST: profile}, 0.0, seed=4)
        spec = FilterSpec()
        frames, _ = preprocess(recording, spec)
        for segment in dataset.frame_segments(segments, spec.decim_factor, len(frames)):
            mean = frames.values[segment.start_frame:segment.end_frame].mean(axis=0)
            self.assertEqual(sorted(np.argsort(mean)[-8:]), list(range(1, 9)))

    def test_missing_profile(self):
        maps = {label: profile for label, profile in self.maps.items() if label != GestureLabel.OPEN}
        assert_error_code(self, 'missing_gestures', dataset.synthesize, self.plan, maps, 0.05, 0)

    def test_negative_profile(self):
        maps = dict(self.maps)
        maps[GestureLabel.FIST] = -np.ones(16)
        assert_error_code(self, 'invalid_config', dataset.synthesize, self.plan, maps, 0.05, 0)

    def test_default_profiles_are_distinct(self):
        maps = dataset.default_gesture_maps(64, seed=5)
        hard = [maps[label] for label in GestureLabel.hard_gestures()]
        correlations = np.corrcoef(hard)
        off_diagonal = correlations[~np.eye(len(hard), dtype=bool)]
        self.assertLessEqual(off_diagonal.max(), 0.5)
        self.assertTrue(np.all(maps[GestureLabel.REST] < 0.1))


class PerturbTests(SimpleTestCase):
    def setUp(self):
        self.recording = recording_factory(channels=32, samples=50, seed=6)

    def test_identity(self):
        self.assertEqual(dataset.perturb(self.recording, 1.0), self.recording)

    def test_full_ring_rotation(self):
        self.assertEqual(dataset.perturb(self.recording, 1.0, channel_shift=16), self.recording)

    def test_shift_by_one_within_rows(self):
        shifted = dataset.perturb(self.recording, 1.0, channel_shift=1).samples
        for row in range(2):
            for column in range(16):
                np.testing.assert_array_equal(shifted[row * 16 + column],
                                              self.recording.samples[row * 16 + (column - 1) % 16])

    def test_inverse_gains(self):
        gains = dataset.random_gains(np.random.default_rng(7), 32, 0.2)
        restored = dataset.perturb(dataset.perturb(self.recording, gains), 1.0 / gains)
        np.testing.assert_allclose(restored.samples, self.recording.samples, rtol=1e-6)

    def test_gains_within_drift(self):
        gains = dataset.random_gains(np.random.default_rng(8), 64, 0.2)
        self.assertTrue(np.all((gains >= 0.8) & (gains <= 1.2)))

    def test_shift_too_large(self):
        assert_error_code(self, 'invalid_config', dataset.perturb, self.recording, 1.0, channel_shift=32)

# ---------------------------
# Frames per Segment and Activity Maps
# ---------------------------

class FrameSegmentTests(SimpleTestCase):
    def test_frames_whose_sample_lies_inside(self):
        (segment,) = dataset.frame_segments([LabeledSegment(GestureLabel.FIST, 1000, 4000)], 100, 100)
        self.assertEqual((segment.start_frame, segment.end_frame), (10, 40))

    def test_clipped_to_available_frames(self):
        (segment,) = dataset.frame_segments([LabeledSegment(GestureLabel.FIST, 1000, 4000)], 100, 25)
        self.assertEqual((segment.start_frame, segment.end_frame), (10, 25))


class ActivityMapTests(SimpleTestCase):
    def frames(self, rows):
        return FeatureFrames(np.array(rows, dtype=np.float64))

    def segment(self, label, start, end):
        return dataset.FrameSegment(label, start, end)

    def test_single_frame_map_is_the_rescaled_frame(self):
        row = np.linspace(0.0, 0.5, 64)
        maps = dataset.activity_maps(self.frames([row]), [self.segment(GestureLabel.FIST, 0, 1)])
        np.testing.assert_allclose(maps[GestureLabel.FIST].grid, (row / 0.5).reshape(4, 16))

    def test_grid_layout(self):
        row = np.zeros(64)
        row[21] = 1.0
        grid = dataset.activity_maps(self.frames([row]), [self.segment(GestureLabel.OPEN, 0, 1)])[GestureLabel.OPEN].grid
        self.assertEqual(grid.shape, (4, 16))
        self.assertEqual(grid[1, 5], 1.0)

    def test_uniform_and_dead_maps(self):
        frames = self.frames([np.full(64, 0.3), np.zeros(64)])
        maps = dataset.activity_maps(frames, [self.segment(GestureLabel.FIST, 0, 1),
                                              self.segment(GestureLabel.REST, 1, 2)])
        np.testing.assert_allclose(maps[GestureLabel.FIST].grid, np.ones((4, 16)))
        np.testing.assert_array_equal(maps[GestureLabel.REST].grid, np.zeros((4, 16)))

    def test_frame_order_does_not_matter(self):
        rng = np.random.default_rng(9)
        rows = rng.uniform(0, 1, (6, 64))
        segments = [self.segment(GestureLabel.RAISE, 0, 3), self.segment(GestureLabel.RAISE, 3, 6)]
        forward = dataset.activity_maps(self.frames(rows), segments)
        backward = dataset.activity_maps(self.frames(rows[::-1]), segments)
        np.testing.assert_allclose(forward[GestureLabel.RAISE].grid, backward[GestureLabel.RAISE].grid)

    def test_empty_segment(self):
        assert_error_code(self, 'empty_segment', dataset.activity_maps, self.frames([np.zeros(64)]),
                          [self.segment(GestureLabel.FIST, 1, 1)])

# ---------------------------
# Import
# ---------------------------

class ImportTests(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.base = Path(self.directory.name)
        self.matrix = np.random.default_rng(10).standard_normal((500, 4))
        (self.base / 'labels.csv').write_text('label,start,end,trial\n1,10,100,0\n2,200,300,0\nrest,350,450,1\n')

    def tearDown(self):
        self.directory.cleanup()

    def descriptor(self, **fields):
        descriptor = {'format': 'npy', 'path': 'emg.npy', 'layout': 'time_major', 'sample_rate': 1000,
                      'segments': 'labels.csv', 'label_map': {1: 'fist', 2: 'open'}, 'subject_id': 'p1'}
        descriptor.update(fields)
        path = self.base / 'descriptor.yaml'
        path.write_text(yaml.safe_dump(descriptor))
        return path

    def test_npy_time_major(self):
        np.save(self.base / 'emg.npy', self.matrix)
        recording, segments = import_recording(self.descriptor())
        np.testing.assert_array_equal(recording.samples, self.matrix.T.astype(np.float32))
        self.assertEqual([segment.label for segment in segments],
                         [GestureLabel.FIST, GestureLabel.OPEN, GestureLabel.REST])
        self.assertEqual(recording.subject_id, 'p1')

    def test_mat_with_channel_map_and_scale(self):
        scipy_io.savemat(self.base / 'emg.mat', {'emg': self.matrix.T})
        recording, _ = import_recording(self.descriptor(format='mat', path='emg.mat', variable='emg',
                                                        layout='channels_major', channel_map=[3, 2, 1, 0],
                                                        scale=2.0))
        np.testing.assert_allclose(recording.samples, (2.0 * self.matrix.T[::-1]).astype(np.float32))

    def test_csv(self):
        np.savetxt(self.base / 'emg.csv', self.matrix, delimiter=',')
        recording, _ = import_recording(self.descriptor(format='csv', path='emg.csv'))
        self.assertEqual((recording.channels, len(recording)), (4, 500))

    def test_descriptor_is_required(self):
        exc = assert_error_code(self, 'format_mapping_required', read_descriptor, None)
        self.assertIn('sample_rate', exc.messages[0])

    def test_missing_fields(self):
        path = self.base / 'descriptor.yaml'
        path.write_text(yaml.safe_dump({'format': 'npy'}))
        assert_error_code(self, 'format_mapping_required', import_recording, path)

    def test_unsupported_format(self):
        assert_error_code(self, 'unsupported_format', import_recording, self.descriptor(format='edf'))

    def test_unknown_label(self):
        np.save(self.base / 'emg.npy', self.matrix)
        assert_error_code(self, 'unknown_label', import_recording, self.descriptor(label_map={1: 'wave'}))


class GestureLabelTests(SimpleTestCase):
    def test_ids_are_stable(self):
        self.assertEqual([int(label) for label in GestureLabel], [0, 1, 2, 3, 4])
        self.assertEqual(GestureLabel.from_name(' Rest '), GestureLabel.REST)

    def test_unknown_name(self):
        with self.assertRaises(KeyError):
            GestureLabel.from_name('wave')
