"""
Tests for the HD algebra, the encoders and the associative memory.

Statistical checks run at the full dimension D = 10,000, where one standard
deviation of the cosine between unrelated vectors is 0.01; everything else
uses small dimensions so the expected values can be written out by hand.
"""

import itertools

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from emg.dsp import FeatureFrame, FeatureFrames
from emg.labels import GestureLabel

from .classifier import AssociativeMemory, ClassificationResult, vote, vote_stream
from .encoder import (
    EncoderConfig, SpatialVector, SpatiotemporalVector, encode_spatial, encode_temporal, stream_encode,
)
from .hdvec import (
    Accumulator, HDVector, ItemMemory, accumulate, bind, cosine, hamming, permute, random_hd, threshold,
)

D = 10_000

# ---------------------------
# Test Helpers
# ---------------------------

def hd_factory(seed=0, dimension=D, num=1):
    rng = np.random.default_rng(seed)
    if num > 1:
        return [random_hd(rng, dimension) for _ in range(num)]
    return random_hd(rng, dimension)

def spatial(vector, t=0):
    return SpatialVector(vector, t)

def window_vector(vector, t=0):
    return SpatiotemporalVector(vector, t)

def results_factory(labels):
    return [ClassificationResult(label, {}, t) for t, label in enumerate(labels)]

def random_frames(rng, count, channels):
    return FeatureFrames(rng.uniform(0.0, 1.0, (count, channels)))

# ---------------------------
# HD Vector Algebra
# ---------------------------

class RandomHDTests(SimpleTestCase):
    def test_equal_plus_and_minus_counts(self):
        for dimension in (4, 10, D):
            with self.subTest(dimension=dimension):
                v = hd_factory(seed=dimension, dimension=dimension)
                self.assertEqual(int(np.sum(v.elements == 1)), dimension // 2)
                self.assertEqual(int(np.sum(v.elements == -1)), dimension // 2)

    def test_odd_dimension_is_rejected(self):
        with self.assertRaises(ValueError):
            random_hd(np.random.default_rng(0), 9)

    def test_same_seed_gives_identical_vectors(self):
        a, b = hd_factory(seed=42), hd_factory(seed=42)
        self.assertEqual(a, b)
        self.assertEqual(cosine(a, b), 1.0)

    def test_quasi_orthogonality_over_random_pairs(self):
        """1,000 independent pairs at D=10,000: mean |cos| < 0.02 and max |cos| < 0.06."""
        vectors = np.stack([v.elements for v in hd_factory(seed=1, num=2000)]).astype(np.int64)
        cosines = np.abs(np.sum(vectors[0::2] * vectors[1::2], axis=1)) / D
        self.assertLess(cosines.mean(), 0.02)
        self.assertLess(cosines.max(), 0.06)

    def test_vectors_are_immutable(self):
        v = hd_factory(dimension=4)
        with self.assertRaises(ValueError):
            v.elements[0] = 1

    def test_constructor_rejects_non_bipolar_elements(self):
        with self.assertRaises(ValueError):
            HDVector([1, 0, -1, 1])


class BindTests(SimpleTestCase):
    def setUp(self):
        self.a, self.b, self.c = hd_factory(seed=3, num=3)

    def test_bind_with_itself_is_all_ones(self):
        self.assertEqual(bind(self.a, self.a), HDVector.ones(D))

    def test_all_ones_is_identity(self):
        self.assertEqual(bind(self.a, HDVector.ones(D)), self.a)

    def test_commutative_associative_and_self_inverse(self):
        self.assertEqual(bind(self.a, self.b), bind(self.b, self.a))
        self.assertEqual(bind(bind(self.a, self.b), self.c), bind(self.a, bind(self.b, self.c)))
        self.assertEqual(bind(bind(self.a, self.b), self.b), self.a)

    def test_bound_vector_is_dissimilar_to_its_inputs(self):
        bound = bind(self.a, self.b)
        self.assertLessEqual(abs(cosine(bound, self.a)), 0.05)
        self.assertLessEqual(abs(cosine(bound, self.b)), 0.05)

    def test_dimension_mismatch(self):
        with self.assertRaises(ValueError):
            bind(hd_factory(dimension=4), hd_factory(dimension=6))


class AccumulateThresholdTests(SimpleTestCase):
    def test_single_accumulation_copies_the_vector(self):
        a = hd_factory(dimension=8)
        acc = accumulate(Accumulator.zeros(8), a, 1.0)
        np.testing.assert_array_equal(acc.sums, a.elements)
        self.assertEqual(acc.count, 1)
        self.assertEqual(threshold(acc), a)

    def test_opposite_weights_cancel(self):
        a = hd_factory(dimension=8)
        acc = accumulate(accumulate(Accumulator.zeros(8), a, 1.0), a, -1.0)
        np.testing.assert_array_equal(acc.sums, np.zeros(8))

    def test_weighted_sums_are_linear(self):
        a, b = hd_factory(seed=5, dimension=16, num=2)
        acc = accumulate(accumulate(Accumulator.zeros(16), a, 0.5), b, 0.25)
        np.testing.assert_array_equal(acc.sums, 0.5 * a.elements + 0.25 * b.elements)

    def test_non_finite_weight_is_rejected(self):
        for weight in (float('nan'), float('inf')):
            with self.subTest(weight=weight), self.assertRaises(ValueError):
                accumulate(Accumulator.zeros(4), HDVector.ones(4), weight)

    def test_unit_sums_stay_within_count(self):
        acc = Accumulator.zeros(64)
        for v in hd_factory(seed=6, dimension=64, num=7):
            accumulate(acc, v)
        self.assertTrue(np.all(np.abs(acc.sums) <= acc.count))

    def test_threshold_sign_and_zero_rule(self):
        acc = Accumulator(np.array([2.5, -0.1, 0.0, -3.0]), 3)
        np.testing.assert_array_equal(threshold(acc).elements, [1, -1, 1, -1])

    def test_majority_of_bundle(self):
        a, b = hd_factory(seed=7, num=2)
        acc = Accumulator.zeros(D)
        for v in (a, a, b):
            accumulate(acc, v)
        bundled = threshold(acc)
        self.assertGreaterEqual(cosine(bundled, a), cosine(bundled, b))

    def test_majority_rule_by_brute_force(self):
        """Every element of sign(a + a + b) follows the 2-of-3 majority at D=4."""
        for a_bits, b_bits in itertools.product(itertools.product((1, -1), repeat=4), repeat=2):
            a, b = HDVector(a_bits), HDVector(b_bits)
            acc = Accumulator.zeros(4)
            for v in (a, a, b):
                accumulate(acc, v)
            self.assertEqual(threshold(acc), a)


class PermuteTests(SimpleTestCase):
    def test_rotation_direction(self):
        v = HDVector([1, -1, -1, 1])
        np.testing.assert_array_equal(permute(v, 1).elements, [1, 1, -1, -1])

    def test_zero_and_full_cycle(self):
        v = hd_factory(dimension=100)
        self.assertEqual(permute(v, 0), v)
        self.assertEqual(permute(v, 100), v)

    def test_composition(self):
        v = hd_factory(dimension=100)
        for j, k in ((1, 2), (3, 97), (50, 75)):
            with self.subTest(j=j, k=k):
                self.assertEqual(permute(permute(v, j), k), permute(v, j + k))

    def test_isometry(self):
        a, b = hd_factory(seed=9, num=2)
        for k in (1, 5, 9_999):
            with self.subTest(k=k):
                self.assertEqual(cosine(permute(a, k), permute(b, k)), cosine(a, b))


class CosineTests(SimpleTestCase):
    def test_self_and_negation(self):
        a = hd_factory()
        self.assertEqual(cosine(a, a), 1.0)
        self.assertEqual(cosine(a, -a), -1.0)

    def test_orthogonal_pair(self):
        self.assertEqual(cosine(HDVector([1, 1, -1, -1]), HDVector([1, -1, -1, 1])), 0.0)

    def test_hamming_identity(self):
        for dimension in (4, 100, D):
            a, b = hd_factory(seed=dimension, dimension=dimension, num=2)
            with self.subTest(dimension=dimension):
                self.assertEqual(cosine(a, b), (dimension - 2 * hamming(a, b)) / dimension)

    def test_accumulator_against_vector(self):
        a = hd_factory(dimension=8)
        acc = accumulate(Accumulator.zeros(8), a, 3.0)
        self.assertAlmostEqual(cosine(acc, a), 1.0)

    def test_zero_norm_accumulator(self):
        with self.assertRaises(ValueError):
            cosine(Accumulator.zeros(4), HDVector.ones(4))


class ItemMemoryTests(SimpleTestCase):
    def test_entries_are_reproducible_from_seed(self):
        first, second = ItemMemory(seed=11, channels=8, dimension=100), ItemMemory(seed=11, channels=8, dimension=100)
        self.assertEqual(list(first.entries), list(second.entries))
        self.assertEqual(ItemMemory.from_manifest(first.manifest()).entries, first.entries)

    def test_one_entry_per_channel_and_quasi_orthogonal(self):
        im = ItemMemory(seed=0)
        self.assertEqual(len(im), 64)
        bound = 5 / np.sqrt(D)
        for i, j in itertools.combinations(range(64), 2):
            self.assertLessEqual(abs(cosine(im[i], im[j])), bound)

# ---------------------------
# Encoders
# ---------------------------

class EncoderConfigTests(SimpleTestCase):
    def test_invalid_values(self):
        for options in ({'dimension': 9}, {'channels': 0}, {'ngram_n': 0}):
            with self.subTest(**options), self.assertRaises(ValidationError):
                EncoderConfig(**options)

    def test_defaults(self):
        config = EncoderConfig()
        self.assertEqual((config.dimension, config.channels, config.ngram_n), (D, 64, 5))


class SpatialEncoderTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.im = ItemMemory(seed=0)

    def frame(self, **values):
        row = np.zeros(64)
        for channel, value in values.items():
            row[int(channel[1:])] = value
        return FeatureFrame(row, 0)

    def test_single_active_channel_gives_its_electrode_vector(self):
        self.assertEqual(encode_spatial(self.frame(c3=1.0), self.im).vector, self.im[3])

    def test_all_zero_frame_gives_all_ones(self):
        self.assertEqual(encode_spatial(self.frame(), self.im).vector, HDVector.ones(D))

    def test_stronger_channel_dominates(self):
        s = encode_spatial(self.frame(c1=1.0, c2=0.25), self.im).vector
        self.assertGreater(cosine(s, self.im[1]), cosine(s, self.im[2]))

    def test_equal_channels_are_both_represented(self):
        s = encode_spatial(self.frame(c1=1.0, c2=1.0), self.im).vector
        self.assertGreater(cosine(s, self.im[1]), 0.4)
        self.assertGreater(cosine(s, self.im[2]), 0.4)

    def test_channel_count_mismatch(self):
        with self.assertRaises(ValueError):
            encode_spatial(FeatureFrame(np.zeros(63), 0), self.im)

    def test_raising_a_weight_does_not_lower_its_similarity(self):
        """Mean over 100 item memories with a one-sided tolerance of 0.01."""
        rng = np.random.default_rng(12)
        low, high = [], []
        for seed in range(100):
            im = ItemMemory(seed=seed, channels=8)
            values = rng.uniform(0.0, 1.0, 8)
            raised = values.copy()
            raised[0] += 0.5
            low.append(cosine(encode_spatial(FeatureFrame(values, 0), im).vector, im[0]))
            high.append(cosine(encode_spatial(FeatureFrame(raised, 0), im).vector, im[0]))
        self.assertGreaterEqual(np.mean(high), np.mean(low) - 0.01)


class TemporalEncoderTests(SimpleTestCase):
    def test_single_frame_window(self):
        s = hd_factory(dimension=64)
        config = EncoderConfig(dimension=64, ngram_n=1)
        self.assertEqual(encode_temporal([spatial(s)], config).vector, s)

    def test_all_ones_window(self):
        ones = HDVector.ones(64)
        config = EncoderConfig(dimension=64, ngram_n=2)
        self.assertEqual(encode_temporal([spatial(ones), spatial(ones)], config).vector, ones)

    def test_result_is_dissimilar_to_every_input(self):
        vectors = hd_factory(seed=13, num=3)
        g = encode_temporal([spatial(v, t) for t, v in enumerate(vectors)], EncoderConfig(ngram_n=3)).vector
        for v in vectors:
            self.assertLessEqual(abs(cosine(g, v)), 0.05)

    def test_newest_time_index_is_kept(self):
        vectors = hd_factory(seed=14, dimension=64, num=2)
        g = encode_temporal([spatial(vectors[0], 7), spatial(vectors[1], 8)], EncoderConfig(dimension=64, ngram_n=2))
        self.assertEqual(g.time_index, 8)

    def test_order_and_shift_sensitivity(self):
        config = EncoderConfig(ngram_n=5)
        vectors = [spatial(v, t) for t, v in enumerate(hd_factory(seed=15, num=6))]
        g = encode_temporal(vectors[:5], config).vector
        reversed_g = encode_temporal(vectors[:5][::-1], config).vector
        shifted_g = encode_temporal(vectors[1:], config).vector
        self.assertLessEqual(abs(cosine(g, reversed_g)), 0.05)
        self.assertLessEqual(abs(cosine(g, shifted_g)), 0.05)

    def test_wrong_window_length(self):
        with self.assertRaises(ValueError):
            encode_temporal([spatial(HDVector.ones(64))] * 4, EncoderConfig(dimension=64, ngram_n=5))


class StreamEncodeTests(SimpleTestCase):
    def setUp(self):
        self.config = EncoderConfig(dimension=1_000, channels=8, ngram_n=5)
        self.im = self.config.item_memory()

    def test_window_count(self):
        frames = random_frames(np.random.default_rng(0), 10, 8)
        self.assertEqual(len(stream_encode(frames, self.im, self.config)), 6)

    def test_too_few_frames_gives_empty_output_and_warning(self):
        frames = random_frames(np.random.default_rng(0), 4, 8)
        with self.assertLogs('hdc.encoder', level='WARNING'):
            self.assertEqual(stream_encode(frames, self.im, self.config), [])

    def test_identical_frames(self):
        frames = FeatureFrames(np.tile(np.linspace(0, 1, 8), (5, 1)))
        s = encode_spatial(frames[0], self.im)
        (g,) = stream_encode(frames, self.im, self.config)
        self.assertEqual(g.vector, encode_temporal([s] * 5, self.config).vector)

    def test_matches_naive_per_window_encoding(self):
        """Reused spatial vectors give exactly what recomputing each window from scratch gives."""
        rng = np.random.default_rng(16)
        for _ in range(100):
            frames = random_frames(rng, int(rng.integers(5, 15)), 8)
            streamed = stream_encode(frames, self.im, self.config)
            for offset, g in enumerate(streamed):
                window = [encode_spatial(frames[t], self.im) for t in range(offset, offset + 5)]
                naive = encode_temporal(window, self.config)
                self.assertEqual(g.vector, naive.vector)
                self.assertEqual(g.time_index, offset + 4)

# ---------------------------
# Associative Memory and Voting
# ---------------------------

class TrainingTests(SimpleTestCase):
    def setUp(self):
        self.config = EncoderConfig(dimension=256)
        self.v, self.w, self.x = hd_factory(seed=17, dimension=256, num=3)

    def test_single_vector_prototype(self):
        am = AssociativeMemory(self.config).train([window_vector(self.v)], GestureLabel.FIST)
        self.assertEqual(am.prototype(GestureLabel.FIST), self.v)

    def test_majority_prototype(self):
        am = AssociativeMemory(self.config).train(
            [window_vector(self.v), window_vector(self.v), window_vector(self.w)], GestureLabel.FIST)
        self.assertEqual(am.prototype(GestureLabel.FIST), self.v)

    def test_incremental_equals_batch(self):
        vectors = [window_vector(v) for v in (self.v, self.w, self.x)]
        batch = AssociativeMemory(self.config).train(vectors, GestureLabel.OPEN)
        incremental = AssociativeMemory(self.config).train(vectors[:1], GestureLabel.OPEN).train(
            vectors[1:], GestureLabel.OPEN)
        np.testing.assert_array_equal(batch.accumulator(GestureLabel.OPEN).sums,
                                      incremental.accumulator(GestureLabel.OPEN).sums)
        self.assertEqual(batch.prototype(GestureLabel.OPEN), incremental.prototype(GestureLabel.OPEN))

    def test_order_invariance(self):
        vectors = [window_vector(v) for v in (self.v, self.w, self.x)]
        forward = AssociativeMemory(self.config).train(vectors, GestureLabel.REST)
        backward = AssociativeMemory(self.config).train(vectors[::-1], GestureLabel.REST)
        np.testing.assert_array_equal(forward.accumulator(GestureLabel.REST).sums,
                                      backward.accumulator(GestureLabel.REST).sums)

    def test_empty_sequence(self):
        with self.assertRaises(ValueError):
            AssociativeMemory(self.config).train([], GestureLabel.FIST)


class ClassifyTests(SimpleTestCase):
    def test_one_shot_memorization(self):
        """One vector per label, 100 seeds: self-similarity 1.0 and cross-similarity <= 0.05."""
        config = EncoderConfig()
        for seed in range(100):
            vectors = hd_factory(seed=seed, num=len(GestureLabel))
            am = AssociativeMemory(config)
            for label, v in zip(GestureLabel, vectors):
                am.train([window_vector(v)], label)
            results = am.classify_many([window_vector(v) for v in vectors])
            for label, result in zip(GestureLabel, results):
                self.assertEqual(result.predicted, label)
                self.assertEqual(result.similarities[label], 1.0)
                others = [s for other, s in result.similarities.items() if other != label]
                self.assertLessEqual(max(map(abs, others)), 0.05)

    def test_fresh_query_is_dissimilar_to_all_prototypes(self):
        config = EncoderConfig()
        am = AssociativeMemory(config)
        for label, v in zip(GestureLabel, hd_factory(seed=18, num=len(GestureLabel))):
            am.train([window_vector(v)], label)
        result = am.classify(window_vector(hd_factory(seed=19)))
        for similarity in result.similarities.values():
            self.assertLessEqual(abs(similarity), 0.05)

    def test_similarities_match_cosine(self):
        config = EncoderConfig(dimension=64)
        v, q = hd_factory(seed=20, dimension=64, num=2)
        am = AssociativeMemory(config).train([window_vector(v)], GestureLabel.LOWER)
        self.assertEqual(am.classify(window_vector(q)).similarities[GestureLabel.LOWER], cosine(v, q))

    def test_ties_go_to_lowest_label_id(self):
        config = EncoderConfig(dimension=64)
        v = hd_factory(dimension=64)
        am = AssociativeMemory(config)
        am.train([window_vector(v)], GestureLabel.REST).train([window_vector(v)], GestureLabel.RAISE)
        self.assertEqual(am.classify(window_vector(v)).predicted, GestureLabel.RAISE)

    def test_query_time_index_is_kept(self):
        config = EncoderConfig(dimension=64)
        v = hd_factory(dimension=64)
        am = AssociativeMemory(config).train([window_vector(v)], GestureLabel.FIST)
        self.assertEqual(am.classify(window_vector(v, 42)).time_index, 42)

    def test_empty_memory(self):
        with self.assertRaises(ValueError):
            AssociativeMemory(EncoderConfig(dimension=64)).classify(window_vector(HDVector.ones(64)))

    def test_restore_rebuilds_prototype(self):
        config = EncoderConfig(dimension=64)
        v, w, x = hd_factory(seed=21, dimension=64, num=3)
        am = AssociativeMemory(config).train([window_vector(u) for u in (v, w, x)], GestureLabel.OPEN)
        restored = AssociativeMemory(config)
        restored.restore(GestureLabel.OPEN, am.accumulator(GestureLabel.OPEN).sums, 3)
        self.assertEqual(restored.prototype(GestureLabel.OPEN), am.prototype(GestureLabel.OPEN))


class VoteTests(SimpleTestCase):
    F, R, L, O, REST = GestureLabel

    def test_strict_majority(self):
        labels = [self.F] * 6 + [self.R] * 5
        self.assertEqual(vote(results_factory(labels)), self.F)

    def test_prefix_window(self):
        self.assertEqual(vote(results_factory([self.REST, self.F, self.F])), self.F)

    def test_counting_within_window(self):
        labels = [self.O] * 5 + [self.REST] * 5 + [self.REST]
        self.assertEqual(vote(results_factory(labels)), self.REST)

    def test_only_trailing_window_counts(self):
        labels = [self.F] * 20 + [self.O] * 11
        self.assertEqual(vote(results_factory(labels), 11), self.O)

    def test_tie_goes_to_most_recent_tied_label(self):
        self.assertEqual(vote(results_factory([self.F, self.R, self.R, self.F])), self.F)
        self.assertEqual(vote(results_factory([self.F, self.L, self.R])), self.R)

    def test_stream_warm_up(self):
        voted = vote_stream(results_factory([self.R, self.F, self.F, self.R]), 11)
        self.assertEqual(voted, [self.R, self.F, self.F, self.R])

    def test_isolated_errors_never_lower_accuracy(self):
        """Errors with at least five correct results on each side, voting restarted per segment."""
        segments = [[self.F] * 12, [self.O] * 12]
        raw_matched = voted_matched = 0
        for truth, error_at, wrong in zip(segments, (5, 6), (self.REST, self.L)):
            predicted = list(truth)
            predicted[error_at] = wrong
            voted = vote_stream(results_factory(predicted), 11)
            raw_matched += sum(p == t for p, t in zip(predicted, truth))
            voted_matched += sum(v == t for v, t in zip(voted, truth))
        self.assertEqual(raw_matched, 22)
        self.assertGreaterEqual(voted_matched, raw_matched)

    def test_window_must_be_odd_and_positive(self):
        results = results_factory([self.F, self.R, self.R])
        for window in (0, -3, 2, 10, 1.0, True):
            with self.subTest(window=window):
                with self.assertRaises(ValidationError) as context:
                    vote(results, window)
                self.assertEqual(context.exception.code, 'invalid_config')
                with self.assertRaises(ValidationError):
                    vote_stream(results, window)

    def test_numpy_window_is_accepted(self):
        self.assertEqual(vote(results_factory([self.F, self.R, self.R]), np.int64(3)), self.R)

    def test_window_of_one_repeats_predictions(self):
        labels = [self.F, self.R, self.O, self.O, self.L]
        self.assertEqual(vote_stream(results_factory(labels), 1), labels)

    def test_stream_matches_voting_each_prefix(self):
        rng = np.random.default_rng(4)
        labels = [GestureLabel(int(i)) for i in rng.integers(0, 5, 300)]
        results = results_factory(labels)
        for window in (1, 5, 11):
            with self.subTest(window=window):
                expected = [vote(results[:end], window) for end in range(1, len(results) + 1)]
                self.assertEqual(vote_stream(results, window), expected)

    def test_stream_accepts_any_iterable(self):
        labels = [self.R, self.F, self.F, self.R]
        self.assertEqual(vote_stream(iter(results_factory(labels)), 3), [self.R, self.F, self.F, self.F])

    def test_empty_inputs(self):
        self.assertEqual(vote_stream([], 11), [])
        with self.assertRaises(ValueError):
            vote([], 11)
