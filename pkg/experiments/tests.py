"""
Tests for the experiment harness.

These cover:
- Config files (defaults, validation that reports every problem, path resolution).
- The evaluation protocol on synthetic subjects, including the accuracy
  levels a working pipeline has to reach at the full dimension D = 10,000.
- Reports, model and feature files, stored runs and the management commands.

The accuracy checks synthesize full ten-trial sessions and take a few
seconds each; everything else runs on small configs (D = 1,000, 16 channels,
two trials).
"""

import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
import yaml
from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from emg import dataset
from emg.dataset import SessionPlan
from emg.dsp import preprocess
from emg.labels import GestureLabel

from . import artifacts
from .config import ACROSS_SESSIONS, ROTATED, SAME_SESSION, ExperimentConfig, SubjectPaths, build_config, load_config
from .evaluation import (
    ConditionResult, EvalReport, Session, SubjectResult, check_gestures, encode_session, fit_model, run_condition,
    run_conditions, score, select_trials, sweep_trials, synthetic_subject,
)
from .models import ExperimentRun
from .reports import emit_report, render_csv, render_pgm, render_text

# ---------------------------
# Test Helpers
# ---------------------------

SMALL = {
    'seed': 3,
    'train_trials': 1,
    'sweep_counts': [1, 2],
    'encoder': {'dimension': 1_000, 'channels': 16},
    'synthesis': {'subjects': 1, 'trials': 2},
}

def config_factory(**options):
    data = json.loads(json.dumps(SMALL))
    for key, value in options.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key].update(value)
        else:
            data[key] = value
    return build_config(data)

def full_config(**options):
    """Full-size encoder and sessions, one synthetic subject."""
    return config_factory(**{'encoder': {'dimension': 10_000, 'channels': 64},
                             'synthesis': {'subjects': 1, 'trials': 10}, 'train_trials': 3, **options})

def subject_result_factory(subject_id='S1', windows=100, matched=90, vote_matched=95):
    result = SubjectResult(subject_id, windows, matched, vote_matched)
    result.confusion[0][0] = matched
    result.confusion[0][1] = windows - matched
    result.vote_confusion[0][0] = vote_matched
    result.vote_confusion[0][2] = windows - vote_matched
    return result

def report_factory(name='unit'):
    maps = {label.label: np.linspace(0, 1, 64).reshape(4, 16).tolist() for label in GestureLabel}
    return EvalReport(
        name,
        conditions={
            SAME_SESSION: ConditionResult(SAME_SESSION, [subject_result_factory('S1'),
                                                         subject_result_factory('S2', 200, 150, 160)]),
            ROTATED: ConditionResult(ROTATED, [subject_result_factory('S1', 100, 80, 85),
                                               subject_result_factory('S2', 100, 70, 90)]),
        },
        curve={1: ConditionResult(SAME_SESSION, [subject_result_factory('S1', 100, 70, 75)]),
               2: ConditionResult(SAME_SESSION, [subject_result_factory('S1', 100, 90, 95)])},
        activity_maps=maps,
        provenance={'seed': 3, 'im_seed': 0, 'voting': 'trailing 11 results', 'config': {'seed': 3}},
    )

def report_bytes(report):
    return json.dumps(report.to_dict(), sort_keys=True)

def assert_error_code(test, code, function, *args, **kwargs):
    with test.assertRaises(ValidationError) as context:
        function(*args, **kwargs)
    test.assertIn(code, [error.code for error in context.exception.error_list])
    return context.exception

# ---------------------------
# Configuration
# ---------------------------

class ConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = load_config()
        self.assertEqual((config.encoder.dimension, config.encoder.ngram_n, config.vote_window), (10_000, 5, 11))
        self.assertEqual((config.filter.notch_freq, config.filter.notch_q, config.filter.bp_order), (60.0, 50.0, 8))
        self.assertEqual((config.filter.ma_window, config.filter.decim_factor, config.train_trials), (100, 100, 10))
        self.assertTrue(config.synthetic)

    def test_nested_sections(self):
        config = config_factory(filter={'notch_freq': 50.0}, conditions=[ACROSS_SESSIONS, ROTATED])
        self.assertEqual(config.filter.notch_freq, 50.0)
        self.assertEqual(config.filter.bp_high, 200.0)
        self.assertEqual(config.encoder.dimension, 1_000)
        self.assertEqual(config.conditions, (ACROSS_SESSIONS, ROTATED))

    def test_single_condition_key(self):
        self.assertEqual(build_config({'condition': ROTATED}).conditions, (ROTATED,))

    def test_every_problem_is_reported(self):
        with self.assertRaises(ValidationError) as context:
            build_config({'vote_window': 10, 'train_trials': 0, 'trial_selection': 'best'})
        self.assertEqual(len(context.exception.error_list), 3)
        self.assertEqual({error.code for error in context.exception.error_list}, {'invalid_config'})

    def test_unknown_keys(self):
        assert_error_code(self, 'invalid_config', build_config, {'colour': 'red'})
        assert_error_code(self, 'invalid_config', build_config, {'encoder': {'size': 3}})
        assert_error_code(self, 'invalid_config', build_config, {'filter': [1, 2]})

    def test_invalid_sections_are_collected(self):
        with self.assertRaises(ValidationError) as context:
            build_config({'filter': {'bp_order': 3}, 'encoder': {'dimension': 7}})
        codes = {error.code for error in context.exception.error_list}
        self.assertEqual(codes, {'invalid_filter_spec', 'invalid_config'})

    def test_unknown_condition(self):
        assert_error_code(self, 'invalid_config', build_config, {'conditions': ['tomorrow']})

    def test_subjects_need_an_id(self):
        assert_error_code(self, 'invalid_config', build_config, {'subjects': [{'train': 'a.json'}]})

    def test_yaml_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'mine.yaml'
            path.write_text(yaml.safe_dump({'seed': 5, 'subjects': [{'id': 's1', 'train': 's1/a.json',
                                                                     'test': 's1/b.json'}]}))
            config = load_config(path)
            self.assertEqual(config.name, 'mine')
            self.assertFalse(config.synthetic)
            train, test = config.subjects[0].pair(SAME_SESSION)
            self.assertEqual(train, Path(directory) / 's1' / 'a.json')
            self.assertEqual(test, Path(directory) / 's1' / 'b.json')

    def test_unreadable_yaml(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'broken.yaml'
            path.write_text('seed: [1, 2')
            assert_error_code(self, 'invalid_config', load_config, path)
            assert_error_code(self, 'invalid_config', load_config, Path(directory) / 'missing.yaml')

    def test_subject_without_condition_recordings(self):
        assert_error_code(self, 'invalid_config', SubjectPaths('s1', train='a', test='b').pair, ROTATED)

    def test_to_dict_round_trip(self):
        config = config_factory(conditions=[SAME_SESSION, ROTATED])
        self.assertEqual(build_config(config.to_dict()), config)

# ---------------------------
# Evaluation Protocol
# ---------------------------

class TrialSelectionTests(SimpleTestCase):
    def segments(self, trials):
        return [dataset.LabeledSegment(GestureLabel.FIST, 10 * t, 10 * t + 5, t) for t in trials]

    def test_first_trials_in_recording_order(self):
        self.assertEqual(select_trials(self.segments([2, 0, 1, 3]), 2, config_factory()), [0, 1])

    def test_random_selection_is_seeded(self):
        config = config_factory(trial_selection='random')
        chosen = select_trials(self.segments(range(10)), 3, config)
        self.assertEqual(chosen, select_trials(self.segments(range(10)), 3, config))
        self.assertEqual(len(set(chosen)), 3)

    def test_too_many_trials(self):
        assert_error_code(self, 'too_many_trials', select_trials, self.segments([0, 1]), 3, config_factory())


class SmallEvaluationTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.config = config_factory()
        cls.sessions = synthetic_subject(cls.config, 0, SAME_SESSION)

    def test_missing_gesture_is_named(self):
        plan = SessionPlan(trials=1, rest_bracketing=False)
        recording, segments = dataset.synthesize(plan, dataset.default_gesture_maps(16), 0.05, seed=1)
        exc = assert_error_code(self, 'missing_gestures', fit_model, Session(recording, segments), self.config)
        self.assertIn('rest', exc.messages[0])

    def test_check_gestures_only_counts_selected_trials(self):
        encoded, _, _ = encode_session(self.sessions.train, self.config, self.config.encoder.item_memory())
        check_gestures(encoded, {0})
        assert_error_code(self, 'missing_gestures', check_gestures, encoded, {7})

    def test_subject_sessions_are_deterministic(self):
        again = synthetic_subject(self.config, 0, SAME_SESSION)
        self.assertEqual(again.train.recording, self.sessions.train.recording)
        self.assertNotEqual(again.test.recording, again.train.recording)
        self.assertNotEqual(synthetic_subject(self.config, 1, SAME_SESSION).train.recording,
                            self.sessions.train.recording)

    def test_condition_sessions(self):
        across = synthetic_subject(self.config, 0, ACROSS_SESSIONS)
        self.assertEqual(across.train.recording, self.sessions.train.recording)
        self.assertNotEqual(across.test.recording, self.sessions.test.recording)
        rotated = synthetic_subject(self.config, 0, ROTATED)
        self.assertNotEqual(rotated.train.recording, self.sessions.train.recording)

    def test_accuracy_accounting(self):
        """Confusion rows sum to the windows of each label; matched + mismatched = total."""
        am, norm = fit_model(self.sessions.train, self.config)
        encoded, _, _ = encode_session(self.sessions.test, self.config, self.config.encoder.item_memory(), norm)
        result = score(am, encoded, 'S1', self.config.vote_window)
        windows = {label: 0 for label in GestureLabel}
        for segment in encoded:
            windows[segment.label] += len(segment.vectors)
        for label in GestureLabel:
            self.assertEqual(sum(result.confusion[label]), windows[label])
            self.assertEqual(sum(result.vote_confusion[label]), windows[label])
        self.assertEqual(sum(result.confusion[i][i] for i in range(5)), result.matched)
        self.assertEqual(sum(map(sum, result.confusion)), result.windows)
        self.assertTrue(0.0 <= result.accuracy <= 100.0)

    def test_windows_lie_inside_labeled_segments(self):
        encoded, _, _ = encode_session(self.sessions.train, self.config, self.config.encoder.item_memory())
        decim = self.config.filter.decim_factor
        for segment, labeled in zip(encoded, self.sessions.train.segments):
            for vector in segment.vectors:
                sample = vector.time_index * decim + decim - 1
                self.assertTrue(labeled.start <= sample < labeled.end)
        self.assertEqual(len(encoded[0].vectors), 30)

    def test_model_file_round_trip(self):
        am, norm = fit_model(self.sessions.train, self.config)
        with tempfile.TemporaryDirectory() as directory:
            path = artifacts.save_model(Path(directory) / 'model.npz', am, self.config.filter, norm)
            loaded, filter_spec, loaded_norm = artifacts.load_model(path)
        self.assertEqual(filter_spec, self.config.filter)
        self.assertEqual(loaded_norm, norm)
        self.assertEqual(loaded.labels, am.labels)
        for label in am.labels:
            np.testing.assert_array_equal(loaded.accumulator(label).sums, am.accumulator(label).sums)
            self.assertEqual(loaded.accumulator(label).count, am.accumulator(label).count)
            self.assertEqual(loaded.prototype(label), am.prototype(label))

    def test_sweep_counts_are_incremental(self):
        report = sweep_trials(self.config, [1, 2])
        self.assertEqual(sorted(report.curve), [1, 2])
        full = run_condition(build_config({**SMALL, 'train_trials': 2}))
        self.assertEqual(report.curve[2].to_dict(), full.conditions[SAME_SESSION].to_dict())

    def test_deterministic_across_runs_and_worker_counts(self):
        config = config_factory(synthesis={'subjects': 2}, conditions=[SAME_SESSION, ROTATED])
        serial = run_conditions(config, workers=1)
        self.assertEqual(report_bytes(serial), report_bytes(run_conditions(config, workers=1)))
        self.assertEqual(report_bytes(serial), report_bytes(run_conditions(config, workers=2)))
        self.assertEqual([s.subject_id for s in serial.conditions[ROTATED].subjects], ['S1', 'S2'])

    def test_recorded_subjects(self):
        with tempfile.TemporaryDirectory() as directory:
            base = Path(directory)
            dataset.save(base / 'train.json', self.sessions.train.recording, self.sessions.train.segments)
            dataset.save(base / 'test.json', self.sessions.test.recording, self.sessions.test.segments)
            recorded = build_config({**SMALL, 'subjects': [{'id': 'S1', 'train': 'train.json', 'test': 'test.json'}]},
                                    base_dir=base)
            from_files = run_condition(recorded)
        synthetic = run_condition(self.config)
        self.assertEqual(from_files.conditions[SAME_SESSION].subjects[0].confusion,
                         synthetic.conditions[SAME_SESSION].subjects[0].confusion)

    def test_report_carries_maps_and_provenance(self):
        report = run_condition(self.config)
        self.assertEqual(set(report.activity_maps), {label.label for label in GestureLabel})
        self.assertEqual(np.array(report.activity_maps['fist']).shape, (4, 16))
        self.assertEqual(report.provenance['seed'], 3)
        self.assertIn('S1', report.provenance['subject_seeds'])
        self.assertEqual(EvalReport.from_dict(json.loads(report_bytes(report))).to_dict(), report.to_dict())


class FullScaleAccuracyTests(SimpleTestCase):
    """Accuracy levels a working pipeline reaches on synthetic subjects at D=10,000."""

    def test_memorized_training_set(self):
        config = full_config(synthesis={'trials': 2, 'noise_level': 0.0, 'interference': 0.0,
                                         'hold_variability': 0.0}, train_trials=2)
        sessions = synthetic_subject(config, 0, SAME_SESSION)
        am, norm = fit_model(sessions.train, config)
        encoded, _, _ = encode_session(sessions.train, config, config.encoder.item_memory(), norm)
        self.assertGreaterEqual(score(am, encoded, 'S1', 11).accuracy, 99.0)

    def test_same_session_with_three_training_trials(self):
        report = run_condition(full_config())
        result = report.conditions[SAME_SESSION]
        self.assertGreaterEqual(result.average_accuracy, 95.0)
        self.assertGreaterEqual(result.average_vote_accuracy, result.average_accuracy)

    def test_trials_sweep_shape(self):
        report = sweep_trials(full_config(), [1, 3, 10])
        k1, k3, k10 = (report.curve[k].average_accuracy for k in (1, 3, 10))
        self.assertGreaterEqual(k1, 85.0)
        self.assertLessEqual(k10 - k1, 12.0)
        self.assertLessEqual(abs(k10 - k3), 2.0)

    def test_cross_session_drop_is_bounded(self):
        report = run_conditions(full_config(conditions=[SAME_SESSION, ACROSS_SESSIONS]))
        same = report.conditions[SAME_SESSION].average_accuracy
        across = report.conditions[ACROSS_SESSIONS].average_accuracy
        self.assertLessEqual(same - across, 10.0)


class ResultTests(SimpleTestCase):
    def test_averages_are_unweighted_means(self):
        subjects = [subject_result_factory('S1', 10_000, 9_944), subject_result_factory('S2', 10_000, 9_887),
                    subject_result_factory('S3', 10_000, 9_161)]
        self.assertAlmostEqual(ConditionResult(SAME_SESSION, subjects).average_accuracy, 96.64)

    def test_empty_subject(self):
        self.assertEqual(SubjectResult('S1').accuracy, 0.0)

    def test_merge_keeps_existing_conditions(self):
        first, second = report_factory('a'), EvalReport('b', {ACROSS_SESSIONS: ConditionResult(ACROSS_SESSIONS, [])})
        merged = first.merge(second)
        self.assertEqual(set(merged.conditions), {SAME_SESSION, ROTATED, ACROSS_SESSIONS})
        self.assertEqual(merged.name, 'a')

# ---------------------------
# Reports
# ---------------------------

class ReportTests(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.out = Path(self.directory.name)

    def tearDown(self):
        self.directory.cleanup()

    def test_same_report_same_bytes(self):
        emit_report(report_factory(), self.out / 'a')
        emit_report(report_factory(), self.out / 'b')
        for name in ('report.txt', 'report.csv', 'curve.csv', 'report.json', 'heatmaps/fist.pgm'):
            with self.subTest(name=name):
                self.assertEqual((self.out / 'a' / name).read_bytes(), (self.out / 'b' / name).read_bytes())

    def test_table_layout(self):
        text = render_text(report_factory())
        self.assertIn('Same Session', text)
        self.assertIn('Same Session Rotated', text)
        self.assertNotIn('Across Sessions', text)
        self.assertIn('No Vote', text)
        self.assertIn('Avg.', text)
        avg_row = next(line for line in text.splitlines() if line.startswith('Avg.'))
        self.assertIn('82.50', avg_row)

    def test_confusion_footer_matches_row_sums(self):
        text = render_text(report_factory())
        self.assertIn('Windows per label: fist=300, raise=0, lower=0, open=0, rest=0; total=300', text)

    def test_csv_rows(self):
        rows = render_csv(report_factory()).splitlines()
        self.assertEqual(rows[0], 'condition,subject,windows,matched,accuracy,vote_matched,vote_accuracy')
        self.assertEqual(rows[1], 'same_session,S1,100,90,90.0000,95,95.0000')
        self.assertEqual(rows[3], 'same_session,avg,300,240,82.5000,255,87.5000')

    def test_heatmap_dimensions(self):
        emit_report(report_factory(), self.out, ['pgm'])
        lines = (self.out / 'heatmaps' / 'open.pgm').read_text().splitlines()
        self.assertEqual(lines[:3], ['P2', '16 4', '255'])
        self.assertEqual(len(lines), 7)
        self.assertTrue(all(len(line.split()) == 16 for line in lines[3:]))

    def test_pgm_values(self):
        self.assertEqual(render_pgm([[0.0, 0.5, 1.0]]), 'P2\n3 1\n255\n0 128 255\n')

    def test_selected_formats_only(self):
        written = emit_report(report_factory(), self.out, ['json'])
        self.assertEqual(written, [self.out / 'report.json'])

    def test_unknown_format(self):
        assert_error_code(self, 'invalid_config', emit_report, report_factory(), self.out, ['html'])

    def test_unwritable_path(self):
        blocker = self.out / 'file'
        blocker.write_text('')
        assert_error_code(self, 'unwritable_path', emit_report, report_factory(), blocker / 'report')

# ---------------------------
# Model and Feature Files
# ---------------------------

class ArtifactTests(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.out = Path(self.directory.name)

    def tearDown(self):
        self.directory.cleanup()

    def test_frames_round_trip(self):
        recording = dataset.Recording(np.random.default_rng(0).standard_normal((4, 1000)))
        config = ExperimentConfig()
        frames, norm = preprocess(recording, config.filter)
        path = artifacts.save_frames(self.out / 'frames.npz', frames, norm, config.filter)
        self.assertEqual(artifacts.load_frames(path), (frames, norm))

    def test_wrong_kind_of_file(self):
        config = ExperimentConfig()
        recording = dataset.Recording(np.ones((2, 200)))
        frames, norm = preprocess(recording, config.filter)
        path = artifacts.save_frames(self.out / 'frames.npz', frames, norm, config.filter)
        assert_error_code(self, 'bad_model', artifacts.load_model, path)

    def test_not_an_archive(self):
        path = self.out / 'model.npz'
        path.write_text('not a model')
        assert_error_code(self, 'bad_model', artifacts.load_model, path)

    def test_unsupported_version(self):
        path = self.out / 'model.npz'
        np.savez(path, manifest=np.array(json.dumps({'magic': artifacts.MODEL_MAGIC, 'version': 2})))
        assert_error_code(self, 'unsupported_version', artifacts.load_model, path)

# ---------------------------
# Stored Runs
# ---------------------------

class ExperimentRunTests(TestCase):
    def test_record_and_averages(self):
        run = ExperimentRun.record(report_factory('stored'), ExperimentRun.SWEEP)
        run.refresh_from_db()
        self.assertEqual(run.kind, 'sweep')
        self.assertEqual(run.seed, 3)
        self.assertAlmostEqual(run.average_accuracy, (82.5 + 75.0) / 2)
        self.assertAlmostEqual(run.average_vote_accuracy, (87.5 + 87.5) / 2)
        self.assertEqual(str(run), 'stored (trials sweep, seed 3): 78.75%')

    def test_empty_report(self):
        run = ExperimentRun(kind=ExperimentRun.CONDITION, name='empty', seed=0, config={}, report={})
        self.assertEqual(run.average_accuracy, 0.0)

# ---------------------------
# Management Commands
# ---------------------------

class CommandTests(TestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.directory = tempfile.TemporaryDirectory()
        cls.base = Path(cls.directory.name)
        cls.config_path = cls.base / 'small.yaml'
        cls.config_path.write_text(yaml.safe_dump({**SMALL, 'conditions': [SAME_SESSION, ACROSS_SESSIONS, ROTATED]}))
        call_command('synth', config=str(cls.config_path), out=str(cls.base / 'data'), stdout=StringIO())
        cls.train = str(cls.base / 'data' / 'S1' / 'train.json')
        cls.test = str(cls.base / 'data' / 'S1' / 'test.json')

    @classmethod
    def tearDownClass(cls):
        cls.directory.cleanup()
        super().tearDownClass()

    def run_command(self, *args, **options):
        stdout = StringIO()
        call_command(*args, stdout=stdout, **options)
        return stdout.getvalue()

    def test_synth_writes_every_session_and_a_dataset_config(self):
        for name in ('train', 'test', 'test_across', 'train_rotated', 'test_rotated'):
            recording, segments = dataset.load(self.base / 'data' / 'S1' / f'{name}.json')
            self.assertEqual(recording.channels, 16)
            self.assertEqual(len(segments), 12)
        config = load_config(self.base / 'data' / 'dataset.yaml')
        self.assertFalse(config.synthetic)
        self.assertEqual(config.encoder.dimension, 1_000)

    def test_train_then_classify(self):
        model = self.base / 'model.npz'
        self.run_command('train', self.train, out=str(model), config=str(self.config_path))
        am, _, _ = artifacts.load_model(model)
        self.assertEqual(am.labels, list(GestureLabel))
        predictions = self.base / 'predictions.csv'
        output = self.run_command('classify', str(model), self.test, out=str(predictions))
        rows = predictions.read_text().splitlines()
        self.assertEqual(rows[0], 'frame,predicted,voted,label')
        self.assertEqual(len(rows) - 1, 600 - 4)
        self.assertIn('labeled windows matched', output)

    def test_preprocess(self):
        features = self.base / 'features.npz'
        self.run_command('preprocess', self.train, out=str(features), config=str(self.config_path))
        frames, norm = artifacts.load_frames(features)
        self.assertEqual((len(frames), frames.channels, norm.channels), (600, 16, 16))

    def test_heatmap(self):
        out = self.base / 'maps'
        self.run_command('heatmap', self.train, out=str(out), config=str(self.config_path))
        self.assertEqual(sorted(path.name for path in out.iterdir()),
                         sorted(f'{label.label}.pgm' for label in GestureLabel))

    def test_eval_writes_report_and_records_run(self):
        out = self.base / 'report'
        output = self.run_command('eval', config=str(self.base / 'data' / 'dataset.yaml'), out=str(out))
        self.assertIn('Across Sessions', output)
        self.assertTrue((out / 'report.txt').exists())
        self.assertTrue((out / 'heatmaps' / 'rest.pgm').exists())
        run = ExperimentRun.objects.get()
        self.assertEqual(run.kind, ExperimentRun.CONDITION)
        self.assertEqual(set(run.report['conditions']), {SAME_SESSION, ACROSS_SESSIONS, ROTATED})

    def test_sweep(self):
        out = self.base / 'sweep'
        self.run_command('sweep', config=str(self.config_path), out=str(out), counts=[1, 2], formats=['csv'])
        self.assertTrue((out / 'curve.csv').exists())
        self.assertEqual(ExperimentRun.objects.get().kind, ExperimentRun.SWEEP)

    def test_import_requires_descriptor(self):
        with self.assertRaises(CommandError) as context:
            self.run_command('import', out=str(self.base / 'imported.json'))
        self.assertTrue(str(context.exception).startswith('format_mapping_required:'))
        self.assertEqual(context.exception.returncode, 2)

    def test_data_errors_exit_with_three(self):
        broken = self.base / 'broken.json'
        broken.write_text('{}')
        with self.assertRaises(CommandError) as context:
            self.run_command('train', str(broken), out=str(self.base / 'x.npz'), config=str(self.config_path))
        self.assertTrue(str(context.exception).startswith('bad_magic:'))
        self.assertEqual(context.exception.returncode, 3)

    def test_config_errors_exit_with_two(self):
        bad = self.base / 'bad.yaml'
        bad.write_text(yaml.safe_dump({'vote_window': 4}))
        with self.assertRaises(CommandError) as context:
            self.run_command('sweep', config=str(bad))
        self.assertTrue(str(context.exception).startswith('invalid_config:'))
        self.assertEqual(context.exception.returncode, 2)

    def test_malformed_manifest_exits_with_three(self):
        manifest = json.loads(Path(self.train).read_text())
        del manifest['channels']
        broken = self.base / 'no_channels.json'
        broken.write_text(json.dumps(manifest))
        for command in ('train', 'preprocess', 'heatmap'):
            with self.subTest(command=command):
                with self.assertRaises(CommandError) as context:
                    self.run_command(command, str(broken), out=str(self.base / 'unused'), config=str(self.config_path))
                self.assertTrue(str(context.exception).startswith('shape_mismatch:'))
                self.assertEqual(context.exception.returncode, 3)

    def test_classify_rejects_invalid_vote_window(self):
        for window in (0, -1, 4):
            with self.subTest(window=window):
                with self.assertRaises(CommandError) as context:
                    self.run_command('classify', str(self.base / 'missing.npz'), self.test,
                                     out=str(self.base / 'p.csv'), vote_window=window)
                self.assertTrue(str(context.exception).startswith('invalid_config:'))
                self.assertEqual(context.exception.returncode, 2)
