"""
Training/testing conditions and the training-trials sweep.

Every subject is an independent job: its training session is preprocessed
(normalization fitted there), stream-encoded and bundled into an associative
memory; the test session reuses that normalization and every labeled window
is classified, with and without trailing majority voting.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from emg import dataset
from emg.dataset import SessionPlan, default_gesture_maps, frame_segments, perturb, random_gains, synthesize
from emg.dsp import preprocess
from emg.labels import GestureLabel
from hdc.classifier import AssociativeMemory, vote_stream
from hdc.encoder import stream_encode

from .config import ACROSS_SESSIONS, CONDITIONS, ROTATED

logger = logging.getLogger(__name__)

LABELS = list(GestureLabel)


# ---------------------------
# Session data
# ---------------------------

@dataclass
class Session:
    recording: dataset.Recording
    segments: list


@dataclass
class SubjectSessions:
    subject_id: str
    train: Session
    test: Session
    seeds: dict = field(default_factory=dict)


def subject_seeds(seed, index):
    """Independent seeds for one synthetic subject, derived from the experiment seed."""
    state = np.random.SeedSequence([seed, index]).generate_state(5)
    return dict(zip(('profiles', 'train', 'test', 'session2', 'session3'), (int(s) for s in state)))


def synthetic_subject(config, index, condition):
    synthesis = config.synthesis
    seeds = subject_seeds(config.seed, index)
    subject_id = f'S{index + 1}'
    maps = default_gesture_maps(config.encoder.channels, seed=seeds['profiles'])
    plan = SessionPlan(trials=synthesis.trials)

    def session(seed, session_id):
        return Session(*synthesize(
            plan, maps, synthesis.noise_level, seed, interference=synthesis.interference,
            hold_variability=synthesis.hold_variability, sample_rate=config.filter.sample_rate,
            subject_id=subject_id, session_id=session_id,
        ))

    train, test = session(seeds['train'], '1-train'), session(seeds['test'], '1-test')
    if condition == ACROSS_SESSIONS:
        rng = np.random.default_rng(seeds['session2'])
        gains = random_gains(rng, config.encoder.channels, synthesis.gain_drift)
        test = Session(perturb(test.recording, gains, synthesis.extra_noise, seed=seeds['session2']), test.segments)
    elif condition == ROTATED:
        train, test = (
            Session(perturb(part.recording, 1.0, channel_shift=synthesis.channel_shift), part.segments)
            for part in (session(seeds['session3'], '3-train'), session(seeds['session3'] + 1, '3-test'))
        )
    return SubjectSessions(subject_id, train, test, seeds)


def recorded_subject(subject, condition):
    train_path, test_path = subject.pair(condition)
    return SubjectSessions(str(subject.id), Session(*dataset.load(train_path)), Session(*dataset.load(test_path)))


def subject_jobs(config, condition):
    """Zero-argument loaders, one per subject, so sessions are built inside the worker."""
    if config.synthetic:
        return [lambda index=index: synthetic_subject(config, index, condition)
                for index in range(config.synthesis.subjects)]
    return [lambda subject=subject: recorded_subject(subject, condition) for subject in config.subjects]


# ---------------------------
# Encoding and training
# ---------------------------

@dataclass
class EncodedSegment:
    label: GestureLabel
    trial: int
    vectors: list


def encode_session(session, config, im, norm=None):
    """Labeled windows (newest frame inside a segment) of one session."""
    frames, norm = preprocess(session.recording, config.filter, norm)
    vectors = stream_encode(frames, im, config.encoder)
    first = config.encoder.ngram_n - 1
    encoded = []
    for segment in frame_segments(session.segments, config.filter.decim_factor, len(frames)):
        newest = range(max(segment.start_frame, first), segment.end_frame)
        encoded.append(EncodedSegment(GestureLabel(segment.label), segment.trial,
                                      [vectors[f - first] for f in newest]))
    return encoded, norm, frames


def select_trials(segments, count, config):
    """Trial ids used for training, in the order they are added."""
    trials = sorted({segment.trial for segment in segments})
    if count > len(trials):
        raise ValidationError('Requested %(count)d training trials but only %(available)d are available.',
                              code='too_many_trials', params={'count': count, 'available': len(trials)})
    if config.trial_selection == 'random':
        trials = [trials[i] for i in np.random.default_rng(config.seed).permutation(len(trials))]
    return trials[:count]


def check_gestures(segments, trials):
    present = {segment.label for segment in segments if segment.trial in trials and segment.vectors}
    absent = [label.label for label in LABELS if label not in present]
    if absent:
        raise ValidationError('Training set has no windows for: %(labels)s.', code='missing_gestures',
                              params={'labels': ', '.join(absent)})


def train_trials(am, segments, trials):
    for segment in segments:
        if segment.trial in trials and segment.vectors:
            am.train(segment.vectors, segment.label)
    return am


def fit_model(session, config, trial_count=None):
    """Associative memory plus the normalization fitted on `session`."""
    im = config.encoder.item_memory()
    encoded, norm, _ = encode_session(session, config, im)
    trials = select_trials(encoded, trial_count or config.train_trials, config)
    check_gestures(encoded, trials)
    return train_trials(AssociativeMemory(config.encoder), encoded, set(trials)), norm


# ---------------------------
# Scoring
# ---------------------------

@dataclass
class SubjectResult:
    subject_id: str
    windows: int = 0
    matched: int = 0
    vote_matched: int = 0
    confusion: list = field(default_factory=lambda: [[0] * len(LABELS) for _ in LABELS])
    vote_confusion: list = field(default_factory=lambda: [[0] * len(LABELS) for _ in LABELS])

    @property
    def accuracy(self):
        return 100.0 * self.matched / self.windows if self.windows else 0.0

    @property
    def vote_accuracy(self):
        return 100.0 * self.vote_matched / self.windows if self.windows else 0.0

    def to_dict(self):
        return {
            'subject': self.subject_id,
            'windows': self.windows,
            'matched': self.matched,
            'vote_matched': self.vote_matched,
            'accuracy': self.accuracy,
            'vote_accuracy': self.vote_accuracy,
            'confusion': self.confusion,
            'vote_confusion': self.vote_confusion,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data['subject'], data['windows'], data['matched'], data['vote_matched'],
                   data['confusion'], data['vote_confusion'])


def score(am, segments, subject_id, vote_window):
    """Classify every labeled window; voting restarts at each segment."""
    result = SubjectResult(subject_id)
    for segment in segments:
        if not segment.vectors:
            continue
        results = am.classify_many(segment.vectors)
        voted = vote_stream(results, vote_window)
        truth = int(segment.label)
        for classified, voted_label in zip(results, voted):
            result.confusion[truth][int(classified.predicted)] += 1
            result.vote_confusion[truth][int(voted_label)] += 1
        result.windows += len(results)
        result.matched += sum(int(classified.predicted) == truth for classified in results)
        result.vote_matched += sum(int(label) == truth for label in voted)
    return result


@dataclass
class ConditionResult:
    condition: str
    subjects: list

    @property
    def average_accuracy(self):
        # unweighted mean across subjects
        return sum(s.accuracy for s in self.subjects) / len(self.subjects) if self.subjects else 0.0

    @property
    def average_vote_accuracy(self):
        return sum(s.vote_accuracy for s in self.subjects) / len(self.subjects) if self.subjects else 0.0

    def to_dict(self):
        return {
            'condition': self.condition,
            'title': CONDITIONS[self.condition],
            'average_accuracy': self.average_accuracy,
            'average_vote_accuracy': self.average_vote_accuracy,
            'subjects': [subject.to_dict() for subject in self.subjects],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data['condition'], [SubjectResult.from_dict(s) for s in data['subjects']])


@dataclass
class EvalReport:
    name: str
    conditions: dict = field(default_factory=dict)
    # {trial count: ConditionResult}
    curve: dict = field(default_factory=dict)
    # {gesture name: 4 x 16 grid as nested lists}
    activity_maps: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def merge(self, other):
        self.conditions.update(other.conditions)
        self.curve.update(other.curve)
        self.activity_maps = self.activity_maps or other.activity_maps
        for key, value in other.provenance.items():
            self.provenance.setdefault(key, value)
        return self

    def to_dict(self):
        return {
            'name': self.name,
            'conditions': {name: self.conditions[name].to_dict() for name in CONDITIONS if name in self.conditions},
            'curve': [{'trials': k, **self.curve[k].to_dict()} for k in sorted(self.curve)],
            'activity_maps': self.activity_maps,
            'provenance': self.provenance,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            name=data['name'],
            conditions={name: ConditionResult.from_dict(c) for name, c in data['conditions'].items()},
            curve={entry['trials']: ConditionResult.from_dict(entry) for entry in data['curve']},
            activity_maps=data['activity_maps'],
            provenance=data['provenance'],
        )


# ---------------------------
# Conditions and sweeps
# ---------------------------

def _run_jobs(function, jobs, workers):
    workers = workers or settings.HDEMG['WORKERS']
    if workers <= 1:
        return [function(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map keeps submission order, so reports do not depend on scheduling
        return list(pool.map(function, jobs))


def _activity_maps(frames, sessions, config):
    segments = frame_segments(sessions.train.segments, config.filter.decim_factor, len(frames))
    maps = dataset.activity_maps(frames, [segment for segment in segments if len(segment)])
    return {GestureLabel(label).label: activity.grid.tolist() for label, activity in maps.items()}


def _provenance(config, condition, seeds):
    return {
        'config': config.to_dict(),
        'condition': condition,
        'seed': config.seed,
        'im_seed': config.encoder.im_seed,
        'subject_seeds': seeds,
        'voting': f'trailing {config.vote_window} results, warm-up windows included',
    }


def _evaluate_subject(job, config, counts):
    sessions = job()
    logger.info('Evaluating subject %s', sessions.subject_id)
    im = config.encoder.item_memory()
    train, norm, train_frames = encode_session(sessions.train, config, im)
    test, _, _ = encode_session(sessions.test, config, im, norm)
    order = select_trials(train, max(counts), config)
    check_gestures(train, set(order[:min(counts)]))

    am = AssociativeMemory(config.encoder)
    added, points = 0, {}
    for count in sorted(set(counts)):
        train_trials(am, train, set(order[added:count]))
        added = count
        points[count] = score(am, test, sessions.subject_id, config.vote_window)
        logger.info('Subject %s, %d trials: %.2f%%', sessions.subject_id, count, points[count].accuracy)
    return sessions, points, train_frames


def _evaluate(config, condition, counts, workers):
    jobs = subject_jobs(config, condition)
    outcomes = _run_jobs(lambda job: _evaluate_subject(job, config, counts), jobs, workers)
    curve = {count: ConditionResult(condition, [points[count] for _, points, _ in outcomes])
             for count in sorted(set(counts))}
    first_sessions, _, first_frames = outcomes[0]
    seeds = {sessions.subject_id: sessions.seeds for sessions, _, _ in outcomes if sessions.seeds}
    return curve, _activity_maps(first_frames, first_sessions, config), _provenance(config, condition, seeds)


def run_condition(config, condition=None, workers=None):
    """Train on `train_trials` trials and test every labeled window of the test session."""
    condition = condition or config.conditions[0]
    curve, maps, provenance = _evaluate(config, condition, [config.train_trials], workers)
    return EvalReport(config.name, {condition: curve[config.train_trials]}, activity_maps=maps,
                      provenance=provenance)


def run_conditions(config, workers=None):
    report = EvalReport(config.name)
    for condition in config.conditions:
        report.merge(run_condition(config, condition, workers))
    report.provenance['condition'] = list(config.conditions)
    return report


def sweep_trials(config, counts=None, workers=None):
    """Accuracy for each training-trial count, adding trials to one memory incrementally."""
    counts = sorted(set(counts or config.sweep_counts))
    condition = config.conditions[0]
    curve, maps, provenance = _evaluate(config, condition, counts, workers)
    provenance['sweep_counts'] = counts
    return EvalReport(config.name, {condition: curve[counts[-1]]}, curve=curve, activity_maps=maps,
                      provenance=provenance)
