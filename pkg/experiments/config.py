"""
Experiment configuration: one YAML file per experiment, every missing key
falling back to the defaults below.

    name: reference
    seed: 7
    conditions: [same_session, across_sessions, rotated]
    vote_window: 11
    train_trials: 10
    trial_selection: first        # or random (seeded)
    sweep_counts: [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
    filter: {sample_rate: 1000, notch_freq: 60, notch_q: 50, bp_low: 1, bp_high: 200,
             bp_order: 8, ma_window: 100, decim_factor: 100}
    encoder: {dimension: 10000, channels: 64, ngram_n: 5, im_seed: 0}
    synthesis: {subjects: 3, trials: 10, noise_level: 0.05, interference: 0.5,
                hold_variability: 0.1, gain_drift: 0.2, extra_noise: 0.05, channel_shift: 4}
    subjects:                     # recorded data instead of synthesis
      - {id: s1, train: s1/train.json, test: s1/test.json, test_across: s1/session2.json,
         train_rotated: s1/session3_train.json, test_rotated: s1/session3_test.json}
"""

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml
from django.core.exceptions import ValidationError
from django.utils.translation import gettext as _

from emg.dsp import FilterSpec
from hdc.classifier import DEFAULT_VOTE_WINDOW
from hdc.encoder import EncoderConfig

SAME_SESSION = 'same_session'
ACROSS_SESSIONS = 'across_sessions'
ROTATED = 'rotated'
CONDITIONS = {
    SAME_SESSION: 'Same Session',
    ACROSS_SESSIONS: 'Across Sessions',
    ROTATED: 'Same Session Rotated',
}
TRIAL_SELECTIONS = ('first', 'random')


@dataclass(frozen=True)
class SynthesisConfig:
    subjects: int = 3
    trials: int = 10
    noise_level: float = 0.05
    interference: float = 0.5
    hold_variability: float = 0.1
    # second session: per-channel gains drawn from [1 - drift, 1 + drift] plus extra noise
    gain_drift: float = 0.2
    extra_noise: float = 0.05
    # third session: electrode rings rotated by this many columns
    channel_shift: int = 4


@dataclass(frozen=True)
class SubjectPaths:
    id: str
    train: str = ''
    test: str = ''
    test_across: str = ''
    train_rotated: str = ''
    test_rotated: str = ''

    def pair(self, condition):
        train, test = {
            SAME_SESSION: (self.train, self.test),
            ACROSS_SESSIONS: (self.train, self.test_across),
            ROTATED: (self.train_rotated, self.test_rotated),
        }[condition]
        if not train or not test:
            raise ValidationError('Subject %(subject)s has no recordings for condition %(condition)s.',
                                  code='invalid_config', params={'subject': self.id, 'condition': condition})
        return Path(train), Path(test)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = 'experiment'
    seed: int = 0
    conditions: tuple = (SAME_SESSION,)
    vote_window: int = DEFAULT_VOTE_WINDOW
    train_trials: int = 10
    trial_selection: str = 'first'
    sweep_counts: tuple = tuple(range(1, 11))
    filter: FilterSpec = field(default_factory=FilterSpec)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    synthesis: SynthesisConfig = field(default_factory=SynthesisConfig)
    subjects: tuple = ()

    def __post_init__(self):
        ConfigValidator().validate(self)

    @property
    def synthetic(self):
        return not self.subjects

    def with_condition(self, condition):
        return replace(self, conditions=(condition,))

    def to_dict(self):
        data = asdict(self)
        data['conditions'] = list(self.conditions)
        data['sweep_counts'] = list(self.sweep_counts)
        data['subjects'] = [asdict(subject) for subject in self.subjects]
        return data


class ConfigValidator:
    def validate(self, config):
        errors = []
        if config.vote_window < 1 or config.vote_window % 2 == 0:
            errors.append(_("vote_window must be odd and at least 1."))
        if config.train_trials < 1:
            errors.append(_("train_trials must be at least 1."))
        if config.trial_selection not in TRIAL_SELECTIONS:
            errors.append(_("trial_selection must be 'first' or 'random'."))
        if not config.conditions or any(condition not in CONDITIONS for condition in config.conditions):
            errors.append(_("conditions must be a non-empty list drawn from same_session, "
                            "across_sessions, rotated."))
        if not config.sweep_counts or any(count < 1 for count in config.sweep_counts):
            errors.append(_("sweep_counts must be positive trial counts."))
        if config.synthetic:
            synthesis = config.synthesis
            if synthesis.subjects < 1 or synthesis.trials < 1:
                errors.append(_("synthesis needs at least one subject and one trial."))
            if synthesis.noise_level < 0 or synthesis.extra_noise < 0 or synthesis.interference < 0:
                errors.append(_("synthesis noise and interference levels must be nonnegative."))
            if not 0 <= synthesis.gain_drift < 1:
                errors.append(_("synthesis gain_drift must lie in [0, 1)."))
            if abs(synthesis.channel_shift) >= config.encoder.channels:
                errors.append(_("synthesis channel_shift must be smaller than the channel count."))

        if errors:
            raise ValidationError([ValidationError(error, code='invalid_config') for error in errors])


def _section(cls, data, section, errors):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        errors.append(ValidationError('%(section)s must be a mapping.', code='invalid_config',
                                      params={'section': section}))
        return None
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        errors.append(ValidationError('Unknown %(section)s keys: %(keys)s.', code='invalid_config',
                                      params={'section': section, 'keys': ', '.join(unknown)}))
    try:
        return cls(**{key: value for key, value in data.items() if key in known})
    except ValidationError as exc:
        errors.extend(exc.error_list)
    except TypeError as exc:
        errors.append(ValidationError('%(section)s: %(error)s', code='invalid_config',
                                      params={'section': section, 'error': exc}))
    return None


def build_config(data, base_dir=None):
    """ExperimentConfig from a parsed YAML mapping; relative recording paths resolve against base_dir."""
    data = dict(data or {})
    errors = []
    top_level = {f.name for f in fields(ExperimentConfig)} | {'condition'}
    unknown = sorted(set(data) - top_level)
    if unknown:
        errors.append(ValidationError('Unknown config keys: %(keys)s.', code='invalid_config',
                                      params={'keys': ', '.join(unknown)}))
    if 'condition' in data:
        data.setdefault('conditions', [data.pop('condition')])

    filter_spec = _section(FilterSpec, data.pop('filter', None), 'filter', errors)
    encoder = _section(EncoderConfig, data.pop('encoder', None), 'encoder', errors)
    synthesis = _section(SynthesisConfig, data.pop('synthesis', None), 'synthesis', errors)
    subjects = []
    for entry in data.pop('subjects', None) or []:
        if not isinstance(entry, dict) or 'id' not in entry:
            errors.append(ValidationError('Every subject needs an id.', code='invalid_config'))
            continue
        subject = _section(SubjectPaths, entry, 'subjects', errors)
        if subject is None:
            continue
        if base_dir is not None:
            subject = SubjectPaths(subject.id, **{
                key: str(Path(base_dir) / value) if value else ''
                for key, value in asdict(subject).items() if key != 'id'
            })
        subjects.append(subject)
    if errors:
        raise ValidationError(errors)

    options = {key: value for key, value in data.items() if key in top_level}
    for key in ('conditions', 'sweep_counts'):
        if key in options:
            options[key] = tuple(options[key])
    try:
        return ExperimentConfig(filter=filter_spec, encoder=encoder, synthesis=synthesis,
                                subjects=tuple(subjects), **options)
    except TypeError as exc:
        raise ValidationError('Malformed config: %(error)s', code='invalid_config',
                              params={'error': exc}) from exc


def load_config(path=None):
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ValidationError('Cannot read config %(path)s: %(error)s', code='invalid_config',
                              params={'path': path, 'error': exc}) from exc
    if not isinstance(data, dict):
        raise ValidationError('Config %(path)s must be a YAML mapping.', code='invalid_config', params={'path': path})
    data.setdefault('name', path.stem)
    return build_config(data, base_dir=path.parent)
