"""
EMG preprocessing chain.

    raw (channels x samples, 1 kS/s)
      -> 60 Hz notch -> 1-200 Hz Butterworth band-pass   (causal, second-order sections)
      -> |x| -> 100-sample moving average                 (envelope)
      -> per-channel max normalization, clamped to [0, 1]
      -> keep the last sample of every 100-sample block   (10 Hz feature frames)
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np
from django.core.exceptions import ValidationError
from scipy import signal

from .validators import FilterSpecValidator

logger = logging.getLogger(__name__)

# channels filtered together in `preprocess`; bounds peak memory on long recordings
_CHANNEL_BLOCK = 16


@dataclass(frozen=True)
class FilterSpec:
    sample_rate: float = 1000.0
    notch_freq: float = 60.0
    notch_q: float = 50.0
    bp_low: float = 1.0
    bp_high: float = 200.0
    bp_order: int = 8
    ma_window: int = 100
    decim_factor: int = 100

    def __post_init__(self):
        FilterSpecValidator().validate(self)

    def to_dict(self):
        return asdict(self)


class BiquadCascade:
    """Second-order sections (rows of b0 b1 b2 1 a1 a2) plus per-channel delay state."""

    def __init__(self, sos, name=''):
        sos = np.atleast_2d(np.asarray(sos, dtype=np.float64))
        if sos.shape[1] != 6 or not np.allclose(sos[:, 3], 1.0):
            raise ValueError('sections must be normalized rows of six coefficients (a0 = 1)')
        self.sos = sos
        self.name = name
        self.state = None

    @property
    def sections(self):
        return [tuple(row[[0, 1, 2, 4, 5]]) for row in self.sos]

    def __len__(self):
        return len(self.sos)

    def poles(self):
        return np.concatenate([np.roots(row[3:]) for row in self.sos])

    def is_stable(self):
        return bool(np.all(np.abs(self.poles()) < 1.0))

    def reset(self, channels):
        self.state = np.zeros((len(self.sos), channels, 2))

    def magnitude(self, frequencies, sample_rate):
        """Analytic |H(f)| of the cascade."""
        _, response = signal.sosfreqz(self.sos, worN=np.asarray(frequencies, dtype=np.float64), fs=sample_rate)
        return np.abs(response)

    def __repr__(self):
        return f'BiquadCascade({self.name or "custom"}, {len(self)} sections)'


def design_notch(spec):
    FilterSpecValidator().validate(spec)
    b, a = signal.iirnotch(spec.notch_freq, spec.notch_q, fs=spec.sample_rate)
    return BiquadCascade(np.concatenate([b, a])[np.newaxis, :] / a[0], name='notch')


def design_bandpass(spec):
    # an order-N band-pass comes from an order-N/2 low-pass prototype
    FilterSpecValidator().validate(spec)
    sos = signal.butter(spec.bp_order // 2, [spec.bp_low, spec.bp_high], btype='bandpass',
                        output='sos', fs=spec.sample_rate)
    return BiquadCascade(sos, name='bandpass')


def filter_apply(cascade, samples, first_channel=0):
    """Causal direct-form-II-transposed filtering of (channels x samples); state carries over."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    finite = np.isfinite(samples)
    if not finite.all():
        channel, index = (int(i) for i in np.argwhere(~finite)[0])
        raise ValidationError(
            'Non-finite sample on channel %(channel)d at index %(index)d.',
            code='non_finite_sample',
            params={'channel': channel + first_channel, 'index': index},
        )
    if cascade.state is None:
        cascade.reset(samples.shape[0])
    elif cascade.state.shape[1] != samples.shape[0]:
        raise ValueError(f'{cascade!r} holds state for {cascade.state.shape[1]} channels, '
                         f'got {samples.shape[0]}')
    output, cascade.state = signal.sosfilt(cascade.sos, samples, axis=-1, zi=cascade.state)
    return output


def envelope(samples, ma_window):
    """Causal moving average of |x|; the first ma_window - 1 outputs average the available prefix."""
    if ma_window < 1:
        raise ValueError(f'moving-average window must be >= 1, got {ma_window}')
    rectified = np.abs(np.atleast_2d(np.asarray(samples, dtype=np.float64)))
    cumulative = np.cumsum(rectified, axis=-1)
    windowed = cumulative.copy()
    windowed[:, ma_window:] -= cumulative[:, :-ma_window]
    counts = np.minimum(np.arange(1, rectified.shape[-1] + 1), ma_window)
    # cancellation in the running sum can leave tiny negatives
    return np.maximum(windowed / counts, 0.0)


@dataclass(frozen=True, eq=False)
class ChannelNormalization:
    scales: np.ndarray
    method: str = 'max'

    def __post_init__(self):
        scales = np.array(self.scales, dtype=np.float64)
        if scales.ndim != 1 or not np.all(scales > 0) or not np.all(np.isfinite(scales)):
            raise ValidationError('Normalization scales must be positive and finite.', code='invalid_config')
        scales.flags.writeable = False
        object.__setattr__(self, 'scales', scales)

    def __eq__(self, other):
        if not isinstance(other, ChannelNormalization):
            return NotImplemented
        return self.method == other.method and np.array_equal(self.scales, other.scales)

    @property
    def channels(self):
        return self.scales.size

    def to_dict(self):
        return {'method': self.method, 'scales': self.scales.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(np.array(data['scales'], dtype=np.float64), data.get('method', 'max'))


def _normalization_from_maxima(maxima):
    # dead channels keep scale 1
    return ChannelNormalization(np.where(maxima > 0, maxima, 1.0))


def fit_normalization(training):
    training = np.atleast_2d(np.asarray(training, dtype=np.float64))
    if training.size == 0:
        raise ValidationError('Cannot fit a normalization on an empty recording.', code='empty_input')
    return _normalization_from_maxima(training.max(axis=1))


@dataclass(frozen=True, eq=False)
class FeatureFrame:
    values: np.ndarray
    time_index: int


class FeatureFrames:
    """Read-only stack of feature frames, one row per 10 Hz time index."""

    def __init__(self, values, time_indices=None):
        values = np.array(values, dtype=np.float64, ndmin=2)
        if time_indices is None:
            time_indices = np.arange(values.shape[0])
        time_indices = np.array(time_indices, dtype=np.int64)
        values.flags.writeable = False
        time_indices.flags.writeable = False
        self.values = values
        self.time_indices = time_indices

    @property
    def channels(self):
        return self.values.shape[1]

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, item):
        if isinstance(item, slice):
            return FeatureFrames(self.values[item], self.time_indices[item])
        return FeatureFrame(self.values[item], int(self.time_indices[item]))

    def __iter__(self):
        for row in range(len(self)):
            yield self[row]

    def __eq__(self, other):
        if not isinstance(other, FeatureFrames):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(self.time_indices, other.time_indices)

    __hash__ = None


def normalize_decimate(stream, norm, decim_factor):
    stream = np.atleast_2d(np.asarray(stream, dtype=np.float64))
    if stream.shape[0] != norm.channels:
        raise ValueError(f'stream has {stream.shape[0]} channels, normalization has {norm.channels}')
    kept = stream[:, decim_factor - 1::decim_factor]
    values = np.clip(kept / norm.scales[:, np.newaxis], 0.0, 1.0)
    return FeatureFrames(values.T)


def preprocess(recording, spec, norm=None):
    """Full chain; fits the normalization on this recording unless one is given."""
    if recording.sample_rate != spec.sample_rate:
        raise ValidationError(
            'Recording sample rate %(recording)s Hz does not match the filter spec (%(spec)s Hz).',
            code='sample_rate_mismatch',
            params={'recording': recording.sample_rate, 'spec': spec.sample_rate},
        )
    if norm is not None and norm.channels != recording.channels:
        raise ValueError(f'normalization covers {norm.channels} channels, recording has {recording.channels}')
    if recording.samples.shape[1] == 0:
        raise ValidationError('Cannot preprocess an empty recording.', code='empty_input')

    maxima, kept = [], []
    for first in range(0, recording.channels, _CHANNEL_BLOCK):
        block = recording.samples[first:first + _CHANNEL_BLOCK]
        filtered = filter_apply(design_notch(spec), block, first_channel=first)
        filtered = filter_apply(design_bandpass(spec), filtered, first_channel=first)
        env = envelope(filtered, spec.ma_window)
        maxima.append(env.max(axis=1))
        kept.append(env[:, spec.decim_factor - 1::spec.decim_factor])

    if norm is None:
        norm = _normalization_from_maxima(np.concatenate(maxima))
    frames = normalize_decimate(np.concatenate(kept, axis=0), norm, 1)
    logger.info('Preprocessed %s: %d samples -> %d frames', recording, recording.samples.shape[1], len(frames))
    return frames, norm
