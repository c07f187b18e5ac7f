"""
Recordings, labeled segments, the on-disk format, synthetic sessions and
activity maps.

On disk a recording is a JSON manifest plus a raw payload of little-endian
float32 samples, channels-major (all samples of channel 0, then channel 1...).
The manifest carries the shape, sample rate, label table, segments and the
payload's SHA-256.

Electrodes sit on a 4 x 16 grid: channel c is at row c // 16, column c % 16,
and each row of 16 runs around the forearm.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError
from scipy import signal

from .labels import GestureLabel
from .validators import SessionPlanValidator

logger = logging.getLogger(__name__)

MAGIC = 'HDEMG-REC'
FORMAT_VERSION = 1
PAYLOAD_DTYPE = '<f4'
PAYLOAD_ORDER = 'channels_major'

RING_SIZE = 16
CARRIER_BAND = (20.0, 150.0)


@dataclass(frozen=True, eq=False)
class Recording:
    samples: np.ndarray
    sample_rate: float = 1000.0
    subject_id: str = ''
    session_id: str = ''
    scale: float = 1.0

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float32, order='C')
        if samples.ndim != 2:
            raise ValidationError('Recording samples must be a channels x time matrix.', code='shape_mismatch')
        if not np.all(np.isfinite(samples)):
            raise ValidationError('Recording contains non-finite samples.', code='non_finite_sample')
        if self.sample_rate <= 0:
            raise ValidationError('Recording sample rate must be positive.', code='invalid_config')
        samples.flags.writeable = False
        object.__setattr__(self, 'samples', samples)

    @property
    def channels(self):
        return self.samples.shape[0]

    def __len__(self):
        return self.samples.shape[1]

    @property
    def duration(self):
        return len(self) / self.sample_rate

    def __eq__(self, other):
        if not isinstance(other, Recording):
            return NotImplemented
        return (self.sample_rate == other.sample_rate and self.subject_id == other.subject_id
                and self.session_id == other.session_id and self.scale == other.scale
                and np.array_equal(self.samples, other.samples))

    def __str__(self):
        name = '/'.join(part for part in (self.subject_id, self.session_id) if part) or 'recording'
        return f'{name} ({self.channels} ch, {self.duration:g} s)'


@dataclass(frozen=True)
class LabeledSegment:
    label: GestureLabel
    start: int
    end: int
    trial: int = 0

    def __len__(self):
        return self.end - self.start


def validate_segments(segments, length):
    for segment in segments:
        if not 0 <= segment.start < segment.end <= length:
            raise ValidationError(
                'Segment %(start)d-%(end)d lies outside the recording (%(length)d samples).',
                code='segment_out_of_range',
                params={'start': segment.start, 'end': segment.end, 'length': length},
            )
    ordered = sorted(segments, key=lambda segment: segment.start)
    for previous, current in zip(ordered, ordered[1:]):
        if current.start < previous.end:
            raise ValidationError(
                'Segments %(a)s and %(b)s overlap.',
                code='overlapping_segments',
                params={'a': f'{previous.start}-{previous.end}', 'b': f'{current.start}-{current.end}'},
            )


# ---------------------------
# Native file format
# ---------------------------

def _payload_path(manifest_path):
    return manifest_path.with_suffix('.f32')


def save(path, recording, segments):
    """Write `<path>` (manifest) and its `.f32` payload next to it."""
    path = Path(path)
    validate_segments(segments, len(recording))
    payload = recording.samples.astype(PAYLOAD_DTYPE).tobytes(order='C')
    manifest = {
        'magic': MAGIC,
        'version': FORMAT_VERSION,
        'channels': recording.channels,
        'samples': len(recording),
        'sample_rate': recording.sample_rate,
        'scale': recording.scale,
        'dtype': PAYLOAD_DTYPE,
        'order': PAYLOAD_ORDER,
        'subject_id': recording.subject_id,
        'session_id': recording.session_id,
        'labels': {str(label.value): label.label for label in GestureLabel},
        'segments': [
            {'label': int(segment.label), 'start': segment.start, 'end': segment.end, 'trial': segment.trial}
            for segment in segments
        ],
        'payload': _payload_path(path).name,
        'sha256': hashlib.sha256(payload).hexdigest(),
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        _payload_path(path).write_bytes(payload)
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + '\n')
    except OSError as exc:
        raise ValidationError('Cannot write %(path)s: %(error)s', code='unwritable_path',
                              params={'path': path, 'error': exc}) from exc
    logger.info('Saved %s to %s', recording, path)
    return path


def _malformed(path, error):
    return ValidationError('Malformed manifest %(path)s: %(error)s', code='shape_mismatch',
                           params={'path': path, 'error': error})


def _parse_header(path, manifest):
    """(channels, samples, payload path, sample rate, scale) from a manifest."""
    try:
        header = (int(manifest['channels']), int(manifest['samples']), path.parent / manifest['payload'],
                  float(manifest['sample_rate']), float(manifest.get('scale', 1.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise _malformed(path, exc) from exc
    if header[0] < 1 or header[1] < 0:
        raise _malformed(path, f'{header[0]} channels x {header[1]} samples')
    if manifest.get('dtype') != PAYLOAD_DTYPE or manifest.get('order') != PAYLOAD_ORDER:
        raise ValidationError('Payload must be %(dtype)s in %(order)s order, manifest declares %(got_dtype)s / '
                              '%(got_order)s.', code='shape_mismatch',
                              params={'dtype': PAYLOAD_DTYPE, 'order': PAYLOAD_ORDER,
                                      'got_dtype': manifest.get('dtype'), 'got_order': manifest.get('order')})
    return header


def _parse_segment(path, entry):
    try:
        return int(entry['label']), int(entry['start']), int(entry['end']), int(entry.get('trial', 0))
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise _malformed(path, f'segment {entry!r}: {exc!r}') from exc


def _parse_labels(table):
    if not isinstance(table, dict):
        raise ValidationError('Label table must map ids to gesture names.', code='shape_mismatch')
    labels = {}
    for key, name in table.items():
        try:
            labels[int(key)] = GestureLabel.from_name(name)
        except (KeyError, ValueError):
            raise ValidationError('Unknown gesture label %(name)r in label table.', code='unknown_label',
                                  params={'name': name})
    return labels


def load(path):
    path = Path(path)
    try:
        manifest = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise ValidationError('Cannot read manifest %(path)s: %(error)s', code='bad_magic',
                              params={'path': path, 'error': exc}) from exc
    if not isinstance(manifest, dict) or manifest.get('magic') != MAGIC:
        raise ValidationError('%(path)s is not a recording manifest.', code='bad_magic', params={'path': path})
    if manifest.get('version') != FORMAT_VERSION:
        raise ValidationError('Unsupported recording format version %(version)s.', code='unsupported_version',
                              params={'version': manifest.get('version')})

    channels, samples, payload_path, sample_rate, scale = _parse_header(path, manifest)
    try:
        payload = payload_path.read_bytes()
    except OSError as exc:
        raise ValidationError('Cannot read payload %(path)s.', code='shape_mismatch',
                              params={'path': payload_path}) from exc
    expected = channels * samples * np.dtype(PAYLOAD_DTYPE).itemsize
    if len(payload) != expected:
        raise ValidationError(
            'Payload holds %(actual)d bytes; manifest declares %(channels)d x %(samples)d float32 (%(expected)d).',
            code='shape_mismatch',
            params={'actual': len(payload), 'channels': channels, 'samples': samples, 'expected': expected},
        )
    if hashlib.sha256(payload).hexdigest() != manifest.get('sha256'):
        raise ValidationError('Payload checksum does not match the manifest.', code='checksum_mismatch')

    labels = _parse_labels(manifest.get('labels', {}))
    segments = []
    entries = manifest.get('segments') or []
    if not isinstance(entries, list):
        raise _malformed(path, 'segments must be a list')
    for entry in entries:
        label, start, end, trial = _parse_segment(path, entry)
        if label not in labels:
            raise ValidationError('Segment label id %(label)s is not in the label table.', code='unknown_label',
                                  params={'label': label})
        segments.append(LabeledSegment(labels[label], start, end, trial))

    data = np.frombuffer(payload, dtype=PAYLOAD_DTYPE).reshape(channels, samples)
    recording = Recording(data, sample_rate=sample_rate, subject_id=manifest.get('subject_id', ''),
                          session_id=manifest.get('session_id', ''), scale=scale)
    validate_segments(segments, samples)
    return recording, segments


# ---------------------------
# Session protocol and synthesis
# ---------------------------

@dataclass(frozen=True)
class SessionPlan:
    trials: int = 10
    gestures: tuple = field(default_factory=lambda: tuple(GestureLabel.hard_gestures()))
    hold_duration: float = 5.0
    labeled_duration: float = 3.0
    rest_bracketing: bool = True

    def __post_init__(self):
        SessionPlanValidator().validate(self)

    def sequence(self, rng):
        """(trial, label) per hold; each trial is a seeded ordering of the gestures."""
        holds = []
        for trial in range(self.trials):
            order = [self.gestures[i] for i in rng.permutation(len(self.gestures))]
            if self.rest_bracketing:
                order = [GestureLabel.REST, *order, GestureLabel.REST]
            holds.extend((trial, label) for label in order)
        return holds


def grid_shape(channels):
    if channels % RING_SIZE:
        raise ValueError(f'{channels} channels do not fill rows of {RING_SIZE} electrodes')
    return channels // RING_SIZE, RING_SIZE


def default_gesture_maps(channels=64, seed=0):
    """Five distinguishable intensity profiles: one bump per hard gesture around the ring, weak rest."""
    rows, columns = grid_shape(channels)
    rng = np.random.default_rng(seed)
    offset = int(rng.integers(-1, 2))
    # (center column, width in columns, row weights from wrist to elbow)
    shapes = {
        GestureLabel.FIST: (2, 2.0, (1.0, 1.0, 0.8, 0.6)),
        GestureLabel.RAISE: (6, 1.5, (1.0, 0.8, 0.5, 0.3)),
        GestureLabel.LOWER: (10, 1.5, (0.4, 0.7, 1.0, 1.0)),
        GestureLabel.OPEN: (14, 1.5, (0.6, 1.0, 1.0, 0.6)),
    }
    column = np.arange(columns)
    maps = {}
    for label, (center, width, row_weights) in shapes.items():
        distance = np.abs(column - (center + offset) % columns)
        distance = np.minimum(distance, columns - distance)
        ring = np.exp(-distance ** 2 / (2 * width ** 2))
        weights = np.resize(np.array(row_weights), rows)
        profile = np.outer(weights, ring).ravel() * rng.lognormal(0.0, 0.1, channels)
        maps[label] = profile / profile.max()
    maps[GestureLabel.REST] = np.full(channels, 0.05)
    return maps


def _carrier(rng, channels, length, sample_rate):
    # white noise band-limited to the carrier band, unit RMS per channel
    low, high = CARRIER_BAND
    sos = signal.butter(4, [low, min(high, 0.45 * sample_rate)], btype='bandpass', output='sos', fs=sample_rate)
    carrier = np.empty((channels, length))
    for first in range(0, channels, RING_SIZE):
        block = signal.sosfilt(sos, rng.standard_normal((min(RING_SIZE, channels - first), length)), axis=-1)
        rms = np.sqrt(np.mean(block ** 2, axis=-1, keepdims=True))
        carrier[first:first + RING_SIZE] = block / np.where(rms > 0, rms, 1.0)
    return carrier


def synthesize(plan, gesture_maps, noise_level, seed, interference=0.0, hold_variability=0.0,
               sample_rate=1000.0, interference_freq=60.0, subject_id='synthetic', session_id='1'):
    """Amplitude-modulated band-limited noise following `plan`; deterministic in `seed`."""
    maps = {GestureLabel(label): np.asarray(profile, dtype=np.float64) for label, profile in gesture_maps.items()}
    needed = set(plan.gestures) | ({GestureLabel.REST} if plan.rest_bracketing else set())
    missing = needed - set(maps)
    if missing:
        raise ValidationError('No intensity profile for %(labels)s.', code='missing_gestures',
                              params={'labels': ', '.join(sorted(GestureLabel(m).label for m in missing))})
    if any(np.any(profile < 0) for profile in maps.values()):
        raise ValidationError('Intensity profiles must be nonnegative.', code='invalid_config')
    channels = len(next(iter(maps.values())))

    rng = np.random.default_rng(seed)
    hold = int(round(plan.hold_duration * sample_rate))
    labeled = int(round(plan.labeled_duration * sample_rate))
    offset = (hold - labeled) // 2
    holds = plan.sequence(rng)

    samples = _carrier(rng, channels, hold * len(holds), sample_rate)
    segments = []
    phases = rng.uniform(0.0, 2 * np.pi, (channels, 1))
    for index, (trial, label) in enumerate(holds):
        span = slice(index * hold, (index + 1) * hold)
        profile = maps[label]
        if hold_variability:
            profile = profile * rng.lognormal(0.0, hold_variability, channels)
        samples[:, span] *= profile[:, np.newaxis]
        if noise_level:
            samples[:, span] += noise_level * rng.standard_normal((channels, hold))
        if interference:
            t = np.arange(span.start, span.stop) / sample_rate
            samples[:, span] += interference * np.sin(2 * np.pi * interference_freq * t + phases)
        segments.append(LabeledSegment(label, span.start + offset, span.start + offset + labeled, trial))

    recording = Recording(samples, sample_rate=sample_rate, subject_id=subject_id, session_id=session_id)
    logger.info('Synthesized %s with %d labeled segments (seed %s)', recording, len(segments), seed)
    return recording, segments


def perturb(recording, gain_drift, extra_noise=0.0, channel_shift=0, seed=0):
    """Per-channel gains, added noise, then rotation of every 16-electrode ring by `channel_shift`."""
    channels = recording.channels
    if abs(channel_shift) >= channels:
        raise ValidationError('Channel shift %(shift)d must be smaller than the channel count.',
                              code='invalid_config', params={'shift': channel_shift})
    gains = np.broadcast_to(np.asarray(gain_drift, dtype=np.float64), (channels,))
    samples = recording.samples.astype(np.float64) * gains[:, np.newaxis]
    if extra_noise:
        rng = np.random.default_rng(seed)
        samples += extra_noise * rng.standard_normal(samples.shape)
    if channel_shift:
        rows, columns = grid_shape(channels)
        samples = np.roll(samples.reshape(rows, columns, -1), channel_shift, axis=1).reshape(channels, -1)
    return replace(recording, samples=samples)


def random_gains(rng, channels, drift):
    return rng.uniform(1.0 - drift, 1.0 + drift, channels)


# ---------------------------
# Frames per segment and activity maps
# ---------------------------

@dataclass(frozen=True)
class FrameSegment:
    label: GestureLabel
    start_frame: int
    end_frame: int
    trial: int = 0

    def __len__(self):
        return max(0, self.end_frame - self.start_frame)


def frame_segments(segments, decim_factor, n_frames):
    """Frames whose sample (j * decim + decim - 1) falls inside each segment."""
    def first_frame(sample):
        return -(-(sample - decim_factor + 1) // decim_factor)

    return [
        FrameSegment(segment.label, max(0, first_frame(segment.start)), min(n_frames, first_frame(segment.end)),
                     segment.trial)
        for segment in segments
    ]


@dataclass(frozen=True, eq=False)
class ActivityMap:
    label: GestureLabel
    grid: np.ndarray


def activity_maps(frames, segments):
    """Per gesture, mean frame values on the electrode grid, rescaled so the brightest cell is 1."""
    rows, columns = grid_shape(frames.channels)
    totals, counts = {}, {}
    for segment in segments:
        if len(segment) == 0:
            raise ValidationError('Segment %(start)d-%(end)d of %(label)s contains no frames.',
                                  code='empty_segment',
                                  params={'start': segment.start_frame, 'end': segment.end_frame,
                                          'label': GestureLabel(segment.label).label})
        values = frames.values[segment.start_frame:segment.end_frame]
        totals[segment.label] = totals.get(segment.label, 0.0) + values.sum(axis=0)
        counts[segment.label] = counts.get(segment.label, 0) + len(values)

    maps = {}
    for label in sorted(totals):
        mean = totals[label] / counts[label]
        peak = mean.max()
        grid = (mean / peak if peak > 0 else np.zeros_like(mean)).reshape(rows, columns)
        maps[GestureLabel(label)] = ActivityMap(GestureLabel(label), grid)
    return maps
