"""
Model and feature files written by the management commands.

Both are `.npz` containers holding a JSON manifest (magic, version, the
configs needed to reproduce the item memory and filter chain) next to the
numeric arrays. Accumulator sums are stored as float64, so a model
round-trips bit-exactly.
"""

import json
import logging
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError

from emg.dsp import ChannelNormalization, FeatureFrames, FilterSpec
from emg.labels import GestureLabel
from hdc.classifier import AssociativeMemory
from hdc.encoder import EncoderConfig

logger = logging.getLogger(__name__)

MODEL_MAGIC = 'HDEMG-AM'
FRAMES_MAGIC = 'HDEMG-FRAMES'
VERSION = 1


def _write(path, **arrays):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'wb') as handle:
            np.savez(handle, **arrays)
    except OSError as exc:
        raise ValidationError('Cannot write %(path)s: %(error)s', code='unwritable_path',
                              params={'path': path, 'error': exc}) from exc
    return path


def _read(path, magic):
    try:
        with np.load(Path(path), allow_pickle=False) as archive:
            contents = {key: archive[key] for key in archive.files}
        manifest = json.loads(contents.pop('manifest').item())
    except (OSError, ValueError, KeyError) as exc:
        raise ValidationError('Cannot read %(path)s: %(error)s', code='bad_model',
                              params={'path': path, 'error': exc}) from exc
    if manifest.get('magic') != magic:
        raise ValidationError('%(path)s is not a %(magic)s file.', code='bad_model',
                              params={'path': path, 'magic': magic})
    if manifest.get('version') != VERSION:
        raise ValidationError('Unsupported file version %(version)s.', code='unsupported_version',
                              params={'version': manifest.get('version')})
    return manifest, contents


def save_model(path, am, filter_spec, norm):
    labels = am.labels
    manifest = {
        'magic': MODEL_MAGIC,
        'version': VERSION,
        'encoder': am.config.to_dict(),
        'filter': filter_spec.to_dict(),
        'normalization': norm.method,
        'labels': [int(label) for label in labels],
        'counts': [am.accumulator(label).count for label in labels],
    }
    sums = np.stack([am.accumulator(label).sums for label in labels])
    path = _write(path, manifest=np.array(json.dumps(manifest, sort_keys=True)), sums=sums, scales=norm.scales)
    logger.info('Saved associative memory with %d labels to %s', len(labels), path)
    return path


def load_model(path):
    """(AssociativeMemory, FilterSpec, ChannelNormalization) from a model file."""
    manifest, contents = _read(path, MODEL_MAGIC)
    am = AssociativeMemory(EncoderConfig(**manifest['encoder']))
    for label, count, sums in zip(manifest['labels'], manifest['counts'], contents['sums']):
        am.restore(GestureLabel(label), sums, count)
    norm = ChannelNormalization(contents['scales'], manifest['normalization'])
    return am, FilterSpec(**manifest['filter']), norm


def save_frames(path, frames, norm, filter_spec):
    manifest = {'magic': FRAMES_MAGIC, 'version': VERSION, 'filter': filter_spec.to_dict(),
                'normalization': norm.method}
    return _write(path, manifest=np.array(json.dumps(manifest, sort_keys=True)), values=frames.values,
                  time_indices=frames.time_indices, scales=norm.scales)


def load_frames(path):
    manifest, contents = _read(path, FRAMES_MAGIC)
    return (FeatureFrames(contents['values'], contents['time_indices']),
            ChannelNormalization(contents['scales'], manifest['normalization']))
