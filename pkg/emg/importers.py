"""
Import of external EMG datasets through a user-supplied format descriptor.

The descriptor is a YAML mapping:

    format: mat            # npy | csv | mat
    path: subject1.mat     # relative to the descriptor
    variable: emg          # mat only: name of the sample matrix
    layout: time_major     # or channels_major
    sample_rate: 1000
    scale: 1.0             # multiplied into the samples
    channel_map: [0, 1, ...]   # source channel per grid position (optional)
    segments: labels.csv   # rows of label,start,end[,trial]
    label_map: {1: fist, 2: raise}   # source label -> gesture name (optional)
    subject_id: s1
    session_id: '1'
"""

import csv
import logging
from pathlib import Path

import numpy as np
import yaml
from django.core.exceptions import ValidationError
from scipy import io as scipy_io

from .dataset import LabeledSegment, Recording, validate_segments
from .labels import GestureLabel

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ('format', 'path', 'layout', 'sample_rate', 'segments')
FORMATS = ('npy', 'csv', 'mat')


def read_descriptor(path):
    if path is None:
        raise ValidationError(
            'Importing an external dataset needs a format descriptor (YAML with %(fields)s); '
            'the published dataset layout is not known in advance.',
            code='format_mapping_required',
            params={'fields': ', '.join(REQUIRED_FIELDS)},
        )
    path = Path(path)
    try:
        descriptor = yaml.safe_load(path.read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ValidationError('Cannot read descriptor %(path)s: %(error)s', code='format_mapping_required',
                              params={'path': path, 'error': exc}) from exc
    missing = [name for name in REQUIRED_FIELDS if name not in descriptor]
    if missing:
        raise ValidationError('Descriptor %(path)s lacks %(fields)s.', code='format_mapping_required',
                              params={'path': path, 'fields': ', '.join(missing)})
    return descriptor


def _read_matrix(descriptor, base_dir):
    source = base_dir / descriptor['path']
    kind = descriptor['format']
    if kind == 'npy':
        return np.load(source)
    if kind == 'csv':
        return np.loadtxt(source, delimiter=',', ndmin=2)
    if kind == 'mat':
        contents = scipy_io.loadmat(source)
        variable = descriptor.get('variable')
        if variable not in contents:
            raise ValidationError('Variable %(variable)r not found in %(path)s.', code='format_mapping_required',
                                  params={'variable': variable, 'path': source})
        return np.asarray(contents[variable], dtype=np.float64)
    raise ValidationError('Unsupported source format %(format)r (expected one of %(formats)s).',
                          code='unsupported_format', params={'format': kind, 'formats': ', '.join(FORMATS)})


def _resolve_label(raw, label_map):
    name = label_map.get(raw, raw)
    try:
        return GestureLabel.from_name(name)
    except KeyError:
        raise ValidationError('Unknown gesture label %(label)r.', code='unknown_label', params={'label': raw})


def _read_segments(path, label_map):
    segments = []
    with open(path, newline='') as handle:
        for row in csv.DictReader(handle):
            segments.append(LabeledSegment(
                _resolve_label(row['label'].strip(), label_map),
                int(row['start']), int(row['end']), int(row.get('trial') or 0),
            ))
    return segments


def import_recording(descriptor_path):
    descriptor = read_descriptor(descriptor_path)
    base_dir = Path(descriptor_path).parent
    matrix = np.atleast_2d(_read_matrix(descriptor, base_dir))
    if descriptor['layout'] == 'time_major':
        matrix = matrix.T
    elif descriptor['layout'] != 'channels_major':
        raise ValidationError('Layout must be time_major or channels_major.', code='format_mapping_required')
    channel_map = descriptor.get('channel_map')
    if channel_map is not None:
        if max(channel_map) >= matrix.shape[0]:
            raise ValidationError('Channel map refers to channel %(channel)d of %(channels)d.',
                                  code='shape_mismatch',
                                  params={'channel': max(channel_map), 'channels': matrix.shape[0]})
        matrix = matrix[list(channel_map)]
    matrix = matrix * float(descriptor.get('scale', 1.0))

    recording = Recording(matrix, sample_rate=float(descriptor['sample_rate']),
                          subject_id=str(descriptor.get('subject_id', '')),
                          session_id=str(descriptor.get('session_id', '')))
    label_map = {str(key): value for key, value in (descriptor.get('label_map') or {}).items()}
    segments = _read_segments(base_dir / descriptor['segments'], label_map)
    validate_segments(segments, len(recording))
    logger.info('Imported %s with %d segments from %s', recording, len(segments), descriptor['path'])
    return recording, segments
