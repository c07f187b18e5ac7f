"""
Spatial and temporal HD encoders.

A feature frame becomes a spatial vector S = threshold(sum_i E_i * v_i) and
a window of n spatial vectors becomes G = prod_t permute(S_t, t - 1), oldest
frame first.
"""

import logging
from dataclasses import asdict, dataclass

from django.core.exceptions import ValidationError

from .hdvec import DEFAULT_DIMENSION, Accumulator, HDVector, ItemMemory, bind, permute, threshold

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EncoderConfig:
    dimension: int = DEFAULT_DIMENSION
    channels: int = 64
    ngram_n: int = 5
    im_seed: int = 0

    def __post_init__(self):
        errors = []
        if self.dimension < 2 or self.dimension % 2:
            errors.append(f'encoder dimension must be even and >= 2, got {self.dimension}')
        if self.channels < 1:
            errors.append(f'encoder channels must be >= 1, got {self.channels}')
        if self.ngram_n < 1:
            errors.append(f'encoder ngram_n must be >= 1, got {self.ngram_n}')
        if errors:
            raise ValidationError([ValidationError(error, code='invalid_config') for error in errors])

    def item_memory(self):
        return ItemMemory(seed=self.im_seed, channels=self.channels, dimension=self.dimension)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SpatialVector:
    vector: HDVector
    time_index: int


@dataclass(frozen=True)
class SpatiotemporalVector:
    vector: HDVector
    # time index of the newest frame in the window
    time_index: int


def encode_spatial(frame, im):
    values = frame.values
    if len(values) != len(im):
        raise ValueError(f'frame has {len(values)} channels, item memory has {len(im)}')
    acc = Accumulator(values @ im.matrix, count=len(values))
    return SpatialVector(threshold(acc), frame.time_index)


def encode_temporal(window, config):
    if len(window) != config.ngram_n:
        raise ValueError(f'temporal window needs {config.ngram_n} spatial vectors, got {len(window)}')
    product = window[0].vector
    for t, spatial in enumerate(window[1:], start=1):
        product = bind(product, permute(spatial.vector, t))
    return SpatiotemporalVector(product, window[-1].time_index)


def stream_encode(frames, im, config):
    """One spatiotemporal vector per frame index >= n - 1, stride one frame."""
    n = config.ngram_n
    if len(frames) < n:
        logger.warning('Only %d frames for a %d-frame window: nothing to encode', len(frames), n)
        return []
    spatial = [encode_spatial(frame, im) for frame in frames]
    encoded = [encode_temporal(spatial[end - n:end], config) for end in range(n, len(spatial) + 1)]
    logger.debug('Encoded %d frames into %d windows', len(frames), len(encoded))
    return encoded
