"""
Bipolar hyperdimensional vectors and their algebra.

Vectors hold +1/-1 elements (stored as int8). Binding is element-wise
multiplication, bundling is element-wise addition into an Accumulator,
`threshold` maps sums back to bipolar form, and `permute` is a cyclic
rotation. All functions are parametric in the dimension D.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_DIMENSION = 10_000


def _frozen(elements):
    array = np.array(elements, dtype=np.int8)
    array.flags.writeable = False
    return array


class HDVector:
    """Immutable bipolar vector of dimension D."""

    __slots__ = ('elements',)

    def __init__(self, elements):
        array = _frozen(elements)
        if array.ndim != 1 or array.size == 0:
            raise ValueError('HD vectors are non-empty one-dimensional sequences')
        if not np.all((array == 1) | (array == -1)):
            raise ValueError('HD vector elements must be exactly +1 or -1')
        self.elements = array

    @classmethod
    def _trusted(cls, array):
        # skips the bipolar check for arrays produced by the algebra itself
        vector = cls.__new__(cls)
        vector.elements = _frozen(array)
        return vector

    @classmethod
    def ones(cls, dimension=DEFAULT_DIMENSION):
        return cls._trusted(np.ones(dimension, dtype=np.int8))

    @property
    def dimension(self):
        return self.elements.size

    def __len__(self):
        return self.elements.size

    def __neg__(self):
        return HDVector._trusted(-self.elements)

    def __eq__(self, other):
        if not isinstance(other, HDVector):
            return NotImplemented
        return np.array_equal(self.elements, other.elements)

    def __hash__(self):
        return hash(self.elements.tobytes())

    def __repr__(self):
        plus = int(np.count_nonzero(self.elements == 1))
        return f'HDVector(D={self.dimension}, +1s={plus})'


@dataclass(eq=False)
class Accumulator:
    """Real-valued pre-threshold sums plus the number of vectors added."""

    sums: np.ndarray
    count: int = 0

    @classmethod
    def zeros(cls, dimension=DEFAULT_DIMENSION):
        return cls(np.zeros(dimension, dtype=np.float64), 0)

    @property
    def dimension(self):
        return self.sums.size

    def copy(self):
        return Accumulator(self.sums.copy(), self.count)


def check_dimension(dimension):
    if dimension < 2 or dimension % 2:
        raise ValueError(f'HD dimension must be even and >= 2, got {dimension}')


def _check_same(a, b):
    if a.dimension != b.dimension:
        raise ValueError(f'dimension mismatch: {a.dimension} != {b.dimension}')


def random_hd(rng, dimension=DEFAULT_DIMENSION):
    """Exactly D/2 +1s and D/2 -1s, placed by a seeded shuffle."""
    check_dimension(dimension)
    half = dimension // 2
    elements = np.concatenate([np.ones(half, dtype=np.int8), -np.ones(half, dtype=np.int8)])
    return HDVector._trusted(rng.permutation(elements))


def bind(a, b):
    _check_same(a, b)
    return HDVector._trusted(a.elements * b.elements)


def accumulate(acc, v, weight=1.0):
    """Add `weight * v` into `acc` in place and return it."""
    _check_same(acc, v)
    if not math.isfinite(weight):
        raise ValueError(f'accumulation weight must be finite, got {weight}')
    acc.sums += weight * v.elements
    acc.count += 1
    return acc


def threshold(acc):
    # sums equal to 0 go to +1
    return HDVector._trusted(np.where(acc.sums >= 0, 1, -1))


def permute(v, k):
    """Rotate so that element i lands at index (i + k) mod D."""
    if k < 0:
        raise ValueError(f'rotation must be nonnegative, got {k}')
    return HDVector._trusted(np.roll(v.elements, k % v.dimension))


def cosine(a, b):
    _check_same(a, b)
    if isinstance(a, HDVector):
        # exact integer dot product; both norms are sqrt(D)
        dot = int(np.dot(a.elements.astype(np.int64), b.elements.astype(np.int64)))
        return dot / a.dimension
    norm = float(np.linalg.norm(a.sums))
    if norm == 0.0:
        raise ValueError('cosine of a zero-norm accumulator is undefined')
    return float(np.dot(a.sums, b.elements)) / (norm * math.sqrt(b.dimension))


def hamming(a, b):
    _check_same(a, b)
    return int(np.count_nonzero(a.elements != b.elements))


@dataclass(frozen=True)
class ItemMemory:
    """One random HD vector per channel, regenerated bit-exactly from the seed."""

    seed: int
    channels: int = 64
    dimension: int = DEFAULT_DIMENSION
    entries: tuple = field(init=False, repr=False, compare=False)
    matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        check_dimension(self.dimension)
        if self.channels < 1:
            raise ValueError(f'item memory needs at least one channel, got {self.channels}')
        rng = np.random.default_rng(self.seed)
        entries = tuple(random_hd(rng, self.dimension) for _ in range(self.channels))
        matrix = np.stack([entry.elements for entry in entries]).astype(np.float64)
        matrix.flags.writeable = False
        object.__setattr__(self, 'entries', entries)
        object.__setattr__(self, 'matrix', matrix)
        logger.debug('Item memory: %d channels, D=%d, seed %d', self.channels, self.dimension, self.seed)

    def __getitem__(self, channel):
        return self.entries[channel]

    def __len__(self):
        return self.channels

    def manifest(self):
        return {'seed': self.seed, 'channels': self.channels, 'dimension': self.dimension}

    @classmethod
    def from_manifest(cls, manifest):
        return cls(seed=int(manifest['seed']), channels=int(manifest['channels']),
                   dimension=int(manifest['dimension']))
