"""
Associative memory: per-label prototypes trained by bundling, queried by
cosine similarity, plus trailing-window majority voting.
"""

import logging
import numbers
from collections import Counter, deque
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

from .hdvec import Accumulator, accumulate, threshold

logger = logging.getLogger(__name__)

DEFAULT_VOTE_WINDOW = 11

# rows per block when classifying a stack of queries
_QUERY_BLOCK = 256


@dataclass(frozen=True)
class ClassificationResult:
    predicted: int
    similarities: dict
    time_index: int


class AssociativeMemory:
    """Label -> (accumulator, prototype). Labels are int-like; lowest id wins ties."""

    def __init__(self, config):
        self.config = config
        self._accumulators = {}
        self._prototypes = {}

    @property
    def labels(self):
        return sorted(self._prototypes)

    def __len__(self):
        return len(self._prototypes)

    def __contains__(self, label):
        return label in self._prototypes

    def accumulator(self, label):
        return self._accumulators[label]

    def prototype(self, label):
        return self._prototypes[label]

    def train(self, vectors, label):
        vectors = list(vectors)
        if not vectors:
            raise ValueError(f'cannot train label {label!r} on an empty vector sequence')
        acc = self._accumulators.get(label) or Accumulator.zeros(self.config.dimension)
        for encoded in vectors:
            accumulate(acc, encoded.vector, 1.0)
        self._accumulators[label] = acc
        self._prototypes[label] = threshold(acc)
        logger.debug('Trained label %s with %d vectors (%d total)', label, len(vectors), acc.count)
        return self

    def restore(self, label, sums, count):
        """Rebuild a label from persisted accumulator sums."""
        acc = Accumulator(np.array(sums, dtype=np.float64), int(count))
        self._accumulators[label] = acc
        self._prototypes[label] = threshold(acc)

    def _prototype_matrix(self):
        if not self._prototypes:
            raise ValueError('associative memory is empty')
        labels = self.labels
        return labels, np.stack([self._prototypes[label].elements for label in labels]).astype(np.float64)

    def classify(self, g):
        return self.classify_many([g])[0]

    def classify_many(self, queries):
        """Classify a sequence of spatiotemporal vectors in blocks."""
        labels, prototypes = self._prototype_matrix()
        dimension = prototypes.shape[1]
        results = []
        for start in range(0, len(queries), _QUERY_BLOCK):
            block = queries[start:start + _QUERY_BLOCK]
            stacked = np.stack([g.vector.elements for g in block]).astype(np.float64)
            # integer-valued dot products are exact in float64
            similarities = (stacked @ prototypes.T) / dimension
            for g, row in zip(block, similarities):
                # argmax returns the first maximum, i.e. the lowest label id
                best = int(np.argmax(row))
                results.append(ClassificationResult(
                    predicted=labels[best],
                    similarities={label: float(value) for label, value in zip(labels, row)},
                    time_index=g.time_index,
                ))
        return results


def check_vote_window(window):
    if isinstance(window, bool) or not isinstance(window, numbers.Integral) or window < 1 or window % 2 == 0:
        raise ValidationError('Vote window must be an odd integer >= 1, got %(window)r.', code='invalid_config',
                              params={'window': window})
    return int(window)


def vote(results, window=DEFAULT_VOTE_WINDOW):
    """Most frequent prediction among the trailing `window` results."""
    window = check_vote_window(window)
    recent = [result.predicted for result in deque(results, maxlen=window)]
    if not recent:
        raise ValueError('cannot vote over an empty result sequence')
    counts = Counter(recent)
    best = max(counts.values())
    tied = {label for label, count in counts.items() if count == best}
    for label in reversed(recent):
        if label in tied:
            return label


def vote_stream(results, window=DEFAULT_VOTE_WINDOW):
    """Voted label after each result, warming up on the available prefix."""
    window = check_vote_window(window)
    recent = deque(maxlen=window)
    voted = []
    for result in results:
        recent.append(result)
        voted.append(vote(recent, window))
    return voted
