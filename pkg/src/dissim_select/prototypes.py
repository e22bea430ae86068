"""Condensed Nearest Neighbours (Hart) prototype selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dichotomy import DissimilaritySample, stack_samples
from .errors import DataError

__all__ = ["CondensedSet", "condense", "condense_indices", "nearest_labels"]


@dataclass(frozen=True, eq=False)
class CondensedSet:
    samples: tuple[DissimilaritySample, ...]
    kept_indices: tuple[int, ...]

    def __len__(self):
        return len(self.samples)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """``(X, y)`` with ``y`` in ``{-1, +1}``; computed once and cached."""
        cached = self.__dict__.get("_arrays")
        if cached is None:
            cached = stack_samples(self.samples)
            for a in cached:
                a.setflags(write=False)
            object.__setattr__(self, "_arrays", cached)
        return cached


def condense_indices(X: np.ndarray, y: np.ndarray, seed: int) -> np.ndarray:
    """Indices (ascending) of the CNN store for ``(X, y)``.

    The scan order is a seeded permutation. The store starts with the first
    sample of each label in that order; passes over the remaining samples add
    any sample the current store 1-NN-misclassifies, until a pass adds none.
    Distance ties go to the store member with the lowest index.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = X.shape[0]
    if n == 0:
        raise DataError("cannot condense an empty sample set")
    labels = np.unique(y)
    if labels.size < 2:
        raise DataError("condensing needs samples of at least two labels")

    order = np.random.default_rng(int(seed)).permutation(n)
    in_store = np.zeros(n, dtype=bool)
    # nearest store member seen so far for every sample
    nn_dist = np.full(n, np.inf)
    nn_idx = np.full(n, n, dtype=np.int64)

    def add(j):
        in_store[j] = True
        diff = X - X[j]
        d = np.einsum("ij,ij->i", diff, diff)
        better = (d < nn_dist) | ((d == nn_dist) & (j < nn_idx))
        nn_dist[better] = d[better]
        nn_idx[better] = j

    for label in labels:
        add(order[np.argmax(y[order] == label)])

    changed = True
    while changed:
        changed = False
        for i in order:
            if not in_store[i] and y[nn_idx[i]] != y[i]:
                add(i)
                changed = True
    return np.flatnonzero(in_store)


def nearest_labels(store_X: np.ndarray, store_y: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Brute-force 1-NN labels of ``X`` against a store; ties to the lowest store row."""
    diff = X[:, None, :] - store_X[None, :, :]
    d = np.einsum("ijk,ijk->ij", diff, diff)
    return np.asarray(store_y)[np.argmin(d, axis=1)]


def condense(samples: Sequence[DissimilaritySample], seed: int) -> CondensedSet:
    """Condense a labelled dissimilarity sample list with CNN over all dimensions."""
    samples = list(samples)
    if not samples:
        raise DataError("cannot condense an empty sample set")
    X, y = stack_samples(samples)
    kept = condense_indices(X, y, seed)
    return CondensedSet(tuple(samples[i] for i in kept), tuple(int(i) for i in kept))
