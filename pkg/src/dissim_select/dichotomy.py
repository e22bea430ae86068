"""Dichotomy transformation: (questioned, reference) pairs to dissimilarity vectors."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .data import Dataset, Label, SignatureRecord, select_samples
from .errors import DataError, DimensionError

__all__ = [
    "Polarity",
    "PairKind",
    "DissimilaritySample",
    "ReferenceSet",
    "WriterTrials",
    "dissimilarity",
    "build_training_set",
    "build_trials",
    "fuse_scores",
    "stack_samples",
]


class Polarity(enum.IntEnum):
    NEGATIVE = -1
    POSITIVE = 1


class PairKind(str, enum.Enum):
    GENUINE_VS_REF = "genuine"
    SKILLED_VS_REF = "skilled"
    RANDOM_VS_REF = "random"


@dataclass(frozen=True, eq=False)
class DissimilaritySample:
    values: np.ndarray
    label: Polarity
    writer_id: int
    pair_kind: PairKind
    reference_index: int = 0

    def __post_init__(self):
        if (self.label == Polarity.POSITIVE) != (self.pair_kind == PairKind.GENUINE_VS_REF):
            raise ValueError(f"label {self.label.name} inconsistent with pair kind {self.pair_kind}")
        if np.any(self.values < 0):
            raise ValueError("dissimilarity values must be non-negative")


@dataclass(frozen=True)
class ReferenceSet:
    writer_id: int
    references: tuple[SignatureRecord, ...]

    def __post_init__(self):
        refs = tuple(self.references)
        object.__setattr__(self, "references", refs)
        if not refs:
            raise DataError(f"writer {self.writer_id}: reference set is empty")
        for r in refs:
            if r.writer_id != self.writer_id or r.label != Label.GENUINE:
                raise DataError(
                    f"reference (writer {r.writer_id}, {r.label.name}) is not a genuine "
                    f"signature of writer {self.writer_id}"
                )

    def __len__(self):
        return len(self.references)

    def matrix(self) -> np.ndarray:
        return np.vstack([r.features for r in self.references])


def dissimilarity(questioned, reference) -> np.ndarray:
    """Elementwise absolute difference ``|questioned - reference|``."""
    q = np.asarray(questioned, dtype=np.float64)
    r = np.asarray(reference, dtype=np.float64)
    if q.shape[-1] != r.shape[-1]:
        raise DimensionError(f"length mismatch: {q.shape[-1]} vs {r.shape[-1]}")
    return np.abs(q - r)


def fuse_scores(partial_scores: Iterable[float]) -> float:
    """Max fusion of per-reference scores (higher means more likely genuine)."""
    scores = list(partial_scores)
    if not scores:
        raise ValueError("cannot fuse an empty list of partial scores")
    return max(scores)


def _references_and_questioned(dataset, writer, n_references, n_genuine, seed):
    drawn = select_samples(dataset, writer, Label.GENUINE, n_references + n_genuine, seed)
    return ReferenceSet(writer, tuple(drawn[:n_references])), drawn[n_references:]


def build_training_set(
    dataset: Dataset,
    writers: Iterable[int],
    n_genuine: int,
    n_random_forgery: int,
    seed: int,
    n_references: int = 12,
) -> list[DissimilaritySample]:
    """Positive and random-forgery negative dissimilarity samples for training.

    For each writer, ``n_references`` genuines serve as references and
    ``n_genuine`` further genuines are questioned against every reference
    (positives). Negatives question ``n_random_forgery`` genuines of other
    writers in ``writers``, forging writer drawn uniformly, against the same
    references. Output order is writers ascending, positives first.
    """
    writers = sorted(set(int(w) for w in writers))
    if n_random_forgery > 0 and len(writers) < 2:
        raise DataError("random forgeries need at least two training writers")
    out: list[DissimilaritySample] = []
    for writer in writers:
        refs, questioned = _references_and_questioned(
            dataset, writer, n_references, n_genuine, seed
        )
        ref_matrix = refs.matrix()
        for q in questioned:
            for j, u in enumerate(dissimilarity(q.features, ref_matrix)):
                out.append(
                    DissimilaritySample(u, Polarity.POSITIVE, writer, PairKind.GENUINE_VS_REF, j)
                )
        others = [w for w in writers if w != writer]
        rng = np.random.default_rng([int(seed), writer, 2])
        for _ in range(n_random_forgery):
            forger = others[rng.integers(len(others))]
            pool = dataset.samples(forger, Label.GENUINE)
            if not pool:
                raise DataError(f"writer {forger} has no genuine signatures to act as forgeries")
            forgery = pool[rng.integers(len(pool))]
            for j, u in enumerate(dissimilarity(forgery.features, ref_matrix)):
                out.append(
                    DissimilaritySample(u, Polarity.NEGATIVE, writer, PairKind.RANDOM_VS_REF, j)
                )
    return out


def stack_samples(samples: Sequence[DissimilaritySample]) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix and ``+1/-1`` label vector for a list of samples."""
    if not samples:
        raise DataError("no samples")
    X = np.vstack([s.values for s in samples])
    y = np.array([int(s.label) for s in samples], dtype=np.float64)
    return X, y


@dataclass(frozen=True, eq=False)
class WriterTrials:
    """Questioned signatures of one writer, pre-transformed against its references.

    ``genuine`` and ``skilled`` have shape ``(n_questioned, R, D)``.
    """

    writer_id: int
    references: ReferenceSet
    genuine: np.ndarray
    skilled: np.ndarray


def build_trials(
    dataset: Dataset,
    writers: Iterable[int],
    n_references: int,
    n_genuine: int,
    n_skilled: int,
    seed: int,
) -> list[WriterTrials]:
    """Verification trials (genuine vs skilled forgeries) for a set of writers."""
    trials = []
    for writer in sorted(set(int(w) for w in writers)):
        refs, questioned = _references_and_questioned(
            dataset, writer, n_references, n_genuine, seed
        )
        skilled = select_samples(dataset, writer, Label.SKILLED, n_skilled, seed)
        ref_matrix = refs.matrix()[None, :, :]
        gen = dissimilarity(np.vstack([q.features for q in questioned])[:, None, :], ref_matrix) \
            if questioned else np.empty((0, n_references, dataset.dim))
        skl = dissimilarity(np.vstack([s.features for s in skilled])[:, None, :], ref_matrix) \
            if skilled else np.empty((0, n_references, dataset.dim))
        trials.append(WriterTrials(writer, refs, gen, skl))
    return trials
