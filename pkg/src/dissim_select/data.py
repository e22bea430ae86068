"""Signature records, datasets, writer splits and the feature CSV format."""

from __future__ import annotations

import csv
import enum
import gzip
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError, ParseError, SchemaError

__all__ = [
    "Label",
    "SignatureRecord",
    "Dataset",
    "SplitCounts",
    "WriterSplit",
    "load_feature_file",
    "write_feature_file",
    "split_writers",
    "select_samples",
]

META_COLUMNS = ("writer_id", "label", "sample_index")


class Label(str, enum.Enum):
    """Stored authenticity label.

    Random forgeries are not a label: they are genuine signatures of another
    writer, paired as negatives when the training set is built.
    """

    GENUINE = "G"
    SKILLED = "S"


_LABEL_CODE = {Label.GENUINE: 0, Label.SKILLED: 1}


@dataclass(frozen=True, eq=False)
class SignatureRecord:
    writer_id: int
    label: Label
    sample_index: int
    features: np.ndarray

    def __post_init__(self):
        feats = np.array(self.features, dtype=np.float64)
        if feats.ndim != 1:
            raise DataError("features must be a 1-D vector")
        if not np.all(np.isfinite(feats)):
            raise DataError(
                f"non-finite feature in writer {self.writer_id} sample {self.sample_index}"
            )
        if self.writer_id < 1:
            raise DataError(f"writer_id must be >= 1, got {self.writer_id}")
        if self.sample_index < 0:
            raise DataError(f"sample_index must be >= 0, got {self.sample_index}")
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "label", Label(self.label))

    def __eq__(self, other):
        if not isinstance(other, SignatureRecord):
            return NotImplemented
        return (
            self.writer_id == other.writer_id
            and self.label == other.label
            and self.sample_index == other.sample_index
            and np.array_equal(self.features, other.features)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable collection of signature records sharing one feature dimension."""

    records: tuple[SignatureRecord, ...]
    dim: int
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        index: dict[tuple[int, Label], list[SignatureRecord]] = {}
        seen = set()
        for rec in records:
            if rec.features.shape[0] != self.dim:
                raise SchemaError(
                    f"record (writer {rec.writer_id}, sample {rec.sample_index}) has "
                    f"{rec.features.shape[0]} features, dataset dim is {self.dim}"
                )
            key = (rec.writer_id, rec.label, rec.sample_index)
            if key in seen:
                raise DataError(f"duplicate record {key}")
            seen.add(key)
            index.setdefault((rec.writer_id, rec.label), []).append(rec)
        for recs in index.values():
            recs.sort(key=lambda r: r.sample_index)
        object.__setattr__(self, "_index", index)

    @property
    def writer_ids(self) -> tuple[int, ...]:
        return tuple(sorted({w for w, _ in self._index}))

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.dim == other.dim and self.records == other.records

    __hash__ = None

    def samples(self, writer_id: int, label: Label) -> list[SignatureRecord]:
        """Records of one writer and label, ordered by sample index."""
        return list(self._index.get((writer_id, Label(label)), ()))

    def matrix(self) -> np.ndarray:
        if not self.records:
            return np.empty((0, self.dim))
        return np.vstack([r.features for r in self.records])


# ---------------------------------------------------------------------------
# CSV interchange


def _open_text(path: Path, mode: str):
    if path.name.endswith(".gz"):
        return io.TextIOWrapper(gzip.open(path, mode + "b"), encoding="utf-8", newline="")
    return open(path, mode, encoding="utf-8", newline="")


def load_feature_file(path, expected_dim: int | None = None) -> Dataset:
    """Load a feature CSV (optionally gzip-compressed) into a :class:`Dataset`.

    The header is ``writer_id,label,sample_index,f0,...,f{D-1}``. Every data
    row must have ``3 + D`` columns with finite feature values; errors report
    the 1-based line number.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"feature file not found: {path}")
    with _open_text(path, "r") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file (missing header)", line=1) from None
        dim = _check_header(header)
        if expected_dim is not None and dim != expected_dim:
            raise SchemaError(f"file has {dim} feature columns, expected {expected_dim}")
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            records.append(_parse_row(row, dim, lineno))
    try:
        return Dataset(tuple(records), dim)
    except SchemaError:
        raise
    except DataError as exc:
        raise ParseError(str(exc)) from None


def _check_header(header: Sequence[str]) -> int:
    if tuple(header[:3]) != META_COLUMNS:
        raise ParseError(f"header must start with {','.join(META_COLUMNS)}", line=1)
    feats = header[3:]
    if not feats:
        raise SchemaError("header declares no feature columns")
    for i, name in enumerate(feats):
        if name != f"f{i}":
            raise ParseError(f"feature column {i} is named {name!r}, expected 'f{i}'", line=1)
    return len(feats)


def _parse_row(row: Sequence[str], dim: int, lineno: int) -> SignatureRecord:
    if len(row) != dim + 3:
        raise ParseError(f"expected {dim + 3} columns, found {len(row)}", line=lineno)
    try:
        writer_id = int(row[0])
        sample_index = int(row[2])
    except ValueError:
        raise ParseError("writer_id and sample_index must be integers", line=lineno) from None
    if writer_id < 1 or sample_index < 0:
        raise ParseError("writer_id must be >= 1 and sample_index >= 0", line=lineno)
    try:
        label = Label(row[1])
    except ValueError:
        raise ParseError(f"label must be 'G' or 'S', got {row[1]!r}", line=lineno) from None
    try:
        values = [float(v) for v in row[3:]]
    except ValueError:
        raise ParseError("feature values must be real numbers", line=lineno) from None
    if not all(math.isfinite(v) for v in values):
        raise ParseError("non-finite feature value", line=lineno)
    return SignatureRecord(writer_id, label, sample_index, np.array(values))


def write_feature_file(dataset: Dataset, path) -> Path:
    """Write ``dataset`` in the feature CSV schema with round-trip float reprs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with _open_text(path, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*META_COLUMNS, *(f"f{i}" for i in range(dataset.dim))])
        for rec in dataset.records:
            writer.writerow(
                [rec.writer_id, rec.label.value, rec.sample_index, *map(repr, rec.features.tolist())]
            )
    return path


# ---------------------------------------------------------------------------
# Writer splits and sample selection


@dataclass(frozen=True)
class SplitCounts:
    train: int
    validation: int
    opt: int
    sel: int

    @classmethod
    def coerce(cls, value) -> "SplitCounts":
        if isinstance(value, SplitCounts):
            return value
        if isinstance(value, Mapping):
            try:
                return cls(**{k: int(v) for k, v in value.items()})
            except TypeError as exc:
                raise ConfigError(f"bad split counts {dict(value)}: {exc}") from None
        train, validation, opt, sel = value
        return cls(int(train), int(validation), int(opt), int(sel))

    @property
    def total(self) -> int:
        return self.train + self.validation + self.opt + self.sel


@dataclass(frozen=True)
class WriterSplit:
    train_writers: frozenset[int]
    validation_writers: frozenset[int]
    opt_writers: frozenset[int]
    sel_writers: frozenset[int]
    exploitation_writers: frozenset[int]

    def __post_init__(self):
        groups = self.groups()
        names = list(groups)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                common = groups[a] & groups[b]
                if common:
                    raise ConfigError(f"writers {sorted(common)} in both {a} and {b}")

    def groups(self) -> dict[str, frozenset[int]]:
        return {
            "train": self.train_writers,
            "validation": self.validation_writers,
            "opt": self.opt_writers,
            "sel": self.sel_writers,
            "exploitation": self.exploitation_writers,
        }

    @property
    def development_writers(self) -> frozenset[int]:
        return self.train_writers | self.validation_writers | self.opt_writers | self.sel_writers

    def to_dict(self) -> dict[str, list[int]]:
        return {k: sorted(v) for k, v in self.groups().items()}


def split_writers(
    dataset: Dataset,
    counts,
    seed: int,
    exploitation_writers: Iterable[int] = (),
) -> WriterSplit:
    """Randomly partition the development writers into train/validation/Opt/Sel.

    Development writers are all writers of ``dataset`` not listed in
    ``exploitation_writers``. Writers left over when the counts sum to less
    than the development pool are not assigned to any subset.
    """
    counts = SplitCounts.coerce(counts)
    if min(counts.train, counts.validation, counts.opt, counts.sel) < 0:
        raise ConfigError(f"split counts must be non-negative: {counts}")
    exploitation = frozenset(int(w) for w in exploitation_writers)
    unknown = exploitation.difference(dataset.writer_ids)
    if unknown:
        raise ConfigError(f"exploitation writers not in dataset: {sorted(unknown)}")
    dev = np.array([w for w in dataset.writer_ids if w not in exploitation], dtype=np.int64)
    if counts.total > dev.size:
        raise ConfigError(
            f"split needs {counts.total} development writers, only {dev.size} available"
        )
    order = dev[np.random.default_rng(_seed(seed)).permutation(dev.size)].tolist()
    bounds = np.cumsum([0, counts.train, counts.validation, counts.opt, counts.sel])
    parts = [frozenset(order[bounds[i]:bounds[i + 1]]) for i in range(4)]
    return WriterSplit(*parts, exploitation_writers=exploitation)


def select_samples(
    dataset: Dataset, writer: int, label: Label, k: int, seed: int
) -> list[SignatureRecord]:
    """Seeded choice of ``k`` distinct samples of one writer and label.

    The returned order is the draw order, so a prefix of a larger draw with
    the same seed is a valid smaller draw.
    """
    label = Label(label)
    pool = dataset.samples(writer, label)
    if k < 0:
        raise ConfigError(f"k must be non-negative, got {k}")
    if len(pool) < k:
        raise DataError(
            f"writer {writer} has {len(pool)} samples labelled {label.name}, {k} required"
        )
    rng = np.random.default_rng([_seed(seed), int(writer), _LABEL_CODE[label]])
    picks = rng.permutation(len(pool))[:k]
    return [pool[i] for i in picks]


def _seed(seed) -> int:
    seed = int(seed)
    if seed < 0:
        raise ConfigError(f"seeds must be non-negative integers, got {seed}")
    return seed
