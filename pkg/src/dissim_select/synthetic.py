"""Synthetic writer populations with a known informative/noise feature split.

Each writer owns a prototype drawn uniformly from the unit hypercube on the
informative dimensions. Noise dimensions have a prototype of zero for every
writer, so their values are i.i.d. across writers and carry no information
about whether two signatures share a writer.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .data import Dataset, Label, SignatureRecord
from .errors import ConfigError

__all__ = ["GeneratorConfig", "generate", "informative_dims"]


@dataclass(frozen=True)
class GeneratorConfig:
    n_writers: int = 60
    genuine_per_writer: int = 24
    skilled_per_writer: int = 30
    dim: int = 64
    informative_dims: int = 16
    writer_spread: float = 0.12
    forgery_offset: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.n_writers < 1:
            raise ConfigError("n_writers must be >= 1")
        if self.genuine_per_writer < 0 or self.skilled_per_writer < 0:
            raise ConfigError("per-writer sample counts must be >= 0")
        if not 0 < self.informative_dims <= self.dim:
            raise ConfigError(
                f"informative_dims must be in (0, dim]; got {self.informative_dims} of {self.dim}"
            )
        if self.writer_spread <= 0 or self.forgery_offset <= 0:
            raise ConfigError("writer_spread and forgery_offset must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


def informative_dims(config: GeneratorConfig) -> np.ndarray:
    """Indices of the informative dimensions (the leading ``informative_dims``)."""
    return np.arange(config.informative_dims)


def generate(config: GeneratorConfig) -> Dataset:
    """Draw a :class:`Dataset` from ``config``; identical output for identical configs.

    Genuine signatures are ``prototype + writer_spread * N(0, 1)`` on every
    dimension. Skilled forgeries copy the prototype on the informative
    dimensions up to a ``forgery_offset * N(0, 1)`` displacement and carry
    ``writer_spread`` noise elsewhere. Writer ids run from 1 to ``n_writers``.
    """
    k, d = config.informative_dims, config.dim
    records = []
    for writer in range(1, config.n_writers + 1):
        # one stream per writer keeps writers independent of n_writers
        rng = np.random.default_rng([config.seed, writer])
        prototype = np.zeros(d)
        prototype[:k] = rng.uniform(0.0, 1.0, size=k)

        genuine = prototype + config.writer_spread * rng.standard_normal(
            (config.genuine_per_writer, d)
        )
        skilled = np.empty((config.skilled_per_writer, d))
        skilled[:, :k] = prototype[:k] + config.forgery_offset * rng.standard_normal(
            (config.skilled_per_writer, k)
        )
        skilled[:, k:] = config.writer_spread * rng.standard_normal(
            (config.skilled_per_writer, d - k)
        )
        records += [SignatureRecord(writer, Label.GENUINE, i, x) for i, x in enumerate(genuine)]
        records += [SignatureRecord(writer, Label.SKILLED, i, x) for i, x in enumerate(skilled)]
    return Dataset(tuple(records), d)
