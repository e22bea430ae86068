"""Linear maximum-margin classifier over masked dissimilarity vectors.

The objective is ``0.5 * (|w|^2 + b^2) + C * sum_i max(0, 1 - y_i (w . x_i + b))``,
the usual per-sample convention for ``C`` with the bias folded in as a
constant feature. It is solved through its dual, a box-constrained quadratic
program ``min 0.5 a'Qa - sum(a)`` with ``0 <= a_i <= C``, by L-BFGS-B from
zero. That is deterministic, so ``seed`` is only recorded.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import Bounds, minimize

from .dichotomy import ReferenceSet, dissimilarity
from .errors import DataError, DegenerateMaskError, DimensionError

__all__ = [
    "FeatureMask",
    "SvmHyper",
    "TrainedModel",
    "train",
    "fit_linear_svm",
    "score",
    "hinge_loss",
]


class FeatureMask:
    """Immutable binary selection over ``D`` dissimilarity dimensions."""

    __slots__ = ("bits", "cardinality", "_key")

    def __init__(self, bits):
        arr = np.array(bits, dtype=bool).ravel()
        arr.setflags(write=False)
        self.bits = arr
        self.cardinality = int(arr.sum())
        self._key = arr.tobytes()

    @classmethod
    def ones(cls, dim: int) -> "FeatureMask":
        return cls(np.ones(dim, dtype=bool))

    @classmethod
    def from_indices(cls, dim: int, indices) -> "FeatureMask":
        bits = np.zeros(dim, dtype=bool)
        bits[list(indices)] = True
        return cls(bits)

    @classmethod
    def from_hex(cls, hexstr: str, dim: int) -> "FeatureMask":
        packed = np.frombuffer(bytes.fromhex(hexstr), dtype=np.uint8)
        bits = np.unpackbits(packed)[:dim]
        if bits.size != dim:
            raise ValueError(f"hex string too short for {dim} bits")
        return cls(bits)

    @property
    def dim(self) -> int:
        return self.bits.size

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def to_hex(self) -> str:
        return np.packbits(self.bits).tobytes().hex()

    def sort_key(self) -> tuple:
        """Order used for tie-breaking: fewer features first, then bit tuple."""
        return (self.cardinality, tuple(self.bits.tolist()))

    def __eq__(self, other):
        if not isinstance(other, FeatureMask):
            return NotImplemented
        return self._key == other._key and self.dim == other.dim

    def __hash__(self):
        return hash(self._key)

    def __len__(self):
        return self.dim

    def __repr__(self):
        return f"FeatureMask(dim={self.dim}, cardinality={self.cardinality}, hex={self.to_hex()!r})"


@dataclass(frozen=True)
class SvmHyper:
    C: float = 1.0
    seed: int = 0
    max_iter: int = 20000
    tol: float = 1e-12

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True, eq=False)
class TrainedModel:
    weights: np.ndarray
    bias: float
    mask: FeatureMask
    hyper: SvmHyper = field(default_factory=SvmHyper)
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.weights.shape != (self.mask.cardinality,):
            raise DimensionError(
                f"{self.weights.shape[0]} weights for a mask of cardinality {self.mask.cardinality}"
            )

    def decision(self, U: np.ndarray) -> np.ndarray:
        """Scores of full-dimension dissimilarity vectors (last axis is ``D``)."""
        U = np.asarray(U, dtype=np.float64)
        if U.shape[-1] != self.mask.dim:
            raise DimensionError(f"expected {self.mask.dim} dimensions, got {U.shape[-1]}")
        return U[..., self.mask.bits] @ self.weights + self.bias

    def to_dict(self) -> dict:
        return {
            "mask": {"dim": self.mask.dim, "hex": self.mask.to_hex()},
            "weights": self.weights.tolist(),
            "bias": float(self.bias),
            "hyper": asdict(self.hyper),
            "seeds": {"train": self.hyper.seed},
            "training_meta": dict(self.training_meta),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TrainedModel":
        mask = FeatureMask.from_hex(payload["mask"]["hex"], payload["mask"]["dim"])
        return cls(
            np.array(payload["weights"], dtype=np.float64),
            float(payload["bias"]),
            mask,
            SvmHyper(**payload["hyper"]),
            dict(payload.get("training_meta", {})),
        )


def hinge_loss(margins: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 1.0 - margins)


def _dual(alpha, Q):
    Qa = Q @ alpha
    return 0.5 * alpha @ Qa - alpha.sum(), Qa - 1.0


def fit_linear_svm(X: np.ndarray, y: np.ndarray, hyper: SvmHyper = SvmHyper()):
    """Fit ``(weights, bias, meta)`` on a dense design matrix with ``y`` in ``{-1, +1}``."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[1] == 0:
        raise DegenerateMaskError("no features selected")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DataError("training data must contain both labels")
    Z = np.hstack([X, np.ones((X.shape[0], 1))]) * y[:, None]
    res = minimize(
        _dual,
        np.zeros(X.shape[0]),
        args=(Z @ Z.T,),
        jac=True,
        method="L-BFGS-B",
        bounds=Bounds(0.0, hyper.C),
        options={"maxiter": hyper.max_iter, "gtol": hyper.tol, "ftol": 1e-16, "maxcor": 30},
    )
    wb = Z.T @ res.x
    w, b = wb[:-1].copy(), float(wb[-1])
    primal = 0.5 * wb @ wb + hyper.C * hinge_loss(y * (X @ w + b)).sum()
    meta = {
        "seed": hyper.seed,
        "iterations": int(res.nit),
        "objective": float(primal),
        "n_support": int(np.count_nonzero(res.x > 0)),
        "converged": bool(res.success),
    }
    return w, b, meta


def train(samples, mask: FeatureMask, hyper: SvmHyper = SvmHyper()) -> TrainedModel:
    """Train on a condensed set (or an ``(X, y)`` pair) restricted to ``mask``."""
    X, y = samples.arrays() if hasattr(samples, "arrays") else samples
    if X.shape[1] != mask.dim:
        raise DimensionError(f"mask has {mask.dim} bits, samples have {X.shape[1]} dimensions")
    if mask.cardinality == 0:
        raise DegenerateMaskError("cannot train with an all-zero mask")
    w, b, meta = fit_linear_svm(X[:, mask.bits], y, hyper)
    w.setflags(write=False)
    return TrainedModel(w, b, mask, hyper, meta)


def score(model: TrainedModel, questioned, refs: ReferenceSet | Sequence) -> float:
    """Max-fused score of a questioned signature against a writer's references."""
    ref_matrix = refs.matrix() if isinstance(refs, ReferenceSet) else np.atleast_2d(refs)
    q = np.asarray(questioned, dtype=np.float64)
    if q.shape != (model.mask.dim,) or ref_matrix.shape[1] != model.mask.dim:
        raise DimensionError(
            f"expected {model.mask.dim}-dim vectors, got {q.shape} and {ref_matrix.shape}"
        )
    partial = model.decision(dissimilarity(q, ref_matrix))
    return float(partial.max())
