"""FAR/FRR sweeps and Equal Error Rate (global and per-writer threshold)."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import MetricError

__all__ = [
    "Truth",
    "ScoredTrial",
    "EerResult",
    "far_frr_curve",
    "eer_from_scores",
    "eer_global",
    "eer_user",
    "eer_user_from_scores",
]


class Truth(str, enum.Enum):
    GENUINE = "genuine"
    SKILLED = "skilled"


@dataclass(frozen=True)
class ScoredTrial:
    writer_id: int
    truth: Truth
    fused_score: float

    def __post_init__(self):
        if not math.isfinite(self.fused_score):
            raise MetricError(f"non-finite score for writer {self.writer_id}")
        object.__setattr__(self, "truth", Truth(self.truth))


@dataclass(frozen=True)
class EerResult:
    eer: float
    threshold: float | None = None
    thresholds: Mapping[int, float] = field(default_factory=dict)
    per_writer: Mapping[int, float] = field(default_factory=dict)


def far_frr_curve(genuine, skilled) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Error rates at every distinct score used as threshold, plus ``+inf``.

    A trial is accepted iff ``score >= threshold``. Returns ``(thresholds, far,
    frr)``; the final point (``+inf``) rejects everything.
    """
    g = np.sort(np.asarray(genuine, dtype=np.float64))
    s = np.sort(np.asarray(skilled, dtype=np.float64))
    if g.size == 0 or s.size == 0:
        raise MetricError("need at least one genuine and one skilled trial")
    t = np.unique(np.concatenate([g, s]))
    frr = np.searchsorted(g, t, side="left") / g.size
    far = (s.size - np.searchsorted(s, t, side="left")) / s.size
    return np.append(t, np.inf), np.append(far, 0.0), np.append(frr, 1.0)


def eer_from_scores(genuine, skilled) -> tuple[float, float]:
    """``(eer, threshold)`` for one pool of genuine and skilled scores.

    ``FAR - FRR`` is non-increasing along the sweep, starts at 1 and ends at
    -1, so there is exactly one sign change. An exact zero gives the EER
    directly; otherwise both curves are interpolated linearly between the
    bracketing sweep points. Above the highest score the threshold is reported
    as that score.
    """
    t, far, frr = far_frr_curve(genuine, skilled)
    d = far - frr
    k = int(np.argmax(d <= 0))
    if d[k] == 0:
        return float(frr[k]), float(t[k])
    alpha = d[k - 1] / (d[k - 1] - d[k])
    eer = frr[k - 1] + alpha * (frr[k] - frr[k - 1])
    if np.isfinite(t[k]):
        thr = t[k - 1] + alpha * (t[k] - t[k - 1])
    else:
        thr = t[k - 1]
    return float(eer), float(thr)


def _split(trials: Iterable[ScoredTrial]):
    g, s = [], []
    for tr in trials:
        (g if tr.truth == Truth.GENUINE else s).append(tr.fused_score)
    return g, s


def eer_global(trials: Sequence[ScoredTrial]) -> EerResult:
    g, s = _split(trials)
    if not g or not s:
        raise MetricError("global EER needs at least one genuine and one skilled trial")
    eer, thr = eer_from_scores(g, s)
    return EerResult(eer, threshold=thr)


def eer_user(trials: Sequence[ScoredTrial]) -> EerResult:
    """Unweighted mean over writers of each writer's own EER."""
    by_writer: dict[int, list[ScoredTrial]] = {}
    for tr in trials:
        by_writer.setdefault(tr.writer_id, []).append(tr)
    if not by_writer:
        raise MetricError("no trials")
    pools = {}
    for writer in sorted(by_writer):
        g, s = _split(by_writer[writer])
        if not g or not s:
            missing = "genuine" if not g else "skilled"
            raise MetricError(f"writer {writer} has no {missing} trials")
        pools[writer] = (g, s)
    return eer_user_from_scores(pools)


def eer_user_from_scores(pools: Mapping[int, tuple]) -> EerResult:
    """User-threshold EER from ``{writer: (genuine_scores, skilled_scores)}``."""
    per_writer, thresholds = {}, {}
    for writer, (g, s) in pools.items():
        if len(g) == 0 or len(s) == 0:
            raise MetricError(f"writer {writer} lacks genuine or skilled trials")
        per_writer[writer], thresholds[writer] = eer_from_scores(g, s)
    eer = float(np.mean(list(per_writer.values())))
    return EerResult(eer, thresholds=thresholds, per_writer=per_writer)
