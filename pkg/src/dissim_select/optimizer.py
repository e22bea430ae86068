"""Binary PSO feature selection with validation strategies.

The swarm minimizes the user-threshold EER of the wrapped classifier on the
optimization (Opt) writers. Candidate masks can additionally be scored on the
disjoint selection (Sel) writers, either once at the end (last-iteration
validation) or at every iteration into a bounded archive (global validation).
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .classifier import FeatureMask, SvmHyper, TrainedModel, train
from .dichotomy import WriterTrials
from .errors import ConfigError
from .metrics import eer_user_from_scores

__all__ = [
    "Strategy",
    "EvalSet",
    "SwarmConfig",
    "Particle",
    "ArchiveEntry",
    "FitnessContext",
    "RunResult",
    "transfer",
    "linear_schedule",
    "coefficients",
    "init_particle",
    "update_particle",
    "fitness",
    "merge_archive",
    "run",
]

PENALTY_FITNESS = 1.0


class Strategy(str, enum.Enum):
    NO_VALIDATION = "no_validation"
    LAST_ITERATION = "last_iteration"
    GLOBAL_VALIDATION = "global_validation"


class EvalSet(str, enum.Enum):
    OPT = "opt"
    SEL = "sel"


def transfer(v):
    """V-shaped transfer ``|tanh(v)|``: bit-flip probability for a velocity."""
    return np.abs(np.tanh(v))


def linear_schedule(start: float, end: float, t: int, max_iterations: int) -> float:
    if max_iterations <= 1:
        return start
    return start + (end - start) * t / (max_iterations - 1)


@dataclass(frozen=True)
class SwarmConfig:
    swarm_size: int = 20
    max_iterations: int = 40
    w_start: float = 0.9
    w_end: float = 0.4
    c1_start: float = 2.5
    c1_end: float = 0.5
    c2_start: float = 0.5
    c2_end: float = 2.5
    v_max: float = 4.0
    archive_capacity: int = 20
    strategy: Strategy = Strategy.GLOBAL_VALIDATION
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.swarm_size < 2:
            raise ConfigError("swarm_size must be >= 2")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.archive_capacity < 1:
            raise ConfigError("archive_capacity must be >= 1")
        if self.v_max <= 0:
            raise ConfigError("v_max must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["strategy"] = self.strategy.value
        return d


def coefficients(config: SwarmConfig, t: int, schedule=linear_schedule):
    """Inertia and acceleration coefficients ``(w, c1, c2)`` at iteration ``t``."""
    T = config.max_iterations
    return (
        schedule(config.w_start, config.w_end, t, T),
        schedule(config.c1_start, config.c1_end, t, T),
        schedule(config.c2_start, config.c2_end, t, T),
    )


@dataclass(frozen=True, eq=False)
class Particle:
    id: int
    position: np.ndarray
    velocity: np.ndarray
    mask: FeatureMask
    best_mask: FeatureMask
    best_fitness: float = float("inf")


def init_particle(pid: int, dim: int, seed: int) -> Particle:
    rng = np.random.default_rng([seed, 0, pid])
    bits = rng.random(dim) < 0.5
    velocity = rng.uniform(-1.0, 1.0, dim)
    mask = FeatureMask(bits)
    return Particle(pid, bits.astype(np.float64), velocity, mask, mask)


def particle_rng(seed: int, t: int, pid: int) -> np.random.Generator:
    """Substream for particle ``pid`` at iteration ``t``; independent of evaluation order."""
    return np.random.default_rng([seed, 1, t, pid])


def update_particle(
    p: Particle,
    global_best_mask: FeatureMask,
    t: int,
    config: SwarmConfig,
    rng: np.random.Generator,
    transfer_fn: Callable = transfer,
    schedule: Callable = linear_schedule,
) -> Particle:
    w, c1, c2 = coefficients(config, t, schedule)
    bits = p.mask.bits.astype(np.float64)
    dim = bits.size
    r1 = rng.random(dim)
    r2 = rng.random(dim)
    v = (
        w * p.velocity
        + c1 * r1 * (p.best_mask.bits - bits)
        + c2 * r2 * (global_best_mask.bits - bits)
    )
    np.clip(v, -config.v_max, config.v_max, out=v)
    flip = rng.random(dim) < transfer_fn(v)
    new_bits = np.logical_xor(p.mask.bits, flip)
    return replace(p, position=new_bits.astype(np.float64), velocity=v, mask=FeatureMask(new_bits))


# ---------------------------------------------------------------------------
# Fitness


class FitnessContext:
    """Everything a wrapper fitness evaluation needs, plus its caches.

    ``train_data`` is a condensed set or an ``(X, y)`` pair. ``opt_trials`` and
    ``sel_trials`` are per-writer trial tensors for disjoint writer sets.
    """

    def __init__(
        self,
        train_data,
        opt_trials: Sequence[WriterTrials],
        sel_trials: Sequence[WriterTrials] = (),
        hyper: SvmHyper = SvmHyper(),
    ):
        X, y = train_data.arrays() if hasattr(train_data, "arrays") else train_data
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.float64)
        self.dim = self.X.shape[1]
        self.trials = {EvalSet.OPT: list(opt_trials), EvalSet.SEL: list(sel_trials)}
        overlap = {t.writer_id for t in opt_trials} & {t.writer_id for t in sel_trials}
        if overlap:
            raise ConfigError(f"Opt and Sel writers overlap: {sorted(overlap)}")
        self.hyper = hyper
        self.cache: dict[tuple[FeatureMask, EvalSet], float] = {}
        self._models: dict[FeatureMask, TrainedModel] = {}
        self.n_trainings = 0

    def model(self, mask: FeatureMask) -> TrainedModel:
        m = self._models.get(mask)
        if m is None:
            m = train((self.X, self.y), mask, self.hyper)
            self._models[mask] = m
            self.n_trainings += 1
        return m

    def evaluate(self, mask: FeatureMask, eval_set: EvalSet) -> float:
        eval_set = EvalSet(eval_set)
        key = (mask, eval_set)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        if mask.cardinality == 0:
            value = PENALTY_FITNESS
        else:
            trials = self.trials[eval_set]
            if not trials:
                raise ConfigError(f"no {eval_set.value} writers in fitness context")
            value = user_eer(self.model(mask), trials)
        self.cache[key] = value
        return value

    def __getstate__(self):
        state = self.__dict__.copy()
        state["cache"] = {}
        state["_models"] = {}
        return state


def writer_scores(model: TrainedModel, trials: WriterTrials):
    """Max-fused genuine and skilled scores of one writer."""
    return model.decision(trials.genuine).max(axis=1), model.decision(trials.skilled).max(axis=1)


def user_eer(model: TrainedModel, trials: Iterable[WriterTrials]) -> float:
    pools = {t.writer_id: writer_scores(model, t) for t in trials}
    return eer_user_from_scores(pools).eer


def fitness(mask: FeatureMask, ctx: FitnessContext, eval_set: EvalSet = EvalSet.OPT) -> float:
    """User-threshold EER of the classifier trained with ``mask``; 1.0 for an empty mask."""
    return ctx.evaluate(mask, eval_set)


# ---------------------------------------------------------------------------
# Archive


@dataclass(frozen=True)
class ArchiveEntry:
    mask: FeatureMask
    opt_fitness: float
    sel_fitness: float
    iteration_found: int

    def rank_key(self):
        return (self.sel_fitness, *self.mask.sort_key())

    def to_dict(self) -> dict:
        return {
            "mask": self.mask.to_hex(),
            "cardinality": self.mask.cardinality,
            "opt_fitness": self.opt_fitness,
            "sel_fitness": self.sel_fitness,
            "iteration_found": self.iteration_found,
        }


def merge_archive(
    archive: Sequence[ArchiveEntry], candidates: Iterable[ArchiveEntry], capacity: int
) -> list[ArchiveEntry]:
    """Pool the archive with new candidates, rank by Sel fitness and keep the best.

    Duplicate masks keep their earliest entry. Ties rank fewer features first,
    then the lexicographically smaller bit pattern.
    """
    seen = set()
    pooled = []
    for entry in [*archive, *candidates]:
        if entry.mask not in seen:
            seen.add(entry.mask)
            pooled.append(entry)
    pooled.sort(key=ArchiveEntry.rank_key)
    return pooled[:capacity]


# ---------------------------------------------------------------------------
# Driver


@dataclass
class RunResult:
    config: SwarmConfig
    final_mask: FeatureMask
    final_opt_fitness: float
    final_sel_fitness: float | None
    archive: list[ArchiveEntry]
    history: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "dim": self.final_mask.dim,
            "final_mask": self.final_mask.to_hex(),
            "final_cardinality": self.final_mask.cardinality,
            "final_opt_fitness": self.final_opt_fitness,
            "final_sel_fitness": self.final_sel_fitness,
            "archive": [e.to_dict() for e in self.archive],
            "history": list(self.history),
        }


def _evaluate_all(ctx, masks, eval_set, map_fn):
    pending = [m for m in dict.fromkeys(masks) if (m, eval_set) not in ctx.cache]
    if pending and map_fn is not map:
        # workers return values only; the cache is filled here in input order
        for m, v in zip(pending, map_fn(_RemoteEval(ctx, eval_set), pending)):
            ctx.cache[(m, eval_set)] = v
    return [ctx.evaluate(m, eval_set) for m in masks]


class _RemoteEval:
    def __init__(self, ctx, eval_set):
        self.ctx = ctx
        self.eval_set = eval_set

    def __call__(self, mask):
        return self.ctx.evaluate(mask, self.eval_set)


def run(
    config: SwarmConfig,
    ctx: FitnessContext,
    *,
    map_fn=map,
    transfer_fn: Callable = transfer,
    schedule: Callable = linear_schedule,
) -> RunResult:
    """Run the swarm under ``config.strategy`` and return the selected mask.

    ``map_fn`` may be an executor's ``map``; results do not depend on it.
    """
    T = config.max_iterations
    strategy = config.strategy
    particles = [init_particle(i, ctx.dim, config.seed) for i in range(config.swarm_size)]
    archive: list[ArchiveEntry] = []
    history: list[dict] = []
    gbest_mask, gbest_fit = None, float("inf")

    for t in range(T):
        masks = [p.mask for p in particles]
        opt = _evaluate_all(ctx, masks, EvalSet.OPT, map_fn)
        particles = [
            replace(p, best_mask=p.mask, best_fitness=f) if f < p.best_fitness else p
            for p, f in zip(particles, opt)
        ]
        best = min(particles, key=lambda p: (p.best_fitness, *p.best_mask.sort_key()))
        gbest_mask, gbest_fit = best.best_mask, best.best_fitness

        best_sel = None
        if strategy is Strategy.GLOBAL_VALIDATION:
            sel = _evaluate_all(ctx, masks, EvalSet.SEL, map_fn)
            archive = merge_archive(
                archive,
                (ArchiveEntry(m, o, s, t) for m, o, s in zip(masks, opt, sel)),
                config.archive_capacity,
            )
            best_sel = archive[0].sel_fitness
        history.append(
            {
                "iteration": t,
                "best_opt": gbest_fit,
                "best_sel": best_sel,
                "mean_cardinality": float(np.mean([m.cardinality for m in masks])),
            }
        )
        if t + 1 < T:
            particles = [
                update_particle(
                    p, gbest_mask, t, config, particle_rng(config.seed, t, p.id),
                    transfer_fn, schedule,
                )
                for p in particles
            ]

    if strategy is Strategy.NO_VALIDATION:
        return RunResult(config, gbest_mask, gbest_fit, None, [], history)

    if strategy is Strategy.LAST_ITERATION:
        cands = {p.best_mask: p.best_fitness for p in particles}
        cands.setdefault(gbest_mask, gbest_fit)
        masks = list(cands)
        sel = _evaluate_all(ctx, masks, EvalSet.SEL, map_fn)
        ranked = merge_archive(
            [], (ArchiveEntry(m, cands[m], s, T - 1) for m, s in zip(masks, sel)), len(masks)
        )
        history[-1]["best_sel"] = ranked[0].sel_fitness
        head = ranked[0]
        return RunResult(config, head.mask, head.opt_fitness, head.sel_fitness, ranked, history)

    head = archive[0]
    return RunResult(config, head.mask, head.opt_fitness, head.sel_fitness, archive, history)
