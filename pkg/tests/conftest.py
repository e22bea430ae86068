import numpy as np
import pytest

from dissim_select.data import split_writers
from dissim_select.dichotomy import build_training_set, build_trials
from dissim_select.optimizer import FitnessContext
from dissim_select.prototypes import condense
from dissim_select.synthetic import GeneratorConfig, generate

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_config():
    return GeneratorConfig(
        n_writers=24, genuine_per_writer=16, skilled_per_writer=8, dim=12,
        informative_dims=4, seed=3,
    )


@pytest.fixture(scope="session")
def small_dataset(small_config):
    return generate(small_config)


def make_context(dataset, seed=0, counts=(8, 0, 6, 6), n_refs=4, n_gen=4, n_skl=4,
                 exploitation=(), hyper=None):
    split = split_writers(dataset, counts, seed, exploitation)
    samples = build_training_set(dataset, split.train_writers, n_gen, n_gen, seed, n_references=n_refs)
    condensed = condense(samples, seed)
    opt = build_trials(dataset, split.opt_writers, n_refs, n_gen, n_skl, seed)
    sel = build_trials(dataset, split.sel_writers, n_refs, n_gen, n_skl, seed)
    kwargs = {} if hyper is None else {"hyper": hyper}
    return FitnessContext(condensed, opt, sel, **kwargs), split


@pytest.fixture(scope="session")
def small_context(small_dataset):
    ctx, _ = make_context(small_dataset)
    return ctx
