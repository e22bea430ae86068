import numpy as np
import pytest

from dissim_select.data import Label
from dissim_select.errors import ConfigError
from dissim_select.synthetic import GeneratorConfig, generate, informative_dims


def test_shapes_and_counts():
    cfg = GeneratorConfig(n_writers=2, genuine_per_writer=3, skilled_per_writer=2, dim=4,
                          informative_dims=2)
    ds = generate(cfg)
    assert ds.dim == 4 and ds.writer_ids == (1, 2)
    assert len(ds.samples(2, Label.GENUINE)) == 3
    assert len(ds.samples(2, Label.SKILLED)) == 2
    np.testing.assert_array_equal(informative_dims(cfg), [0, 1])


def test_determinism_and_seed_sensitivity():
    cfg = GeneratorConfig(n_writers=3, dim=6, informative_dims=2, seed=5)
    assert generate(cfg) == generate(cfg)
    other = GeneratorConfig(n_writers=3, dim=6, informative_dims=2, seed=6)
    assert not np.array_equal(generate(cfg).matrix(), generate(other).matrix())


def test_writer_stream_does_not_depend_on_population_size():
    small = generate(GeneratorConfig(n_writers=2, dim=5, informative_dims=2))
    large = generate(GeneratorConfig(n_writers=7, dim=5, informative_dims=2))
    for label in Label:
        assert small.samples(2, label) == large.samples(2, label)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_writers": 0},
        {"informative_dims": 0},
        {"dim": 4, "informative_dims": 5},
        {"writer_spread": 0.0},
        {"seed": -1},
    ],
)
def test_bad_configs(kwargs):
    with pytest.raises(ConfigError):
        GeneratorConfig(**kwargs)


def _mean_abs_diff(a, b):
    # brute force over all pairs, per dimension
    return np.mean([np.abs(x - y) for x in a for y in b], axis=0)


def test_informative_dims_separate_same_from_different_writer():
    cfg = GeneratorConfig(n_writers=12, genuine_per_writer=8, skilled_per_writer=4, dim=10,
                          informative_dims=4, seed=1)
    ds = generate(cfg)
    same, diff = [], []
    for w in ds.writer_ids:
        g = [r.features for r in ds.samples(w, Label.GENUINE)]
        same.append(_mean_abs_diff(g[:4], g[4:]))
        other = [r.features for r in ds.samples(w % 12 + 1, Label.GENUINE)]
        diff.append(_mean_abs_diff(g[:4], other[:4]))
    same, diff = np.mean(same, axis=0), np.mean(diff, axis=0)
    assert np.all(diff[:4] > 1.5 * same[:4])
    # noise dims look the same whichever writer the pair comes from
    np.testing.assert_allclose(diff[4:], same[4:], rtol=0.25)


def test_skilled_forgeries_are_closer_than_random_ones():
    cfg = GeneratorConfig(n_writers=10, dim=8, informative_dims=4, seed=2)
    ds = generate(cfg)
    skl, rnd = [], []
    for w in ds.writer_ids:
        g = np.array([r.features for r in ds.samples(w, Label.GENUINE)])
        s = np.array([r.features for r in ds.samples(w, Label.SKILLED)])
        o = np.array([r.features for r in ds.samples(w % 10 + 1, Label.GENUINE)])
        skl.append(np.abs(g[:, None, :4] - s[None, :, :4]).mean())
        rnd.append(np.abs(g[:, None, :4] - o[None, :, :4]).mean())
    assert np.mean(skl) < np.mean(rnd)


def test_nearest_neighbour_writer_id_uses_informative_dims():
    cfg = GeneratorConfig(n_writers=15, genuine_per_writer=6, skilled_per_writer=0, dim=20,
                          informative_dims=5, seed=4)
    ds = generate(cfg)
    X = ds.matrix()
    w = np.array([r.writer_id for r in ds.records])

    def leave_one_out_accuracy(cols):
        Z = X[:, cols]
        d = ((Z[:, None, :] - Z[None, :, :]) ** 2).sum(-1)
        np.fill_diagonal(d, np.inf)
        return np.mean(w[d.argmin(1)] == w)

    # chance level is 5/89
    assert leave_one_out_accuracy(np.arange(5)) > 0.6
    assert leave_one_out_accuracy(np.arange(5, 10)) < 0.2
