"""The mirror and mixing constructions, and the bit-identity they force."""

import numpy as np
import pytest

from itebench.bench import build_method
from itebench.conformal import IntervalMap, MethodConfig
from itebench.dgp import (
    OutcomeModel,
    PropensityRegime,
    ScenarioConfig,
    gen_dataset,
)
from itebench.hardness import (
    MirrorSpec,
    MixSpec,
    construct_mirror,
    implied_propensity,
    mix_propensity,
    triviality_probe,
)
from itebench.conformal import METHOD_NAMES


def _scenario(n, seed, prop=None):
    return ScenarioConfig(
        propensity=prop or PropensityRegime(kind="constant", p=0.5),
        n_train=n,
        seed=seed,
    )


def test_spec_validation():
    with pytest.raises(ValueError):
        MirrorSpec(np.inf)
    with pytest.raises(ValueError):
        MixSpec(1.5)
    with pytest.raises(ValueError):
        implied_propensity(np.array([0.5]), -0.1)


@pytest.mark.parametrize("y", [-3.0, 0.0, 3.0])
def test_mirror_forces_constant_effect_and_preserves_observations(y):
    data = gen_dataset(_scenario(800, 13))
    mirrored = construct_mirror(data, y)
    # the observed triple is reused array-for-array
    assert mirrored.x is data.x
    assert mirrored.t is data.t
    assert mirrored.y_obs is data.y_obs
    # every unit's effect is now y, up to one rounding of y0 + y
    assert np.allclose(mirrored.delta, y, rtol=0.0, atol=1e-12)
    # each unit keeps its factual outcome in the observed arm
    treated = data.t == 1
    assert np.array_equal(mirrored.y1[treated], data.y1[treated])
    assert np.array_equal(mirrored.y0[~treated], data.y0[~treated])


def test_mirror_is_invisible_to_every_method():
    data = gen_dataset(_scenario(700, 14))
    mirrored = construct_mirror(data, 2.0)
    for name in METHOD_NAMES:
        cfg = MethodConfig(method=name, alpha=0.2, seed=31)
        xq = gen_dataset(_scenario(150, 15)).x
        lo_a, hi_a = build_method(data.observed(), cfg).bounds(xq)
        lo_b, hi_b = build_method(mirrored.observed(), cfg).bounds(xq)
        assert np.array_equal(lo_a, lo_b), name
        assert np.array_equal(hi_a, hi_b), name


def test_implied_propensity_formula_and_bounds():
    e = np.array([0.0, 0.2, 1.0])
    out = implied_propensity(e, 0.4)
    assert np.allclose(out, 0.6 * e + 0.2)
    assert out.min() >= 0.2 and out.max() <= 0.8
    assert np.allclose(implied_propensity(e, 0.0), e)
    assert np.allclose(implied_propensity(e, 1.0), 0.5)


def test_mix_propensity_flip_budget():
    data = gen_dataset(_scenario(20000, 16))
    eps = 0.1
    mixed = mix_propensity(data, eps, seed=3)
    n = len(data)
    flipped = np.mean(mixed.t != data.t)
    assert flipped <= eps + 3.0 * np.sqrt(eps / n)
    # potential outcomes are untouched, observations re-read from the new arm
    assert mixed.y1 is data.y1 and mixed.y0 is data.y0
    assert np.array_equal(mixed.y_obs, np.where(mixed.t == 1, data.y1, data.y0))


def test_mix_propensity_edge_rates():
    data = gen_dataset(_scenario(5000, 17))
    assert np.array_equal(mix_propensity(data, 0.0, seed=1).t, data.t)
    coin = mix_propensity(data, 1.0, seed=1)
    assert abs(coin.t.mean() - 0.5) < 0.03
    again = mix_propensity(data, 0.3, seed=9)
    assert np.array_equal(again.t, mix_propensity(data, 0.3, seed=9).t)


def test_triviality_probe_containment_table():
    scenario = ScenarioConfig(
        outcome=OutcomeModel(signal="zero"),
        propensity=PropensityRegime(kind="constant", p=0.5),
        n_train=300,
        n_test=400,
    )

    def narrow_band(obs, seed):
        return IntervalMap(lambda x: (np.full(len(x), -0.5), np.full(len(x), 0.5)))

    probe = triviality_probe(narrow_band, scenario, y_grid=[-3.0, 0.0, 3.0], reps=2)
    assert list(probe.containment) == [0.0, 1.0, 0.0]
    assert probe.reps == 2

    def whole_line(obs, seed):
        return IntervalMap(lambda x: (np.full(len(x), -np.inf), np.full(len(x), np.inf)))

    probe = triviality_probe(whole_line, scenario, y_grid=[-3.0, 0.0, 3.0], reps=1)
    assert list(probe.containment) == [1.0, 1.0, 1.0]

    with pytest.raises(ValueError):
        triviality_probe(narrow_band, scenario, y_grid=[0.0], reps=0)
