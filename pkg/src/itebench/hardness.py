"""Adversarial constructions probing what observed data cannot identify.

``construct_mirror`` rewrites the unobserved potential outcome of every
unit so that each unit's effect equals an arbitrary constant y, while the
observed columns (x, t, y_obs) stay byte-identical.  Any procedure that
reads only observed data therefore returns exactly the same intervals on
the original and on the mirrored dataset, even though the effect law has
been replaced wholesale; informative effect intervals cannot be valid for
both.  ``mix_propensity`` perturbs assignments toward a coin flip,
bounding how far the implied propensity can sit from the original at
total-variation cost epsilon.  ``triviality_probe`` measures the
practical face of the same fact: how often a method's intervals contain a
candidate constant effect.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dgp import Dataset, ScenarioConfig, gen_dataset
from .rng import derive_seed, substream

__all__ = [
    "MirrorSpec",
    "MixSpec",
    "ProbeResult",
    "construct_mirror",
    "implied_propensity",
    "mix_propensity",
    "triviality_probe",
]


@dataclass(frozen=True)
class MirrorSpec:
    """Constant effect value forced by a mirror construction."""

    y: float

    def __post_init__(self):
        if not np.isfinite(self.y):
            raise ValueError("mirror shift must be finite")


@dataclass(frozen=True)
class MixSpec:
    """Assignment-mixing construction: coin-flip fraction and its seed."""

    epsilon: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")


@dataclass(frozen=True)
class ProbeResult:
    y_grid: np.ndarray
    containment: np.ndarray
    reps: int


def construct_mirror(ds: Dataset, y: float) -> Dataset:
    """Replace every unit's missing potential outcome so its effect is y.

    Control units get Y(1) := Y(0) + y, treated units get Y(0) := Y(1) - y.
    The observed triple is reused array-for-array, so the rewrite is
    invisible to anything consuming ``observed()``.  The returned dataset
    keeps the original provenance config even though no seeded draw
    regenerates it.
    """
    y = float(MirrorSpec(y).y)
    treated = ds.t == 1
    y1 = np.where(treated, ds.y1, ds.y0 + y)
    y0 = np.where(treated, ds.y1 - y, ds.y0)
    return Dataset(x=ds.x, y1=y1, y0=y0, t=ds.t, y_obs=ds.y_obs, config=ds.config)


def implied_propensity(e, epsilon: float) -> np.ndarray:
    """Propensity after mixing assignments with a fair coin at rate epsilon.

    (1 - eps) e(x) + eps/2: pinned inside [eps/2, 1 - eps/2] no matter how
    extreme the original e is.
    """
    e = np.asarray(e, dtype=float)
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    return (1.0 - epsilon) * e + epsilon / 2.0


def mix_propensity(ds: Dataset, epsilon: float, seed: int = 0) -> Dataset:
    """Resample each unit's arm from a fair coin with probability epsilon.

    Potential outcomes are untouched; the observed outcome is re-read
    from the (possibly new) arm.  At most an epsilon fraction of
    assignments changes in expectation, yet the implied propensity moves
    to (1 - eps) e + eps/2.
    """
    spec = MixSpec(epsilon, seed)
    rng = substream(spec.seed, "mix")
    flip = rng.uniform(size=len(ds)) < spec.epsilon
    coin = (rng.uniform(size=len(ds)) < 0.5).astype(ds.t.dtype)
    t = np.where(flip, coin, ds.t)
    y_obs = np.where(t == 1, ds.y1, ds.y0)
    return Dataset(x=ds.x, y1=ds.y1, y0=ds.y0, t=t, y_obs=y_obs, config=ds.config)


def triviality_probe(build_map, scenario: ScenarioConfig, y_grid, reps: int,
                     master_seed: int = 0) -> ProbeResult:
    """Fraction of fresh covariate draws whose interval contains each y.

    ``build_map(obs, seed) -> IntervalMap`` supplies the method under
    probe.  A method that were robust to every mirror rewrite would have
    to keep every row of this table above its nominal level; a method
    with informative (finite, short) intervals cannot, and the table
    shows where it gives ground.
    """
    y_grid = np.asarray(y_grid, dtype=float)
    if reps < 1:
        raise ValueError("need at least one replicate")
    total = np.zeros(len(y_grid))
    for rep in range(reps):
        train_cfg = scenario.with_seed(derive_seed(master_seed, "probe-train", rep))
        train = gen_dataset(train_cfg)
        imap = build_map(train.observed(), derive_seed(master_seed, "probe-build", rep))
        test_cfg = replace(scenario, n_train=scenario.n_test,
                            seed=derive_seed(master_seed, "probe-test", rep))
        test = gen_dataset(test_cfg)
        lo, hi = imap.bounds(test.x)
        for k, y in enumerate(y_grid):
            total[k] += np.mean((lo <= y) & (y <= hi))
    return ProbeResult(y_grid=y_grid, containment=total / reps, reps=reps)
