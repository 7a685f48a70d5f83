"""Effect intervals from paired cross-arm residuals.

The construction: split off a fitting fold, estimate both outcome
surfaces on it, form out-of-fold residuals separately per arm, randomly
pair one treated residual with one control residual, and read empirical
quantiles off the paired differences W = r_treated - r_control.  The
interval at x is tau_hat(x) shifted by those quantiles.

Each W is a difference of residuals from two *distinct* units, so its law
approximates the effect noise only when the potential-outcome errors of a
single unit are independent.  Negatively coupled errors make the true
effect spread wider than W's and the interval undercovers; that tradeoff
is deliberate and the benchmarks measure it.  The residual sample size
m = min(|treated residual fold|, |control residual fold|) controls the
calibration error at the usual m^(-1/2) rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .conformal import IntervalMap, MethodError
from .dgp import Dataset, ObservedData, ScenarioConfig, gen_dataset, surface_eval
from .learners import LearnerConfig, fit_mean
from .rng import derive_seed, substream

__all__ = [
    "SplitPairConfig",
    "SplitIndices",
    "PairedResiduals",
    "RatePoint",
    "stratified_split",
    "paired_residuals",
    "pair_quantiles",
    "build_interval",
    "rate_experiment",
]


@dataclass(frozen=True)
class SplitPairConfig:
    alpha: float = 0.1
    train_fraction: float = 0.5
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class SplitIndices:
    """Treatment-stratified split: fitting fold plus per-arm residual folds."""

    fit: np.ndarray
    residual_treated: np.ndarray
    residual_control: np.ndarray


@dataclass(frozen=True)
class PairedResiduals:
    """The paired differences W plus the pairing that produced them."""

    w: np.ndarray
    treated_index: np.ndarray
    control_index: np.ndarray

    def __len__(self) -> int:
        return len(self.w)


@dataclass(frozen=True)
class RatePoint:
    n_train: int
    m_mean: float
    mean_abs_cov_error: float


def stratified_split(t: np.ndarray, train_fraction: float,
                     rng: np.random.Generator) -> SplitIndices:
    """Take floor(train_fraction * arm size) units per arm into the fitting fold."""
    t = np.asarray(t)
    treated = np.flatnonzero(t == 1)
    control = np.flatnonzero(t == 0)
    if len(treated) == 0 or len(control) == 0:
        raise MethodError("split-pair needs units in both arms")
    treated = treated[rng.permutation(len(treated))]
    control = control[rng.permutation(len(control))]
    n1 = int(np.floor(train_fraction * len(treated) + 1e-9))
    n0 = int(np.floor(train_fraction * len(control) + 1e-9))
    fit = np.sort(np.concatenate([treated[:n1], control[:n0]]))
    return SplitIndices(fit=fit,
                        residual_treated=np.sort(treated[n1:]),
                        residual_control=np.sort(control[n0:]))


def paired_residuals(res_treated: np.ndarray, res_control: np.ndarray,
                     rng: np.random.Generator) -> PairedResiduals:
    """Pair m = min(sizes) residuals from each arm, without replacement."""
    m = min(len(res_treated), len(res_control))
    if m == 0:
        raise MethodError("no residuals to pair in one of the arms")
    i = rng.permutation(len(res_treated))[:m]
    j = rng.permutation(len(res_control))[:m]
    return PairedResiduals(w=res_treated[i] - res_control[j],
                           treated_index=i, control_index=j)


def pair_quantiles(w: np.ndarray, alpha: float) -> tuple[float, float]:
    """Empirical alpha/2 and 1 - alpha/2 quantiles of the paired differences.

    Order-statistic convention: lower endpoint is the
    (floor(alpha/2 * m) + 1)-th smallest, upper is the
    ceil((1 - alpha/2) * m)-th smallest, both clipped into [1, m].
    """
    m = len(w)
    if m == 0:
        raise MethodError("empty residual-difference sample")
    ws = np.sort(w)
    k_lo = int(np.floor(alpha / 2.0 * m + 1e-9)) + 1
    k_hi = int(np.ceil((1.0 - alpha / 2.0) * m - 1e-9))
    k_lo = min(max(k_lo, 1), m)
    k_hi = min(max(k_hi, 1), m)
    return float(ws[k_lo - 1]), float(ws[k_hi - 1])


def build_interval(obs: ObservedData, cfg: SplitPairConfig,
                   mu_override=None) -> IntervalMap:
    """Build the split-and-pair interval map from observed data.

    ``mu_override``, if given, is a pair of callables (mu1, mu0) used in
    place of fitted surfaces; the rate experiments use it to isolate the
    pairing error from the regression error.
    """
    split = stratified_split(obs.t, cfg.train_fraction, substream(cfg.seed, "sp-split"))
    if len(split.residual_treated) == 0 or len(split.residual_control) == 0:
        raise MethodError("empty residual fold")

    if mu_override is not None:
        mu1_fn, mu0_fn = mu_override
    else:
        fit_t = split.fit[obs.t[split.fit] == 1]
        fit_c = split.fit[obs.t[split.fit] == 0]
        if len(fit_t) < 2 or len(fit_c) < 2:
            raise MethodError("fitting fold lacks one arm")
        mu1_fn = fit_mean(obs.x[fit_t], obs.y[fit_t],
                          replace(cfg.learner, seed=derive_seed(cfg.seed, "mu1"))).predict
        mu0_fn = fit_mean(obs.x[fit_c], obs.y[fit_c],
                          replace(cfg.learner, seed=derive_seed(cfg.seed, "mu0"))).predict

    r1 = obs.y[split.residual_treated] - mu1_fn(obs.x[split.residual_treated])
    r0 = obs.y[split.residual_control] - mu0_fn(obs.x[split.residual_control])
    pairs = paired_residuals(r1, r0, substream(cfg.seed, "sp-pairing"))
    q_lo, q_hi = pair_quantiles(pairs.w, cfg.alpha)

    meta = {
        "method": "split_pair",
        "alpha": cfg.alpha,
        "m": len(pairs),
        "q_lo": q_lo,
        "q_hi": q_hi,
        "flags": ("tiny_residual_sample",) if len(pairs) * cfg.alpha < 2.0 else (),
    }

    def bounds(x):
        tau = mu1_fn(x) - mu0_fn(x)
        return tau + q_lo, tau + q_hi

    return IntervalMap(bounds, meta)


def rate_experiment(base: ScenarioConfig, n_grid, reps: int, alpha: float = 0.1,
                    master_seed: int = 0, oracle_mu: bool = False,
                    learner: LearnerConfig = LearnerConfig()) -> list[RatePoint]:
    """Coverage error of the split-pair interval along a sample-size grid.

    For each n the scenario is redrawn ``reps`` times, the interval is
    rebuilt, and |empirical coverage - (1 - alpha)| is averaged.  With
    ``oracle_mu`` the true surfaces replace the fitted ones, so the whole
    error comes from the m^(-1/2) pairing/quantile step and halving it
    needs roughly four times the data.
    """
    points = []
    for n in n_grid:
        errs = []
        ms = []
        for rep in range(reps):
            train_cfg = replace(base, n_train=int(n),
                                seed=derive_seed(master_seed, "rate-train", n, rep))
            test_cfg = replace(base, n_train=base.n_test,
                               seed=derive_seed(master_seed, "rate-test", n, rep))
            train = gen_dataset(train_cfg)
            test = gen_dataset(test_cfg)
            override = None
            if oracle_mu:
                override = (lambda xq, c=train_cfg: surface_eval(c, xq)[0],
                            lambda xq, c=train_cfg: surface_eval(c, xq)[1])
            cfg = SplitPairConfig(alpha=alpha, learner=learner,
                                  seed=derive_seed(master_seed, "rate-build", n, rep))
            imap = build_interval(train.observed(), cfg, mu_override=override)
            lo, hi = imap.bounds(test.x)
            delta = test.delta
            cov = float(np.mean((lo <= delta) & (delta <= hi)))
            errs.append(abs(cov - (1.0 - alpha)))
            ms.append(imap.meta["m"])
        points.append(RatePoint(n_train=int(n), m_mean=float(np.mean(ms)),
                                mean_abs_cov_error=float(np.mean(errs))))
    return points
