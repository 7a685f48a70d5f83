"""Weighted split-conformal machinery and conformal treatment-effect baselines.

The building block is split CQR under covariate shift: fit a pair of
conditional-quantile models on one half of the data, score the other half
with max(lo - y, y - hi), and calibrate the score threshold with a
weighted quantile whose weights are likelihood ratios between the
calibration population and the deployment population.  The test point
itself contributes an atom at +infinity, so the threshold (and hence the
interval) can be infinite when the effective calibration mass is too
small; callers see that as an explicit flag plus infinite endpoints, never
as a silent clamp.

On top of the block sit four ways to turn per-arm uncertainty into an
effect interval:

* ``naive_ite``        difference of two per-arm intervals at level
                       1 - alpha/2 each (Bonferroni);
* ``nested_inexact_ite``  per-unit in-study effect intervals whose
                       endpoints are regressed on x; no guarantee, and the
                       uninformative-covariate setting exposes a coverage
                       gap that no sample size repairs;
* ``nested_exact_ite`` the same first stage plus a second conformalization
                       over interval-valued data, spending alpha/2 + gamma;
* ``metalearner_ite``  split CQR on inverse-propensity or doubly robust
                       pseudo-outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dgp import ObservedData
from .learners import (
    LearnerConfig,
    fit_mean,
    fit_propensity,
    fit_quantile,
    predict_quantile_pair,
)
from .rng import derive_seed, substream

__all__ = [
    "MethodError",
    "Interval",
    "IntervalMap",
    "MethodConfig",
    "cqr_score",
    "weighted_quantile",
    "counterfactual_interval",
    "naive_ite",
    "nested_inexact_ite",
    "nested_exact_ite",
    "pseudo_outcome",
    "metalearner_ite",
]

_SLACK = 1e-9  # relative slack so float cumulation matches exact-rational cutoffs

METHOD_NAMES = ("naive", "nested_inexact", "nested_exact", "dr", "ipw", "split_pair")


class MethodError(RuntimeError):
    """An interval method could not be built from the data it was given."""


@dataclass(frozen=True)
class Interval:
    """Closed interval, possibly unbounded on either side."""

    lo: float
    hi: float

    def __post_init__(self):
        if np.isnan(self.lo) or np.isnan(self.hi):
            raise ValueError("interval endpoints cannot be NaN")
        if self.lo > self.hi:
            raise ValueError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, v: float) -> bool:
        return bool(self.lo <= v <= self.hi)


class IntervalMap:
    """Vectorized map x -> [lo(x), hi(x)] with build metadata attached."""

    def __init__(self, bounds_fn, meta: dict | None = None):
        self._bounds_fn = bounds_fn
        self.meta = dict(meta or {})

    def bounds(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lo, hi = self._bounds_fn(x)
        return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)

    def __call__(self, point) -> Interval:
        lo, hi = self.bounds(np.asarray(point, dtype=float).reshape(1, -1))
        return Interval(float(lo[0]), float(hi[0]))

    @property
    def flags(self) -> tuple[str, ...]:
        return tuple(self.meta.get("flags", ()))


def _full_line_map(meta: dict) -> IntervalMap:
    def bounds(x):
        n = len(x)
        return np.full(n, -np.inf), np.full(n, np.inf)

    return IntervalMap(bounds, meta)


@dataclass(frozen=True)
class MethodConfig:
    """Which effect-interval method to build and with what budget.

    ``alpha`` is the total nominal miscoverage (target level 1 - alpha).
    ``gamma`` is the second-stage budget of the exact nested method and
    defaults to alpha/2, leaving alpha/2 for its first stage.  The naive
    method and both nested methods spend alpha/2 on each first-stage
    counterfactual interval.

    ``meta_score`` selects the pseudo-outcome nonconformity for dr/ipw:
    "residual" centers on a mean fit and calibrates absolute residuals,
    "cqr" calibrates a quantile-pair band instead.

    ``propensity_learner`` configures the treatment classifier separately
    from the outcome learner and defaults to additive (depth-1) boosting:
    inverse-propensity weights punish spurious interaction structure far
    more than outcome fits do, so the propensity default trades
    expressiveness for stability.
    """

    method: str
    alpha: float = 0.1
    gamma: float | None = None
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    propensity_learner: LearnerConfig = field(
        default_factory=lambda: LearnerConfig(max_depth=1))
    propensity_mode: str = "estimated"
    meta_score: str = "residual"
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHOD_NAMES:
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.gamma is not None and not 0.0 < self.gamma < self.alpha:
            raise ValueError("gamma must lie in (0, alpha)")
        if self.propensity_mode not in ("estimated", "oracle"):
            raise ValueError(f"unknown propensity mode {self.propensity_mode!r}")
        if self.meta_score not in ("residual", "cqr"):
            raise ValueError(f"unknown meta score {self.meta_score!r}")


def cqr_score(y, lo, hi):
    """Interval nonconformity max(lo - y, y - hi).

    Nonpositive exactly when y sits inside [lo, hi]; adding s to both
    sides of the interval covers y exactly when the score is <= s.
    """
    y = np.asarray(y, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ValueError("cqr_score requires lo <= hi")
    return np.maximum(lo - y, y - hi)


def weighted_quantile(values, weights, level: float, tail_mass_at_infinity: float = 0.0) -> float:
    """Smallest v with normalized cumulative weight >= level.

    An extra atom of mass ``tail_mass_at_infinity`` sits at +infinity; if
    the finite mass cannot reach the level the result is +inf.  With
    uniform weights and an infinity atom of 1/(n+1) this reproduces the
    ceil((n+1) * level)-th order statistic used by split conformal.
    Cumulative comparisons get a 1e-9 relative slack so that float
    round-off cannot push a cutoff past an exactly attained weight.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.shape != weights.shape or values.ndim != 1:
        raise ValueError("values and weights must be 1-d and aligned")
    if not np.isfinite(values).all():
        raise ValueError("values must be finite")
    if not np.isfinite(weights).all() or np.any(weights < 0.0):
        raise ValueError("weights must be finite and nonnegative")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if tail_mass_at_infinity < 0.0:
        raise ValueError("tail mass must be nonnegative")
    total = float(weights.sum() + tail_mass_at_infinity)
    if total <= 0.0:
        raise ValueError("total mass must be positive")
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    need = level * total - _SLACK * total
    idx = int(np.searchsorted(cum, need, side="left"))
    if idx >= len(values):
        return float("inf")
    return float(values[order][idx])


def _thresholds(scores_sorted: np.ndarray, cumw: np.ndarray, level: float,
                tail: np.ndarray) -> np.ndarray:
    """Vectorized weighted-quantile thresholds, one per test-point tail mass."""
    if len(scores_sorted) == 0:
        return np.full(len(tail), np.inf)
    total = cumw[-1] + tail
    need = level * total - _SLACK * total
    idx = np.searchsorted(cumw, need, side="left")
    out = np.where(idx < len(scores_sorted),
                   scores_sorted[np.minimum(idx, len(scores_sorted) - 1)],
                   np.inf)
    return out


class _WeightedCQR:
    """One arm's calibrated quantile band, reusable across test points."""

    def __init__(self, lo_model, hi_model, scores, weights, level):
        order = np.argsort(scores, kind="stable")
        self.scores = scores[order]
        self.cumw = np.cumsum(weights[order])
        self.lo_model = lo_model
        self.hi_model = hi_model
        self.level = level
        self.n_cal = len(scores)

    def bounds(self, x: np.ndarray, w_test: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        qlo, qhi = predict_quantile_pair(self.lo_model, self.hi_model, x)
        eta = _thresholds(self.scores, self.cumw, self.level, w_test)
        return qlo - eta, qhi + eta


def _stratified_halves(t: np.ndarray, rng: np.random.Generator,
                       fractions=(0.5, 0.5)) -> list[np.ndarray]:
    """Split indices into folds, preserving each arm's share in every fold."""
    folds = [[] for _ in fractions]
    for arm in (0, 1):
        idx = np.flatnonzero(t == arm)
        idx = idx[rng.permutation(len(idx))]
        edges = np.floor(np.cumsum(np.asarray(fractions)) * len(idx) + 1e-9).astype(int)
        start = 0
        for k, stop in enumerate(edges):
            folds[k].append(idx[start:stop])
            start = stop
    return [np.sort(np.concatenate(parts)) for parts in folds]


def _population_weight(e: np.ndarray, arm: int) -> np.ndarray:
    # Calibration units observed in `arm`, deployed on the full population.
    return 1.0 / e if arm == 1 else 1.0 / (1.0 - e)


def _opposite_weight(e: np.ndarray, arm: int) -> np.ndarray:
    # Calibration units observed in `arm`, deployed on the other arm's units.
    return (1.0 - e) / e if arm == 1 else e / (1.0 - e)


def _propensity_fn(obs_fit: ObservedData, mode: str, oracle, learner: LearnerConfig, seed: int):
    if mode == "oracle":
        if oracle is None:
            raise MethodError("oracle propensity mode requires a propensity function")
        return lambda x: np.clip(np.asarray(oracle(x), dtype=float), 1e-6, 1.0 - 1e-6)
    try:
        model = fit_propensity(obs_fit.x, obs_fit.t,
                               replace(learner, seed=derive_seed(seed, "propensity")))
    except ValueError as exc:
        # e.g. an arm too thin for the internal validation split
        raise MethodError(f"propensity fit failed: {exc}") from exc
    return model.predict


def _fit_arm_machine(obs: ObservedData, fit_idx: np.ndarray, cal_idx: np.ndarray,
                     arm: int, miscover: float, learner: LearnerConfig,
                     weight_of, seed: int) -> _WeightedCQR:
    fit_arm = fit_idx[obs.t[fit_idx] == arm]
    cal_arm = cal_idx[obs.t[cal_idx] == arm]
    if len(fit_arm) < 5 or len(cal_arm) < 1:
        raise MethodError(f"arm {arm} too small after splitting "
                          f"(fit {len(fit_arm)}, cal {len(cal_arm)})")
    lo_model = fit_quantile(obs.x[fit_arm], obs.y[fit_arm], miscover / 2.0,
                            replace(learner, seed=derive_seed(seed, "qlo", arm)))
    hi_model = fit_quantile(obs.x[fit_arm], obs.y[fit_arm], 1.0 - miscover / 2.0,
                            replace(learner, seed=derive_seed(seed, "qhi", arm)))
    qlo, qhi = predict_quantile_pair(lo_model, hi_model, obs.x[cal_arm])
    scores = cqr_score(obs.y[cal_arm], qlo, qhi)
    weights = weight_of(obs.x[cal_arm])
    return _WeightedCQR(lo_model, hi_model, scores, weights, 1.0 - miscover)


def _degenerate_flags(machines: dict, miscover: float) -> tuple[str, ...]:
    flags = []
    for arm, machine in machines.items():
        if (machine.n_cal + 1) * miscover < 1.0:
            flags.append(f"arm{arm}_calibration_too_small")
    return tuple(flags)


def counterfactual_interval(obs: ObservedData, target_arm: int, alpha: float,
                            learner: LearnerConfig = LearnerConfig(),
                            propensity_mode: str = "estimated",
                            oracle_propensity=None, seed: int = 0,
                            propensity_learner: LearnerConfig | None = None) -> IntervalMap:
    """Interval for the potential outcome Y(target_arm) of a population draw.

    Split CQR on arm-``target_arm`` units with likelihood-ratio weights
    1/e(x) (treated arm) or 1/(1-e(x)) (control arm), the test point
    entering as an atom at +infinity with its own weight.
    """
    if target_arm not in (0, 1):
        raise ValueError("target_arm must be 0 or 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    rng = substream(seed, "cf-split")
    fit_idx, cal_idx = _stratified_halves(obs.t, rng)
    if propensity_learner is None:
        propensity_learner = LearnerConfig(max_depth=1)
    prop = _propensity_fn(
        ObservedData(obs.x[fit_idx], obs.t[fit_idx], obs.y[fit_idx]),
        propensity_mode, oracle_propensity, propensity_learner, seed)
    machine = _fit_arm_machine(obs, fit_idx, cal_idx, target_arm, alpha,
                               learner, lambda xc: _population_weight(prop(xc), target_arm),
                               seed)
    meta = {
        "method": f"counterfactual_arm{target_arm}",
        "alpha": alpha,
        "n_cal": machine.n_cal,
        "flags": _degenerate_flags({target_arm: machine}, alpha),
    }

    def bounds(x):
        w = _population_weight(prop(x), target_arm)
        return machine.bounds(x, w)

    return IntervalMap(bounds, meta)


def naive_ite(obs: ObservedData, cfg: MethodConfig, oracle_propensity=None) -> IntervalMap:
    """Difference of per-arm counterfactual intervals, alpha/2 per arm.

    [lo1 - hi0, hi1 - lo0] covers Y(1) - Y(0) whenever both per-arm
    intervals cover, hence the Bonferroni budget.  Valid without any
    assumption on the joint error law, and wide for the same reason.
    """
    per_arm = cfg.alpha / 2.0
    rng = substream(cfg.seed, "naive-split")
    fit_idx, cal_idx = _stratified_halves(obs.t, rng)
    prop = _propensity_fn(
        ObservedData(obs.x[fit_idx], obs.t[fit_idx], obs.y[fit_idx]),
        cfg.propensity_mode, oracle_propensity, cfg.propensity_learner, cfg.seed)
    machines = {
        arm: _fit_arm_machine(obs, fit_idx, cal_idx, arm, per_arm, cfg.learner,
                              lambda xc, a=arm: _population_weight(prop(xc), a),
                              derive_seed(cfg.seed, "arm", arm))
        for arm in (1, 0)
    }
    meta = {
        "method": "naive",
        "alpha": cfg.alpha,
        "budget": {"per_arm_alpha": per_arm},
        "n_cal": {arm: m.n_cal for arm, m in machines.items()},
        "flags": _degenerate_flags(machines, per_arm),
    }

    def bounds(x):
        e = prop(x)
        lo1, hi1 = machines[1].bounds(x, _population_weight(e, 1))
        lo0, hi0 = machines[0].bounds(x, _population_weight(e, 0))
        return lo1 - hi0, hi1 - lo0

    return IntervalMap(bounds, meta)


def _in_study_intervals(obs: ObservedData, build_idx: np.ndarray, miscover: float,
                        cfg: MethodConfig, oracle_propensity, seed: int):
    """First stage of the nested methods.

    From ``build_idx`` units, construct per-arm counterfactual machinery
    targeted at the *opposite* arm's covariate law, and return a closure
    that turns any in-study unit (x, t, y) into an effect interval by
    subtracting the missing counterfactual's interval from the observed
    outcome.
    """
    rng = substream(seed, "nested-fold1")
    fit_idx, cal_idx = _stratified_halves(obs.t[build_idx], rng)
    fit_idx, cal_idx = build_idx[fit_idx], build_idx[cal_idx]
    prop = _propensity_fn(
        ObservedData(obs.x[fit_idx], obs.t[fit_idx], obs.y[fit_idx]),
        cfg.propensity_mode, oracle_propensity, cfg.propensity_learner, seed)
    machines = {
        arm: _fit_arm_machine(obs, fit_idx, cal_idx, arm, miscover, cfg.learner,
                              lambda xc, a=arm: _opposite_weight(prop(xc), a),
                              derive_seed(seed, "stage1", arm))
        for arm in (0, 1)
    }

    def intervals_for(x: np.ndarray, t: np.ndarray, y: np.ndarray):
        lo = np.empty(len(y))
        hi = np.empty(len(y))
        treated = t == 1
        if treated.any():
            e = prop(x[treated])
            lo0, hi0 = machines[0].bounds(x[treated], _opposite_weight(e, 0))
            lo[treated] = y[treated] - hi0
            hi[treated] = y[treated] - lo0
        if (~treated).any():
            e = prop(x[~treated])
            lo1, hi1 = machines[1].bounds(x[~treated], _opposite_weight(e, 1))
            lo[~treated] = lo1 - y[~treated]
            hi[~treated] = hi1 - y[~treated]
        return lo, hi

    return intervals_for, machines


def _endpoint_regressions(x: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                          learner: LearnerConfig, seed: int):
    lo_model = fit_mean(x, lo, replace(learner, seed=derive_seed(seed, "lo")))
    hi_model = fit_mean(x, hi, replace(learner, seed=derive_seed(seed, "hi")))

    def predict(xq):
        a = lo_model.predict(xq)
        b = hi_model.predict(xq)
        return np.minimum(a, b), np.maximum(a, b)

    return predict


def nested_inexact_ite(obs: ObservedData, cfg: MethodConfig, oracle_propensity=None,
                       first_stage=None) -> IntervalMap:
    """In-study effect intervals smoothed by endpoint regression.

    The first stage spends alpha / 2 on each in-study unit's missing
    counterfactual, mirroring the per-arm budget of the other two-stage
    builders.  Regressing the endpoints transfers those intervals to new
    units, for which *both* potential outcomes are unknown; nothing
    accounts for the extra spread, which is the source of this method's
    systematic gap.

    ``first_stage`` optionally replaces the built-in counterfactual
    machinery with a callable (x, t, y) -> (lo, hi); the analytic checks
    use it to supply exact per-unit intervals.
    """
    first_alpha = cfg.alpha / 2.0
    rng = substream(cfg.seed, "nested-inexact")
    fold1, fold2 = _stratified_halves(obs.t, rng)
    meta = {"method": "nested_inexact", "alpha": cfg.alpha,
            "budget": {"first_stage_alpha": first_alpha}, "flags": ()}
    if first_stage is None:
        intervals_for, machines = _in_study_intervals(
            obs, fold1, first_alpha, cfg, oracle_propensity, derive_seed(cfg.seed, "fs"))
        meta["flags"] = _degenerate_flags(machines, first_alpha)
    else:
        intervals_for = first_stage
    lo2, hi2 = intervals_for(obs.x[fold2], obs.t[fold2], obs.y[fold2])
    # Units whose missing-arm interval came back unbounded carry no endpoint
    # information; they are left out of the regression and only counted.
    finite2 = np.isfinite(lo2) & np.isfinite(hi2)
    meta["first_stage_inf_fraction"] = float(np.mean(~finite2))
    if finite2.sum() < max(10, len(finite2) // 2):
        meta["flags"] = meta["flags"] + ("degenerate_first_stage",)
        return _full_line_map(meta)
    predict = _endpoint_regressions(obs.x[fold2][finite2], lo2[finite2], hi2[finite2],
                                    cfg.learner, derive_seed(cfg.seed, "endpoints"))
    return IntervalMap(lambda x: predict(x), meta)


def nested_exact_ite(obs: ObservedData, cfg: MethodConfig, oracle_propensity=None,
                     first_stage=None) -> IntervalMap:
    """Endpoint regression wrapped in a second conformalization.

    The first stage spends alpha - gamma on in-study intervals; the
    second stage treats those intervals as data and conformalizes the
    regressed band outward with score max(Lhat(x) - L, U - Uhat(x)) at
    level 1 - gamma, restoring a finite-sample guarantee at the price of
    containing a whole interval rather than a point.
    """
    gamma = cfg.gamma if cfg.gamma is not None else cfg.alpha / 2.0
    first_alpha = cfg.alpha - gamma
    if first_alpha <= 0.0:
        raise MethodError("nested_exact needs gamma < alpha")
    rng = substream(cfg.seed, "nested-exact")
    fold1, fold2, fold3 = _stratified_halves(obs.t, rng, fractions=(0.5, 0.25, 0.25))
    meta = {"method": "nested_exact", "alpha": cfg.alpha,
            "budget": {"first_stage_alpha": first_alpha, "gamma": gamma,
                       "total": cfg.alpha},
            "flags": ()}
    if first_stage is None:
        intervals_for, machines = _in_study_intervals(
            obs, fold1, first_alpha, cfg, oracle_propensity, derive_seed(cfg.seed, "fs"))
        meta["flags"] = _degenerate_flags(machines, first_alpha)
    else:
        intervals_for = first_stage
    lo2, hi2 = intervals_for(obs.x[fold2], obs.t[fold2], obs.y[fold2])
    lo3, hi3 = intervals_for(obs.x[fold3], obs.t[fold3], obs.y[fold3])
    finite2 = np.isfinite(lo2) & np.isfinite(hi2)
    meta["first_stage_inf_fraction"] = float(np.mean(~finite2))
    if finite2.sum() < max(10, len(finite2) // 2):
        meta["flags"] = meta["flags"] + ("degenerate_first_stage",)
        return _full_line_map(meta)
    predict = _endpoint_regressions(obs.x[fold2][finite2], lo2[finite2], hi2[finite2],
                                    cfg.learner, derive_seed(cfg.seed, "endpoints"))
    plo3, phi3 = predict(obs.x[fold3])
    scores = np.maximum(plo3 - lo3, hi3 - phi3)
    # An unbounded first-stage interval can never be contained by a finite
    # band: its score is an atom at +infinity, pooled with the test atom.
    finite3 = np.isfinite(scores)
    grow = weighted_quantile(scores[finite3], np.ones(int(finite3.sum())),
                             1.0 - gamma,
                             tail_mass_at_infinity=1.0 + float((~finite3).sum()))
    meta["n_cal"] = len(scores)
    if not np.isfinite(grow):
        meta["flags"] = meta["flags"] + ("degenerate_second_stage",)
        return _full_line_map(meta)

    def bounds(x):
        lo, hi = predict(x)
        return lo - grow, hi + grow

    return IntervalMap(bounds, meta)


def pseudo_outcome(y, t, e, mu1=None, mu0=None, kind: str = "dr") -> np.ndarray:
    """Unbiased effect proxies built from observables.

    ``ipw``: (t/e - (1-t)/(1-e)) * y.
    ``dr``:  mu1 - mu0 + t (y - mu1)/e - (1-t) (y - mu0)/(1-e).

    With the true nuisances both have conditional mean tau(x); dr with
    mu1 = mu0 = 0 reduces to ipw identically.
    """
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    e = np.asarray(e, dtype=float)
    if np.any(e <= 0.0) or np.any(e >= 1.0):
        raise ValueError("propensities must lie strictly inside (0, 1)")
    if kind == "ipw":
        return (t / e - (1.0 - t) / (1.0 - e)) * y
    if kind != "dr":
        raise ValueError(f"unknown pseudo-outcome kind {kind!r}")
    if mu1 is None or mu0 is None:
        raise ValueError("dr pseudo-outcomes need both outcome surfaces")
    mu1 = np.asarray(mu1, dtype=float)
    mu0 = np.asarray(mu0, dtype=float)
    return mu1 - mu0 + t * (y - mu1) / e - (1.0 - t) * (y - mu0) / (1.0 - e)


def metalearner_ite(obs: ObservedData, cfg: MethodConfig, oracle_propensity=None) -> IntervalMap:
    """Split conformal on pseudo-outcomes (cfg.method picks "dr" or "ipw").

    Nuisances come from one fold; pseudo-outcomes on the other fold are
    then ordinary scalar targets, so the final stage is unweighted split
    conformal: a median fit with absolute-residual calibration by
    default, or a CQR band when cfg.meta_score asks for it.  Valid for
    the pseudo-outcome distribution; whether that transfers to the
    effect itself depends on how the pseudo-outcome's spread compares
    with the effect's, which is exactly what the stochastic-order
    diagnostics interrogate.
    """
    kind = cfg.method
    if kind not in ("dr", "ipw"):
        raise ValueError("metalearner_ite builds only dr or ipw configs")
    rng = substream(cfg.seed, "meta-split")
    nuis_idx, rest = _stratified_halves(obs.t, rng)
    prop = _propensity_fn(
        ObservedData(obs.x[nuis_idx], obs.t[nuis_idx], obs.y[nuis_idx]),
        cfg.propensity_mode, oracle_propensity, cfg.propensity_learner, cfg.seed)
    mu1_fn = mu0_fn = None
    if kind == "dr":
        treated = nuis_idx[obs.t[nuis_idx] == 1]
        control = nuis_idx[obs.t[nuis_idx] == 0]
        if len(treated) < 5 or len(control) < 5:
            raise MethodError("dr nuisance fold lacks one arm")
        mu1_fn = fit_mean(obs.x[treated], obs.y[treated],
                          replace(cfg.learner, seed=derive_seed(cfg.seed, "mu1"))).predict
        mu0_fn = fit_mean(obs.x[control], obs.y[control],
                          replace(cfg.learner, seed=derive_seed(cfg.seed, "mu0"))).predict

    sub = substream(cfg.seed, "meta-cal")
    fit_idx, cal_idx = _stratified_halves(obs.t[rest], sub)
    fit_idx, cal_idx = rest[fit_idx], rest[cal_idx]
    if len(fit_idx) < 5 or len(cal_idx) < 1:
        raise MethodError("pseudo-outcome folds too small")

    def phi(idx):
        e = prop(obs.x[idx])
        mu1 = mu1_fn(obs.x[idx]) if mu1_fn is not None else None
        mu0 = mu0_fn(obs.x[idx]) if mu0_fn is not None else None
        return pseudo_outcome(obs.y[idx], obs.t[idx], e, mu1, mu0, kind=kind)

    phi_fit = phi(fit_idx)
    phi_cal = phi(cal_idx)
    if cfg.meta_score == "cqr":
        lo_model = fit_quantile(obs.x[fit_idx], phi_fit, cfg.alpha / 2.0,
                                replace(cfg.learner, seed=derive_seed(cfg.seed, "qlo")))
        hi_model = fit_quantile(obs.x[fit_idx], phi_fit, 1.0 - cfg.alpha / 2.0,
                                replace(cfg.learner, seed=derive_seed(cfg.seed, "qhi")))
        qlo, qhi = predict_quantile_pair(lo_model, hi_model, obs.x[cal_idx])
        scores = cqr_score(phi_cal, qlo, qhi)
    else:
        # Median center: pseudo-outcomes mix a tight majority component with
        # a 1/e-scaled minority, and a squared-loss center chases the latter.
        center = fit_quantile(obs.x[fit_idx], phi_fit, 0.5,
                              replace(cfg.learner, seed=derive_seed(cfg.seed, "tau")))
        scores = np.abs(phi_cal - center.predict(obs.x[cal_idx]))
    eta = weighted_quantile(scores, np.ones(len(scores)), 1.0 - cfg.alpha,
                            tail_mass_at_infinity=1.0)
    meta = {"method": kind, "alpha": cfg.alpha, "n_cal": len(scores),
            "score": cfg.meta_score, "flags": ()}
    if not np.isfinite(eta):
        meta["flags"] = ("degenerate_calibration",)
        return _full_line_map(meta)

    if cfg.meta_score == "cqr":
        def bounds(x):
            lo, hi = predict_quantile_pair(lo_model, hi_model, x)
            return lo - eta, hi + eta
    else:
        def bounds(x):
            mid = center.predict(x)
            return mid - eta, mid + eta

    return IntervalMap(bounds, meta)
