"""Boosted-tree learners for means, quantiles, and propensities.

One engine, three losses (squared, pinball, logistic), all behind a small
config so every consumer fits models the same way.  Fits are deterministic
in (data, config).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from sklearn.ensemble import GradientBoostingClassifier, GradientBoostingRegressor

__all__ = [
    "PROPENSITY_CLIP",
    "LearnerConfig",
    "FittedModel",
    "fit_mean",
    "fit_quantile",
    "fit_propensity",
    "predict_quantile_pair",
    "training_loss_path",
]

PROPENSITY_CLIP = 0.01


@dataclass(frozen=True)
class LearnerConfig:
    n_rounds: int = 300
    max_depth: int = 2
    learning_rate: float = 0.1
    min_leaf: int = 10
    subsample: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 1 or self.max_depth < 1 or self.min_leaf < 1:
            raise ValueError("tree dimensions must be positive")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must lie in (0, 1]")


@dataclass
class FittedModel:
    """A fitted learner: kind, the tree ensemble, and a training fingerprint."""

    kind: str
    estimator: object
    fingerprint: str
    level: float | None = None

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "propensity":
            prob = self.estimator.predict_proba(x)[:, 1]
            return np.clip(prob, PROPENSITY_CLIP, 1.0 - PROPENSITY_CLIP)
        return self.estimator.predict(x)


def _check_xy(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2:
        raise ValueError("x must be 2-dimensional")
    if y.shape != (len(x),):
        raise ValueError("y must be one value per row of x")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("learner inputs must be finite (no NaN/inf)")
    return x, y


def _fingerprint(kind: str, cfg: LearnerConfig, x: np.ndarray, y: np.ndarray,
                 level: float | None) -> str:
    h = hashlib.blake2s(digest_size=16)
    h.update(f"{kind}|{level}|{cfg}".encode())
    h.update(x.tobytes())
    h.update(np.ascontiguousarray(y).tobytes())
    return h.hexdigest()


def _fit_boosted(factory, x, y, cfg: LearnerConfig):
    """Fit with a data-driven round count, then refit on all rows.

    A probe fit holds out a fifth of the rows and stops once fifteen
    consecutive rounds fail to improve the held-out loss; the final model
    is refit on every row with the round count the probe settled on.
    Unchecked boosting memorizes small noisy folds, which distorts
    residual spreads everywhere downstream; the refit step returns the
    held-out rows to the model so smooth-signal fits lose nothing.
    """
    probe = factory(cfg.n_rounds)
    probe.set_params(validation_fraction=0.2, n_iter_no_change=15, tol=0.0)
    probe.fit(x, y)
    final = factory(int(probe.n_estimators_))
    final.fit(x, y)
    return final


def fit_mean(x: np.ndarray, y: np.ndarray, cfg: LearnerConfig = LearnerConfig()) -> FittedModel:
    """Squared-loss boosted regression of y on x."""
    x, y = _check_xy(x, y)

    def factory(rounds):
        return GradientBoostingRegressor(
            loss="squared_error",
            n_estimators=rounds,
            max_depth=cfg.max_depth,
            learning_rate=cfg.learning_rate,
            min_samples_leaf=cfg.min_leaf,
            subsample=cfg.subsample,
            random_state=cfg.seed,
        )

    est = _fit_boosted(factory, x, y, cfg)
    return FittedModel("mean", est, _fingerprint("mean", cfg, x, y, None))


def fit_quantile(x: np.ndarray, y: np.ndarray, level: float,
                 cfg: LearnerConfig = LearnerConfig()) -> FittedModel:
    """Pinball-loss boosted regression targeting the given conditional quantile."""
    x, y = _check_xy(x, y)
    if not 0.0 < level < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")

    def factory(rounds):
        return GradientBoostingRegressor(
            loss="quantile",
            alpha=level,
            n_estimators=rounds,
            max_depth=cfg.max_depth,
            learning_rate=cfg.learning_rate,
            min_samples_leaf=cfg.min_leaf,
            subsample=cfg.subsample,
            random_state=cfg.seed,
        )

    est = _fit_boosted(factory, x, y, cfg)
    return FittedModel("quantile", est, _fingerprint("quantile", cfg, x, y, level), level=level)


def fit_propensity(x: np.ndarray, t: np.ndarray, cfg: LearnerConfig = LearnerConfig()) -> FittedModel:
    """Logistic boosted classifier for P(T=1 | x); predictions are clipped.

    Predictions land in [0.01, 0.99] so downstream inverse weights stay
    bounded by 100 even when the classifier saturates.  When the
    treatment carries no covariate signal, unchecked logistic boosting
    drives probabilities toward the clip boundaries, and the resulting
    phantom weights would dominate every inverse-propensity consumer;
    the adaptive round count keeps such fits close to the class rate.
    """
    x, t = _check_xy(x, np.asarray(t, dtype=float))
    if not set(np.unique(t)) <= {0.0, 1.0}:
        raise ValueError("treatment labels must be binary")
    if len(np.unique(t)) < 2:
        raise ValueError("propensity fit requires both arms present")

    def factory(rounds):
        return GradientBoostingClassifier(
            n_estimators=rounds,
            max_depth=cfg.max_depth,
            learning_rate=cfg.learning_rate,
            min_samples_leaf=cfg.min_leaf,
            subsample=cfg.subsample,
            random_state=cfg.seed,
        )

    est = _fit_boosted(factory, x, t.astype(int), cfg)
    return FittedModel("propensity", est, _fingerprint("propensity", cfg, x, t, None))


def predict_quantile_pair(lo_model: FittedModel, hi_model: FittedModel,
                          x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Predict a (lower, upper) quantile pair with pointwise crossing repair."""
    a = lo_model.predict(x)
    b = hi_model.predict(x)
    return np.minimum(a, b), np.maximum(a, b)


def training_loss_path(model: FittedModel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-round loss of the staged ensemble on (x, y).

    Used by the invariant tests: with full-batch fitting the path must be
    nonincreasing round over round.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    est = model.estimator
    losses = []
    if model.kind == "propensity":
        for proba in est.staged_predict_proba(x):
            p = np.clip(proba[:, 1], 1e-12, 1.0 - 1e-12)
            losses.append(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
    elif model.kind == "quantile":
        tau = model.level
        for pred in est.staged_predict(x):
            r = y - pred
            losses.append(np.mean(np.where(r >= 0.0, tau * r, (tau - 1.0) * r)))
    else:
        for pred in est.staged_predict(x):
            losses.append(np.mean((y - pred) ** 2))
    return np.asarray(losses)
