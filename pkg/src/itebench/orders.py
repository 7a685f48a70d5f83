"""Empirical stochastic-order checks between nonconformity score samples.

Calibrating on pseudo-outcome scores is safe at miscoverage alpha when
the pseudo score's upper tail dominates the oracle score's, quantile by
quantile, at every level below alpha.  These helpers estimate where that
dominance holds: classical first- and second-order dominance and the
increasing-convex (stop-loss) order over an empirical grid, plus the
largest safe calibration level itself.

All checks are one-sided "a dominates b" questions answered with a max
violation and a sampling-noise tolerance; the CDF tolerances come from
the DKW inequality at confidence 0.95.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import pseudo_outcome
from .rng import substream

__all__ = [
    "ScorePair",
    "OrderReport",
    "dkw_band",
    "ecdf_eval",
    "fosd_check",
    "sosd_check",
    "mcx_check",
    "estimate_alpha_star",
    "dr_score_pair",
]

DEFAULT_ALPHA_GRID = np.arange(1, 1000) / 1000.0


@dataclass(frozen=True)
class ScorePair:
    """Aligned samples of pseudo-outcome scores and oracle effect scores."""

    pseudo: np.ndarray
    oracle: np.ndarray

    def __post_init__(self):
        for name in ("pseudo", "oracle"):
            v = getattr(self, name)
            if np.asarray(v).ndim != 1 or len(v) == 0:
                raise ValueError(f"{name} scores must be a nonempty 1-d sample")


@dataclass(frozen=True)
class OrderReport:
    relation: str
    holds: bool
    max_violation: float
    tolerance: float


def dkw_band(n: int, delta: float = 0.05) -> float:
    """Uniform ECDF half-width sqrt(log(2/delta) / (2n))."""
    if n < 1:
        raise ValueError("need at least one observation")
    return float(np.sqrt(np.log(2.0 / delta) / (2.0 * n)))


def ecdf_eval(sample: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Right-continuous empirical CDF of the sample at the grid points."""
    s = np.sort(np.asarray(sample, dtype=float))
    return np.searchsorted(s, grid, side="right") / len(s)


def _pooled_grid(a: np.ndarray, b: np.ndarray, grid: int) -> np.ndarray:
    pooled = np.concatenate([a, b])
    return np.quantile(pooled, np.linspace(0.0, 1.0, grid))


def fosd_check(a, b, grid: int = 512, delta: float = 0.05) -> OrderReport:
    """Does a first-order dominate b, i.e. F_a <= F_b everywhere?

    Evaluated on ``grid`` pooled-sample quantiles; the tolerance is the
    sum of the two DKW bands, so genuine dominance survives sampling
    noise and a real crossing of that size does not.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    xs = _pooled_grid(a, b, grid)
    diff = ecdf_eval(a, xs) - ecdf_eval(b, xs)
    tol = dkw_band(len(a), delta) + dkw_band(len(b), delta)
    violation = float(np.max(diff))
    return OrderReport("fosd", violation <= tol, violation, tol)


def sosd_check(a, b, grid: int = 512, delta: float = 0.05) -> OrderReport:
    """Does a second-order dominate b: integral of (F_b - F_a) >= 0 up to every x?"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    xs = _pooled_grid(a, b, grid)
    diff = ecdf_eval(a, xs) - ecdf_eval(b, xs)
    dx = np.diff(xs)
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (diff[1:] + diff[:-1]) * dx)])
    span = float(xs[-1] - xs[0])
    tol = (dkw_band(len(a), delta) + dkw_band(len(b), delta)) * max(span, 1e-12) / 4.0
    violation = float(np.max(integral))
    return OrderReport("sosd", violation <= tol, violation, tol)


def _stop_loss(sample: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    return np.maximum(sample[None, :] - thresholds[:, None], 0.0).mean(axis=1)


def mcx_check(a, b, grid: int = 512) -> OrderReport:
    """Does a dominate b in the increasing-convex order?

    Equivalent to stop-loss dominance E[(a - t)+] >= E[(b - t)+] at every
    threshold t.  Tolerance is three combined standard errors of the
    stop-loss means, which are largest at the leftmost thresholds.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ts = _pooled_grid(a, b, grid)
    gap = _stop_loss(b, ts) - _stop_loss(a, ts)
    tol = 3.0 * float(np.sqrt(np.var(a) / len(a) + np.var(b) / len(b)))
    violation = float(np.max(gap))
    return OrderReport("mcx", violation <= tol, violation, tol)


def estimate_alpha_star(pair: ScorePair, alphas: np.ndarray | None = None) -> float:
    """Largest calibration level with verified upper-tail quantile dominance.

    Returns the largest alpha in the grid such that for every alpha' <=
    alpha the empirical (1 - alpha')-quantile of the pseudo scores is at
    least the oracle one; 1.0 when dominance holds on the whole grid and
    0.0 when it already fails at the smallest level.
    """
    if alphas is None:
        alphas = DEFAULT_ALPHA_GRID
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas <= 0.0) or np.any(alphas >= 1.0) or np.any(np.diff(alphas) <= 0.0):
        raise ValueError("alpha grid must be increasing within (0, 1)")
    q_pseudo = np.quantile(pair.pseudo, 1.0 - alphas, method="inverted_cdf")
    q_oracle = np.quantile(pair.oracle, 1.0 - alphas, method="inverted_cdf")
    ok = q_pseudo >= q_oracle
    if ok.all():
        return 1.0
    first_bad = int(np.argmin(ok))
    if first_bad == 0:
        return 0.0
    return float(alphas[first_bad - 1])


def dr_score_pair(rho: float, p: float, n: int, seed: int = 0) -> ScorePair:
    """Known-nuisance score pair in the uninformative setting.

    Both potential outcomes are pure N(0,1) errors with correlation
    ``rho`` and treatment is Bernoulli(p), so the doubly robust
    pseudo-outcome with the true (zero) surfaces and true propensity is
    t y/p - (1-t) y/(1-p).  Scores are absolute residuals from the true
    (zero) effect: |pseudo-outcome| against |Y(1) - Y(0)|.  How the two
    upper tails sit against each other moves sharply with (rho, p).
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    rng = substream(seed, "dr-score-pair")
    eps0 = rng.standard_normal(n)
    eta = rng.standard_normal(n)
    eps1 = rho * eps0 + np.sqrt(max(0.0, 1.0 - rho * rho)) * eta
    t = (rng.uniform(size=n) < p).astype(float)
    y = np.where(t == 1.0, eps1, eps0)
    phi = pseudo_outcome(y, t, np.full(n, p), mu1=np.zeros(n), mu0=np.zeros(n), kind="dr")
    return ScorePair(pseudo=np.abs(phi), oracle=np.abs(eps1 - eps0))
