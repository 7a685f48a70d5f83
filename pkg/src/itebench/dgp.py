"""Synthetic designs for treatment-effect interval experiments.

A scenario is a fully seeded recipe for drawing units (X, Y(1), Y(0), T).
The designs stress different failure modes of interval methods:

* covariates are uniform on the unit square, either independent or driven
  by a shared Gaussian factor (Gaussian copula, loading 0.9);
* the treated surface is a product of steep sigmoids, the control surface
  is zero, so the effect is smooth but strongly nonlinear;
* potential-outcome errors have standard normal marginals with a
  controllable correlation; the correlation is never identified from
  observed data, which is exactly the knob the benchmarks turn;
* overlap regimes range from a smooth covariate-dependent propensity to a
  10x10 checkerboard of alternating extreme propensities whose noise is
  inflated precisely where each arm is scarce.

Everything here is a pure function of the config, so regenerating a
dataset from its provenance is byte-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr

from .rng import substream

__all__ = [
    "CovariateDesign",
    "OutcomeModel",
    "PropensityRegime",
    "ScenarioConfig",
    "Dataset",
    "ObservedData",
    "link_f",
    "beta24_cdf",
    "propensity_eval",
    "checkerboard_cell",
    "gen_covariates",
    "noise_scale",
    "surface_eval",
    "gen_dataset",
    "scenario_id",
    "scenario_to_kv",
    "scenario_from_kv",
]

_COVARIATE_KINDS = ("independent", "correlated")
_NOISE_KINDS = ("homoscedastic", "heteroscedastic")
_PROPENSITY_KINDS = ("beta24", "constant", "checkerboard")
_SIGNAL_KINDS = ("link_product", "zero")


@dataclass(frozen=True)
class CovariateDesign:
    """Covariate law on the unit square.

    ``independent`` pushes iid N(0,1) pairs through the normal CDF;
    ``correlated`` first mixes in a shared factor with loading
    ``rho_x`` so the uniforms share a Gaussian copula.
    """

    kind: str = "independent"
    rho_x: float = 0.9

    def __post_init__(self):
        if self.kind not in _COVARIATE_KINDS:
            raise ValueError(f"unknown covariate design {self.kind!r}")
        if not 0.0 <= self.rho_x < 1.0:
            raise ValueError("rho_x must lie in [0, 1)")


@dataclass(frozen=True)
class OutcomeModel:
    """Outcome surfaces and error law.

    ``rho`` is the correlation between the two potential-outcome errors.
    It is central to the experiments and unidentifiable from data: units
    only ever reveal one of the two errors.  ``noise`` picks a constant
    scale or sigma(x) = -log(x1).  ``signal`` selects the product-of-
    sigmoids treated surface or a flat zero surface (the uninformative
    setting used by the analytic checks).
    """

    noise: str = "homoscedastic"
    rho: float = 0.0
    signal: str = "link_product"
    log_offset: float = 1e-12

    def __post_init__(self):
        if self.noise not in _NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.noise!r}")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError("error correlation must lie in [-1, 1]")
        if self.signal not in _SIGNAL_KINDS:
            raise ValueError(f"unknown signal kind {self.signal!r}")
        if not 0.0 < self.log_offset < 1.0:
            raise ValueError("log_offset must lie in (0, 1)")


@dataclass(frozen=True)
class PropensityRegime:
    """Treatment-assignment law: smooth, constant, or checkerboard."""

    kind: str = "beta24"
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in _PROPENSITY_KINDS:
            raise ValueError(f"unknown propensity regime {self.kind!r}")
        if not 0.0 < self.p < 1.0:
            raise ValueError("constant propensity level must lie in (0, 1)")


@dataclass(frozen=True)
class ScenarioConfig:
    """Seeded recipe for one dataset draw."""

    covariates: CovariateDesign = field(default_factory=CovariateDesign)
    outcome: OutcomeModel = field(default_factory=OutcomeModel)
    propensity: PropensityRegime = field(default_factory=PropensityRegime)
    n_train: int = 1000
    n_test: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("sample sizes must be positive")

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=int(seed))


@dataclass(frozen=True)
class ObservedData:
    """What an interval method is allowed to see: (x, t, y_obs) only."""

    x: np.ndarray
    t: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.x.ndim != 2 or len(self.t) != len(self.x) or len(self.y) != len(self.x):
            raise ValueError("misaligned observed columns")

    def __len__(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class Dataset:
    """Columnar draw with both potential outcomes plus provenance.

    The counterfactual columns exist only for evaluation and for the
    counterexample constructions; methods receive ``observed()``.
    """

    x: np.ndarray
    y1: np.ndarray
    y0: np.ndarray
    t: np.ndarray
    y_obs: np.ndarray
    config: ScenarioConfig

    def __len__(self) -> int:
        return len(self.y_obs)

    @property
    def delta(self) -> np.ndarray:
        """Realized unit-level effect Y(1) - Y(0)."""
        return self.y1 - self.y0

    def observed(self) -> ObservedData:
        return ObservedData(x=self.x, t=self.t, y=self.y_obs)


def link_f(x) -> np.ndarray:
    """Steep sigmoid 2 / (1 + exp(-12 (x - 1/2))) mapping [0,1] onto ~(0, 2)."""
    x = np.asarray(x, dtype=float)
    return 2.0 / (1.0 + np.exp(-12.0 * (x - 0.5)))


def beta24_cdf(x) -> np.ndarray:
    """CDF of Beta(2, 4) on [0, 1], evaluated in closed form.

    The density 20 t (1-t)^3 integrates to the quintic
    10 x^2 - 20 x^3 + 15 x^4 - 4 x^5; inputs outside [0, 1] are a domain
    error rather than a silent clamp.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("beta24_cdf is defined on [0, 1] only")
    return x * x * (10.0 + x * (-20.0 + x * (15.0 - 4.0 * x)))


def checkerboard_cell(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cell indices on the 10x10 grid; the top edge folds into the last cell."""
    i = np.minimum(np.floor(10.0 * x[:, 0]).astype(int), 9)
    j = np.minimum(np.floor(10.0 * x[:, 1]).astype(int), 9)
    return i, j


def propensity_eval(regime: PropensityRegime, x: np.ndarray) -> np.ndarray:
    """True treatment probability e(x) under the given regime."""
    x = np.asarray(x, dtype=float)
    if regime.kind == "constant":
        return np.full(len(x), regime.p)
    if regime.kind == "beta24":
        # Ranges over [1/4, 1/2]: treatment is always the minority-to-even arm.
        return (1.0 + beta24_cdf(x[:, 0])) / 4.0
    i, j = checkerboard_cell(x)
    even = (i + j) % 2 == 0
    return np.where(even, 0.95, 0.05)


def gen_covariates(design: CovariateDesign, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n covariate pairs on the unit square under the design's copula."""
    z = rng.standard_normal((n, 2))
    if design.kind == "correlated":
        shared = rng.standard_normal((n, 1))
        z = np.sqrt(1.0 - design.rho_x) * z + np.sqrt(design.rho_x) * shared
    return ndtr(z)


def noise_scale(outcome: OutcomeModel, x: np.ndarray) -> np.ndarray:
    """sigma(x): constant 1 or -log(x1), kept strictly positive via the offset."""
    if outcome.noise == "homoscedastic":
        return np.ones(len(x))
    return -np.log(np.maximum(x[:, 0], outcome.log_offset))


def surface_eval(config: ScenarioConfig, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """True outcome surfaces (mu1, mu0) of the scenario at the given points."""
    x = np.asarray(x, dtype=float)
    mu0 = np.zeros(len(x))
    if config.outcome.signal == "zero":
        return mu0.copy(), mu0
    mu1 = link_f(x[:, 0]) * link_f(x[:, 1])
    return mu1, mu0


def gen_dataset(config: ScenarioConfig) -> Dataset:
    """Materialize one dataset from its config, deterministically.

    Draw order is fixed (covariates, error pair, assignment) so identical
    configs produce identical bytes.  The second error is built as
    rho * eps0 + sqrt(1 - rho^2) * eta, which keeps the marginal standard
    normal for every rho and degenerates to an exact sign flip at rho = -1.

    Checkerboard scenarios draw covariates directly uniform and additionally
    inflate each arm's noise by a factor of 10 exactly in the cells where
    that arm is rarely observed.
    """
    rng = substream(config.seed, "dgp")
    n = config.n_train
    checker = config.propensity.kind == "checkerboard"

    if checker:
        x = rng.uniform(size=(n, 2))
    else:
        x = gen_covariates(config.covariates, n, rng)

    eps0 = rng.standard_normal(n)
    eta = rng.standard_normal(n)
    rho = config.outcome.rho
    eps1 = rho * eps0 + np.sqrt(max(0.0, 1.0 - rho * rho)) * eta

    mu1, mu0 = surface_eval(config, x)
    if checker:
        i, j = checkerboard_cell(x)
        high_e = (i + j) % 2 == 0
        sigma0 = np.where(high_e, 10.0, 1.0)
        sigma1 = np.where(high_e, 1.0, 10.0)
    else:
        sigma0 = sigma1 = noise_scale(config.outcome, x)

    y1 = mu1 + sigma1 * eps1
    y0 = mu0 + sigma0 * eps0

    e = propensity_eval(config.propensity, x)
    t = (rng.uniform(size=n) < e).astype(np.int8)
    y_obs = np.where(t == 1, y1, y0)
    return Dataset(x=x, y1=y1, y0=y0, t=t, y_obs=y_obs, config=config)


def scenario_id(config: ScenarioConfig) -> str:
    """Short stable identifier used in result tables."""
    prop = config.propensity
    if prop.kind == "checkerboard":
        head = "checker"
    elif prop.kind == "constant":
        head = f"const{prop.p:g}"
    else:
        head = "beta24"
    parts = [head]
    if prop.kind != "checkerboard":
        parts.append("het" if config.outcome.noise == "heteroscedastic" else "homo")
        parts.append("corr" if config.covariates.kind == "correlated" else "ind")
    if config.outcome.signal == "zero":
        parts.append("flat")
    parts.append(f"rho{config.outcome.rho:g}")
    return "-".join(parts)


def scenario_to_kv(config: ScenarioConfig) -> str:
    """Serialize to the flat key=value text format, one key per line."""
    lines = [
        f"covariates={config.covariates.kind}",
        f"noise={config.outcome.noise}",
        f"rho={config.outcome.rho:g}",
        f"propensity={config.propensity.kind}",
        f"p={config.propensity.p:g}",
        f"n_train={config.n_train}",
        f"n_test={config.n_test}",
        f"seed={config.seed}",
    ]
    if config.outcome.signal != "link_product":
        lines.append(f"signal={config.outcome.signal}")
    if config.covariates.rho_x != 0.9:
        lines.append(f"rho_x={config.covariates.rho_x:g}")
    if config.outcome.log_offset != 1e-12:
        lines.append(f"log_offset={config.outcome.log_offset:g}")
    return "\n".join(lines) + "\n"


def scenario_from_kv(text: str) -> ScenarioConfig:
    """Parse the format written by ``scenario_to_kv``; unknown keys are errors."""
    pairs = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed scenario line {raw!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    known = {
        "covariates", "noise", "rho", "propensity", "p",
        "n_train", "n_test", "seed", "signal", "rho_x", "log_offset",
    }
    unknown = set(pairs) - known
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    return ScenarioConfig(
        covariates=CovariateDesign(
            kind=pairs.get("covariates", "independent"),
            rho_x=float(pairs.get("rho_x", 0.9)),
        ),
        outcome=OutcomeModel(
            noise=pairs.get("noise", "homoscedastic"),
            rho=float(pairs.get("rho", 0.0)),
            signal=pairs.get("signal", "link_product"),
            log_offset=float(pairs.get("log_offset", 1e-12)),
        ),
        propensity=PropensityRegime(
            kind=pairs.get("propensity", "beta24"),
            p=float(pairs.get("p", 0.5)),
        ),
        n_train=int(pairs.get("n_train", 1000)),
        n_test=int(pairs.get("n_test", 2000)),
        seed=int(pairs.get("seed", 0)),
    )
