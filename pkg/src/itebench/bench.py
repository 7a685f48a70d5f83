"""Batch benchmark runner for effect-interval methods.

A grid is scenarios x methods x target levels x replicates under one
master seed.  Each (scenario, replicate) task draws its own train and
test data from seeds derived purely from indices, so results are
byte-identical at any parallelism degree; aggregation walks sorted keys
and never depends on completion order.  A method failure on one cell is
recorded with its reason and the run continues.

Grid files are flat key=value text with ``[scenario]`` and ``[method]``
section markers::

    master_seed=1
    reps=20
    n_train=1000
    n_test=2000
    targets=0.5,0.7,0.9
    propensity_mode=estimated

    [scenario]
    propensity=beta24
    noise=homoscedastic
    covariates=independent
    rho=0

    [method]
    name=split_pair

Scenario sections accept the scenario serialization keys; method sections
accept ``name`` plus optional ``gamma`` and ``propensity_mode``.
"""

from __future__ import annotations

import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .conformal import (
    IntervalMap,
    MethodConfig,
    MethodError,
    metalearner_ite,
    naive_ite,
    nested_exact_ite,
    nested_inexact_ite,
)
from .dgp import (
    Dataset,
    ObservedData,
    ScenarioConfig,
    gen_dataset,
    propensity_eval,
    scenario_from_kv,
    scenario_id,
)
from .rng import derive_seed
from .split_pair import SplitPairConfig, build_interval
from .svgplot import ecdf_plot, line_plot

__all__ = [
    "ExperimentGrid",
    "EvalSummary",
    "build_method",
    "evaluate_intervals",
    "run_experiment",
    "emit_csv",
    "emit_plot",
    "parse_grid",
]

CSV_HEADER = "scenario,method,target,coverage,cov_se,mean_length,inf_fraction,reps"


@dataclass(frozen=True)
class ExperimentGrid:
    scenarios: tuple[ScenarioConfig, ...]
    methods: tuple[MethodConfig, ...]
    target_levels: tuple[float, ...] = (0.9,)
    reps: int = 20
    master_seed: int = 0

    def __post_init__(self):
        if not self.scenarios or not self.methods:
            raise ValueError("grid needs at least one scenario and one method")
        if self.reps < 1:
            raise ValueError("reps must be positive")
        for lv in self.target_levels:
            if not 0.0 < lv < 1.0:
                raise ValueError("target levels must lie in (0, 1)")


@dataclass(frozen=True)
class EvalSummary:
    """One aggregated cell of the result table."""

    scenario: str
    method: str
    target: float
    coverage: float
    cov_se: float
    mean_length: float
    inf_fraction: float
    reps: int
    error: str | None = None


def build_method(obs: ObservedData, cfg: MethodConfig, oracle_propensity=None) -> IntervalMap:
    """Dispatch a method config to its builder."""
    if cfg.method == "naive":
        return naive_ite(obs, cfg, oracle_propensity)
    if cfg.method == "nested_inexact":
        return nested_inexact_ite(obs, cfg, oracle_propensity)
    if cfg.method == "nested_exact":
        return nested_exact_ite(obs, cfg, oracle_propensity)
    if cfg.method in ("dr", "ipw"):
        return metalearner_ite(obs, cfg, oracle_propensity)
    if cfg.method == "split_pair":
        sp = SplitPairConfig(alpha=cfg.alpha, learner=cfg.learner, seed=cfg.seed)
        return build_interval(obs, sp)
    raise ValueError(f"unknown method {cfg.method!r}")


def evaluate_intervals(imap: IntervalMap, test: Dataset,
                       level: float | None = None) -> tuple[float, float, float]:
    """(coverage, mean finite length, infinite fraction) on a test draw.

    Coverage counts realized effects inside their interval, unbounded
    intervals included; the mean length averages finite intervals only,
    with the infinite share reported separately instead of poisoning the
    mean.  ``level`` is bookkeeping for callers and does not enter the
    computation.
    """
    lo, hi = imap.bounds(test.x)
    delta = test.delta
    covered = (lo <= delta) & (delta <= hi)
    finite = np.isfinite(lo) & np.isfinite(hi)
    coverage = float(np.mean(covered))
    inf_fraction = float(np.mean(~finite))
    mean_length = float(np.mean((hi - lo)[finite])) if finite.any() else float("nan")
    return coverage, mean_length, inf_fraction


def _run_task(args) -> list[dict]:
    grid, si, rep = args
    scen = grid.scenarios[si]
    train = gen_dataset(scen.with_seed(derive_seed(grid.master_seed, "train", si, rep)))
    test = gen_dataset(replace(scen, n_train=scen.n_test,
                               seed=derive_seed(grid.master_seed, "test", si, rep)))
    oracle = lambda x, s=scen: propensity_eval(s.propensity, x)
    obs = train.observed()
    sid = scenario_id(scen)
    rows = []
    for mi, method in enumerate(grid.methods):
        for li, level in enumerate(grid.target_levels):
            cfg = replace(method, alpha=1.0 - level,
                          seed=derive_seed(grid.master_seed, "build", si, rep, mi, li))
            row = {"scenario": sid, "method": method.method, "target": level,
                   "rep": rep, "n_test": len(test)}
            try:
                imap = build_method(obs, cfg, oracle_propensity=oracle)
                cov, mlen, inf_frac = evaluate_intervals(imap, test, level)
                row.update(coverage=cov, mean_length=mlen, inf_fraction=inf_frac,
                           error=None)
            except MethodError as exc:
                row.update(coverage=float("nan"), mean_length=float("nan"),
                           inf_fraction=float("nan"), error=str(exc))
            rows.append(row)
    return rows


def run_experiment(grid: ExperimentGrid, parallelism: int = 1) -> list[EvalSummary]:
    """Execute the grid and aggregate per (scenario, method, target) cell."""
    if parallelism < 1:
        raise ValueError("parallelism must be positive")
    tasks = [(grid, si, rep)
             for si in range(len(grid.scenarios))
             for rep in range(grid.reps)]
    if parallelism == 1:
        results = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=1))

    cells: dict[tuple, list[dict]] = {}
    for rows in results:
        for row in rows:
            cells.setdefault((row["scenario"], row["method"], row["target"]), []).append(row)

    summaries = []
    for key in sorted(cells):
        rows = sorted(cells[key], key=lambda r: r["rep"])
        ok = [r for r in rows if r["error"] is None]
        scenario, method, target = key
        if not ok:
            summaries.append(EvalSummary(scenario, method, target,
                                         float("nan"), float("nan"), float("nan"),
                                         float("nan"), 0, error=rows[0]["error"]))
            continue
        cov = float(np.mean([r["coverage"] for r in ok]))
        n_test = ok[0]["n_test"]
        se = float(np.sqrt(max(cov * (1.0 - cov), 0.0) / (len(ok) * n_test)))
        lengths = [r["mean_length"] for r in ok if np.isfinite(r["mean_length"])]
        mean_length = float(np.mean(lengths)) if lengths else float("nan")
        inf_fraction = float(np.mean([r["inf_fraction"] for r in ok]))
        summaries.append(EvalSummary(scenario, method, target, cov, se,
                                     mean_length, inf_fraction, len(ok)))
    return summaries


def _num(v: float) -> str:
    return "nan" if not np.isfinite(v) else f"{v:.6f}"


def emit_csv(summaries, out=None) -> str:
    """Fixed-format CSV, rows sorted by (scenario, method, target)."""
    rows = sorted(summaries, key=lambda s: (s.scenario, s.method, s.target))
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for s in rows:
        buf.write(f"{s.scenario},{s.method},{_num(s.target)},{_num(s.coverage)},"
                  f"{_num(s.cov_se)},{_num(s.mean_length)},{_num(s.inf_fraction)},"
                  f"{s.reps}\n")
    text = buf.getvalue()
    if out is not None:
        with open(out, "w") as fh:
            fh.write(text)
    return text


def emit_plot(kind: str, data, out=None) -> str:
    """Render one SVG chart.

    ``coverage_vs_target`` and ``length_vs_target`` take EvalSummary
    lists and draw one line per (scenario, method); ``score_cdf`` takes a
    ScorePair-like object with ``pseudo`` and ``oracle`` samples.
    """
    if kind == "score_cdf":
        svg = ecdf_plot([("pseudo", data.pseudo), ("oracle", data.oracle)],
                        title="nonconformity score CDFs")
    elif kind in ("coverage_vs_target", "length_vs_target"):
        value = "coverage" if kind == "coverage_vs_target" else "mean_length"
        groups: dict[tuple, list] = {}
        for s in data:
            groups.setdefault((s.scenario, s.method), []).append(s)
        series = []
        for (scen, method) in sorted(groups):
            cells = sorted(groups[(scen, method)], key=lambda s: s.target)
            label = f"{scen}/{method}" if len({k[0] for k in groups}) > 1 else method
            series.append((label,
                           [c.target for c in cells],
                           [getattr(c, value) for c in cells]))
        svg = line_plot(series, title=kind.replace("_", " "),
                        xlabel="target level",
                        ylabel="coverage" if value == "coverage" else "mean length",
                        identity=(value == "coverage"))
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    if out is not None:
        with open(out, "w") as fh:
            fh.write(svg)
    return svg


def parse_grid(text: str) -> ExperimentGrid:
    """Parse the grid-file format described in the module docstring."""
    globals_kv: dict[str, str] = {}
    sections: list[tuple[str, dict[str, str]]] = []
    current: dict[str, str] | None = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line in ("[scenario]", "[method]"):
            current = {}
            sections.append((line[1:-1], current))
            continue
        if line.startswith("["):
            raise ValueError(f"unknown section {line!r}")
        if "=" not in line:
            raise ValueError(f"malformed grid line {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if current is None:
            globals_kv[key] = value
        else:
            current[key] = value

    known_globals = {"master_seed", "reps", "n_train", "n_test", "targets",
                     "propensity_mode"}
    unknown = set(globals_kv) - known_globals
    if unknown:
        raise ValueError(f"unknown grid keys: {sorted(unknown)}")

    n_train = globals_kv.get("n_train", "1000")
    n_test = globals_kv.get("n_test", "2000")
    mode = globals_kv.get("propensity_mode", "estimated")
    targets = tuple(float(v) for v in globals_kv.get("targets", "0.9").split(","))

    scenarios = []
    methods = []
    for kind, kv in sections:
        if kind == "scenario":
            merged = dict(kv)
            merged.setdefault("n_train", n_train)
            merged.setdefault("n_test", n_test)
            merged.setdefault("seed", "0")
            text_kv = "\n".join(f"{k}={v}" for k, v in merged.items())
            scenarios.append(scenario_from_kv(text_kv))
        else:
            extra = set(kv) - {"name", "gamma", "propensity_mode"}
            if extra:
                raise ValueError(f"unknown method keys: {sorted(extra)}")
            if "name" not in kv:
                raise ValueError("method section needs a name")
            methods.append(MethodConfig(
                method=kv["name"],
                gamma=float(kv["gamma"]) if "gamma" in kv else None,
                propensity_mode=kv.get("propensity_mode", mode),
            ))
    return ExperimentGrid(scenarios=tuple(scenarios), methods=tuple(methods),
                          target_levels=targets,
                          reps=int(globals_kv.get("reps", "20")),
                          master_seed=int(globals_kv.get("master_seed", "0")))
