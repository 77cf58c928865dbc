"""Subsampling benchmark on a simulated welfare-to-work population.

A population of enrollees is simulated with eleven covariates and two
independent logistic outcome models (treated and control arms). The full
population is fit with a flat prior to get the benchmark; balanced
subsamples are then fit with flat, Cauchy and catalytic priors and compared
with the benchmark's average log probability ratio, overall and within
subgroups, plus the mean squared difference in predicted unit effects on a
disjoint test set.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.linalg import qr
from scipy.optimize import brentq
from scipy.special import expit

from . import _rng
from .causal import ArmFits, log_prob_ratio
from .core import INTERCEPT, Dataset, ModelFamily, fit_simple_model
from .fitting import SingularSystemError, fit_cauchy_map, fit_map
from .synth import EXPECTED, CovariateScheme, SynthConfig, build_catalytic_prior, gen_covariates

COVARIATES = ("male", "age35", "hsdip", "nevmar", "divwid", "child6", "black",
              "hispanic", "emppre", "nchild", "earnpre")
COLUMNS = (INTERCEPT,) + COVARIATES
METHODS = ("catalytic", "cauchy", "flat")
METHOD_LABELS = {"catalytic": "Catalytic", "cauchy": "Cauchy", "flat": "Flat"}
SOURCE_COVARIATES = {"intercept": None, "hsdip": "hsdip", "divwid": "divwid",
                     "earnpre": "earnpre", "emppre": "emppre"}
DISPLAY_CLIP = 50.0

# name -> (column, value); the rows with covariate == value
GROUPS = {
    "All": None,
    "hsdip+": ("hsdip", 1.0), "hsdip-": ("hsdip", 0.0),
    "age>35": ("age35", 1.0), "age<=35": ("age35", 0.0),
    "nevmar+": ("nevmar", 1.0), "nevmar-": ("nevmar", 0.0),
    "divwid+": ("divwid", 1.0), "divwid-": ("divwid", 0.0),
}


class BenchmarkError(RuntimeError):
    pass


# -- population ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SwimSimSpec:
    """Parameters of the simulated population.

    ``prevalences`` lists the nine indicator probabilities in covariate
    order. ``nevmar`` and ``divwid`` are exclusive categories, so their sum
    must not exceed one. Everyone with a child under six has at least one
    child; prior-year earnings (in $1000s) are lognormal for the
    ``emppre`` fraction and exactly zero otherwise.
    """

    N: int
    beta_t_true: np.ndarray
    beta_c_true: np.ndarray
    prevalences: tuple
    child_mean: float = 1.6
    earn_logmean: float = 1.1
    earn_logsd: float = 0.9
    seed: int = 0
    version: str = "custom"

    def __post_init__(self):
        if self.N < 4:
            raise ValueError("N must be at least 4")
        bt = np.asarray(self.beta_t_true, dtype=float)
        bc = np.asarray(self.beta_c_true, dtype=float)
        if bt.shape != (len(COLUMNS),) or bc.shape != (len(COLUMNS),):
            raise ValueError(f"true coefficients must have length {len(COLUMNS)}")
        prev = tuple(float(v) for v in self.prevalences)
        if len(prev) != 9 or not all(0.0 < v < 1.0 for v in prev):
            raise ValueError("need nine prevalences in (0, 1)")
        if prev[3] + prev[4] >= 1.0:
            raise ValueError("nevmar and divwid prevalences must sum to less than 1")
        if not (self.child_mean > 0 and self.earn_logsd > 0):
            raise ValueError("child_mean and earn_logsd must be positive")
        object.__setattr__(self, "beta_t_true", bt)
        object.__setattr__(self, "beta_c_true", bc)
        object.__setattr__(self, "prevalences", prev)
        object.__setattr__(self, "N", int(self.N))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta_t_true"] = self.beta_t_true.tolist()
        d["beta_c_true"] = self.beta_c_true.tolist()
        d["prevalences"] = list(self.prevalences)
        d["columns"] = list(COLUMNS)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SwimSimSpec":
        d = {k: v for k, v in d.items() if k != "columns"}
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SwimSimSpec":
        return cls.from_dict(json.loads(text))

    @classmethod
    def default(cls) -> "SwimSimSpec":
        """The frozen default population shipped with the package."""
        text = resources.files("catprior").joinpath("data/swim_default_v1.json").read_text()
        return cls.from_json(text)


def simulate_covariates(spec: SwimSimSpec, n: int, stream) -> np.ndarray:
    """``n`` rows of the design matrix (intercept first)."""
    rng = _rng.generator(stream)
    prev = spec.prevalences
    X = np.zeros((n, len(COLUMNS)))
    X[:, 0] = 1.0
    X[:, 1] = rng.random(n) < prev[0]
    X[:, 2] = rng.random(n) < prev[1]
    X[:, 3] = rng.random(n) < prev[2]
    marital = rng.random(n)
    X[:, 4] = marital < prev[3]
    X[:, 5] = (marital >= prev[3]) & (marital < prev[3] + prev[4])
    X[:, 6] = rng.random(n) < prev[5]
    X[:, 7] = rng.random(n) < prev[6]
    X[:, 8] = rng.random(n) < prev[7]
    employed = rng.random(n) < prev[8]
    kids = rng.poisson(spec.child_mean, n).astype(float)
    kids = np.where(X[:, 6] == 1, np.maximum(kids, 1.0), kids)
    earnings = np.exp(spec.earn_logmean + spec.earn_logsd * rng.standard_normal(n))
    earnings = np.round(np.where(employed, earnings, 0.0), 3)
    # rounding must not create a zero for someone flagged as employed
    earnings = np.where(employed, np.maximum(earnings, 0.001), 0.0)
    X[:, 9] = earnings > 0
    X[:, 10] = kids
    X[:, 11] = earnings
    return X


@dataclass(frozen=True, eq=False)
class Population:
    """Observed data plus the potential outcomes behind it."""

    data: Dataset
    y1: np.ndarray
    y0: np.ndarray
    spec: SwimSimSpec


def simulate_population(spec: SwimSimSpec) -> Population:
    """Covariates, complete randomisation (exactly N // 2 treated) and outcomes."""
    root = _rng.as_stream(spec.seed)
    X = simulate_covariates(spec, spec.N, _rng.substream(root, "covariates"))
    rng = _rng.generator(_rng.substream(root, "assignment"))
    z = np.zeros(spec.N)
    z[rng.permutation(spec.N)[: spec.N // 2]] = 1.0
    rng = _rng.generator(_rng.substream(root, "outcomes"))
    u1, u0 = rng.random(spec.N), rng.random(spec.N)
    y1 = (u1 < expit(X @ spec.beta_t_true)).astype(float)
    y0 = (u0 < expit(X @ spec.beta_c_true)).astype(float)
    y = np.where(z == 1, y1, y0)
    return Population(Dataset(X, y, z, column_names=COLUMNS), y1, y0, spec)


def make_default_spec(N: int = 3211, seed: int = 20240611, coef_sd: float = 0.2,
                      target_t: float = 0.80, target_c: float = 0.74) -> SwimSimSpec:
    """Derive the default population spec.

    Slopes are drawn from ``N(0, coef_sd^2)`` per standard deviation of the
    covariate; intercepts are then solved so the average success
    probability of each arm hits its target. The result is what is frozen
    in ``data/swim_default_v1.json``.
    """
    prevalences = (0.12, 0.35, 0.55, 0.40, 0.30, 0.45, 0.35, 0.10, 0.50)
    proto = SwimSimSpec(N, np.zeros(len(COLUMNS)), np.zeros(len(COLUMNS)), prevalences, seed=seed)
    root = _rng.as_stream(seed)
    Xref = simulate_covariates(proto, 200_000, _rng.substream(root, "calibration"))
    sd = Xref[:, 1:].std(axis=0)
    rng = _rng.generator(_rng.substream(root, "coefficients"))
    betas = []
    for target in (target_t, target_c):
        slopes = rng.normal(0.0, coef_sd, len(COVARIATES)) / sd
        eta = Xref[:, 1:] @ slopes
        b0 = brentq(lambda c: expit(c + eta).mean() - target, -20.0, 20.0, xtol=1e-12)
        betas.append(np.round(np.concatenate([[b0], slopes]), 6))
    return SwimSimSpec(N, betas[0], betas[1], prevalences, seed=seed, version="swim_default_v1")


# -- fits ----------------------------------------------------------------------

def _flat_fit(arm: Dataset):
    """Flat-prior MLE; returns ``(beta, diverged)``.

    Aliased columns (e.g. an indicator that is constant in a small
    subsample) are dropped and get coefficient 0, as ``glm`` does; the fit
    still counts as diverged because the MLE is not identified.
    """
    family = ModelFamily.bernoulli()
    try:
        res = fit_map(arm, family)
        return res.beta_hat, res.diverged
    except SingularSystemError as exc:
        if getattr(exc, "result", None) is not None:
            return exc.result.beta_hat, True
    _, _, piv = qr(arm.covariates, pivoting=True, mode="economic")
    rank = np.linalg.matrix_rank(arm.covariates)
    keep = np.sort(piv[:rank])
    sub = Dataset(arm.covariates[:, keep], arm.response, None, arm.weights)
    beta = np.zeros(arm.p)
    try:
        res = fit_map(sub, family)
        beta[keep] = res.beta_hat
    except SingularSystemError as exc:
        if getattr(exc, "result", None) is not None:
            beta[keep] = exc.result.beta_hat
    return beta, True


def benchmark_fit(full: Dataset) -> ArmFits:
    """Flat-prior fit of each arm on the full data."""
    fits = []
    for z in (1, 0):
        try:
            res = fit_map(full.arm(z), ModelFamily.bernoulli())
        except SingularSystemError as exc:
            raise BenchmarkError(f"benchmark fit of arm z={z} failed: {exc}") from None
        if res.diverged:
            raise BenchmarkError(
                f"benchmark fit of arm z={z} did not converge ({res.message}); "
                "the population is too small or separated")
        fits.append(res.beta_hat)
    return ArmFits(fits[0], fits[1], tuple(full.column_names))


def draw_train_test(full: Dataset, n: int, n_prime: int, stream) -> tuple[np.ndarray, np.ndarray]:
    """Row indices of a balanced training sample and a disjoint balanced test sample."""
    if n % 2 or n_prime % 2 or n <= 0 or n_prime < 0:
        raise ValueError("n and n_prime must be even, with n > 0")
    rng = _rng.generator(stream)
    train, test = [], []
    for z in (1, 0):
        rows = np.flatnonzero(full.treatment == z)
        if n // 2 + n_prime // 2 > rows.size:
            raise ValueError(f"arm z={z} has {rows.size} rows; cannot draw "
                             f"{n // 2} + {n_prime // 2}")
        pick = rng.choice(rows, size=n // 2 + n_prime // 2, replace=False)
        train.append(pick[: n // 2])
        test.append(pick[n // 2:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


@dataclass(frozen=True)
class CatalyticSetup:
    """Catalytic prior configuration used inside replications."""

    tau: float = 24.0
    M: int = 400
    sources: tuple = ("intercept",)

    def __post_init__(self):
        for s in self.sources:
            if s not in SOURCE_COVARIATES:
                raise ValueError(f"unknown simple-model source {s!r}")

    @property
    def label(self) -> str:
        return "catalytic" if self.sources == ("intercept",) else "catalytic[" + "+".join(self.sources) + "]"


def _catalytic_arm(arm: Dataset, X_star: np.ndarray, setup: CatalyticSetup, seed: int):
    """Catalytic MAP for one arm; returns ``(beta, diverged, n_fallback)``."""
    family = ModelFamily.bernoulli()
    specs, fallback = [], 0
    for name in setup.sources:
        col = SOURCE_COVARIATES[name]
        subset = () if col is None else (arm.column_names.index(col),)
        try:
            specs.append(fit_simple_model(arm, subset, family))
        except (ValueError, RuntimeError):
            # separation or a constant covariate in this subsample
            fallback += 1
            specs.append(fit_simple_model(arm, (), family))
    sources = tuple((s, 1.0 / len(specs)) for s in specs)
    config = SynthConfig(setup.M, setup.tau, sources, CovariateScheme.fixed(X_star), EXPECTED, seed)
    prior = build_catalytic_prior(arm, config)
    res = fit_map(arm, family, prior)
    return res.beta_hat, res.diverged, fallback


def fit_method(method: str, train: Dataset, X_star=None, setup: CatalyticSetup | None = None,
               seed: int = 0):
    """Fit both arms with one method. Returns ``(beta_t, beta_c, diverged, n_fallback)``."""
    out, diverged, fallback = [], False, 0
    for z in (1, 0):
        arm = train.arm(z)
        if method == "flat":
            beta, div = _flat_fit(arm)
        elif method == "cauchy":
            res = fit_cauchy_map(arm)
            beta, div = res.beta_hat, not res.converged
        elif method.startswith("catalytic"):
            beta, div, fb = _catalytic_arm(arm, X_star, setup or CatalyticSetup(), seed + z)
            fallback += fb
        else:
            raise ValueError(f"unknown method {method!r}")
        out.append(beta)
        diverged = diverged or div
    return out[0], out[1], diverged, fallback


@dataclass
class ReplicationResult:
    n: int
    replication: int
    method: str
    gamma_avg_by_group: dict
    benchmark_by_group: dict
    msdpte: float
    diverged: bool
    n_fallback: int = 0

    def sq_dev(self, group: str) -> float:
        return (self.gamma_avg_by_group[group] - self.benchmark_by_group[group]) ** 2


def group_masks(data: Dataset, groups: dict = GROUPS) -> dict:
    masks = {}
    for name, rule in groups.items():
        if rule is None:
            masks[name] = np.ones(data.n, dtype=bool)
        else:
            col, val = rule
            masks[name] = data.covariates[:, data.column_names.index(col)] == val
    return masks


def _group_means(values: np.ndarray, masks: dict) -> dict:
    return {g: (float(values[m].mean()) if m.any() else float("nan")) for g, m in masks.items()}


def run_replication(train: Dataset, test: Dataset, benchmark: ArmFits, methods: Sequence[str],
                    stream, catalytic_setups: Sequence[CatalyticSetup] = (CatalyticSetup(),),
                    n: int | None = None, replication: int = 0) -> list[ReplicationResult]:
    """Fit every method on ``train`` and score it against the benchmark.

    All catalytic variants share one synthetic covariate draw (marginal
    resampling of the training covariates), which is also shared by the
    two arms.
    """
    masks = group_masks(train)
    bm_unit = log_prob_ratio(train.covariates, benchmark.beta_t, benchmark.beta_c)
    bm_groups = _group_means(bm_unit, masks)
    bm_test = log_prob_ratio(test.covariates, benchmark.beta_t, benchmark.beta_c)

    root = _rng.as_stream(stream)
    X_star = None
    seed = int(_rng.generator(_rng.substream(root, "mixture-seed")).integers(2 ** 62))
    plan = []
    for method in methods:
        if method == "catalytic":
            if X_star is None:
                X_star = _marginal_draw(train, max(s.M for s in catalytic_setups),
                                        _rng.substream(root, "synthetic-covariates"))
            plan.extend((s.label, s) for s in catalytic_setups)
        else:
            plan.append((method, None))

    results = []
    for label, setup in plan:
        Xs = None if setup is None else X_star[: setup.M]
        try:
            bt, bc, diverged, fallback = fit_method(label if setup is None else "catalytic",
                                                    train, Xs, setup, seed)
            unit = log_prob_ratio(train.covariates, bt, bc)
            groups = _group_means(unit, masks)
            msd = float(np.mean((log_prob_ratio(test.covariates, bt, bc) - bm_test) ** 2))
        except (ValueError, RuntimeError, np.linalg.LinAlgError):
            groups = {g: float("nan") for g in masks}
            msd, diverged, fallback = float("nan"), True, 0
        results.append(ReplicationResult(n if n is not None else train.n, replication, label,
                                         groups, bm_groups, msd, bool(diverged), fallback))
    return results


def _marginal_draw(train: Dataset, M: int, stream) -> np.ndarray:
    return gen_covariates(train, CovariateScheme(), M, stream)


# -- whole experiment --------------------------------------------------------------

@dataclass
class ExperimentConfig:
    sim: SwimSimSpec
    n_grid: tuple = (100, 200, 400, 800, 1600)
    replications: int = 250
    n_prime: int = 500
    methods: tuple = METHODS
    catalytic: tuple = (CatalyticSetup(),)
    seed: int = 0

    def to_dict(self) -> dict:
        return {"sim": self.sim.to_dict(), "n_grid": list(self.n_grid),
                "replications": self.replications, "n_prime": self.n_prime,
                "methods": list(self.methods),
                "catalytic": [{"tau": c.tau, "M": c.M, "sources": list(c.sources)}
                              for c in self.catalytic],
                "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        sim = SwimSimSpec.from_dict(d["sim"]) if "sim" in d else SwimSimSpec.default()
        cat = tuple(CatalyticSetup(c.get("tau", 24.0), c.get("M", 400),
                                   tuple(c.get("sources", ("intercept",))))
                    for c in d.get("catalytic", [{}]))
        return cls(sim, tuple(d.get("n_grid", (100, 200, 400, 800, 1600))),
                   int(d.get("replications", 250)), int(d.get("n_prime", 500)),
                   tuple(d.get("methods", METHODS)), cat, int(d.get("seed", 0)))


def mixture_setups(tau: float = 24.0, M: int = 400) -> tuple:
    """The five single-source catalytic priors and their equal-weight mixture."""
    singles = tuple(CatalyticSetup(tau, M, (s,)) for s in SOURCE_COVARIATES)
    return singles + (CatalyticSetup(tau, M, tuple(SOURCE_COVARIATES)),)


_WORKER: dict = {}


def _init_worker(population: Population, benchmark: ArmFits, config: ExperimentConfig):
    _WORKER.update(population=population, benchmark=benchmark, config=config)


def _run_task(task):
    n, r = task
    pop, bm, cfg = _WORKER["population"], _WORKER["benchmark"], _WORKER["config"]
    root = _rng.as_stream(cfg.seed)
    train_idx, test_idx = draw_train_test(pop.data, n, cfg.n_prime,
                                          _rng.substream(root, f"split:n={n}", r))
    return run_replication(pop.data.rows(train_idx), pop.data.rows(test_idx), bm, cfg.methods,
                           _rng.substream(root, f"synth:n={n}", r), cfg.catalytic, n, r)


def run_experiment(config: ExperimentConfig, workers: int = 1, population: Population | None = None):
    """Run every (n, replication) task; returns ``(results, benchmark)``.

    Results come back in task order whatever the worker count, so reports
    do not depend on scheduling.
    """
    pop = simulate_population(config.sim) if population is None else population
    benchmark = benchmark_fit(pop.data)
    tasks = [(n, r) for n in config.n_grid for r in range(config.replications)]
    if workers <= 1:
        _init_worker(pop, benchmark, config)
        chunks = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker,
                                 initargs=(pop, benchmark, config)) as ex:
            chunks = list(ex.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    return [res for chunk in chunks for res in chunk], benchmark


# -- aggregation and reports -----------------------------------------------------

@dataclass
class ReportRow:
    group: str
    n: int
    method: str
    mse: float
    se: float
    n_diverged: int
    n_reps: int

    @property
    def display(self) -> str:
        return format_cell(self.mse, self.se)


@dataclass
class ExperimentReport:
    rows: list
    msdpte: list
    benchmark: dict = field(default_factory=dict)
    estimator: str = "posterior mode"

    def row(self, group: str, n: int, method: str) -> ReportRow:
        for r in self.rows:
            if (r.group, r.n, r.method) == (group, n, method):
                return r
        raise KeyError((group, n, method))

    def msdpte_row(self, n: int, method: str) -> dict:
        for r in self.msdpte:
            if (r["n"], r["method"]) == (n, method):
                return r
        raise KeyError((n, method))

    def to_dict(self) -> dict:
        return {"estimator": self.estimator, "benchmark": self.benchmark,
                "rows": [dict(asdict(r), display=r.display) for r in self.rows],
                "msdpte": self.msdpte}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)

    def table(self, methods: Sequence[str] | None = None) -> pd.DataFrame:
        """Group / n / one "MSE (SE)" column per method."""
        methods = list(methods or dict.fromkeys(r.method for r in self.rows))
        keys = list(dict.fromkeys((r.group, r.n) for r in self.rows))
        records = []
        for group, n in keys:
            rec = {"Group": group, "n": n}
            for m in methods:
                rec[METHOD_LABELS.get(m, m)] = self.row(group, n, m).display
            records.append(rec)
        return pd.DataFrame.from_records(records)

    def msdpte_frame(self) -> pd.DataFrame:
        return pd.DataFrame.from_records(self.msdpte, columns=["method", "n", "mean", "se", "n_reps"])


def format_cell(mse: float, se: float) -> str:
    def fmt(v):
        if not np.isfinite(v) or v > DISPLAY_CLIP:
            return "> 50"
        if v < 0.001:
            return "< 0.001"
        return f"{v:.3f}"

    return f"{fmt(mse)} ({fmt(se)})"


def _mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return float("nan"), float("nan")
    if not np.all(np.isfinite(v)):
        return float("inf"), float("inf")
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def aggregate(results: Sequence[ReplicationResult], groups: Sequence[str] | None = None,
              benchmark: ArmFits | None = None) -> ExperimentReport:
    """MSE and its standard error per (group, n, method), plus MSDPTE means."""
    if not results:
        raise ValueError("no replication results to aggregate")
    groups = list(groups or GROUPS)
    methods = list(dict.fromkeys(r.method for r in results))
    ns = sorted({r.n for r in results})
    by_key: dict = {}
    for r in results:
        by_key.setdefault((r.n, r.method), []).append(r)
    rows, msd = [], []
    for g in groups:
        for n in ns:
            for m in methods:
                reps = by_key.get((n, m), [])
                if not reps:
                    continue
                devs = [r.sq_dev(g) for r in reps
                        if not math.isnan(r.benchmark_by_group.get(g, float("nan")))]
                mse, se = _mean_se(devs)
                rows.append(ReportRow(g, n, m, mse, se, sum(r.diverged for r in reps), len(reps)))
    for n in ns:
        for m in methods:
            reps = by_key.get((n, m), [])
            if reps:
                mean, se = _mean_se([r.msdpte for r in reps])
                msd.append({"method": m, "n": n, "mean": mean, "se": se, "n_reps": len(reps)})
    bm = {}
    if benchmark is not None:
        bm = {"beta_t": np.asarray(benchmark.beta_t).tolist(),
              "beta_c": np.asarray(benchmark.beta_c).tolist()}
    return ExperimentReport(rows, msd, bm)


def results_frame(results: Sequence[ReplicationResult]) -> pd.DataFrame:
    """One row per (replication, method, group) for re-aggregation."""
    recs = []
    for r in results:
        for g, val in r.gamma_avg_by_group.items():
            recs.append({"n": r.n, "replication": r.replication, "method": r.method, "group": g,
                         "gamma_avg": val, "benchmark": r.benchmark_by_group[g],
                         "msdpte": r.msdpte, "diverged": r.diverged, "n_fallback": r.n_fallback})
    return pd.DataFrame.from_records(recs)


def write_report(report: ExperimentReport, out_dir, results=None) -> dict:
    """Write ``report.json``, ``table.csv``, ``msdpte.csv`` (and raw results)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"json": out / "report.json", "table": out / "table.csv", "msdpte": out / "msdpte.csv"}
    paths["json"].write_text(report.to_json())
    report.table().to_csv(paths["table"], index=False)
    report.msdpte_frame().to_csv(paths["msdpte"], index=False, float_format="%.17g")
    if results is not None:
        paths["raw"] = out / "replications.csv"
        results_frame(results).to_csv(paths["raw"], index=False, float_format="%.17g")
    return paths
