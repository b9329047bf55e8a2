"""Experiment orchestration: sweeps, real-data evaluation, sensitivity suite.

Rows of a sweep are independent work units; seeds derive from a documented
stable hash of (base seed, axis, value, repeat), so adding an estimator to a
sweep never perturbs the data other rows see. Output ordering is canonical
(sorted by axis value, estimator, seed) regardless of execution order.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    ConstantStep,
    Dataset,
    EstimatorConfig,
    PrivacyParams,
    StepSchedule,
    l2_error,
    load_csv,
    mae,
)
from .errors import InvalidConfigError
from .estimators import (
    EstimatorKind,
    fit_estimator,
    probe_bound,
    sensitivity_probe,
)
from .sampling import RngHandle, SyntheticConfig, generate_synthetic

SWEEP_AXES = ("n", "d", "s_star", "epsilon", "zeta")

RESULTS_COLUMNS = ("axis", "value", "estimator", "seed", "l2_error", "mae", "wall_ms", "status")


def derive_seed(*parts) -> int:
    """Stable 63-bit seed: SHA-256 of the '|'-joined str() of the parts."""
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & (2**63 - 1)


def default_iterations(n: int) -> int:
    """Default iteration count, logarithmic in the sample count."""
    return max(1, int(round(2.0 * math.log(max(2, n)))))


def default_delta(n: int) -> float:
    """Default privacy delta 1 / n^1.1."""
    return float(n) ** -1.1


@dataclass(frozen=True)
class ExperimentBase:
    """Full experiment configuration shared by every row of a sweep.

    ``delta``, ``s``, ``T`` and ``K`` accept None, meaning: track the
    axis-resolved dataset via 1/n^1.1, s_star, the log-n default, and ln(d)
    respectively. ``schedule_l`` optionally gives the absolute-loss estimator
    its own step schedule (default: the shared constant step).
    """

    synthetic: SyntheticConfig
    epsilon: float | None = 0.5
    delta: float | None = None
    eta: float = 0.01
    s: int | None = None
    T: int | None = None
    K: float | None = None
    L: float = 10.0
    tau: float = 1.0
    response_clip: float = 10.0
    schedule_l: StepSchedule | None = None
    sign_on_clipped: bool = False


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    base: ExperimentBase
    repeats: int
    estimators: tuple[EstimatorKind, ...]

    def __post_init__(self):
        problems = []
        if self.axis not in SWEEP_AXES:
            problems.append(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        values = tuple(self.values)
        if not values:
            problems.append("values must be nonempty")
        elif any(b <= a for a, b in zip(values, values[1:])):
            problems.append(f"values must be strictly increasing, got {values}")
        if self.repeats < 1:
            problems.append(f"repeats must be >= 1, got {self.repeats}")
        if not self.estimators:
            problems.append("estimators must be nonempty")
        if problems:
            raise InvalidConfigError("; ".join(problems))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "estimators", tuple(self.estimators))


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: float
    estimator: str
    repeat: int
    seed: int
    l2_error: float
    mae: float
    wall_ms: float
    status: str


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: list[SweepRow]
    aggregates: dict

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.rows if r.status != "ok")


def _resolve_synthetic(base: ExperimentBase, axis: str, value, data_seed: int) -> SyntheticConfig:
    syn = base.synthetic
    if axis == "n":
        syn = replace(syn, n=int(value))
    elif axis == "d":
        syn = replace(syn, d=int(value))
    elif axis == "s_star":
        syn = replace(syn, s_star=int(value))
    elif axis == "zeta":
        syn = replace(syn, zeta=float(value))
    return replace(syn, seed=data_seed)


def _resolve_estimator(
    base: ExperimentBase, syn: SyntheticConfig, kind: EstimatorKind, fit_seed: int
) -> EstimatorConfig:
    K = base.K if base.K is not None else (math.log(syn.d) if syn.d > 1 else 1.0)
    T = base.T if base.T is not None else default_iterations(syn.n)
    s = base.s if base.s is not None else syn.s_star
    schedule: StepSchedule = ConstantStep(base.eta)
    if kind is EstimatorKind.DP_IHT_L and base.schedule_l is not None:
        schedule = base.schedule_l
    return EstimatorConfig(
        s=s,
        T=T,
        K=K,
        L=base.L,
        schedule=schedule,
        tau=base.tau,
        response_clip=base.response_clip,
        sign_on_clipped=base.sign_on_clipped,
        seed=fit_seed,
    )


def _resolve_privacy(base: ExperimentBase, axis: str, value, n: int) -> PrivacyParams:
    epsilon = base.epsilon
    if axis == "epsilon":
        epsilon = float(value)
    delta = base.delta if base.delta is not None else default_delta(n)
    return PrivacyParams(epsilon=epsilon, delta=delta)


def _run_unit(args) -> list[SweepRow]:
    """One (axis value, repeat) unit: generate data once, fit every estimator."""
    spec, value, repeat = args
    base = spec.base
    data_seed = derive_seed("data", base.synthetic.seed, spec.axis, value, repeat)
    syn = _resolve_synthetic(base, spec.axis, value, data_seed)
    ds, beta_star = generate_synthetic(syn)
    priv = _resolve_privacy(base, spec.axis, value, syn.n)
    rows = []
    for kind in spec.estimators:
        fit_seed = derive_seed(
            "fit", base.synthetic.seed, spec.axis, value, repeat, kind.value
        )
        cfg = _resolve_estimator(base, syn, kind, fit_seed)
        start = time.perf_counter()
        try:
            report = fit_estimator(kind, ds, cfg, priv, beta_star)
            wall_ms = (time.perf_counter() - start) * 1000.0
            beta = report.estimate.beta
            rows.append(
                SweepRow(
                    axis=spec.axis,
                    value=float(value),
                    estimator=kind.value,
                    repeat=repeat,
                    seed=data_seed,
                    l2_error=l2_error(beta, beta_star),
                    mae=mae(ds.x @ beta, ds.y),
                    wall_ms=wall_ms,
                    status="ok",
                )
            )
        except Exception as exc:  # any fit failure becomes a row, not an abort
            wall_ms = (time.perf_counter() - start) * 1000.0
            rows.append(
                SweepRow(
                    axis=spec.axis,
                    value=float(value),
                    estimator=kind.value,
                    repeat=repeat,
                    seed=data_seed,
                    l2_error=float("nan"),
                    mae=float("nan"),
                    wall_ms=wall_ms,
                    status=f"failed: {type(exc).__name__}: {exc}",
                )
            )
    return rows


def compute_aggregates(rows: list[SweepRow]) -> dict:
    """Per (axis value, estimator) mean and standard deviation of the metrics."""
    groups: dict[tuple[float, str], list[SweepRow]] = {}
    for row in rows:
        if row.status != "ok":
            continue
        groups.setdefault((row.value, row.estimator), []).append(row)
    out: dict = {}
    for (value, estimator), members in sorted(groups.items()):
        l2 = np.array([r.l2_error for r in members])
        ma = np.array([r.mae for r in members])
        out.setdefault(str(value), {})[estimator] = {
            "count": len(members),
            "l2_error_mean": float(np.mean(l2)),
            "l2_error_std": float(np.std(l2)),
            "mae_mean": float(np.mean(ma)),
            "mae_std": float(np.std(ma)),
        }
    return out


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Run every (axis value, estimator, repeat) cell of the sweep.

    Deterministic for a fixed spec: every cell's data and noise seeds derive
    from the documented hash, and output ordering is canonical. A failed fit
    yields a row with status "failed: ..." and the sweep continues.
    """
    units = [(spec, value, repeat) for value in spec.values for repeat in range(spec.repeats)]
    if workers is None:
        workers = int(os.environ.get("DPSPARSE_WORKERS", "1"))
    rows: list[SweepRow] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(_run_unit, units):
                rows.extend(chunk)
    else:
        for unit in units:
            rows.extend(_run_unit(unit))
    rows.sort(key=lambda r: (r.value, r.estimator, r.seed))
    return SweepResult(spec=spec, rows=rows, aggregates=compute_aggregates(rows))


def write_results_csv(result: SweepResult, path, include_timing: bool = False) -> None:
    """Write rows as CSV with the stable schema axis,value,...,status.

    Wall-clock timings vary run to run, so the wall_ms cells stay empty
    unless ``include_timing`` is set; that keeps the default output
    byte-identical across reruns of the same spec.
    """
    lines = [",".join(RESULTS_COLUMNS)]
    for r in result.rows:
        wall = repr(r.wall_ms) if include_timing else ""
        status = r.status.split(":", 1)[0] if ":" in r.status else r.status
        lines.append(
            ",".join(
                [
                    r.axis,
                    repr(r.value),
                    r.estimator,
                    str(r.seed),
                    "" if math.isnan(r.l2_error) else repr(r.l2_error),
                    "" if math.isnan(r.mae) else repr(r.mae),
                    wall,
                    status,
                ]
            )
        )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_aggregates_json(result: SweepResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.aggregates, fh, indent=2, sort_keys=True)
        fh.write("\n")


# Real-data evaluation --------------------------------------------------------


@dataclass(frozen=True)
class RealDataSpec:
    """How to evaluate the estimators on a user-supplied CSV."""

    csv_path: str
    response_col: str
    standardize: bool = True
    train_fraction: float = 0.8
    proxy: EstimatorKind = EstimatorKind.ADA_HUBER_LITE
    epsilon: float | None = 0.5
    delta: float | None = None
    eta: float = 0.01
    s: int = 5
    T: int | None = None
    K: float | None = None
    L: float = 10.0
    tau: float = 1.0
    response_clip: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise InvalidConfigError(
                f"train_fraction must lie in (0, 1), got {self.train_fraction}"
            )


@dataclass(frozen=True)
class RealDataRow:
    estimator: str
    mae: float
    support_size: int
    selected: tuple[str, ...]
    l2_vs_proxy: float | None


def _standardize_train_test(
    x_train: np.ndarray, x_test: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    mean = x_train.mean(axis=0)
    std = x_train.std(axis=0)
    constant = std == 0.0
    if constant.any():
        warnings.warn(
            f"{int(constant.sum())} constant column(s) skipped during standardization",
            stacklevel=3,
        )
        std = np.where(constant, 1.0, std)
    return (x_train - mean) / std, (x_test - mean) / std


def run_real(spec: RealDataSpec, estimators: list[EstimatorKind]) -> list[RealDataRow]:
    """Fit each estimator on the train split, report held-out MAE and support.

    Standardization statistics come from the train split only. The proxy
    estimator's coefficients stand in for the unknown true coefficients when
    reporting distances.
    """
    ds, names = load_csv(spec.csv_path, spec.response_col)
    order = RngHandle(spec.seed, stream=0).generator().permutation(ds.n)
    n_train = int(math.floor(spec.train_fraction * ds.n))
    if n_train < 1 or n_train >= ds.n:
        raise InvalidConfigError(
            f"train fraction {spec.train_fraction} leaves an empty split for n={ds.n}"
        )
    train_idx, test_idx = order[:n_train], order[n_train:]
    x_train, x_test = ds.x[train_idx], ds.x[test_idx]
    y_train, y_test = ds.y[train_idx], ds.y[test_idx]
    if spec.standardize:
        x_train, x_test = _standardize_train_test(x_train, x_test)
    train = Dataset(x_train, y_train)
    K = spec.K if spec.K is not None else (math.log(train.d) if train.d > 1 else 1.0)
    T = spec.T if spec.T is not None else min(default_iterations(train.n), train.n)
    priv = PrivacyParams(
        epsilon=spec.epsilon,
        delta=spec.delta if spec.delta is not None else default_delta(train.n),
    )

    def config_for(kind: EstimatorKind) -> EstimatorConfig:
        return EstimatorConfig(
            s=spec.s,
            T=T,
            K=K,
            L=spec.L,
            schedule=ConstantStep(spec.eta),
            tau=spec.tau,
            response_clip=spec.response_clip,
            seed=derive_seed("real", spec.seed, kind.value),
        )

    proxy_beta = fit_estimator(
        spec.proxy, train, config_for(spec.proxy), PrivacyParams.non_private()
    ).estimate.beta
    rows = []
    for kind in estimators:
        report = fit_estimator(kind, train, config_for(kind), priv)
        beta = report.estimate.beta
        support = report.estimate.support
        rows.append(
            RealDataRow(
                estimator=kind.value,
                mae=mae(x_test @ beta, y_test),
                support_size=int(support.size),
                selected=tuple(names[j] for j in support),
                l2_vs_proxy=None if kind is spec.proxy else l2_error(beta, proxy_beta),
            )
        )
    return rows


def write_real_csv(rows: list[RealDataRow], path) -> None:
    """Write the real-data table: estimator, MAE, support size, selected names."""
    lines = ["estimator,mae,size,selected"]
    for r in rows:
        lines.append(f"{r.estimator},{repr(r.mae)},{r.support_size},{';'.join(r.selected)}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


# Sensitivity suite -----------------------------------------------------------


@dataclass(frozen=True)
class ProbeReport:
    estimator: str
    trials: int
    max_deviation: float
    max_bound_ratio: float
    passed: bool
    extremal_deviation: float | None = None
    extremal_bound: float | None = None


@dataclass(frozen=True)
class SensitivityReport:
    results: list[ProbeReport]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "results": [dataclasses.asdict(r) for r in self.results]}


PROBE_TOL = 1e-12


def _random_probe_config(gen: np.random.Generator) -> tuple[EstimatorConfig, int, int]:
    d = int(gen.integers(10, 60))
    m = int(gen.integers(5, 60))
    s = int(gen.integers(1, min(10, d)))
    cfg = EstimatorConfig(
        s=s,
        T=1,
        K=float(gen.uniform(0.5, 10.0)),
        L=float(gen.uniform(1.0, 20.0)),
        schedule=ConstantStep(float(gen.uniform(0.001, 0.5))),
        tau=float(gen.uniform(0.25, 5.0)),
        response_clip=float(gen.uniform(0.0, 20.0)),
    )
    return cfg, d, m


def run_sensitivity_suite(
    trials: int,
    seed: int = 0,
    estimators: tuple[EstimatorKind, ...] = (
        EstimatorKind.DP_IHT_H,
        EstimatorKind.DP_IHT_L,
    ),
) -> SensitivityReport:
    """Random neighboring-fold probes per estimator, checked against bounds.

    Passes iff every observed half-step deviation is within its theoretical
    bound (tolerance 1e-12). The absolute-loss estimator also runs a crafted
    extremal pair that must meet its bound to confirm tightness.
    """
    if trials < 1:
        raise InvalidConfigError(f"trials must be >= 1, got {trials}")
    results = []
    for kind in estimators:
        gen = RngHandle(derive_seed("probe-suite", seed, kind.value)).generator()
        max_dev = 0.0
        max_ratio = 0.0
        ok = True
        for trial in range(trials):
            cfg, d, m = _random_probe_config(gen)
            dev = sensitivity_probe(
                kind, cfg, seed=derive_seed("probe", seed, kind.value, trial), d=d, m=m
            )
            bound = probe_bound(kind, cfg, cfg.schedule.step(0), m)
            max_dev = max(max_dev, dev)
            max_ratio = max(max_ratio, dev / bound)
            if dev > bound + PROBE_TOL:
                ok = False
        extremal_dev = None
        extremal_bound = None
        if kind is EstimatorKind.DP_IHT_L:
            cfg, d, m = _random_probe_config(gen)
            extremal_dev = sensitivity_probe(kind, cfg, seed=0, d=d, m=m, extremal=True)
            extremal_bound = probe_bound(kind, cfg, cfg.schedule.step(0), m)
            if extremal_dev > extremal_bound + PROBE_TOL:
                ok = False
        results.append(
            ProbeReport(
                estimator=kind.value,
                trials=trials,
                max_deviation=max_dev,
                max_bound_ratio=max_ratio,
                passed=ok,
                extremal_deviation=extremal_dev,
                extremal_bound=extremal_bound,
            )
        )
    return SensitivityReport(results=results)
