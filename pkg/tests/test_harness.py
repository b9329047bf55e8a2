import numpy as np
import pytest

from dpsparse import (
    Dataset,
    EstimatorKind,
    ExperimentBase,
    RealDataSpec,
    SweepSpec,
    SyntheticConfig,
    derive_seed,
    run_real,
    run_sensitivity_suite,
    run_sweep,
    save_csv,
)
from dpsparse.errors import InvalidConfigError
from dpsparse.harness import (
    compute_aggregates,
    write_aggregates_json,
    write_real_csv,
    write_results_csv,
)

ADA = EstimatorKind.ADA_HUBER_LITE
H = EstimatorKind.DP_IHT_H
L = EstimatorKind.DP_IHT_L
SLR = EstimatorKind.DP_SLR_LITE


def small_base(seed=0, **kwargs):
    defaults = dict(
        synthetic=SyntheticConfig(n=60, d=12, s_star=3, seed=seed),
        epsilon=1.0,
        eta=0.1,
        T=4,
        tau=2.0,
    )
    defaults.update(kwargs)
    return ExperimentBase(**defaults)


def small_spec(estimators=(ADA,), values=(40, 60), repeats=2, axis="n", **kwargs):
    return SweepSpec(
        axis=axis, values=values, base=small_base(**kwargs), repeats=repeats,
        estimators=estimators,
    )


# seed derivation -------------------------------------------------------------


def test_derive_seed_stable_and_distinct():
    a = derive_seed("data", 0, "n", 500, 0)
    assert a == derive_seed("data", 0, "n", 500, 0)
    assert a != derive_seed("data", 0, "n", 500, 1)
    assert a != derive_seed("data", 1, "n", 500, 0)
    assert 0 <= a < 2**63


def test_adding_estimator_keeps_other_rows():
    res1 = run_sweep(small_spec(estimators=(ADA,)))
    res2 = run_sweep(small_spec(estimators=(ADA, L)))
    rows1 = [r for r in res1.rows if r.estimator == ADA.value]
    rows2 = [r for r in res2.rows if r.estimator == ADA.value]
    assert [(r.value, r.seed, r.l2_error) for r in rows1] == [
        (r.value, r.seed, r.l2_error) for r in rows2
    ]


# sweeps -----------------------------------------------------------------------


def test_sweep_row_count_single_cell():
    res = run_sweep(small_spec(estimators=(ADA,), values=(50,), repeats=1))
    assert len(res.rows) == 1


def test_sweep_row_count_and_order():
    spec = small_spec(estimators=(H, ADA), values=(40, 60), repeats=3)
    res = run_sweep(spec)
    assert len(res.rows) == 2 * 2 * 3
    keys = [(r.value, r.estimator, r.seed) for r in res.rows]
    assert keys == sorted(keys)


def test_sweep_deterministic():
    a = run_sweep(small_spec(estimators=(H,)))
    b = run_sweep(small_spec(estimators=(H,)))
    assert [(r.l2_error, r.mae, r.seed) for r in a.rows] == [
        (r.l2_error, r.mae, r.seed) for r in b.rows
    ]


def test_sweep_epsilon_axis_sets_budget():
    spec = small_spec(estimators=(H,), values=(0.5, 2.0), axis="epsilon", repeats=1)
    res = run_sweep(spec)
    assert {r.value for r in res.rows} == {0.5, 2.0}
    assert all(r.status == "ok" for r in res.rows)


@pytest.mark.parametrize(
    "axis,values", [("d", (8, 16)), ("s_star", (2, 4)), ("zeta", (0.5, 1.0))]
)
def test_sweep_other_axes_resolve(axis, values):
    spec = small_spec(estimators=(ADA,), values=values, axis=axis, repeats=1)
    res = run_sweep(spec)
    assert all(r.status == "ok" for r in res.rows)
    assert [r.value for r in res.rows] == [float(v) for v in values]


def test_sweep_failure_rows_do_not_abort():
    # response_clip=None makes the squared-loss baseline raise; its rows are
    # marked failed while the others complete.
    spec = small_spec(estimators=(ADA, SLR), response_clip=None)
    res = run_sweep(spec)
    assert len(res.rows) == 8
    slr_rows = [r for r in res.rows if r.estimator == SLR.value]
    assert all(r.status.startswith("failed") for r in slr_rows)
    assert all(np.isnan(r.l2_error) for r in slr_rows)
    ada_rows = [r for r in res.rows if r.estimator == ADA.value]
    assert all(r.status == "ok" for r in ada_rows)
    assert res.n_failed == 4


def test_aggregates_match_brute_force():
    res = run_sweep(small_spec(estimators=(H, ADA), repeats=3))
    for value in (40.0, 60.0):
        for est in (H.value, ADA.value):
            rows = [r for r in res.rows if r.value == value and r.estimator == est]
            agg = res.aggregates[str(value)][est]
            l2s = [r.l2_error for r in rows]
            assert abs(agg["l2_error_mean"] - sum(l2s) / len(l2s)) < 1e-12
            mean = sum(l2s) / len(l2s)
            var = sum((v - mean) ** 2 for v in l2s) / len(l2s)
            assert abs(agg["l2_error_std"] - var**0.5) < 1e-12
            assert agg["count"] == 3


def test_aggregates_skip_failed_rows():
    res = run_sweep(small_spec(estimators=(SLR,), response_clip=None))
    assert res.aggregates == {}
    assert compute_aggregates(res.rows) == {}


def test_results_csv_deterministic_bytes(tmp_path):
    spec = small_spec(estimators=(H,))
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_results_csv(run_sweep(spec), p1)
    write_results_csv(run_sweep(spec), p2)
    b1, b2 = p1.read_bytes(), p2.read_bytes()
    assert b1 == b2
    header = b1.decode().splitlines()[0]
    assert header == "axis,value,estimator,seed,l2_error,mae,wall_ms,status"


def test_results_csv_timing_optional(tmp_path):
    res = run_sweep(small_spec(estimators=(ADA,), values=(40,), repeats=1))
    p = tmp_path / "t.csv"
    write_results_csv(res, p, include_timing=True)
    row = p.read_text().splitlines()[1].split(",")
    assert float(row[6]) > 0  # wall_ms populated on request


def test_aggregates_json_written(tmp_path):
    res = run_sweep(small_spec(estimators=(ADA,), values=(40,), repeats=2))
    p = tmp_path / "agg.json"
    write_aggregates_json(res, p)
    import json

    data = json.loads(p.read_text())
    assert data["40.0"][ADA.value]["count"] == 2


def test_sweep_spec_validation():
    with pytest.raises(InvalidConfigError):
        small_spec(values=(60, 40))  # not increasing
    with pytest.raises(InvalidConfigError):
        small_spec(values=())
    with pytest.raises(InvalidConfigError):
        small_spec(repeats=0)
    with pytest.raises(InvalidConfigError):
        SweepSpec(axis="bogus", values=(1,), base=small_base(), repeats=1, estimators=(ADA,))


def test_sweep_workers_parallel_matches_serial():
    spec = small_spec(estimators=(H,), repeats=2)
    serial = run_sweep(spec, workers=1)
    parallel = run_sweep(spec, workers=2)
    assert [(r.seed, r.l2_error) for r in serial.rows] == [
        (r.seed, r.l2_error) for r in parallel.rows
    ]


def test_sweep_workers_env_var(monkeypatch):
    monkeypatch.setenv("DPSPARSE_WORKERS", "2")
    spec = small_spec(estimators=(ADA,), values=(40,), repeats=2)
    res = run_sweep(spec)
    assert len(res.rows) == 2 and all(r.status == "ok" for r in res.rows)


# real data ---------------------------------------------------------------------


def _write_single_feature_csv(path, n=240, d=6, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    y = x[:, 0].copy()  # response equals the first feature exactly
    save_csv(Dataset(x, y), path)


def test_real_single_feature_recovery(tmp_path):
    path = tmp_path / "real.csv"
    _write_single_feature_csv(path)
    spec = RealDataSpec(
        csv_path=str(path), response_col="y", standardize=False, s=1, T=12,
        eta=1.0, tau=20.0, K=100.0, epsilon=0.5,
    )
    rows = run_real(spec, [ADA])
    assert rows[0].selected == ("x1",)
    assert rows[0].support_size == 1
    assert rows[0].mae < 1e-5
    assert rows[0].l2_vs_proxy is None  # ada-huber is the proxy itself


def test_real_standardized_run_reports_proxy_distance(tmp_path):
    path = tmp_path / "real.csv"
    _write_single_feature_csv(path, seed=1)
    spec = RealDataSpec(
        csv_path=str(path), response_col="y", standardize=True, s=2, T=12,
        eta=1.0, tau=20.0, K=100.0, epsilon=5.0,
    )
    rows = run_real(spec, [ADA, H])
    by_name = {r.estimator: r for r in rows}
    assert by_name["dp-iht-h"].l2_vs_proxy is not None
    assert by_name["ada-huber"].mae < 0.2


def test_real_constant_column_warns(tmp_path):
    rng = np.random.default_rng(2)
    x = rng.standard_normal((60, 4))
    x[:, 2] = 7.0  # constant column
    y = x[:, 0].copy()
    path = tmp_path / "const.csv"
    save_csv(Dataset(x, y), path)
    spec = RealDataSpec(csv_path=str(path), response_col="y", s=1, T=3, tau=20.0)
    with pytest.warns(UserWarning, match="constant column"):
        rows = run_real(spec, [ADA])
    assert rows[0].support_size == 1


def test_real_csv_writer_schema(tmp_path):
    path = tmp_path / "real.csv"
    _write_single_feature_csv(path, seed=3)
    spec = RealDataSpec(
        csv_path=str(path), response_col="y", standardize=False, s=1, T=3, tau=20.0
    )
    rows = run_real(spec, [ADA])
    out = tmp_path / "table.csv"
    write_real_csv(rows, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "estimator,mae,size,selected"
    assert lines[1].startswith("ada-huber,")


def test_real_data_spec_validates_fraction():
    with pytest.raises(InvalidConfigError):
        RealDataSpec(csv_path="x", response_col="y", train_fraction=1.5)


# sensitivity suite ---------------------------------------------------------------


def test_sensitivity_suite_passes():
    report = run_sensitivity_suite(trials=40, seed=0)
    assert report.passed
    names = {r.estimator for r in report.results}
    assert names == {"dp-iht-h", "dp-iht-l"}
    for r in report.results:
        assert r.max_bound_ratio <= 1.0 + 1e-9


def test_sensitivity_suite_negative_control():
    # Halving the bound must flip the verdict: the observed max deviation
    # exceeds bound/2, so a wrongly tightened bound is detected.
    report = run_sensitivity_suite(trials=40, seed=0)
    for r in report.results:
        assert r.max_bound_ratio > 0.5


def test_sensitivity_suite_extremal_tightness():
    report = run_sensitivity_suite(trials=5, seed=1)
    l_report = [r for r in report.results if r.estimator == "dp-iht-l"][0]
    assert l_report.extremal_deviation == pytest.approx(l_report.extremal_bound, abs=1e-9)


def test_sensitivity_suite_rejects_bad_trials():
    with pytest.raises(InvalidConfigError):
        run_sensitivity_suite(trials=0)
