import csv
import json

import numpy as np
from pytest import approx, raises

from diagocp import cli
from diagocp.baselines import BaselineConfig
from diagocp.diag_ocp import OptimizerConfig
from diagocp.harness import (HEATMAP_HEADER, STEP_HEADER, SUMMARY_HEADER,
                             CompareResult, RunConfig, RunRecord, SweepSpec,
                             _aggregate, ablate_mu, compare, emit_ablation,
                             emit_heatmap, emit_results, emit_sweep, lr_sweep,
                             run_experiment, summary_rows,
                             verify_closed_form_equivalence,
                             verify_probe_unbiasedness, verify_rate_trend)
from diagocp.problems import NoisyLeastSquares, Quadratic

OCP = OptimizerConfig(alpha=0.05, weight_decay=0.0)


def quad_run(max_steps=20, n_seeds=1, **kwargs):
    kwargs.setdefault("problem", Quadratic(np.array([1.0, 2.0, 4.0])))
    kwargs.setdefault("optimizer", "diag_ocp")
    kwargs.setdefault("opt_cfg", OCP)
    kwargs.setdefault("base_seed", 0)
    return RunConfig(max_steps=max_steps, n_seeds=n_seeds, **kwargs)


def noisy_run(**kwargs):
    prob = NoisyLeastSquares(design_seed=3, n_samples=40, dim=6,
                             noise_std_grad=0.05)
    kwargs.setdefault("opt_cfg", BaselineConfig(kind="sgd", lr=0.05))
    return quad_run(problem=prob, optimizer="sgd", **kwargs)


# --- run configuration -------------------------------------------------------

def test_run_config_validation():
    with raises(ValueError):
        quad_run(optimizer="lbfgs")
    with raises(ValueError):
        quad_run(optimizer="sgd")  # OptimizerConfig for a baseline key
    with raises(ValueError):
        quad_run(optimizer="diag_ocp",
                 opt_cfg=BaselineConfig(kind="sgd", lr=0.1))
    with raises(ValueError):
        quad_run(optimizer="adam", opt_cfg=BaselineConfig(kind="sgd", lr=0.1))
    with raises(ValueError):
        quad_run(max_steps=0)
    with raises(ValueError):
        quad_run(x0=[1.0, 2.0])  # dim 2 against a dim-3 problem


def test_run_config_coerces_x0():
    cfg = quad_run(x0=[1.0, 2.0, 3.0])
    assert isinstance(cfg.x0, np.ndarray)
    assert cfg.x0.dtype == np.float64


# --- execution ----------------------------------------------------------------

def test_run_records_step_zero_and_final():
    recs = run_experiment(quad_run(max_steps=23, record_every=7))
    (rec,) = recs
    assert rec.steps[0] == 0
    assert rec.step_norm[0] == 0.0
    assert rec.rho[0] is None
    # cadence rows plus the off-cadence final step
    assert rec.steps == [0, 7, 14, 21, 23]
    assert rec.final_train == rec.train_loss[-1]
    assert not rec.diverged


def test_run_experiment_is_deterministic():
    a = run_experiment(noisy_run(max_steps=30, n_seeds=3))
    b = run_experiment(noisy_run(max_steps=30, n_seeds=3))
    for ra, rb in zip(a, b):
        assert ra.train_loss == rb.train_loss
        assert ra.grad_norm_sq == rb.grad_norm_sq


def test_threads_do_not_change_results():
    serial = run_experiment(noisy_run(max_steps=30, n_seeds=4), threads=1)
    pooled = run_experiment(noisy_run(max_steps=30, n_seeds=4), threads=4)
    for rs, rp in zip(serial, pooled):
        assert rs.seed == rp.seed
        assert rs.train_loss == rp.train_loss


def test_seeds_differ_but_share_the_dataset():
    recs = run_experiment(noisy_run(max_steps=10, n_seeds=2))
    # same fixed design and start, per-seed gradient noise after that
    assert recs[0].train_loss[0] == recs[1].train_loss[0]
    assert recs[0].train_loss[-1] != recs[1].train_loss[-1]


def test_divergence_is_marked():
    cfg = quad_run(max_steps=200, optimizer="sgd",
                   opt_cfg=BaselineConfig(kind="sgd", lr=1e3))
    (rec,) = run_experiment(cfg)
    assert rec.diverged
    assert rec.final_val == float("inf")
    assert rec.steps[-1] <= 200


def test_diag_ocp_run_reports_rho():
    (rec,) = run_experiment(quad_run(max_steps=5))
    assert all(r is not None for r in rec.rho[1:])
    assert all(abs(r) <= OCP.safeguard_rho_max for r in rec.rho[1:])


# --- aggregation --------------------------------------------------------------

def fake_record(min_val, min_val_step, diverged=False, final_val=None):
    rec = RunRecord(run_id="r", optimizer="sgd", lr=0.1, mu=None, seed=0)
    rec.min_val = min_val
    rec.min_val_step = min_val_step
    rec.final_val = final_val if final_val is not None else min_val
    rec.final_train = rec.final_val
    rec.diverged = diverged
    return rec


def test_aggregate_median_over_non_diverged():
    recs = [fake_record(1.0, 10), fake_record(3.0, 30),
            fake_record(2.0, 20), fake_record(9.0, 90, diverged=True)]
    agg = _aggregate(recs)
    assert agg["min_val"] == 2.0
    assert agg["min_val_step"] == 20  # step of the lower-median element
    assert agg["diverged"] == 1


def test_aggregate_even_count_uses_lower_median_step():
    recs = [fake_record(1.0, 10), fake_record(2.0, 20),
            fake_record(3.0, 30), fake_record(4.0, 40)]
    agg = _aggregate(recs)
    assert agg["min_val"] == approx(2.5)
    assert agg["min_val_step"] == 20


def test_aggregate_all_diverged():
    agg = _aggregate([fake_record(1.0, 10, diverged=True)])
    assert agg["min_val"] == float("inf")
    assert agg["min_val_step"] == -1
    assert agg["diverged"] == 1


# --- sweep ---------------------------------------------------------------------

def test_sweep_spec_validation():
    with raises(ValueError):
        SweepSpec(coarse_grid=())
    with raises(ValueError):
        SweepSpec(coarse_grid=(1e-3, 1e-2))  # ascending
    with raises(ValueError):
        SweepSpec(coarse_grid=(1e-2, -1e-3))
    with raises(ValueError):
        SweepSpec(refine_factors=())
    with raises(ValueError):
        SweepSpec(metric="wall_ms")


def test_lr_sweep_selects_and_refines():
    spec = SweepSpec(coarse_grid=(1e-1, 1e-2, 1e-3))
    base = quad_run(max_steps=60)
    result = lr_sweep(spec, base)
    coarse = {r["lr"]: r["metric"] for r in result.rows if r["stage"] == "coarse"}
    # winner of the refinement can never lose to the coarse stage: the
    # refinement candidates include the coarse winner itself
    sel = result.selected_lr
    lrs = [r["lr"] for r in result.rows]
    assert len(lrs) == len(set(lrs))  # each lr listed once across both stages
    selected_metric = next(r["metric"] for r in result.rows if r["lr"] == sel)
    assert selected_metric <= min(coarse.values()) + 1e-15
    assert sel in result.records
    assert len(result.rows) == len(result.records)


def test_lr_sweep_single_point_grid():
    spec = SweepSpec(coarse_grid=(0.05,), refine_factors=(10.0,))
    result = lr_sweep(spec, quad_run(max_steps=30))
    # refinement of {10 * 0.05 / 10} is the winner itself: one grid point total
    assert result.selected_lr == 0.05
    assert list(result.records) == [0.05]


def test_lr_sweep_all_diverged():
    base = quad_run(max_steps=30, optimizer="sgd",
                    opt_cfg=BaselineConfig(kind="sgd", lr=1.0))
    spec = SweepSpec(coarse_grid=(1e8, 1e7))
    with raises(ValueError, match="coarse grid"):
        lr_sweep(spec, base)


# --- clip-floor ablation ---------------------------------------------------------

def test_ablate_mu_requires_diag_ocp():
    with raises(ValueError):
        ablate_mu([1e-4], quad_run(optimizer="sgd",
                                   opt_cfg=BaselineConfig(kind="sgd", lr=0.1)))
    with raises(ValueError):
        ablate_mu([], quad_run())
    with raises(ValueError):
        ablate_mu([0.0], quad_run())


def test_ablate_mu_runs_values_and_control():
    ablation = ablate_mu([1e-3, 1e-5], quad_run(max_steps=10),
                         control_clip_lo=1e-10)
    assert set(ablation.runs) == {1e-3, 1e-5, "control"}
    assert ablation.runs[1e-3][0].mu == 1e-3
    assert ablation.runs["control"][0].mu == 1e-10


# --- verification ops -------------------------------------------------------------

def test_verify_closed_form_equivalence():
    report = verify_closed_form_equivalence(trials=50, seed=1)
    assert report["pass"]
    assert report["max_abs_deviation"] <= report["tolerance"]
    assert report["excluded_safeguarded"] + 1 <= report["trials"]
    with raises(ValueError):
        verify_closed_form_equivalence(trials=0)


def test_verify_rate_trend_small():
    # noise-free: the running min keeps decreasing, so the ratio is tiny
    report = verify_rate_trend(problem=Quadratic(np.linspace(0.9, 1.1, 8)),
                               T_list=(20, 40), n_seeds=2)
    assert report["pass"]
    assert report["ratio_last_to_first"] < 0.6
    assert report["loglog_slope"] < 0.0
    assert len(report["min_avg_grad_norm_sq"]) == 2
    assert report["r"][0] == approx(20 * report["min_avg_grad_norm_sq"][0])


def test_verify_rate_trend_validation():
    with raises(ValueError):
        verify_rate_trend(T_list=(100,))
    with raises(ValueError):
        verify_rate_trend(T_list=(200, 100))
    with raises(ValueError):
        verify_rate_trend(T_list=(100, 100, 200))
    with raises(ValueError):
        verify_rate_trend(n_seeds=0)


def test_verify_probe_unbiasedness_small():
    report = verify_probe_unbiasedness(n_probes=20_000, seed=0, dim=4, tol=0.1)
    assert report["pass"]
    assert report["diagonal_exact_error"] == 0.0
    with raises(ValueError):
        verify_probe_unbiasedness(n_probes=0)


# --- comparison --------------------------------------------------------------------

def test_compare_requires_distinct_keys():
    a = quad_run(optimizer="sgd", opt_cfg=BaselineConfig(kind="sgd", lr=0.1))
    with raises(ValueError):
        compare([a, a], SweepSpec())
    with raises(ValueError):
        compare([], SweepSpec())


def test_compare_reports_each_entry_at_its_selected_lr():
    entries = [
        quad_run(max_steps=40, optimizer="sgd",
                 opt_cfg=BaselineConfig(kind="sgd", lr=0.1)),
        quad_run(max_steps=40, optimizer="adam",
                 opt_cfg=BaselineConfig(kind="adam", lr=0.1)),
    ]
    result = compare(entries, SweepSpec(coarse_grid=(1e-1, 1e-2)))
    assert isinstance(result, CompareResult)
    assert set(result.selected) == {"sgd", "adam"}
    for key, recs in result.records.items():
        assert recs[0].lr == result.selected[key]


# --- emission -----------------------------------------------------------------------

def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_emit_results_csv(tmp_path):
    recs = run_experiment(quad_run(max_steps=5))
    paths = emit_results(recs, "csv", tmp_path)
    steps, summary = read_csv(paths[0]), read_csv(paths[1])
    assert tuple(steps[0]) == STEP_HEADER
    assert tuple(summary[0]) == SUMMARY_HEADER
    assert len(steps) == 1 + 6  # header + steps 0..5
    assert len(summary) == 2
    row = dict(zip(steps[0], steps[1]))
    assert row["step"] == "0"
    assert row["rho"] == ""  # None -> empty cell


def test_emit_results_json(tmp_path):
    recs = run_experiment(quad_run(max_steps=3))
    paths = emit_results(recs, "json", tmp_path)
    docs = json.loads(paths[0].read_text())
    assert docs[0]["rho"] is None
    assert docs[0]["step"] == 0
    summary = json.loads(paths[1].read_text())
    assert summary[0]["optimizer"] == "diag_ocp"


def test_emit_results_errors(tmp_path):
    with raises(ValueError):
        emit_results([], "csv", tmp_path)
    recs = run_experiment(quad_run(max_steps=2))
    with raises(ValueError):
        emit_results(recs, "parquet", tmp_path)


def test_summary_rows_ordering():
    recs = []
    for opt, lr in (("sgd", 0.1), ("adam", 0.1), ("sgd", 0.01)):
        rec = fake_record(1.0, 1)
        rec.optimizer, rec.lr = opt, lr
        recs.append(rec)
    rows = summary_rows(recs)
    assert [(r[0], r[1]) for r in rows] == [("adam", 0.1), ("sgd", 0.1), ("sgd", 0.01)]


def test_emit_sweep_and_heatmap(tmp_path):
    result = lr_sweep(SweepSpec(coarse_grid=(1e-1, 1e-2)), quad_run(max_steps=20))
    sweep_path = emit_sweep(result, tmp_path)
    rows = read_csv(sweep_path)
    assert rows[0][:3] == ["lr", "stage", "metric"]
    assert len(rows) == 1 + len(result.rows)
    heat_path = emit_heatmap({"diag_ocp": result}, tmp_path)
    heat = read_csv(heat_path)
    assert tuple(heat[0]) == HEATMAP_HEADER
    lrs = [float(r[1]) for r in heat[1:]]
    assert lrs == sorted(lrs, reverse=True)
    with raises(ValueError):
        emit_heatmap({}, tmp_path)


def test_emit_ablation(tmp_path):
    ablation = ablate_mu([1e-3], quad_run(max_steps=5))
    steps_path, ablation_path = emit_ablation(ablation, tmp_path)
    rows = read_csv(ablation_path)
    assert rows[0][0] == "label"
    assert [r[0] for r in rows[1:]] == ["0.001", "control"]
    assert read_csv(steps_path)[0] == list(STEP_HEADER)


# --- CLI ------------------------------------------------------------------------------

RUN_DOC = {
    "problem": {"kind": "quadratic", "h": [1.0, 2.0, 4.0]},
    "optimizer": {"kind": "diag_ocp", "alpha": 0.05, "weight_decay": 0.0},
    "max_steps": 10,
    "base_seed": 0,
    "n_seeds": 2,
}


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_cli_run(tmp_path, capsys):
    cfg = write_config(tmp_path, RUN_DOC)
    out = tmp_path / "results"
    assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "steps.csv").exists() and (out / "summary.csv").exists()
    assert "2 runs, 0 diverged" in capsys.readouterr().out


def test_cli_run_json_format(tmp_path, capsys):
    cfg = write_config(tmp_path, RUN_DOC)
    out = tmp_path / "results"
    assert cli.main(["run", "--config", cfg, "--out", str(out),
                     "--format", "json"]) == 0
    capsys.readouterr()
    assert (out / "steps.json").exists()


def test_cli_seed_override_changes_runs(tmp_path, capsys):
    doc = {**RUN_DOC,
           "problem": {"kind": "noisy_least_squares", "design_seed": 3,
                       "dim": 6, "n_samples": 40, "noise_std_grad": 0.05},
           "optimizer": {"kind": "sgd", "lr": 0.05},
           "n_seeds": 1}
    cfg = write_config(tmp_path, doc)
    out_a, out_b, out_c = (tmp_path / d for d in ("a", "b", "c"))
    for out, seed in ((out_a, "0"), (out_b, "7"), (out_c, "0")):
        assert cli.main(["run", "--config", cfg, "--out", str(out),
                         "--seed", seed]) == 0
    capsys.readouterr()
    base = (out_a / "steps.csv").read_bytes()
    assert base != (out_b / "steps.csv").read_bytes()
    assert base == (out_c / "steps.csv").read_bytes()


def test_cli_threads_env(tmp_path, monkeypatch, capsys):
    cfg = write_config(tmp_path, RUN_DOC)
    out_env, out_flag = tmp_path / "env", tmp_path / "flag"
    monkeypatch.setenv("DIAGOCP_THREADS", "2")
    assert cli.main(["run", "--config", cfg, "--out", str(out_env)]) == 0
    monkeypatch.delenv("DIAGOCP_THREADS")
    assert cli.main(["run", "--config", cfg, "--out", str(out_flag),
                     "--threads", "2"]) == 0
    capsys.readouterr()
    assert (out_env / "steps.csv").read_bytes() == (out_flag / "steps.csv").read_bytes()


def test_cli_sweep(tmp_path, capsys):
    doc = {**RUN_DOC, "sweep": {"coarse_grid": [1e-1, 1e-2]}}
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "results"
    assert cli.main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    for name in ("steps.csv", "summary.csv", "sweep.csv", "heatmap.csv"):
        assert (out / name).exists()
    assert "selected lr" in capsys.readouterr().out


def test_cli_ablate_mu(tmp_path, capsys):
    doc = {**RUN_DOC, "mu_values": [1e-3, 1e-4]}
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "results"
    assert cli.main(["ablate-mu", "--config", cfg, "--out", str(out)]) == 0
    capsys.readouterr()
    assert (out / "ablation.csv").exists()


def test_cli_ablate_mu_missing_values(tmp_path, capsys):
    cfg = write_config(tmp_path, RUN_DOC)
    assert cli.main(["ablate-mu", "--config", cfg, "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ValueError"
    assert "mu_values" in err["message"]


def test_cli_compare(tmp_path, capsys):
    doc = {
        "problem": {"kind": "quadratic", "h": [1.0, 2.0, 4.0]},
        "optimizers": [{"kind": "sgd"}, {"kind": "adam"}],
        "sweep": {"coarse_grid": [1e-1, 1e-2]},
        "max_steps": 20,
        "n_seeds": 1,
    }
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "results"
    assert cli.main(["compare", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "heatmap.csv").exists()
    assert "selected lrs" in capsys.readouterr().out


def test_cli_verify_pass_writes_report(tmp_path, capsys):
    out = tmp_path / "results"
    assert cli.main(["verify", "lemma1", "--out", str(out)]) == 0
    report = json.loads((out / "verify_lemma1.json").read_text())
    assert report["pass"] is True
    assert capsys.readouterr().out.count("PASS") == 1


def test_cli_verify_fail_exit_code(tmp_path, capsys):
    doc = {"T_list": [20, 40], "n_seeds": 1, "ratio_threshold": 1e-12,
           "problem": {"kind": "quadratic", "h": [1.0, 2.0]}}
    cfg = write_config(tmp_path, doc)
    assert cli.main(["verify", "rate", "--config", cfg]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_cli_bad_config_is_exit_2(tmp_path, capsys):
    doc = {**RUN_DOC, "problem": {"kind": "banana"}}
    cfg = write_config(tmp_path, doc)
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert "banana" in err["message"]


def test_cli_missing_config_file(tmp_path, capsys):
    assert cli.main(["run", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path)]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "FileNotFoundError"
