import json

import numpy as np
import pytest

import survmed as sm
from survmed import cli
from survmed.harness import (
    QUANTITY_GROUPS,
    SUMMARY_HEADER,
    ScenarioUnusableError,
    read_summary_csv,
    run_analysis,
    run_family,
    run_replications,
)
from survmed.rng import substream

from helpers import make_fhs_like_dataset


def tiny_config(**overrides):
    base = dict(
        n=150,
        p=2,
        a=(0.8, 0.8),
        b=(0.5, 0.5),
        r=1.0,
        target_censor_rate=0.3,
        replications=6,
        seed=5,
        scenario_id="tiny",
    )
    base.update(overrides)
    return sm.ScenarioConfig(**base)


class TestRunReplications:
    def test_single_replicate_matches_pipeline_run(self):
        cfg = tiny_config()
        summary = run_replications(cfg, q=1, seed=cfg.seed)
        scale = sm.calibrate_censoring(cfg)
        ds = sm.gen_dataset(cfg, substream(cfg.seed, 0), scale)
        report = sm.r2_mediation(ds)
        expected = sm.scalar_quantities(report)
        for name, value in expected.items():
            assert summary.means[name] == pytest.approx(value, abs=1e-12)
            assert summary.mc_sds[name] == 0.0
        assert summary.n_replicates == 1
        assert summary.n_failures == 0

    def test_parallel_degree_has_no_effect(self):
        cfg = tiny_config()
        serial = run_replications(cfg, q=6, parallelism=1)
        parallel = run_replications(cfg, q=6, parallelism=2)
        assert serial == parallel

    def test_failures_counted_and_means_from_successes(self):
        # tiny samples at extreme censoring: some replicates cannot be fit
        cfg = tiny_config(n=60, target_censor_rate=0.9, r=3.0, seed=11)
        summary = run_replications(cfg, q=30)
        assert summary.n_replicates + summary.n_failures == 30
        assert summary.n_failures > 0
        assert np.isfinite(summary.means["sos_b"])

    def test_unusable_scenario_raises(self):
        cfg = tiny_config(n=50, target_censor_rate=0.99, r=5.0, b=(3.0, 3.0), seed=13)
        with pytest.raises(ScenarioUnusableError):
            run_replications(cfg, q=10)

    def test_counts_invariant(self):
        cfg = tiny_config()
        summary = run_replications(cfg, q=4)
        assert summary.n_replicates + summary.n_failures == 4
        assert all(v >= 0.0 for v in summary.mc_sds.values())


class TestRunFamily:
    def test_family_emission_and_reparse(self, tmp_path):
        summaries = run_family("M5", q=2, seed=3, out_dir=tmp_path, n=None)
        assert [s.axis_value for s in summaries] == [1.0, 2.0, 3.0, 4.0, 5.0]
        assert all(s.axis_name == "p" for s in summaries)

        for group, quantities in QUANTITY_GROUPS.items():
            path = tmp_path / f"M5_{group}.csv"
            assert path.exists()
            rows = read_summary_csv(path)
            assert rows, group
            assert tuple(rows[0].keys()) == SUMMARY_HEADER
            assert len(rows) == 5 * len(quantities)
            # every mean cell re-parses losslessly
            for row in rows:
                float(row["mean"])
                float(row["mc_sd"])

    def test_byte_determinism(self, tmp_path):
        run_family("S2", q=2, seed=7, out_dir=tmp_path / "a")
        run_family("S2", q=2, seed=7, out_dir=tmp_path / "b")
        for group in QUANTITY_GROUPS:
            a = (tmp_path / "a" / f"S2_{group}.csv").read_bytes()
            b = (tmp_path / "b" / f"S2_{group}.csv").read_bytes()
            assert a == b

    def test_s1_has_proportions(self, tmp_path):
        run_family("S1", q=1, seed=3, out_dir=tmp_path, n=None)
        rows = read_summary_csv(tmp_path / "S1_proportions.csv")
        quantities = {r["quantity"] for r in rows}
        assert quantities == {"product_proportion", "difference_proportion"}
        assert len(rows) == 9 * 2


class FHSCase:
    def __init__(self, tmp_path, n=250, target_events=80, seed=2):
        self.dir = tmp_path
        ds = make_fhs_like_dataset(np.random.default_rng(seed), n=n, target_events=target_events)
        self.csv = tmp_path / "cohort.csv"
        sm.write_csv(ds, self.csv)
        self.mapping = sm.ColumnMapping(
            time="time",
            event="event",
            entry="entry",
            exposures=("gender", "smoking", "drinking"),
            mediators=("BMI", "Fgluc", "HDL", "LDL", "TC", "TG"),
        )


class TestRunAnalysis:
    def test_tables_and_report(self, tmp_path):
        case = FHSCase(tmp_path)
        out = tmp_path / "out"
        result = run_analysis(case.csv, case.mapping, out_dir=out, random_control=True, seed=4)

        with open(out / "table1.csv") as fh:
            lines = fh.read().strip().splitlines()
        assert lines[0] == "mediator,sos_n,sos_k,sos_r,sos_b,sos_w"
        assert len(lines) == 1 + 6 + 1  # six mediators + Random control

        with open(out / "table2.csv") as fh:
            lines2 = fh.read().strip().splitlines()
        assert lines2[0] == "measure,r2_tx,r2_tm,r2_txm,r2_med,sos"
        assert len(lines2) == 1 + 5
        body = [ln.split(",") for ln in lines2[1:]]
        assert [row[0] for row in body] == list(sm.MEASURES)
        for row in body:
            tx, tm, tmx, med, sos = map(float, row[1:])
            assert med == pytest.approx(tm + tx - tmx, abs=1e-12)
            assert sos == pytest.approx(med / tx, abs=1e-12)

        with open(out / "report.json") as fh:
            doc = json.load(fh)
        assert doc["dataset"]["n"] == result.n
        assert set(doc["single_mediator"]) == set(case.mapping.mediators) | {"Random"}
        assert set(doc["joint"]["measures"]) == set(sm.MEASURES)

    def test_bootstrap_cis_attached(self, tmp_path):
        case = FHSCase(tmp_path, n=200, target_events=70, seed=6)
        out = tmp_path / "outb"
        result = run_analysis(case.csv, case.mapping, out_dir=out, n_boot=100, level=0.9, seed=8)
        assert result.joint.cis is not None
        assert result.joint.ci_level == 0.9
        lo, hi = result.joint.cis["sos_k"]
        assert lo < result.joint.measures["k"].sos < hi
        doc = json.load(open(out / "report.json"))
        assert doc["joint"]["bootstrap_ci"]["level"] == 0.9

    def test_single_mediator_row_count_without_control(self, tmp_path):
        case = FHSCase(tmp_path, seed=9)
        result = run_analysis(case.csv, case.mapping)
        assert set(result.singles) == set(case.mapping.mediators)


class TestCli:
    def test_simulate_family(self, tmp_path, capsys):
        code = cli.main(
            ["simulate", "--family", "S2", "--q", "2", "--seed", "42", "--out", str(tmp_path)]
        )
        assert code == 0
        for group in QUANTITY_GROUPS:
            assert (tmp_path / f"S2_{group}.csv").exists()
        rows = read_summary_csv(tmp_path / "S2_sos.csv")
        assert len(rows) == 5 * 5

    def test_analyze_roundtrip(self, tmp_path):
        case = FHSCase(tmp_path)
        config = tmp_path / "mapping.cfg"
        config.write_text(
            "# cohort column mapping\n"
            "time = time\n"
            "event = event\n"
            "entry = entry\n"
            "exposure = gender, smoking, drinking\n"
            "mediator = BMI, Fgluc, HDL, LDL, TC, TG\n"
        )
        out = tmp_path / "cli_out"
        code = cli.main(
            ["analyze", "--data", str(case.csv), "--config", str(config), "--out", str(out)]
        )
        assert code == 0
        assert (out / "table1.csv").exists()
        assert (out / "table2.csv").exists()
        assert (out / "report.json").exists()

    def test_usage_error_exit_1(self, capsys):
        assert cli.main(["analyze", "--data", "x.csv"]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_data_error_exit_2(self, tmp_path, capsys):
        config = tmp_path / "m.cfg"
        config.write_text("time = t\nevent = e\nexposure = x\nmediator = m\n")
        assert cli.main(["analyze", "--data", str(tmp_path / "nope.csv"), "--config", str(config)]) == 2
        assert "data error" in capsys.readouterr().err

    def test_numerical_error_exit_3(self, tmp_path, capsys):
        # mediator duplicates the exposure -> joint model is singular
        rng = np.random.default_rng(3)
        n = 80
        x = rng.standard_normal(n)
        t = rng.exponential(scale=np.exp(-0.5 * x))
        ds = sm.MediationDataset(
            sm.SurvivalOutcomes(np.zeros(n), t, np.ones(n, bool)), x, x.copy()
        )
        path = tmp_path / "bad.csv"
        sm.write_csv(ds, path)
        config = tmp_path / "m.cfg"
        config.write_text("time = time\nevent = event\nexposure = x1\nmediator = m1\n")
        assert cli.main(["analyze", "--data", str(path), "--config", str(config)]) == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_scenario_dump(self, capsys):
        assert cli.main(["scenario-dump", "--family", "M3"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 6
        grids = [json.loads(ln) for ln in lines]
        assert [g["b"][0] for g in grids] == [0.01, 0.25, 0.5, 1.0, 2.0, 3.0]
        assert all(g["n"] == 2000 and g["r"] == 2.5 for g in grids)

    def test_unknown_family_usage_error(self, capsys):
        assert cli.main(["simulate", "--family", "S9"]) == 1

    def test_mapping_file_errors(self, tmp_path):
        config = tmp_path / "m.cfg"
        config.write_text("time = t\nevent = e\nexposure = x\n")  # mediator missing
        with pytest.raises(sm.DataError):
            cli.parse_mapping_file(str(config))
