import csv
import json
from pathlib import Path

import numpy as np
import pytest

from garchboot.cli import main
from garchboot.harness.config import ConfigError, ExperimentConfig, load_config, parse_key_values
from garchboot.harness.csvio import fmt, read_series, write_csv
from garchboot.harness.experiments import run_contour, run_convergence, run_coverage, run_sae
from garchboot.harness.replication import run_replications
from garchboot.seeding import derive_seed, make_rng


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def draw_task(r, seed):
    return float(make_rng(seed).standard_normal())


def failing_task(r, seed):
    if r == 2:
        raise RuntimeError("forced failure")
    return r


class TestReplications:
    def test_serial_equals_parallel(self):
        a = run_replications(draw_task, 4, 7, "demo")
        b = run_replications(draw_task, 4, 7, "demo", threads=4)
        assert a.records == b.records and a.indices == b.indices == [0, 1, 2, 3]

    def test_failure_counted(self):
        out = run_replications(failing_task, 4, 0, "demo")
        assert out.n_failures == 1 and out.failures == [2]
        assert out.records == [0, 1, 3]

    def test_seed_changes_records(self):
        assert run_replications(draw_task, 3, 1, "demo").records != run_replications(draw_task, 3, 2, "demo").records

    def test_labels_separate_streams(self):
        assert derive_seed(1, "a", 0) != derive_seed(1, "b", 0)
        assert derive_seed(1, "a", 0) == derive_seed(1, "a", 0)


class TestConfig:
    def test_parse(self):
        text = "# comment\nomega = 2\nalpha=0.3, 0.1\n\nN=5000\nn=200\n"
        assert parse_key_values(text) == {"omega": "2", "alpha": "0.3, 0.1", "N": "5000", "n": "200"}

    def test_precedence(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("omega=2\nn=300\nN=5000\nseed=4\nstarts=3\n")
        cfg = load_config(path, {"n": "400"})
        assert (cfg.omega, cfg.n, cfg.N, cfg.master_seed, cfg.fit.starts) == (2.0, 400, 5000, 4, 3)
        assert cfg.spec.alpha == (0.5,)

    @pytest.mark.parametrize("values", [{"nope": "1"}, {"n": "abc"}, {"R": "0"}, {"kappa_mode": "x"},
                                        {"alpha": "-0.1"}])
    def test_invalid(self, values):
        with pytest.raises(ConfigError):
            ExperimentConfig().with_values(values)


class TestCsv:
    def test_roundtrip_17_digits(self, tmp_path):
        vals = make_rng(3).standard_normal(50) * 10.0 ** make_rng(4).integers(-8, 8, 50)
        write_csv(tmp_path / "v.csv", ["v"], [[v] for v in vals])
        back = [float(r[0]) for r in read_rows(tmp_path / "v.csv")[1:]]
        assert back == list(vals)

    def test_fmt(self):
        assert fmt(True) == "1" and fmt(3) == "3" and fmt(0.1) == "0.10000000000000001"

    def test_read_series(self, tmp_path):
        p = tmp_path / "x.txt"
        p.write_text("# header\n1.5\n\n-2\n")
        np.testing.assert_array_equal(read_series(p), [1.5, -2.0])
        p.write_text("1\nabc\n")
        with pytest.raises(ValueError, match="line 2"):
            read_series(p)


class TestCli:
    def test_simulate(self, tmp_path, capsys):
        assert main(["simulate", "--n", "5", "--seed", "3", "--out", str(tmp_path), "--no-plots"]) == 0
        rows = read_rows(tmp_path / "simulate.csv")
        assert rows[0] == ["t", "x", "h"] and len(rows) == 6
        meta = json.loads((tmp_path / "simulate_meta.json").read_text())
        assert meta["command"] == "simulate" and meta["config"]["n"] == 5

    def test_simulate_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            main(["simulate", "--n", "50", "--seed", "9", "--out", str(tmp_path / d), "--no-plots"])
        assert (tmp_path / "a/simulate.csv").read_bytes() == (tmp_path / "b/simulate.csv").read_bytes()

    def test_burn_in_changes_values(self, tmp_path):
        main(["simulate", "--n", "20", "--burn-in", "0", "--out", str(tmp_path / "a"), "--no-plots"])
        main(["simulate", "--n", "20", "--burn-in", "1000", "--out", str(tmp_path / "b"), "--no-plots"])
        a, b = read_rows(tmp_path / "a/simulate.csv"), read_rows(tmp_path / "b/simulate.csv")
        assert a[0] == b[0] and len(a) == len(b) and a[1:] != b[1:]

    def test_fit_simulated(self, tmp_path, capsys):
        code = main(["fit", "--n", "2000", "--N", "200000", "--out", str(tmp_path), "--no-plots"])
        assert code == 0
        text = capsys.readouterr().out
        assert "kappa" in text
        rows = read_rows(tmp_path / "fit.csv")
        assert rows[0] == ["param", "estimate", "se"]
        est = {r[0]: (float(r[1]), float(r[2])) for r in rows[1:]}
        assert abs(est["alpha"][0] - 0.5) < 0.15 and 0 < est["alpha"][1] < 0.2

    def test_fit_file(self, tmp_path):
        x = make_rng(1).standard_normal(300)
        (tmp_path / "x.txt").write_text("# returns\n" + "\n".join(repr(float(v)) for v in x) + "\n")
        assert main(["fit", str(tmp_path / "x.txt"), "--N", "100000", "--out", str(tmp_path), "--no-plots"]) == 0
        series = read_rows(tmp_path / "fit_series.csv")
        assert series[0] == ["t", "x", "sigma2", "residual"] and len(series) == 301

    def test_fit_too_short(self, tmp_path):
        (tmp_path / "x.txt").write_text("\n".join(["0.5", "-1"] * 5) + "\n")
        assert main(["fit", str(tmp_path / "x.txt"), "--out", str(tmp_path), "--no-plots"]) == 2

    def test_fit_parse_error(self, tmp_path):
        (tmp_path / "x.txt").write_text("0.5\nnot-a-number\n")
        assert main(["fit", str(tmp_path / "x.txt"), "--out", str(tmp_path), "--no-plots"]) == 3

    def test_bad_config_value(self, tmp_path):
        assert main(["simulate", "--n", "-3", "--out", str(tmp_path)]) == 2

    def test_plot_written(self, tmp_path):
        assert main(["simulate", "--n", "100", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "simulate.png").stat().st_size > 0

    def test_contour_cli(self, tmp_path):
        code = main(["contour", "--N", "100000", "--omega-grid", "1,2", "--alpha-grid", "0.3",
                     "--out", str(tmp_path)])
        assert code == 0
        rows = read_rows(tmp_path / "contour.csv")
        assert rows[0] == ["omega0", "alpha0", "var_omega", "cov", "var_alpha"] and len(rows) == 3
        assert (tmp_path / "contour.png").exists()


class TestExperiments:
    def test_contour_reference_point(self):
        cfg = ExperimentConfig(omega_grid=(0.5, 1.0, 2.0), alpha_grid=(0.5,), N=1_000_000)
        rows = run_contour(cfg).tables["contour"][1]
        assert len(rows) == 3
        mid = rows[1]
        assert mid[:2] == [1.0, 0.5]
        assert mid[2] == pytest.approx(4.893, rel=0.02)
        va = [r[4] for r in rows]
        assert (max(va) - min(va)) / np.mean(va) < 0.03

    def test_convergence_format(self):
        cfg = ExperimentConfig(n_grid=(200,), R=6, B=5, N=100_000, methods=("qmle", "wb", "rb"))
        rep = run_convergence(cfg)
        header, rows = rep.tables["convergence"]
        assert header == ["n", "method", "elem", "ratio"]
        assert {(r[1], r[2]) for r in rows} == {(m, e) for m in ("qmle", "wb", "rb")
                                                for e in ("var_omega", "cov", "var_alpha")}
        assert rep.replications["convergence/n=200"]["completed"] == 6

    def test_sae_heavy_tails(self):
        cfg = ExperimentConfig(n_grid=(300,), R=5, dists=("gaussian", "t3"))
        rep = run_sae(cfg)
        header, rows = rep.tables["sae"]
        assert header == ["dist", "n", "rep", "sae"] and len(rows) == 10
        assert all(r[3] >= 0 for r in rows)
        assert all(v["completed"] + v["failures"] == v["R"] for v in rep.replications.values())

    def test_coverage_tables(self):
        cfg = ExperimentConfig(n_grid=(300,), R=4, B=25, N=100_000)
        rep = run_coverage(cfg)
        _, irows = rep.tables["coverage_intervals"]
        assert len(irows) == 4
        for r in irows:
            assert r[4] + r[5] + r[6] == r[7] == 4
            assert r[8] + r[9] + r[10] == pytest.approx(100.0)
        _, erows = rep.tables["coverage_ellipses"]
        assert {r[1] for r in erows} == {"empirical", "wb", "rb"}
        assert all(r[3] <= r[4] for r in erows)

    def test_coverage_data_mode(self):
        cfg = ExperimentConfig(n_grid=(300,), R=3, B=25, N=100_000, kappa_mode="data", methods=("wb",))
        rep = run_coverage(cfg)
        assert len(rep.tables["coverage_intervals"][1]) == 2

    def test_coverage_deterministic(self, tmp_path):
        args = ["coverage", "--n-grid", "200", "--R", "3", "--B", "20", "--N", "50000",
                "--methods", "wb", "--no-plots"]
        main(args + ["--out", str(tmp_path / "a")])
        main(args + ["--out", str(tmp_path / "b"), "--threads", "2"])
        for name in ("coverage_intervals", "coverage_ellipses", "coverage_estimates"):
            assert Path(tmp_path / f"a/{name}.csv").read_bytes() == Path(tmp_path / f"b/{name}.csv").read_bytes()
