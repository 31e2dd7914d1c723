import json

import numpy as np
import pytest

from mellin_deconv import EstimatorConfig, FrequencyGrid, Sample
from mellin_deconv.cli import main
from mellin_deconv.estimator import estimate_noisy
from mellin_deconv.models import make_error, make_target, sample_noisy


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def write_sample(path, points, header=None):
    with open(path, "w") as fh:
        if header:
            fh.write(header + "\n")
        for v in points:
            fh.write(f"{float(v):.17g}\n")


@pytest.fixture
def gamma5_noisy_file(tmp_path):
    tgt, g = make_target("gamma5"), make_error("uniform01")
    s = sample_noisy(tgt, g, 1000, np.random.default_rng(0))
    path = tmp_path / "sample.txt"
    write_sample(path, s.points, header="y")
    return str(path), s


class TestConfigHandling:
    def test_dump_config_round_trip(self, tmp_path, capsys):
        code, out, _ = run(["simulate", "--n", "700", "--seed", "3",
                            "--threads", "2", "--dump-config"], capsys)
        assert code == 0
        cfg = json.loads(out)
        assert cfg["n"] == 700 and cfg["seed"] == 3
        cfg_file = tmp_path / "run.json"
        cfg_file.write_text(json.dumps(cfg))
        code, out2, _ = run(["simulate", "--config", str(cfg_file),
                             "--dump-config"], capsys)
        assert code == 0
        assert json.loads(out2) == cfg

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg_file = tmp_path / "bad.json"
        cfg_file.write_text(json.dumps({"n": 100, "bogus_key": 1}))
        code, _, err = run(["simulate", "--config", str(cfg_file),
                            "--dump-config"], capsys)
        assert code == 2
        assert "bogus_key" in err

    def test_flags_override_file(self, tmp_path, capsys):
        cfg_file = tmp_path / "c.json"
        cfg_file.write_text(json.dumps({"n": 100}))
        code, out, _ = run(["simulate", "--config", str(cfg_file), "--n", "250",
                            "--dump-config"], capsys)
        assert code == 0
        assert json.loads(out)["n"] == 250

    def test_threads_env_var(self, capsys, monkeypatch):
        monkeypatch.setenv("MELLIN_DECONV_THREADS", "5")
        code, out, _ = run(["simulate", "--dump-config"], capsys)
        assert code == 0
        assert json.loads(out)["threads"] == 5


class TestEstimate:
    def test_adaptive_end_to_end(self, gamma5_noisy_file, tmp_path, capsys):
        path, _ = gamma5_noisy_file
        out_csv = str(tmp_path / "est.csv")
        code, _, _ = run(["estimate", "--input", path, "--error", "uniform01",
                          "--mode", "adaptive", "--chi", "0.8", "--k-max", "20",
                          "--output", out_csv], capsys)
        assert code == 0
        lines = open(out_csv).read().splitlines()
        assert lines[0] == "x,f_hat"
        assert len(lines) == 401
        side = json.load(open(out_csv + ".selection.json"))
        assert 1 <= side["k_hat"] <= 10
        assert side["chi"] == 0.8
        assert len(side["table"]) == side["K_n"]
        row = side["table"][side["k_hat"] - 1]
        assert row["contrast"] == pytest.approx(-row["omega_norm_sq"] + row["pen"])

    def test_fixed_dirac_matches_library_direct_path(self, tmp_path, capsys):
        tgt = make_target("gamma5")
        s = tgt.sampler(np.random.default_rng(1), 400)
        path = tmp_path / "x.txt"
        write_sample(path, s.points)
        out_csv = str(tmp_path / "d.csv")
        code, _, _ = run(["estimate", "--input", str(path), "--error", "dirac",
                          "--mode", "fixed", "--k", "5", "--k-max", "20",
                          "--output", out_csv], capsys)
        assert code == 0
        cfg = EstimatorConfig(grid=FrequencyGrid(k_max=20.0, step=0.01))
        est = estimate_noisy(Sample(s.points), make_error("dirac"), 5.0, cfg)
        got = np.loadtxt(out_csv, delimiter=",", skiprows=1)
        assert np.array_equal(got[:, 1], est.clipped_values())

    def test_empty_file(self, tmp_path, capsys):
        path = tmp_path / "empty.txt"
        path.write_text("")
        code, _, err = run(["estimate", "--input", str(path), "--output",
                            str(tmp_path / "o.csv")], capsys)
        assert code == 2
        assert "no observations" in err

    def test_bad_lines_reported_with_numbers(self, tmp_path, capsys):
        path = tmp_path / "bad.txt"
        path.write_text("header\n1.5\n-2.0\noops\n3.0\n")
        code, _, err = run(["estimate", "--input", str(path), "--output",
                            str(tmp_path / "o.csv")], capsys)
        assert code == 2
        assert "3" in err and "4" in err

    def test_missing_input(self, tmp_path, capsys):
        code, _, _ = run(["estimate", "--output", str(tmp_path / "o.csv")], capsys)
        assert code == 2

    def test_unknown_error_name(self, gamma5_noisy_file, tmp_path, capsys):
        path, _ = gamma5_noisy_file
        code, _, _ = run(["estimate", "--input", path, "--error", "nope",
                          "--output", str(tmp_path / "o.csv")], capsys)
        assert code == 2


class TestSimulate:
    ARGS = ["simulate", "--target", "gamma5", "--error", "dirac", "--n", "1000",
            "--reps", "50", "--chi", "1.2", "--seed", "0", "--k-max", "20"]

    def test_golden_fig1_mean_ise(self, tmp_path, capsys):
        # Fig-1-style direct case; frozen on first verified run
        code, out, _ = run(self.ARGS + ["--threads", "1",
                                        "--output", str(tmp_path / "fig1")], capsys)
        assert code == 0
        mean = float(out.split("mean_ise=")[1].split()[0])
        assert mean == pytest.approx(0.0014619117061292026, abs=1e-10)
        risk = open(tmp_path / "fig1_risk.csv").read().splitlines()
        assert risk[0] == "rep,ise,k_selected"
        assert len(risk) == 51
        curve = open(tmp_path / "fig1_curve.csv").read().splitlines()
        assert curve[0] == "x,truth,median_estimate"
        assert len(curve) == 401

    def test_byte_identical_reruns(self, tmp_path, capsys):
        args = ["simulate", "--target", "gamma5", "--error", "uniform01",
                "--n", "300", "--reps", "8", "--seed", "1", "--k-max", "20"]
        for tag, threads in (("a", "1"), ("b", "1"), ("c", "3")):
            code, _, _ = run(args + ["--threads", threads,
                                     "--output", str(tmp_path / tag)], capsys)
            assert code == 0
        for suffix in ("_risk.csv", "_curve.csv"):
            a = (tmp_path / ("a" + suffix)).read_bytes()
            assert a == (tmp_path / ("b" + suffix)).read_bytes()
            assert a == (tmp_path / ("c" + suffix)).read_bytes()

    def test_reps_zero(self, tmp_path, capsys):
        code, _, _ = run(["simulate", "--reps", "0",
                          "--output", str(tmp_path / "z")], capsys)
        assert code == 2

    def test_missing_output(self, capsys):
        code, _, _ = run(["simulate"], capsys)
        assert code == 2


class TestCalibrate:
    def test_singleton_grid(self, capsys):
        code, out, _ = run(["calibrate", "--chi-grid", "0.5"], capsys)
        assert code == 0
        assert out.strip() == "chi=0.5"


class TestRatecheck:
    def test_synthetic_power_law_passes(self, capsys):
        code, out, _ = run(["ratecheck", "--synthetic-slope", "-0.889"], capsys)
        assert code == 0
        assert "PASS" in out
        slope = float(out.split("slope=")[1].split()[0])
        assert abs(slope + 0.889) < 1e-12

    def test_failing_check_exits_one(self, capsys):
        code, out, _ = run(["ratecheck", "--synthetic-slope", "-0.889",
                            "--slope-tol", "-1"], capsys)
        assert code == 1
        assert "FAIL" in out

    def test_bad_target(self, capsys):
        code, _, _ = run(["ratecheck", "--target", "nope", "--reps", "1",
                          "--n-list", "100,200,300,400"], capsys)
        assert code == 2
