import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from rffklms.cli import build_parser, main
from rffklms.datagen import read_stream_csv

GOLDEN = Path(__file__).parent / "golden"


@pytest.mark.parametrize("command", ["main", "run", "theory", "bench", "approx", "dump"])
def test_help_golden(command, monkeypatch):
    monkeypatch.setenv("COLUMNS", "80")
    parser = build_parser()
    if command != "main":
        parser = parser._subparsers._group_actions[0].choices[command]
    assert parser.format_help() == (GOLDEN / f"help_{command}.txt").read_text()


def test_help_documents_every_flag():
    top = build_parser()
    for name, sub in top._subparsers._group_actions[0].choices.items():
        text = sub.format_help()
        for action in sub._actions:
            for flag in action.option_strings:
                assert flag in text, (name, flag)
            assert action.help, (name, action.dest)


def test_unknown_flag_is_an_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["approx", "--bogus"])
    assert info.value.code == 2
    assert "unrecognized arguments" in capsys.readouterr().err


def test_missing_config_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["run", "--out", str(tmp_path)])
    assert info.value.code == 2


def test_unreadable_config(tmp_path, capsys):
    assert main(["run", str(tmp_path / "none.toml"), "--out", str(tmp_path)]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_config_error_has_line(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("n_samples = 10\n[model\nkind = 'chaotic_a'\n")
    assert main(["run", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_no_subcommand():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


class TestRun:
    def test_example3(self, tmp_path, capsys):
        assert main(["run", "--preset", "example3", "--runs", "20", "--out", str(tmp_path)]) == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert 4 <= summary["filters"]["qklms_eps0.01"]["mean_dict_size"] <= 12
        assert (tmp_path / "rffklms_D100.csv").exists() and (tmp_path / "qklms_eps0.01.csv").exists()
        assert summary["theory"] == []
        assert "mean dictionary size" in capsys.readouterr().out

    def test_example4(self, tmp_path):
        assert main(["run", "--preset", "example4", "--runs", "20", "--out", str(tmp_path)]) == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert 24 <= summary["filters"]["qklms_eps0.01"]["mean_dict_size"] <= 40

    def test_config_file_with_theory(self, tmp_path):
        path = tmp_path / "e1.toml"
        path.write_text(
            "n_samples = 300\nn_runs = 2\nbase_seed = 1\n"
            "[model]\nkind = 'kernel_expansion'\n"
            "[[filter]]\nalgorithm = 'rffklms'\nsigma = 5.0\nfeature_dim = 50\n"
        )
        assert main(["run", str(path), "--out", str(tmp_path / "out")]) == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        (theory,) = summary["theory"]
        assert theory["label"] == "rffklms_D50" and theory["j_opt"] == pytest.approx(0.01)
        with open(tmp_path / "out" / "rffklms_D50.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["n", "mse", "mse_db"] and len(rows) == 301

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_failed_run_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.toml"
        path.write_text(
            "n_samples = 50\nn_runs = 1\n"
            "[model]\nkind = 'chaotic_a'\nd_init = 1e100\n"
            "[[filter]]\nalgorithm = 'rffklms'\nsigma = 0.05\nmu = 1e200\nfeature_dim = 10\n"
        )
        assert main(["run", str(path), "--out", str(tmp_path / "o")]) == 1
        assert "seed" in capsys.readouterr().err


class TestTheory:
    def test_inline(self, capsys):
        assert main(["theory", "--D", "100", "--seed", "1"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["j_opt"] == pytest.approx(0.01)
        assert set(report) >= {"mu_max", "j_opt", "steady_state_mse", "excess_mse", "lambda_max",
                               "D", "sigma", "sigma_x", "seed"}
        assert report["mu_max"] > 1 and report["steady_state_mse"] >= report["j_opt"]

    def test_reproducible_bytes(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["theory", "--D", "100", "--seed", "1", "--out", str(a)]) == 0
        assert main(["theory", "--D", "100", "--seed", "1", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_bound_violation(self, capsys):
        assert main(["theory", "--D", "100", "--mu", "3.0"]) == 1
        err = capsys.readouterr().err
        assert "mu=3.0" in err and "mean-convergence bound" in err and "stability range" in err

    def test_preset(self, capsys):
        assert main(["theory", "--preset", "example1_d100"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["D"] == 100 and "label" not in report

    def test_preset_without_expansion(self, capsys):
        assert main(["theory", "--preset", "example3"]) == 2
        assert "kernel_expansion" in capsys.readouterr().err


class TestApprox:
    def _rows(self, text):
        return list(csv.reader(io.StringIO(text)))

    def test_decreasing(self, capsys):
        assert main(["approx", "--D", "100,400,1600", "--sigma", "5", "--input-dim", "5", "--pairs", "1000"]) == 0
        rows = self._rows(capsys.readouterr().out)
        assert rows[0] == ["D", "rms_error", "max_error"]
        rms = [float(r[1]) for r in rows[1:]]
        assert rms[0] > rms[1] > rms[2]

    def test_single_feature(self, capsys):
        assert main(["approx", "--D", "1"]) == 0
        rows = self._rows(capsys.readouterr().out)
        assert len(rows) == 2 and float(rows[1][1]) <= 3.0

    def test_same_seed_same_csv(self, tmp_path):
        for name in ("a.csv", "b.csv"):
            assert main(["approx", "--D", "10,20", "--pairs", "50", "--seed", "4", "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    @pytest.mark.parametrize("value", ["", "10,x", "0", "-5"])
    def test_bad_list(self, value):
        with pytest.raises(SystemExit) as info:
            main(["approx", "--D", value])
        assert info.value.code == 2

    def test_bad_pairs(self, capsys):
        assert main(["approx", "--D", "10", "--pairs", "0"]) == 2
        assert "n_pairs" in capsys.readouterr().err


class TestBench:
    def test_ratio(self, tmp_path):
        out = tmp_path / "t.json"
        assert main(["bench", "--preset", "example3", "--runs", "2", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert set(report["timings"]) == {"rffklms_D100", "qklms_eps0.01"}
        assert report["ratio"] > 0 and report["n_runs"] == 2


class TestDump:
    def test_model(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["dump", "--model", "chaotic_b", "--n", "25", "--seed", "3", "--out", str(out)]) == 0
        assert out.read_text().splitlines()[0] == "n,x_1,x_2,y"
        X, y = read_stream_csv(out)
        assert X.shape == (25, 2) and np.all(np.isfinite(y))

    def test_preset_is_deterministic(self, tmp_path):
        for name in ("a.csv", "b.csv"):
            assert main(["dump", "--preset", "example2", "--n", "10", "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.csv").read_text().splitlines()[0] == "n,x_1,x_2,x_3,x_4,x_5,y"

    def test_bad_n(self, tmp_path):
        assert main(["dump", "--model", "chaotic_a", "--n", "0", "--out", str(tmp_path / "x.csv")]) == 2
