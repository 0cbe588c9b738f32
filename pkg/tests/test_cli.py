"""Command-line interface: parsing, config merging, determinism, exit codes."""

import json
import math

import pytest

from evosi.cli import main

REG3_OUTBREAK = [
    "outbreak", "--model", "regular:3", "--rho", "1", "--n", "2000",
    "--trials", "1000", "--eps", "0.05", "--seed", "7",
]


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


def parse_kv(text):
    values = {}
    for line in text.splitlines():
        key, sep, value = line.partition(" = ")
        if sep:
            values[key] = value
    return values


class TestConstants:
    def test_poisson_three(self, capsys):
        code, out = run_cli(capsys, "constants", "--model", "poisson:3", "--rho", "1")
        assert code == 0
        kv = parse_kv(out)
        assert float(kv["lambda_c"]) == pytest.approx(0.5, rel=1e-12)
        assert float(kv["delta"]) == pytest.approx(9.0, rel=1e-12)
        assert float(kv["sigma_sq"]) == pytest.approx(3.0, rel=1e-12)

    def test_regular_three(self, capsys):
        code, out = run_cli(capsys, "constants", "--model", "regular:3", "--rho", "1")
        assert code == 0
        kv = parse_kv(out)
        assert float(kv["lambda_c"]) == pytest.approx(1.0, rel=1e-12)
        assert float(kv["delta"]) == pytest.approx(7.0, rel=1e-12)
        assert float(kv["sigma_sq"]) == pytest.approx(1.0, rel=1e-12)
        assert float(kv["c_main"]) > 0.0

    def test_out_file_matches_stdout(self, capsys, tmp_path):
        path = tmp_path / "constants.txt"
        code, out = run_cli(
            capsys, "constants", "--model", "regular:3", "--rho", "1",
            "--out", str(path),
        )
        assert code == 0
        assert path.read_text() == out


class TestDeterminism:
    def test_outbreak_repeat_identical(self, capsys):
        code1, out1 = run_cli(capsys, *REG3_OUTBREAK)
        code2, out2 = run_cli(capsys, *REG3_OUTBREAK)
        assert code1 == code2 == 0
        assert out1 == out2
        assert "scaled = " in out1

    def test_worker_count_does_not_change_output(self, capsys):
        base = [
            "outbreak", "--model", "regular:3", "--rho", "1", "--n", "500",
            "--trials", "800", "--seed", "11",
        ]
        _, out1 = run_cli(capsys, *base, "--workers", "1")
        _, out2 = run_cli(capsys, *base, "--workers", "2")
        assert out1 == out2

    def test_default_seed_is_fixed(self, capsys):
        base = [
            "outbreak", "--model", "regular:3", "--rho", "1", "--n", "500",
            "--trials", "500",
        ]
        _, out_default = run_cli(capsys, *base)
        _, out_explicit = run_cli(capsys, *base, "--seed", "1729")
        assert out_default == out_explicit

    def test_output_files_byte_identical(self, capsys, tmp_path):
        args = [
            "outbreak", "--model", "regular:3", "--rho", "1", "--n", "500,1000",
            "--trials", "600", "--seed", "5",
        ]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        capsys.readouterr()
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        summary = json.loads((tmp_path / "a.json").read_text())
        assert summary["plan"]["master_seed"] == 5
        assert len(summary["estimates"]) == 2

    def test_meander_repeat_identical(self, capsys):
        _, out1 = run_cli(capsys, "meander", "--samples", "20000")
        _, out2 = run_cli(capsys, "meander", "--samples", "20000")
        assert out1 == out2
        mean = float(parse_kv(out1)["mean"].split(" ")[0])
        assert mean == pytest.approx(math.sqrt(math.pi / 2), rel=0.02)


class TestF1:
    def test_high_start_is_near_one(self, capsys):
        code, out = run_cli(
            capsys, "f1", "--x", "20", "--q", "0.1", "--model", "regular:3",
            "--rho", "1",
        )
        assert code == 0
        assert float(parse_kv(out)["f1"]) >= 0.999

    def test_strict_tolerance_divergence_is_runtime_error(self, capsys):
        code, _ = run_cli(
            capsys, "f1", "--x", "0.5", "--q", "0.5", "--model", "regular:3",
            "--rho", "1", "--tol", "1e-10",
        )
        assert code == 2

    def test_negative_x_is_config_error(self, capsys):
        code, _ = run_cli(
            capsys, "f1", "--x", "-1", "--q", "0.1", "--model", "regular:3",
            "--rho", "1",
        )
        assert code == 1


class TestExitCodes:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1
        capsys.readouterr()

    def test_missing_required_flag(self, capsys):
        assert main(["constants", "--model", "poisson:3"]) == 1
        capsys.readouterr()

    def test_bad_model_spec(self, capsys):
        assert main(["constants", "--model", "nosuch:4", "--rho", "1"]) == 1
        capsys.readouterr()

    def test_subcritical_model_is_runtime_error(self, capsys):
        code = main(
            ["outbreak", "--model", "poisson:0.5", "--rho", "1", "--n", "500",
             "--trials", "20"]
        )
        capsys.readouterr()
        assert code == 2

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        capsys.readouterr()

    def test_scaling_needs_four_sizes(self, capsys):
        code = main(
            ["scaling", "--model", "regular:3", "--rho", "1",
             "--n", "500,1000,2000", "--trials", "100"]
        )
        capsys.readouterr()
        assert code == 1


class TestConfigFile:
    def test_file_values_used_and_flags_override(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# comparison run\n"
            "model = regular:3\n"
            "rho = 1\n"
            "n = 500\n"
            "trials = 400\n"
            "seed = 3\n"
        )
        _, from_file = run_cli(capsys, "outbreak", "--config", str(cfg))
        _, from_flags = run_cli(
            capsys, "outbreak", "--model", "regular:3", "--rho", "1", "--n", "500",
            "--trials", "400", "--seed", "3",
        )
        assert from_file == from_flags
        # an explicit flag wins over the file entry
        _, overridden = run_cli(
            capsys, "outbreak", "--config", str(cfg), "--trials", "200"
        )
        assert "trials = 200" in overridden

    def test_unknown_key_is_config_error(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("model = regular:3\nbogus = 1\n")
        assert main(["outbreak", "--config", str(cfg), "--rho", "1", "--n", "500"]) == 1
        capsys.readouterr()

    def test_malformed_line_reports_line_number(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("model = regular:3\nrho 1\n")
        code = main(["outbreak", "--config", str(cfg), "--n", "500"])
        err = capsys.readouterr().err
        assert code == 1
        assert f"{cfg}:2" in err

    def test_missing_file_is_config_error(self, capsys, tmp_path):
        code = main(
            ["outbreak", "--config", str(tmp_path / "absent.cfg"), "--n", "500"]
        )
        capsys.readouterr()
        assert code == 1


class TestOtherCommands:
    def test_walks_prints_exact_law(self, capsys):
        code, out = run_cli(
            capsys, "walks", "--model", "regular:3", "--rho", "1",
            "--n", "1000000", "--q", "0.1",
        )
        assert code == 0
        kv = parse_kv(out)
        assert "/" in kv["mean_increment"]
        assert int(kv["steps"]) > 0

    def test_audit_runs_on_sampled_sequence(self, capsys):
        code, out = run_cli(
            capsys, "audit", "--model", "poisson:3", "--n", "5000"
        )
        assert code == 0
        assert "h1 exponential moment" in out
        assert "per-degree concentration" in out

    def test_simulate_writes_per_trial_csv(self, capsys, tmp_path):
        path = tmp_path / "trials.csv"
        code, out = run_cli(
            capsys, "simulate", "--model", "regular:3", "--rho", "1", "--n", "500",
            "--trials", "50", "--dynamics", "ab", "--out", str(path),
        )
        assert code == 0
        assert "mean_final_size = " in out
        lines = path.read_text().splitlines()
        assert lines[0] == "trial,final_size,outbreak"
        assert len(lines) == 51

    def test_stages_json_output(self, capsys, tmp_path):
        path = tmp_path / "stages.json"
        code, out = run_cli(
            capsys, "stages", "--model", "regular:3", "--rho", "1", "--n", "2000",
            "--trials", "300", "--stage", "1", "--out", str(path),
        )
        assert code == 0
        assert "stage1:" in out
        report = json.loads(path.read_text())
        assert report["stage1"]["trials"] == 300

    def test_compare_reports_all_three(self, capsys):
        code, out = run_cli(
            capsys, "compare", "--model", "regular:3", "--rho", "1", "--n", "200",
            "--trials", "200",
        )
        assert code == 0
        for key in ("ab", "evosi", "avosi"):
            assert f"mean_final {key} = " in out
