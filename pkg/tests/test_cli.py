import io
import json

import pytest

from percolab.cli import UsageError, grid_values, main, parse_config, run

QUICK = ["--realizations", "200", "--size-cutoff", "2048"]


def run_cfg(argv, env=None):
    out, err = io.StringIO(), io.StringIO()
    code = run(parse_config(argv, env=env or {}), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


class TestParse:
    def test_defaults(self):
        cfg = parse_config(["fn-curve", "--model", "a-ea", "--p", "0.5"], env={})
        assert cfg["depth"] == 512 and cfg["width"] == 1025
        assert cfg["realizations"] == 10**4 and cfg["seed"] == 42
        assert cfg["size_cutoff"] == 10**5 and cfg["tol"] == 5e-3
        assert cfg["format"] == "csv"

    def test_model_b_side(self):
        assert parse_config(["fn-curve", "--model", "b-ea"], env={})["width"] == 512

    def test_probability_range_names_flag(self):
        with pytest.raises(UsageError, match="--p"):
            parse_config(["fn-curve", "--model", "a-ea", "--p", "1.5"], env={})

    def test_unknown_model(self):
        with pytest.raises(UsageError, match="--model"):
            parse_config(["fn-curve", "--model", "c-ea"], env={})

    def test_precedence(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("# experiment\nseed = 7\nrealizations=300\n")
        cfg = parse_config(["fn-curve", "--model", "a-ea", "--config", str(conf), "--seed", "9"],
                           env={"PERC_SEED": "5"})
        assert cfg["seed"] == 9 and cfg["realizations"] == 300
        cfg = parse_config(["fn-curve", "--model", "a-ea", "--config", str(conf)], env={"PERC_SEED": "5"})
        assert cfg["seed"] == 7

    def test_env_seed_fallback(self):
        assert parse_config(["fn-curve", "--model", "a-ea"], env={"PERC_SEED": "5"})["seed"] == 5

    def test_config_rejects_unknown_keys(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("colour=blue\n")
        with pytest.raises(UsageError):
            parse_config(["fn-curve", "--model", "a-ea", "--config", str(conf)], env={})

    def test_config_rejects_abbreviation(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("real=10\n")
        with pytest.raises(UsageError):
            parse_config(["fn-curve", "--model", "a-ea", "--config", str(conf)], env={})

    def test_grid(self):
        assert grid_values("0:0.05:0.25") == [0.0, 0.05, 0.1, 0.15, 0.2, 0.25]
        with pytest.raises(UsageError, match="--grid"):
            parse_config(["critical-line", "--model", "b-ea", "--grid", "0.3:0.1:0"], env={})

    def test_exponents_need_pc(self):
        with pytest.raises(UsageError, match="--p-c"):
            parse_config(["exponents", "--model", "a-ea"], env={})

    def test_critical_line_needs_b(self):
        with pytest.raises(UsageError):
            parse_config(["critical-line", "--model", "a-ea"], env={})


class TestRun:
    def test_fn_curve_p_zero(self):
        code, out, _ = run_cfg(["fn-curve", "--model", "a-ea", "--p", "0", "--realizations", "100"])
        assert code == 0
        rows = [ln for ln in out.splitlines() if not ln.startswith("#")]
        assert rows[0] == "n,count,total,f_n"
        assert all(float(r.split(",")[3]) == 0.0 for r in rows[1:])
        config = json.loads(out.splitlines()[0].split("=", 1)[1])
        assert config["realizations"] == 100 and "workers" not in config

    def test_json_format(self):
        code, out, _ = run_cfg(["fn-curve", "--model", "b-ea", "--p-plus", "0.3", "--format", "json",
                                "--width", "64", *QUICK])
        doc = json.loads(out)
        assert code == 0 and doc["total"] == 200 and doc["config"]["model"] == "b-ea"

    def test_byte_identical_across_workers(self, tmp_path):
        paths = []
        for w in ("1", "3"):
            path = tmp_path / f"curve{w}.csv"
            argv = ["fn-curve", "--model", "b-ea", "--p-plus", "0.34", "--width", "128",
                    "--workers", w, "--output", str(path), *QUICK]
            assert main(argv) == 0
            paths.append(path.read_bytes())
        assert paths[0] == paths[1]

    def test_threshold_json(self, tmp_path):
        path = tmp_path / "t.json"
        code = main(["threshold", "--model", "a-ea", "--depth", "256", "--bracket", "0.4", "0.7",
                     "--tol", "0.02", "--realizations", "1500", "--size-cutoff", "4096",
                     "-o", str(path)])
        doc = json.loads(path.read_text())
        assert code == 0 and 0.5 < doc["p_c"] < 0.58
        assert doc["config"]["bracket"] == [0.4, 0.7]

    def test_bracket_error_is_analysis_error(self, tmp_path):
        path = tmp_path / "t.json"
        code = main(["threshold", "--model", "a-ea", "--depth", "128", "--bracket", "0.7", "0.9",
                     "--realizations", "300", "-o", str(path)])
        assert code == 3 and not path.exists()

    def test_usage_error_writes_nothing(self, tmp_path):
        path = tmp_path / "x.csv"
        assert main(["fn-curve", "--model", "a-ea", "--p", "2", "-o", str(path)]) == 2
        assert not path.exists()
        assert main(["fn-curve", "--model", "a-ea", "-o", str(tmp_path / "no" / "x.csv")]) == 2

    def test_insufficient_data_exit_code(self):
        code, _, err = run_cfg(["exponents", "--model", "a-ea", "--p-c", "0.5388", "--depth", "16",
                                "--realizations", "20"])
        assert code == 3 and "analysis error" in err

    def test_oracle_check(self):
        code, out, err = run_cfg(["oracle-check", "--model", "a-ea", "--p", "0.5", "--width", "5",
                                  "--depth", "2", "--realizations", "5000"])
        assert code == 0 and json.loads(out)["mc_z_scores"]["passed"]
        assert "passed" in err

    def test_oracle_too_big(self):
        code, _, err = run_cfg(["oracle-check", "--model", "b-ea", "--width", "5"])
        assert code == 2 and "usage error" in err

    def test_critical_line_csv(self):
        code, out, _ = run_cfg(["critical-line", "--model", "b-classical", "--grid", "0:0.5:0.5",
                                "--width", "96", "--tol", "0.05", *QUICK])
        assert code == 0
        assert "p_plus,p_minus_c,uncertainty,steps,realizations" in out
