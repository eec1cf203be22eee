import json
from pathlib import Path

import numpy as np
import pytest

from sstac import ConfigError, load_trace
from sstac.cli import main
from sstac.harness import (
    DIAG_SERIES,
    ExperimentConfig,
    diag_checks,
    diag_series_csv,
    execute_run,
    run_command,
    run_id,
    sweep_command,
)
from sstac.trace import BASE_COLUMNS

GOLDEN = Path(__file__).parent / "data" / "golden_chain2" / "trace.csv"

BASE_CFG = {"mdp": "chain2", "algorithm": "linear_exact", "K": 4, "seeds": [0]}


def write_config(tmp_path, doc):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestExperimentConfig:
    def test_round_trip_equality(self):
        cfg = ExperimentConfig.from_dict(
            {
                "mdp": "chain2",
                "algorithm": "linear_sampled",
                "K": 8,
                "N": 256,
                "seeds": [0, 1],
                "beta": 2.5,
                "R": 3.0,
                "rho_eval": "uniform",
                "ridge": 1e-8,
            }
        )
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown"):
            ExperimentConfig.from_dict({**BASE_CFG, "typo_key": 1})

    def test_missing_required_key(self):
        with pytest.raises(ConfigError, match="algorithm"):
            ExperimentConfig.from_dict({"mdp": "chain2", "K": 4})

    def test_bad_algorithm(self):
        with pytest.raises(ConfigError, match="algorithm"):
            ExperimentConfig.from_dict({**BASE_CFG, "algorithm": "qlearning"})

    def test_numeric_ranges(self):
        with pytest.raises(ConfigError, match="K"):
            ExperimentConfig.from_dict({**BASE_CFG, "K": 0})
        with pytest.raises(ConfigError, match="beta"):
            ExperimentConfig.from_dict({**BASE_CFG, "beta": -1})
        with pytest.raises(ConfigError, match="N"):
            ExperimentConfig.from_dict({**BASE_CFG, "algorithm": "linear_sampled"})

    def test_missing_mdp_file(self):
        with pytest.raises(ConfigError, match="does not exist"):
            ExperimentConfig.from_dict({**BASE_CFG, "mdp": "/nonexistent/m.json"})

    def test_neural_requires_arch(self):
        with pytest.raises(ConfigError, match="arch"):
            ExperimentConfig.from_dict({**BASE_CFG, "algorithm": "neural"})

    def test_run_ids_are_greppable(self):
        cfg = ExperimentConfig.from_dict(BASE_CFG)
        assert run_id(cfg, 3) == "linear_exact-chain2-K4-seed3"
        cfg2 = ExperimentConfig.from_dict({**BASE_CFG, "mdp": "random(10,5,7)"})
        assert run_id(cfg2, 0) == "linear_exact-random-10-5-7-K4-seed0"


class TestExecuteRun:
    def test_manifest_schema_and_config_echo(self):
        cfg = ExperimentConfig.from_dict(BASE_CFG)
        trace = execute_run(cfg, 0)
        manifest = trace.manifest
        for key in ("config", "rng_id", "version", "started_at", "duration_s"):
            assert key in manifest
        assert ExperimentConfig.from_dict(manifest["config"]) == cfg

    def test_trace_row_count(self):
        cfg = ExperimentConfig.from_dict({**BASE_CFG, "K": 7})
        trace = execute_run(cfg, 0)
        assert len(trace.rows) == 8

    def test_golden_trace_regression(self):
        cfg = ExperimentConfig.from_dict({"mdp": "chain2", "algorithm": "linear_exact", "K": 16, "seeds": [0]})
        trace = execute_run(cfg, 0)
        assert trace.to_csv_text() == GOLDEN.read_text()

    def test_schema_columns_are_stable(self):
        assert BASE_COLUMNS[:12] == [
            "k", "gap", "cum_regret", "eps_c_l2", "eps_c_sup", "e_sup",
            "theta_kl", "eps_a", "eps_b", "phi_star", "sigma_star", "J_pi",
        ]
        assert GOLDEN.read_text().splitlines()[0] == ",".join(BASE_COLUMNS)


class TestCliRun:
    def test_run_writes_trace_and_manifest(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, {**BASE_CFG, "out_dir": str(tmp_path / "runs")})
        assert main(["run", "--config", cfg_path]) == 0
        out_dir = tmp_path / "runs" / "linear_exact-chain2-K4-seed0"
        assert (out_dir / "trace.csv").is_file()
        assert (out_dir / "manifest.json").is_file()
        trace = load_trace(out_dir)
        assert len(trace.rows) == 5

    def test_seed_override(self, tmp_path):
        cfg_path = write_config(tmp_path, {**BASE_CFG, "seeds": [0, 1], "out_dir": str(tmp_path / "r")})
        assert main(["run", "--config", cfg_path, "--seed", "5"]) == 0
        assert (tmp_path / "r" / "linear_exact-chain2-K4-seed5").is_dir()
        assert not (tmp_path / "r" / "linear_exact-chain2-K4-seed0").exists()

    def test_malformed_json_exits_2_naming_byte(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"mdp": ')
        assert main(["run", "--config", str(bad)]) == 2
        err = capsys.readouterr().err
        assert "byte 8" in err and err.startswith("sstac: error: config:")

    def test_validation_failure_exits_2(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, {**BASE_CFG, "bogus": True})
        assert main(["run", "--config", cfg_path]) == 2

    def test_singular_gram_exits_3_with_conditioning_class(self, tmp_path, capsys):
        # N=2 draws cannot cover chain2's four pairs: the batch Gram is
        # singular with the ridge disabled.
        cfg_path = write_config(
            tmp_path,
            {"mdp": "chain2", "algorithm": "linear_sampled", "K": 1, "N": 2,
             "seeds": [0], "out_dir": str(tmp_path / "r")},
        )
        assert main(["run", "--config", cfg_path]) == 3
        err = capsys.readouterr().err
        assert err.startswith("sstac: error: conditioning:")
        assert "\n" not in err.strip()

    def test_determinism_across_invocations(self, tmp_path):
        cfg_path = write_config(
            tmp_path,
            {"mdp": "chain2", "algorithm": "linear_sampled", "K": 4, "N": 128,
             "seeds": [2], "out_dir": str(tmp_path / "a")},
        )
        assert main(["run", "--config", cfg_path]) == 0
        assert main(["run", "--config", cfg_path, "--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "linear_sampled-chain2-K4-seed2" / "trace.csv").read_bytes()
        b = (tmp_path / "b" / "linear_sampled-chain2-K4-seed2" / "trace.csv").read_bytes()
        assert a == b


class TestCliSweep:
    def test_sweep_layout_and_summary(self, tmp_path):
        cfg = ExperimentConfig.from_dict({**BASE_CFG, "seeds": [0, 1]})
        summary_path, rows = sweep_command(cfg, "K", [2, 4, 8], out_dir=str(tmp_path / "sw"))
        assert len(rows) == 6
        dirs = [p for p in (tmp_path / "sw").iterdir() if p.is_dir()]
        assert len(dirs) == 6
        header = summary_path.read_text().splitlines()[0]
        assert header == "param_value,seed,final_gap,cum_regret,regret_over_sqrtK"

    def test_regret_over_sqrtk_column_arithmetic(self, tmp_path):
        cfg = ExperimentConfig.from_dict(BASE_CFG)
        _, rows = sweep_command(cfg, "K", [4, 16], out_dir=str(tmp_path / "sw"))
        for row in rows:
            trace = load_trace(tmp_path / "sw" / f"linear_exact-chain2-K{row['param_value']}-seed{row['seed']}")
            cum = trace.rows[-1][trace.columns.index("cum_regret")]
            assert abs(row["regret_over_sqrtK"] - cum / np.sqrt(row["param_value"])) < 1e-12

    def test_sweep_reproduces_summary_bytes(self, tmp_path):
        cfg = ExperimentConfig.from_dict(BASE_CFG)
        path1, _ = sweep_command(cfg, "K", [2, 4], out_dir=str(tmp_path / "s1"))
        path2, _ = sweep_command(cfg, "K", [2, 4], out_dir=str(tmp_path / "s2"))
        assert path1.read_bytes() == path2.read_bytes()

    def test_rejects_unknown_parameter(self, tmp_path):
        cfg = ExperimentConfig.from_dict(BASE_CFG)
        with pytest.raises(ConfigError, match="sweep parameter"):
            sweep_command(cfg, "gamma", [1], out_dir=str(tmp_path))

    def test_cli_sweep_exit_code(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, {**BASE_CFG, "out_dir": str(tmp_path / "sw")})
        assert main(["sweep", "--config", cfg_path, "--param", "K", "--values", "2,4"]) == 0


class TestCliDiag:
    def _fresh_trace_dir(self, tmp_path):
        cfg = ExperimentConfig.from_dict({**BASE_CFG, "K": 8, "out_dir": str(tmp_path / "runs")})
        return run_command(cfg)[0]

    def test_fresh_trace_passes_all_checks(self, tmp_path, capsys):
        trace_dir = self._fresh_trace_dir(tmp_path)
        assert main(["diag", "--trace", str(trace_dir)]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 5
        assert "FAIL" not in out

    def test_corrupted_cum_regret_names_row(self, tmp_path, capsys):
        trace_dir = self._fresh_trace_dir(tmp_path)
        lines = (trace_dir / "trace.csv").read_text().splitlines()
        cells = lines[4].split(",")
        cells[2] = repr(float(cells[2]) + 1.0)
        lines[4] = ",".join(cells)
        (trace_dir / "trace.csv").write_text("\n".join(lines) + "\n")
        assert main(["diag", "--trace", str(trace_dir)]) == 1
        out = capsys.readouterr().out
        assert "FAIL regret-consistency: cum_regret mismatch at row k=3" in out

    def test_missing_trace_exits_2(self, tmp_path, capsys):
        assert main(["diag", "--trace", str(tmp_path / "nope")]) == 2

    def test_series_csv_has_exactly_four_series(self, tmp_path):
        trace_dir = self._fresh_trace_dir(tmp_path)
        assert main(["diag", "--trace", str(trace_dir)]) == 0
        text = (trace_dir / "diag_series.csv").read_text().splitlines()
        assert text[0] == "series,iter,value"
        names = {line.split(",")[0] for line in text[1:]}
        assert names == set(DIAG_SERIES)
        assert len(names) == 4


class TestNeuralThroughHarness:
    def test_neural_config_runs(self, tmp_path):
        cfg = ExperimentConfig.from_dict(
            {"mdp": "chain2", "algorithm": "neural", "K": 1, "N_a": 8, "N_c": 8,
             "arch": {"m": 8, "H": 2}, "seeds": [0]}
        )
        trace = execute_run(cfg, 0)
        assert len(trace.rows) == 2
        checks = diag_checks(trace)
        assert all(c.ok for c in checks)
