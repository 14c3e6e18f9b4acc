import csv
import io
import json

import pytest

from avimdp import GeneratorSpec, InputError, generate_random_mdp
from avimdp.bench import (
    BOUND_COLUMNS,
    ROW_COLUMNS,
    BenchConfig,
    rows_csv,
    run_benchmark,
)
from avimdp.cli import main
from avimdp.fileformat import load_mdp, save_mdp

PAVI3 = {"algorithm": "gavi3", "accel": "proj"}
BVI = {"algorithm": "bertsekas"}


def _strip_timing(text):
    rows = list(csv.reader(io.StringIO(text)))
    k = rows[0].index("wall_time")
    return [r[:k] + r[k + 1:] for r in rows]


class TestBenchmark:
    def test_fifty_state_cell(self):
        cfg = BenchConfig(densities=(0.3,), seeds=3, algorithms=(PAVI3, BVI))
        res = run_benchmark(cfg)
        assert len(res.rows) == 6
        assert all(r.converged and r.agree for r in res.rows)
        for (_, _), rows in res.by_instance().items():
            ops = {r.algorithm: r.operator_applications for r in rows}
            assert ops["PAVI3"] < ops["BertsekasVI"]

    def test_empty_matrix(self, tmp_path):
        res = run_benchmark(BenchConfig(n_states=5, max_actions=3, seeds=2), tmp_path)
        assert res.rows == []
        text = (tmp_path / "rows.csv").read_text()
        assert text.strip() == ",".join(ROW_COLUMNS)
        assert json.loads((tmp_path / "rows.json").read_text()) == []

    def test_bounds_shrink_with_alpha(self):
        cfg = BenchConfig(n_states=20, max_actions=10, densities=(0.3, 0.6), seeds=3,
                          phase1_alphas=(0.8, 0.9, 0.99), oracle=False)
        res = run_benchmark(cfg)
        assert len(res.bounds) == 2 * 3 * 3
        per = {}
        for b in res.bounds:
            per.setdefault((b.density, b.seed), []).append(b)
        for bs in per.values():
            widths = [b.upper - b.lower for b in sorted(bs, key=lambda b: b.alpha)]
            assert widths[0] > widths[1] > widths[2]

    def test_oracle_reference(self):
        cfg = BenchConfig(n_states=5, max_actions=3, densities=(0.7,), seeds=2,
                          algorithms=(PAVI3, BVI, {"algorithm": "gavi1", "sweep": "gs"}),
                          oracle=True)
        res = run_benchmark(cfg)
        for r in res.rows:
            assert r.lambda_star is not None
            assert abs(r.lambda_hat - r.lambda_star) <= 1e-6
            assert r.agree

    def test_failures_are_recorded(self):
        cfg = BenchConfig(n_states=5, max_actions=3, seeds=1,
                          algorithms=({"algorithm": "gavi2", "max_outer": 3}, PAVI3))
        res = run_benchmark(cfg)
        assert [r.status for r in res.rows] == ["max-iter", "converged"]
        assert res.rows[0].agree is None

    def test_inner_error_recorded_in_row(self):
        cfg = BenchConfig(n_states=5, max_actions=3, seeds=1,
                          algorithms=({"algorithm": "gavi1", "max_inner": 2}, PAVI3))
        res = run_benchmark(cfg)
        assert res.rows[0].status == "error"
        assert "NonConvergenceError" in res.rows[0].error
        assert res.rows[1].converged

    def test_phase1_columns(self):
        cfg = BenchConfig(n_states=10, max_actions=4, seeds=1,
                          algorithms=({**PAVI3, "lambda0": "disc:0.99"},))
        [row] = run_benchmark(cfg).rows
        assert row.phase1_iterations > 0
        assert row.bound_lower <= row.lambda_hat <= row.bound_upper

    def test_determinism_and_workers(self, tmp_path):
        cfg = BenchConfig(n_states=15, max_actions=5, densities=(0.3, 0.9), seeds=2,
                          algorithms=(PAVI3, BVI, {"algorithm": "gavi2", "sweep": "gs",
                                                   "accel": "linext"}),
                          phase1_alphas=(0.9,))
        a = run_benchmark(cfg, tmp_path / "a")
        b = run_benchmark(BenchConfig.from_dict({**cfg.__dict__, "workers": 2}), tmp_path / "b")
        assert _strip_timing(rows_csv(a.rows)) == _strip_timing(rows_csv(b.rows))
        assert (tmp_path / "a" / "bounds.csv").read_bytes() == \
            (tmp_path / "b" / "bounds.csv").read_bytes()
        header = (tmp_path / "a" / "bounds.csv").read_text().splitlines()[0]
        assert header == ",".join(BOUND_COLUMNS)
        assert "median operator applications" in (tmp_path / "a" / "summary.txt").read_text()
        meta = json.loads((tmp_path / "a" / "meta.json").read_text())
        assert meta["cost_range_is_default"] is True
        assert meta["config"]["algorithms"][0]["algorithm"] == "gavi3"
        assert BenchConfig.from_dict({**meta["config"], "workers": 1}) == cfg

    @pytest.mark.parametrize("kw", [
        {"seeds": 0}, {"densities": (0.0,)}, {"densities": (1.5,)},
        {"algorithms": ({"algorithm": "nope"},)}, {"algorithms": ({"speed": 1},)},
        {"phase1_alphas": (1.0,)}, {"n_states": 10, "densities": (0.01,)},
    ])
    def test_invalid_configs(self, kw):
        with pytest.raises(InputError):
            BenchConfig(**kw)

    def test_unknown_config_key(self):
        with pytest.raises(InputError, match="unknown"):
            BenchConfig.from_dict({"states": 5})


class TestCli:
    def test_generate_solve_oracle(self, tmp_path, capsys):
        f = tmp_path / "m.json"
        assert main(["generate", "--states", "6", "--actions", "3", "--density", "0.5",
                     "--seed", "4", "--out", str(f)]) == 0
        assert load_mdp(f) == generate_random_mdp(GeneratorSpec(6, 3, 0.5, rng_seed=4))
        report = tmp_path / "r.json"
        assert main(["solve", "--in", str(f), "--algorithm", "gavi3", "--accel", "proj",
                     "--lambda0", "disc:0.9", "--report", str(report)]) == 0
        lam = json.loads(report.read_text())["lambda"]
        capsys.readouterr()
        assert main(["oracle", "--in", str(f)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert abs(out["lambda_star"] - lam) <= 1e-6
        assert out["max_return_time"] >= 1.0

    def test_gamma_oracle(self, tmp_path, cycle3):
        f = tmp_path / "c.json"
        save_mdp(cycle3, f)
        report = tmp_path / "r.json"
        assert main(["solve", "--in", str(f), "--gamma-oracle", "--report", str(report)]) == 0
        assert json.loads(report.read_text())["lambda"] == pytest.approx(2.0, abs=1e-8)

    def test_bounds(self, tmp_path, cycle3, capsys):
        f = tmp_path / "c.json"
        save_mdp(cycle3, f)
        assert main(["bounds", "--in", str(f), "--alpha", "0.5"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert (out["lower"], out["upper"]) == pytest.approx((4 / 3, 8 / 3))

    def test_non_convergence_exit_code(self, tmp_path, cycle3):
        f = tmp_path / "c.json"
        save_mdp(cycle3, f)
        assert main(["solve", "--in", str(f), "--algorithm", "gavi2",
                     "--gamma", "10", "--max-outer", "50"]) == 2
        assert main(["solve", "--in", str(f), "--max-inner", "2"]) == 2

    @pytest.mark.parametrize("argv", [
        ["solve", "--in", "/nonexistent/m.json"],
        ["generate", "--states", "0", "--actions", "1", "--density", "1", "--out", "x.json"],
    ])
    def test_input_error_exit_code(self, argv, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(argv) == 1

    def test_invalid_instance_file(self, tmp_path, capsys):
        f = tmp_path / "bad.json"
        f.write_text('{"n_states": 1, "recurrent_state": 1, '
                     '"states": [{"actions": [{"cost": 0, "row": [[1, 0.9]]}]}]}')
        assert main(["bounds", "--in", str(f), "--alpha", "0.5"]) == 1
        assert "row-sum" in capsys.readouterr().err

    def test_bench_command(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n_states": 8, "max_actions": 3, "seeds": 2,
                                   "algorithms": [PAVI3, BVI]}))
        out = tmp_path / "out"
        assert main(["bench", "--config", str(cfg), "--out-dir", str(out)]) == 0
        assert len(json.loads((out / "rows.json").read_text())) == 4
        assert "PAVI3" in capsys.readouterr().out

    def test_bench_bad_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{bad")
        assert main(["bench", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 1

    def test_module_entry_point(self, tmp_path):
        import subprocess
        import sys
        f = tmp_path / "m.json"
        proc = subprocess.run([sys.executable, "-m", "avimdp", "generate", "--states", "3",
                               "--actions", "2", "--density", "1", "--out", str(f)])
        assert proc.returncode == 0 and f.exists()
