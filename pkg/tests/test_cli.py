import json
import math

import pytest

from ncbm import finite as fin
from ncbm.cli import main
from ncbm.model import FiniteNModel, MultitimeRequest


def run_cli(tmp_path, args, cfg=None, name="cfg.json"):
    argv = list(args)
    if cfg is not None:
        path = tmp_path / name
        path.write_text(json.dumps(cfg))
        argv += ["--config", str(path)]
    out = tmp_path / "out.txt"
    argv += ["--out", str(out)]
    rc = main(argv)
    text = out.read_text() if out.exists() else ""
    return rc, text


class TestCorrelate:
    def test_finite_pass_through(self, tmp_path):
        cfg = {"model": {"N": 2, "T": 1.0, "times": [0.4, 1.0]},
               "points": [[0.3], [-0.4]]}
        rc, text = run_cli(tmp_path, ["correlate"], cfg)
        assert rc == 0
        value = float(text.strip().splitlines()[-1].split(",")[2])
        model = FiniteNModel(2, 1.0, (0.4, 1.0))
        want = fin.correlation(MultitimeRequest.from_points(model, [(0.3,), (-0.4,)]))
        assert value == pytest.approx(want, rel=1e-15)

    def test_times_not_reaching_horizon_get_empty_slot(self, tmp_path):
        cfg = {"model": {"N": 2, "T": 1.0, "times": [0.4]}, "points": [[0.3]]}
        rc, text = run_cli(tmp_path, ["correlate"], cfg)
        assert rc == 0
        value = float(text.strip().splitlines()[-1].split(",")[2])
        model = FiniteNModel(2, 1.0, (0.4, 1.0))
        want = fin.correlation(MultitimeRequest.from_points(model, [(0.3,), ()]))
        assert value == pytest.approx(want, rel=1e-15)

    def test_sine_equal_time_pair_at_pi(self, tmp_path):
        cfg = {"family": "sine", "s_values": [-1.0], "points": [[0.0, math.pi]]}
        rc, text = run_cli(tmp_path, ["correlate"], cfg)
        assert rc == 0
        value = float(text.strip().splitlines()[-1].split(",")[2])
        assert value == pytest.approx(1.0 / math.pi ** 2, rel=1e-10)

    def test_unsorted_times_is_config_error_naming_times(self, tmp_path, capsys):
        cfg = {"model": {"N": 2, "T": 1.0, "times": [0.7, 0.4]}, "points": [[0.0], [0.0]]}
        rc, _ = run_cli(tmp_path, ["correlate"], cfg)
        assert rc == 2
        assert "times" in capsys.readouterr().err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = {"family": "sine", "s_values": [-1.0], "points": [[0.0]], "zzz": 1}
        rc, _ = run_cli(tmp_path, ["correlate"], cfg)
        assert rc == 2
        assert "zzz" in capsys.readouterr().err


class TestKernel:
    def test_finite_grid_matches_library(self, tmp_path):
        cfg = {"family": "finite",
               "model": {"N": 10, "T": 1.0, "times": [0.5, 1.0]},
               "m": 0, "n": 1, "grid": {"min": -1.0, "max": 1.0, "steps": 3}}
        rc, text = run_cli(tmp_path, ["kernel"], cfg)
        assert rc == 0
        model = FiniteNModel(10, 1.0, (0.5, 1.0))
        ev = fin.KernelEvaluator(model)
        rows = [l for l in text.splitlines() if l and not l.startswith("#")][1:]
        for row in rows:
            x, y, st, d, it = (float(v) for v in row.split(","))
            kv = ev.entry(0, 1, x, y, conjugated=False)
            assert st == pytest.approx(kv.Stilde, rel=1e-14, abs=1e-300)
            assert d == pytest.approx(kv.D, rel=1e-14, abs=1e-300)
            assert it == pytest.approx(kv.Itilde, rel=1e-14, abs=1e-300)

    def test_sine_diagonal_constant(self, tmp_path):
        cfg = {"family": "sine", "s": -1.0, "t": -1.0,
               "grid": {"min": -2.0, "max": 2.0, "steps": 3}}
        rc, text = run_cli(tmp_path, ["kernel"], cfg)
        assert rc == 0
        for row in [l for l in text.splitlines() if l and not l.startswith("#")][1:]:
            x, y, st, d, it = (float(v) for v in row.split(","))
            if x == y:
                assert st == pytest.approx(1 / math.pi, rel=1e-12)
                assert d == 0.0
                assert it == 0.0

    def test_airy_diagonal_zeros(self, tmp_path):
        cfg = {"family": "airy", "s": -1.0, "t": -1.0,
               "grid": {"min": -1.0, "max": 1.0, "steps": 2}}
        rc, text = run_cli(tmp_path, ["kernel"], cfg)
        assert rc == 0
        for row in [l for l in text.splitlines() if l and not l.startswith("#")][1:]:
            x, y, st, d, it = (float(v) for v in row.split(","))
            if x == y:
                assert d == 0.0 and it == 0.0

    def test_byte_identical_rerun(self, tmp_path):
        cfg = {"family": "sine", "s": -1.0, "t": -0.5,
               "grid": {"min": -1.0, "max": 1.0, "steps": 4}}
        _, t1 = run_cli(tmp_path, ["kernel"], cfg)
        _, t2 = run_cli(tmp_path, ["kernel"], cfg)
        assert t1 == t2


class TestConverge:
    def test_small_bulk_run(self, tmp_path):
        cfg = {"regime": "bulk", "N_list": [16, 32],
               "s_values": [-1.0, 0.0], "grid": [-1.0, 1.0]}
        rc, text = run_cli(tmp_path, ["converge"], cfg)
        assert rc == 0
        rows = [l for l in text.splitlines() if l and not l.startswith("#")][1:]
        assert len(rows) == 6
        assert any("monotone_decrease" in l for l in text.splitlines())

    def test_odd_N_rejected(self, tmp_path, capsys):
        rc, _ = run_cli(tmp_path, ["converge"],
                        {"regime": "bulk", "N_list": [16, 25]})
        assert rc == 2
        assert "N_list" in capsys.readouterr().err


class TestOracleCmd:
    def test_quadrature_mode(self, tmp_path):
        cfg = {"model": {"N": 2, "T": 1.0, "times": [0.4, 1.0]},
               "mode": "quadrature", "points": [[0.3], [-0.4]]}
        rc, text = run_cli(tmp_path, ["oracle"], cfg)
        assert rc == 0
        payload = json.loads(text)
        model = FiniteNModel(2, 1.0, (0.4, 1.0))
        want = fin.correlation(MultitimeRequest.from_points(model, [(0.3,), (-0.4,)]))
        assert payload["value"] == pytest.approx(want, rel=1e-5)

    def test_mcmc_mode_structure(self, tmp_path):
        cfg = {"model": {"N": 2, "T": 1.0, "times": [0.4, 1.0]},
               "mc": {"chains": 2, "burn_in": 300, "samples_per_chain": 1500,
                      "proposal_scale": 0.6, "seed": 4},
               "windows": [[[0, -0.3, 0.3]]],
               "samples_csv": str(tmp_path / "samples.csv")}
        rc, text = run_cli(tmp_path, ["oracle"], cfg)
        assert rc == 0
        payload = json.loads(text)
        est = payload["estimates"][0]
        assert {"value", "std_error", "n_effective", "rhat"} <= set(est)
        head = (tmp_path / "samples.csv").read_text().splitlines()[0]
        assert head == "chain,step,m,i,x"


class TestVerifyCmd:
    def test_subset_and_report_shape(self, tmp_path):
        rc, text = run_cli(tmp_path, ["verify", "--only", "pfaffian"])
        assert rc == 0
        payload = json.loads(text)
        assert payload["passed"] is True
        assert all(c["module"] == "pfaffian" for c in payload["checks"])
        assert {"name", "tolerance", "residual", "passed", "seconds"} <= set(payload["checks"][0])

    def test_tightened_tolerances_fail_but_report_complete(self, tmp_path):
        cfg = {"only": ["pfaffian"], "tolerance_scale": 1e-12}
        rc, text = run_cli(tmp_path, ["verify"], cfg)
        assert rc == 1
        payload = json.loads(text)
        assert payload["passed"] is False
        assert len(payload["checks"]) >= 5

    def test_unmatched_filter_is_config_error(self, tmp_path, capsys):
        rc, _ = run_cli(tmp_path, ["verify", "--only", "nonexistent_module"])
        assert rc == 2


class TestProvenance:
    def test_header_lines(self, tmp_path):
        cfg = {"family": "sine", "s": -1.0, "t": -0.5,
               "grid": {"min": 0.0, "max": 1.0, "steps": 2}}
        rc, text = run_cli(tmp_path, ["kernel"], cfg)
        lines = text.splitlines()
        assert lines[0].startswith("# ncbm ")
        assert lines[1] == "# command: kernel"
        assert lines[2].startswith("# config: ")
        assert lines[3].startswith("# seed: ")
