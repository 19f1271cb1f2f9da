import json
import math

import numpy as np
import pytest

from small_configs import SMALL
from esgd import io
from esgd.cli import main
from esgd.data_model import Dataset


class TestFormatValue:
    @pytest.mark.parametrize("v,text", [
        (True, "true"), (np.False_, "false"), (3, "3"), (np.int64(-2), "-2"),
        (0.1, "0.1"), (np.float64(1e-300), "1e-300"), (None, ""), ("a;b", "a;b"),
        (float("inf"), "inf"),
    ])
    def test_values(self, v, text):
        assert io.format_value(v) == text

    def test_float_round_trip(self):
        x = 0.1 + 0.2
        assert float(io.format_value(x)) == x


class TestFiles:
    def setup_method(self):
        rng = np.random.default_rng(0)
        self.data = Dataset(rng.standard_normal((7, 3)),
                            np.where(rng.random(7) < 0.5, -1.0, 1.0), seed=12)

    @pytest.mark.parametrize("suffix", [".npz", ".csv"])
    def test_dataset_round_trip(self, tmp_path, suffix):
        p = io.save_dataset(self.data, tmp_path / f"d{suffix}")
        back = io.load_dataset(p)
        np.testing.assert_array_equal(back.features, self.data.features)
        np.testing.assert_array_equal(back.labels, self.data.labels)

    def test_npz_keeps_seed(self, tmp_path):
        back = io.load_dataset(io.save_dataset(self.data, tmp_path / "d.npz"))
        assert back.seed == 12

    def test_bad_suffix(self, tmp_path):
        with pytest.raises(ValueError):
            io.save_dataset(self.data, tmp_path / "d.txt")

    def test_csv_header(self, tmp_path):
        header, rows = io.read_csv(io.save_dataset(self.data, tmp_path / "d.csv"))
        assert header == ["y", "x_1", "x_2", "x_3"]
        assert len(rows) == 7

    def test_json_nonfinite(self, tmp_path):
        p = io.write_json({"a": float("nan"), "b": np.arange(2)}, tmp_path / "x.json")
        assert json.loads(p.read_text()) == {"a": "nan", "b": [0, 1]}


def _cfg_file(tmp_path, name):
    raw = {"experiment": name, **SMALL[name]}
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(raw))
    return p


class TestCli:
    def test_gen_data_and_margin(self, tmp_path, capsys):
        cfg = _cfg_file(tmp_path, "figure1")
        assert main(["gen-data", "--config", str(cfg), "--out", str(tmp_path / "g"),
                     "--format", "csv"]) == 0
        data = io.load_dataset(tmp_path / "g" / "data.csv")
        assert (data.n, data.d) == (60, 120)
        assert main(["margin", "--data", str(tmp_path / "g" / "data.csv"),
                     "--out", str(tmp_path / "m")]) == 0
        dual = json.loads((tmp_path / "m" / "dual.json").read_text())
        assert dual["gamma"] > 0
        assert "rank_diagnostics" in dual

    def test_run_gd_with_rule(self, tmp_path, capsys):
        cfg = _cfg_file(tmp_path, "figure1")
        assert main(["run-gd", "--config", str(cfg), "--max-iters", "500",
                     "--rule", "cross_head:5", "--out", str(tmp_path)]) == 0
        header, rows = io.read_csv(tmp_path / "trace.csv")
        assert header == ["t", "eta_t", "emp_risk", "grad_norm", "w_norm"]
        side = json.loads((tmp_path / "trace.json").read_text())
        assert side["stop_events"][0][0] == "cross_head(5)"
        assert "cross_head(5)" in capsys.readouterr().out

    def test_crossing_rule_without_parameter(self, tmp_path):
        cfg = _cfg_file(tmp_path, "figure1")
        main(["gen-data", "--config", str(cfg), "--out", str(tmp_path)])
        assert main(["run-gd", "--data", str(tmp_path / "data.npz"),
                     "--rule", "cross_star", "--out", str(tmp_path)]) == 2

    def test_run_regpath(self, tmp_path):
        cfg = _cfg_file(tmp_path, "path_compare")
        assert main(["run-regpath", "--config", str(cfg), "--lambda-min", "1e-3",
                     "--out", str(tmp_path)]) == 0
        header, rows = io.read_csv(tmp_path / "regpath.csv")
        assert header == ["lambda", "u_norm", "emp_risk", "kkt_residual"]
        assert float(rows[-1][0]) == 1e-3

    def test_risk_eval(self, tmp_path, capsys):
        cfg = _cfg_file(tmp_path, "figure1")
        w = tmp_path / "w.txt"
        np.savetxt(w, np.zeros(120))
        assert main(["risk-eval", "--config", str(cfg), "--w", str(w), "--quad-order", "16",
                     "--out", str(tmp_path)]) == 0
        res = json.loads((tmp_path / "risks.json").read_text())
        assert res["logistic"] == pytest.approx(math.log(2.0))
        assert res["zero_one"] == 1.0

    def test_exp_writes_tables(self, tmp_path, capsys):
        cfg = _cfg_file(tmp_path, "counterexample")
        out = tmp_path / "ce"
        code = main(["exp", "counterexample", "--config", str(cfg), "--out", str(out), "--svg"])
        assert code == 0
        assert (out / "counterexample.csv").exists()
        assert (out / "counterexample.svg").exists()
        assert "PASS support_condition_violated" in capsys.readouterr().out

    def test_exp_failing_check_exits_one(self, tmp_path):
        raw = {"experiment": "figure1", **SMALL["figure1"]}
        raw["params"] = dict(raw["params"], min_risk_rise=100.0)
        p = tmp_path / "c.json"
        p.write_text(json.dumps(raw))
        assert main(["exp", "figure1", "--config", str(p), "--out", str(tmp_path)]) == 1

    def test_exp_name_mismatch(self, tmp_path):
        cfg = _cfg_file(tmp_path, "figure1")
        assert main(["exp", "divergence", "--config", str(cfg), "--out", str(tmp_path)]) == 2

    def test_bad_config_is_usage_error(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"experiment": "figure1", "bogus": 1}))
        assert main(["exp", "figure1", "--config", str(p)]) == 2
