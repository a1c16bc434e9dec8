import json
from pathlib import Path

import pytest

from dbarl2.cli import main


BASE_IDENTITIES = {
    "seed": 7,
    "trunc_dim": 2,
    "quadrature": {"kind": "monte_carlo", "N": 20000},
    "family": {"kind": "constant", "value": 1.0},
    "varphi": "x(1)^2",
    "w1": "x(1)^2", "w2": "x(1)^2", "w3": "x(1)^2",
    "multiplier": "x(1)",
    "forms": [
        {"degree": [0, 0], "support_radius": 0.8,
         "entries": [{"I": [], "J": [],
                      "coeff": "x(1)*bump((x(1)^2+y(1)^2+x(2)^2+y(2)^2)/0.64)"}]},
        {"degree": [0, 1], "support_radius": 0.8,
         "entries": [{"I": [], "J": [1],
                      "coeff": "y(2)*bump((x(1)^2+y(1)^2+x(2)^2+y(2)^2)/0.64)"}]},
    ],
}


def write_config(tmp_path, payload, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return p


def run(args):
    return main([str(a) for a in args])


class TestExitCodes:
    def test_identities_pass(self, tmp_path):
        cfg = write_config(tmp_path, BASE_IDENTITIES)
        assert run(["identities", "--config", cfg, "--out", tmp_path / "r"]) == 0

    def test_conditions_pass(self, tmp_path):
        cfg = write_config(tmp_path, {"family": {"kind": "constant", "value": 1.0},
                                      "max_index": 5, "s": 0, "t": 0})
        assert run(["conditions", "--config", cfg, "--out", tmp_path / "r"]) == 0

    def test_failing_check_exits_one(self, tmp_path):
        bad = dict(BASE_IDENTITIES)
        # deliberately wrong a_1 on one side of Gauss-Green must break it
        bad["perturb"] = {"gauss_green_a1": 0.05}
        cfg = write_config(tmp_path, bad)
        assert run(["identities", "--config", cfg, "--out", tmp_path / "r"]) == 1

    def test_config_error_exits_two(self, tmp_path):
        cfg = tmp_path / "nope.json"
        assert run(["identities", "--config", cfg, "--out", tmp_path / "r"]) == 2
        cfg2 = write_config(tmp_path, {"quadrature": {"kind": "bogus"},
                                       "forms": BASE_IDENTITIES["forms"]})
        assert run(["identities", "--config", cfg2, "--out", tmp_path / "r"]) == 2

    def test_empty_forms_exit_zero(self, tmp_path):
        cfg = write_config(tmp_path, {"seed": 1, "trunc_dim": 2, "forms": []})
        out = tmp_path / "r"
        assert run(["identities", "--config", cfg, "--out", out]) == 0
        assert (out / "identities_report.jsonl").read_text() == ""


class TestReports:
    def test_summary_columns(self, tmp_path):
        cfg = write_config(tmp_path, {"family": {"kind": "constant", "value": 1.0},
                                      "max_index": 5, "s": 0, "t": 0})
        out = tmp_path / "r"
        run(["conditions", "--config", cfg, "--out", out])
        lines = (out / "conditions_summary.csv").read_text().splitlines()
        assert lines[0] == "check_id,lhs,rhs,stderr,margin,pass"
        assert len(lines) == 4

    def test_jsonl_shape(self, tmp_path):
        cfg = write_config(tmp_path, {"family": {"kind": "multiplicative",
                                                 "mu": "1.0 + 1.0/j"},
                                      "max_index": 6, "s": 0, "t": 0})
        out = tmp_path / "r"
        run(["conditions", "--config", cfg, "--out", out])
        recs = [json.loads(l) for l in
                (out / "conditions_report.jsonl").read_text().splitlines()]
        assert {r["check_id"] for r in recs} == {
            "condition1_c1_finite", "condition2_c0_positive",
            "condition3_multiplicative"}
        c0 = [r for r in recs if r["check_id"] == "condition2_c0_positive"][0]
        assert c0["lhs"] == pytest.approx(7.0 / 6.0)

    def test_reproducibility_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, BASE_IDENTITIES)
        out1 = tmp_path / "r1"
        out2 = tmp_path / "r2"
        run(["identities", "--config", cfg, "--out", out1])
        run(["identities", "--config", cfg, "--out", out2])
        for name in ("identities_report.jsonl", "identities_summary.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_majorant_command(self, tmp_path):
        cfg = write_config(tmp_path, {"g0": "one", "K_max": 8.0,
                                      "trunc_order": 120})
        out = tmp_path / "r"
        assert run(["majorant", "--config", cfg, "--out", out]) == 0

    def test_domains_command(self, tmp_path):
        cfg = write_config(tmp_path, {"domain": {"kind": "ball", "r": 1.0},
                                      "trunc_dim": 2, "tau": 1.0})
        out = tmp_path / "r"
        assert run(["domains", "--config", cfg, "--out", out]) == 0

    def test_solve_command(self, tmp_path):
        cfg = write_config(tmp_path, {
            "seed": 3, "trunc_dim": 1, "weights": "quadratic",
            "phi": "3*(x(1)^2+y(1)^2)",
            "manufactured": {"coeff": "x(1)*bump((x(1)^2+y(1)^2)/0.64)",
                             "support_radius": 0.8},
            "degree": 6, "solve_dim": 1, "basis_radius": 0.8})
        out = tmp_path / "r"
        assert run(["solve", "--config", cfg, "--out", out]) == 0
        rep = json.loads((out / "solve_report.json").read_text())
        assert rep["residual"] <= 1e-3

    def test_approx_command(self, tmp_path):
        cfg = write_config(tmp_path, {
            "seed": 4, "trunc_dim": 1,
            "domain": {"kind": "whole_space"},
            "quadrature": {"kind": "monte_carlo", "N": 10000},
            "rho": 2.0, "n_ladder": [1], "delta_ladder": [0.2, 0.1],
            "grid_res": 101,
            "forms": [{"degree": [0, 1], "support_radius": 0.4,
                       "entries": [{"I": [], "J": [1],
                                    "coeff": "x(1)*bump((x(1)^2+y(1)^2)/0.16)"}]}]})
        out = tmp_path / "r"
        assert run(["approx", "--config", cfg, "--out", out]) == 0
        assert (out / "approx_ladder.csv").exists()
