"""Command-line interface: exit codes, CSV output, reproducibility."""

import math

import numpy as np
import pytest

from scalable_ib import cli


GOOD_CONFIG = """\
[model]
m = 1
T = 2
sigma_x = 3.0
sigma_0 = 1.0

[[model.stages]]
sigma_t = 2.0
gamma = 0.25

[[model.stages]]
sigma_t = 2.0
gamma = 0.25
"""

BAD_ORDER_CONFIG = """\
[model]
sigma_x = 3.0
sigma_0 = 1.0

[[model.stages]]
sigma_t = 1.0
gamma = 0.25

[[model.stages]]
sigma_t = 2.0
gamma = 0.25
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "model.cfg"
    path.write_text(GOOD_CONFIG)
    return str(path)


class TestValidate:
    def test_bundled_config_is_valid(self, capsys):
        rc = cli.main(["validate", "--config", str(cli.bundled_config_path())])
        assert rc == 0
        assert "valid model: m=1 T=2" in capsys.readouterr().out

    def test_violations_listed_with_kind(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text(BAD_ORDER_CONFIG)
        rc = cli.main(["validate", "--config", str(path)])
        assert rc == 2
        assert "DegradednessViolated" in capsys.readouterr().out

    def test_empty_file_is_a_usage_error(self, tmp_path, capsys):
        path = tmp_path / "empty.cfg"
        path.write_text("")
        assert cli.main(["validate", "--config", str(path)]) == 1
        assert "model" in capsys.readouterr().err

    def test_broken_toml(self, tmp_path):
        path = tmp_path / "broken.cfg"
        path.write_text("[model\nsigma_x = ")
        assert cli.main(["validate", "--config", str(path)]) == 1

    def test_missing_file(self, tmp_path):
        assert cli.main(["validate", "--config", str(tmp_path / "no.cfg")]) == 1

    def test_dimension_annotation_conflict(self, tmp_path, capsys):
        path = tmp_path / "conflict.cfg"
        path.write_text(GOOD_CONFIG.replace("T = 2", "T = 3"))
        assert cli.main(["validate", "--config", str(path)]) == 1
        assert "conflicts" in capsys.readouterr().err

    def test_gamma_and_sigma_0t_both_given(self, tmp_path):
        path = tmp_path / "both.cfg"
        path.write_text(GOOD_CONFIG.replace("gamma = 0.25", "gamma = 0.25\nsigma_0t = 0.5", 1))
        assert cli.main(["validate", "--config", str(path)]) == 1

    def test_flat_matrix_must_be_square(self, tmp_path, capsys):
        path = tmp_path / "flat.cfg"
        path.write_text(GOOD_CONFIG.replace("sigma_x = 3.0", "sigma_x = [1.0, 0.2, 0.2]"))
        assert cli.main(["validate", "--config", str(path)]) == 1
        assert "square" in capsys.readouterr().err

    def test_matrix_model_accepted(self, tmp_path, capsys):
        path = tmp_path / "matrix.cfg"
        path.write_text(
            """
[model]
sigma_x = [[3.0, 0.2], [0.2, 3.0]]
sigma_0 = [1.0, 0.0, 0.0, 1.0]

[[model.stages]]
sigma_t = [[2.0, 0.0], [0.0, 2.0]]
gamma = 0.25
"""
        )
        assert cli.main(["validate", "--config", str(path)]) == 0
        assert "m=2 T=1" in capsys.readouterr().out


class TestFig2:
    def test_panel_a_anchor_row(self, tmp_path, capsys):
        out = tmp_path / "a.csv"
        rc = cli.main(["fig2", "--panel", "a", "--out", str(out), "--points", "5"])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "sigma_si,R,delta"
        assert len(lines) == 1 + 5
        first = lines[1].split(",")
        assert first[0] == "2"
        assert float(first[1]) == pytest.approx(1.4239984532774748, abs=1e-9)
        assert float(first[2]) == pytest.approx(1.7822751702806332, abs=1e-7)

    def test_panel_b_anchor_row(self, tmp_path):
        out = tmp_path / "b.csv"
        rc = cli.main(
            ["fig2", "--panel", "b", "--sigma-si", "4", "--out", str(out),
             "--points", "3"]
        )
        assert rc == 0
        first = out.read_text().splitlines()[1].split(",")
        assert float(first[1]) == pytest.approx(1.6341233825483203, abs=1e-9)
        assert float(first[2]) == pytest.approx(1.8192848884035004, abs=1e-7)

    def test_rows_cover_all_sweep_values(self, tmp_path):
        out = tmp_path / "multi.csv"
        rc = cli.main(
            ["fig2", "--panel", "a", "--sigma-si", "2,2.5,3", "--out", str(out),
             "--points", "4"]
        )
        assert rc == 0
        rows = [ln.split(",") for ln in out.read_text().splitlines()[1:]]
        assert len(rows) == 3 * 4
        assert [r[0] for r in rows[::4]] == ["2", "2.5", "3"]
        # the per-sigma sweeps start at the minimal rate and increase
        for k in range(3):
            rates = [float(r[1]) for r in rows[4 * k:4 * k + 4]]
            assert rates == sorted(rates)

    def test_reruns_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["fig2", "--panel", "b", "--sigma-si", "4", "--points", "7"]
        assert cli.main(argv + ["--out", str(a)]) == 0
        assert cli.main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_sigma_outside_feasible_range(self, tmp_path, capsys):
        out = tmp_path / "x.csv"
        rc = cli.main(
            ["fig2", "--panel", "a", "--sigma-si", "1.0", "--out", str(out)]
        )
        assert rc == 3
        err = capsys.readouterr().err
        assert "infeasible" in err and "range" in err
        assert not out.exists()

    def test_gnuplot_script_references_the_csv(self, tmp_path):
        out, plot = tmp_path / "a.csv", tmp_path / "a.gp"
        rc = cli.main(
            ["fig2", "--panel", "a", "--points", "3", "--out", str(out),
             "--gnuplot", str(plot)]
        )
        assert rc == 0
        script = plot.read_text()
        assert "plot" in script and out.name in script

    def test_custom_config_targets(self, config, tmp_path):
        out = tmp_path / "c.csv"
        rc = cli.main(
            ["fig2", "--panel", "a", "--config", config, "--out", str(out),
             "--points", "2", "--delta2", "1.8"]
        )
        assert rc == 0
        assert len(out.read_text().splitlines()) == 3


class TestOracle:
    def test_all_quantities_pass(self, config, tmp_path, capsys):
        out = tmp_path / "oracle.csv"
        rc = cli.main(
            ["oracle", "--config", config, "--omega", "0.555,0.888889",
             "--samples", "20000", "--out", str(out)]
        )
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "quantity,theorem,exact,mc,stderr,pass"
        names = [ln.split(",")[0] for ln in lines[1:]]
        assert names == ["delta_1", "rate_1", "delta_2", "rate_2"]
        assert all(ln.endswith(",pass") for ln in lines[1:])
        assert "all pass" in capsys.readouterr().out

    def test_theorem_column_matches_exact_to_tiny_tolerance(self, config, tmp_path):
        out = tmp_path / "oracle.csv"
        cli.main(
            ["oracle", "--config", config, "--omega", "0.3,0.888888888",
             "--samples", "20000", "--out", str(out)]
        )
        for line in out.read_text().splitlines()[1:]:
            cells = line.split(",")
            assert abs(float(cells[1]) - float(cells[2])) <= 1e-9

    def test_zero_tolerance_forces_failure_exit(self, config, tmp_path, capsys):
        out = tmp_path / "oracle.csv"
        rc = cli.main(
            ["oracle", "--config", config, "--omega", "0.3,0.5",
             "--samples", "20000", "--tolerance", "0", "--out", str(out)]
        )
        assert rc == 4
        assert "FAILURES" in capsys.readouterr().out

    def test_boundary_chain_is_nudged_but_cannot_pass(self, config, tmp_path, capsys):
        # on the cap the predicted rate is infinite; sampling still runs on
        # a chain nudged into the interior, and the comparison reports the
        # divergence instead of crashing
        cap = 1.0 / 0.875
        out = tmp_path / "oracle.csv"
        rc = cli.main(
            ["oracle", "--config", config, "--omega", f"0.3,{cap!r}",
             "--samples", "20000", "--out", str(out)]
        )
        assert rc == 4
        assert "nudged" in capsys.readouterr().out
        rate2 = out.read_text().splitlines()[-1].split(",")
        assert rate2[0] == "rate_2"
        assert rate2[1] == "inf"
        assert rate2[-1] == "fail"

    def test_matrix_chain_from_toml(self, config, tmp_path):
        chain = tmp_path / "chain.toml"
        chain.write_text("omega = [0.3, 0.6]\n")
        out = tmp_path / "oracle.csv"
        rc = cli.main(
            ["oracle", "--config", config, "--omega", f"@{chain}",
             "--samples", "20000", "--out", str(out)]
        )
        assert rc == 0

    def test_reruns_are_byte_identical(self, config, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["oracle", "--config", config, "--omega", "0.3,0.6",
                "--samples", "20000"]
        assert cli.main(argv + ["--out", str(a)]) == 0
        assert cli.main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_infeasible_chain_exit(self, config, tmp_path):
        rc = cli.main(
            ["oracle", "--config", config, "--omega", "1.2,1.1",
             "--samples", "20000", "--out", str(tmp_path / "x.csv")]
        )
        assert rc == 3

    def test_wrong_omega_count_is_a_validation_error(self, config, tmp_path):
        rc = cli.main(
            ["oracle", "--config", config, "--omega", "0.3",
             "--samples", "20000", "--out", str(tmp_path / "x.csv")]
        )
        assert rc == 2

    def test_unparseable_omega(self, config, tmp_path):
        rc = cli.main(
            ["oracle", "--config", config, "--omega", "abc",
             "--samples", "20000", "--out", str(tmp_path / "x.csv")]
        )
        assert rc == 1

    def test_nonpositive_samples_rejected(self, config):
        assert cli.main(
            ["oracle", "--config", config, "--omega", "0.3,0.5", "--samples", "0"]
        ) == 1

    def test_seed_from_environment(self, config, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("SIB_SEED", "77")
        rc = cli.main(
            ["oracle", "--config", config, "--omega", "0.3,0.5",
             "--samples", "20000", "--out", str(tmp_path / "s.csv")]
        )
        assert rc == 0
        assert "seed 77" in capsys.readouterr().out

    def test_invalid_seed_environment(self, config, tmp_path, monkeypatch):
        monkeypatch.setenv("SIB_SEED", "abc")
        rc = cli.main(
            ["oracle", "--config", config, "--omega", "0.3,0.5",
             "--samples", "20000", "--out", str(tmp_path / "s.csv")]
        )
        assert rc == 1


class TestDiscreteCheck:
    def test_small_sweep_passes(self, capsys):
        rc = cli.main(["discrete-check", "--instances", "3", "--draws", "2",
                       "--seed", "0"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "instances: 3" in out
        assert "all pass" in out

    def test_nonpositive_instances_rejected(self, capsys):
        assert cli.main(["discrete-check", "--instances", "0"]) == 1
        assert "positive" in capsys.readouterr().err


class TestParsing:
    def test_help_exits_clean(self):
        assert cli.main(["--help"]) == 0

    def test_missing_subcommand(self):
        assert cli.main([]) == 1

    def test_unknown_subcommand(self):
        assert cli.main(["frobnicate"]) == 1
