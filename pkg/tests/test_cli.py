"""Command-line surface: parsing, config merge, exit codes, artifacts."""

import numpy as np
import pytest

from contact_hj import ConfigError
from contact_hj import cli


def run(argv):
    return cli.main([str(a) for a in argv])


def test_evolve_happy_path_writes_csv(tmp_path):
    out = tmp_path / "u.csv"
    code = run(["evolve", "--hamiltonian", "quadratic", "--u0", "abs(x)",
                "--t", "0.1", "--dt", "5e-3", "--out", out])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "x,u"
    assert len(lines) == 202


def test_zero_dt_is_a_config_error(capsys):
    code = run(["evolve", "--hamiltonian", "quadratic", "--t", "0.5", "--dt", "0"])
    assert code == 2
    assert "dt must be positive" in capsys.readouterr().err


def test_non_integral_step_count_is_a_config_error(capsys):
    code = run(["evolve", "--hamiltonian", "quadratic", "--t", "0.5", "--dt", "0.3"])
    assert code == 2
    assert "t/dt not integral" in capsys.readouterr().err


def test_missing_output_directory_is_a_config_error(tmp_path, capsys):
    out = tmp_path / "nope" / "u.csv"
    code = run(["evolve", "--hamiltonian", "quadratic", "--t", "0.1",
                "--dt", "5e-3", "--out", out])
    assert code == 2
    assert "does not exist" in capsys.readouterr().err


def test_unknown_config_key_is_named(tmp_path, capsys):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("dt = 1e-3\nbogus = 3\n")
    code = run(["evolve", "--config", cfgfile, "--hamiltonian", "quadratic",
                "--t", "0.5"])
    assert code == 2
    assert "bogus" in capsys.readouterr().err


def test_config_file_merges_under_explicit_flags(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("hamiltonian = quadratic\ndt = 2e-3\nt = 0.5\nu0 = x^2\n")
    rc = cli.parse_config(["evolve", "--config", str(cfgfile), "--t", "0.25"])
    assert rc.hamiltonian == "quadratic"
    assert rc.dt == 2e-3
    assert rc.t == 0.25          # the command line wins
    assert rc.u0 == "x^2"


def test_initial_expression_grammar():
    f = cli.parse_initial_expression("1+abs(x)+cos(0.5*x)+sin(2*x)+x^2-0.25")
    x = np.linspace(-3, 3, 11)
    want = 1 + np.abs(x) + np.cos(0.5 * x) + np.sin(2 * x) + x * x - 0.25
    np.testing.assert_allclose(f(x), want, rtol=1e-12)


@pytest.mark.parametrize("expr", ["tan(x)", "abs(y)", "x^3", "cos(x", ""])
def test_initial_expression_rejects_unknown_terms(expr):
    with pytest.raises(ConfigError):
        cli.parse_initial_expression(expr)


def test_box_parser_round_trip():
    box = cli.parse_box("x=-3:3,p=-2:2,u=-1:1")
    assert box["x"] == (-3.0, 3.0)
    assert box["p"] == (-2.0, 2.0)
    assert box["u"] == (-1.0, 1.0)
    with pytest.raises(ConfigError):
        cli.parse_box("x=-3:3,junk")


def test_csv_bytes_identical_across_runs_and_workers(tmp_path):
    outs = []
    for tag, workers in (("a", 1), ("b", 3), ("c", 1)):
        out = tmp_path / f"{tag}.csv"
        code = run(["evolve", "--hamiltonian", "discount", "--u0", "cos(0.785398163397*x)",
                    "--t", "0.1", "--dt", "5e-3", "--workers", workers, "--out", out])
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_initial_data_accepts_grid_csv(tmp_path):
    first = tmp_path / "stage1.csv"
    second = tmp_path / "stage2.csv"
    assert run(["evolve", "--hamiltonian", "quadratic", "--u0", "abs(x)",
                "--t", "0.1", "--dt", "5e-3", "--out", first]) == 0
    assert run(["evolve", "--hamiltonian", "quadratic", "--u0", first,
                "--t", "0.1", "--dt", "5e-3", "--out", second]) == 0
    assert second.read_text().startswith("x,u\n")


def test_bracket_subcommand_translation_pair(capsys):
    code = run(["bracket", "--H", "p1", "--F", "x1"])
    assert code == 0
    out = capsys.readouterr().out
    assert "verdict=one_sided_le" in out
    assert "max_abs=1" in out


def test_strict_escalates_window_edge_hits(tmp_path):
    argv = ["multitime", "--H", "quadratic,scaled(k=2,base=quadratic)",
            "--t", "0.2,0.4", "--u0", "abs(x)", "--dt", "5e-3"]
    with pytest.warns(Warning):
        assert run(argv) == 0
    assert run(argv + ["--strict"]) == 1


def test_selftest_quick_profile(tmp_path, capsys):
    code = run(["selftest", "--profile", "quick", "--outdir", tmp_path,
                "--workers", "2"])
    out = capsys.readouterr().out
    assert code == 0
    assert "13/13 cells passed" in out
    assert (tmp_path / "a2_hopflax.csv").exists()
    assert (tmp_path / "a13_checksums.csv").exists()
