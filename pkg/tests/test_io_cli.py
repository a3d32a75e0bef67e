import json
import logging
import math

import numpy as np
import pytest

from qgspacing import ConfigError, MissingLevelsError, integrable_pdf
from qgspacing import cli, io, secular

import support

SINGLE_BOND = """
version = 1
[graph]
kind = "bonds"
bonds = [[0, 1, "pi"]]
[solver]
k_min = 0.1
k_max = 100.5
"""

STAR = """
version = 1
seeds = [1, 2]
[graph]
kind = "star"
lengths = ["pi", 3.183459012, 3.1442336073]
[solver]
levels = 3001
[compare]
references = ["poisson", "wigner"]
[returns]
count = 500
"""


def write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def run_main(tmp_path, command, text, *extra):
    cfg = write(tmp_path, text)
    return cli.main([command, "--config", str(cfg), "--out", str(tmp_path / "out"), *extra])


def test_number_format():
    assert io.format_number(1) == "1"
    assert io.format_number(0.1) == "0.10000000000000001"
    assert io.format_number(np.float64(2.0)) == "2"
    text = io.csv_text(["a", "b"], [[1, 2], [0.5, 1 / 3]], ["# peak,1,0.5"])
    assert text == "a,b\n1,0.5\n2,0.33333333333333331\n# peak,1,0.5\n"


def test_parse_length():
    assert io.parse_length("sqrt(2)", "x") == math.sqrt(2)
    assert io.parse_length("2*pi/3", "x") == 2 * math.pi / 3
    assert io.parse_length(1.5, "x") == 1.5
    assert io.parse_length("-e + 3", "x") == 3 - math.e
    for bad in ("__import__('os')", "pi.real", "sqrt", "1/0", "[1]", True):
        with pytest.raises(ConfigError):
            io.parse_length(bad, "graph.lengths[0]")


@pytest.mark.parametrize("text, field", [
    ("version = 2\n[graph]\nkind = 'star'\nlengths = [1.0]\n[solver]\nk_max = 5.0\n", "version"),
    ("version = 1\n[graph]\nkind = 'tree'\nlengths = [1.0]\n[solver]\nk_max = 5.0\n", "graph.kind"),
    ("version = 1\n[graph]\nkind = 'star'\nlengths = [1.0, 'x']\n[solver]\nk_max = 5.0\n", "graph.lengths[1]"),
    ("version = 1\n[graph]\nkind = 'star'\nlengths = [1.0, -2.0]\n[solver]\nk_max = 5.0\n", "graph"),
    ("version = 1\n[graph]\nkind = 'star'\nlengths = [1.0]\n", "k_max or levels"),
    ("version = 1\n[graph]\nkind = 'lasso'\nlengths = [1.0]\n[solver]\nk_max = 5.0\n", "two lengths"),
    ("version = 1\n[graph]\nkind = 'star'\nlengths = [1.0]\n[solver]\nk_max = 5.0\n[compare]\n"
     "references = ['goe']\n", "compare.references"),
    ("version = 1\n[graph]\nkind = 'star'\nlengths = [1.0, 2.0]\n[basis]\nlengths = [1.0]\n"
     "coefficients = [[1], [3]]\n[solver]\nk_max = 5.0\n", "basis"),
])
def test_config_errors_name_the_field(text, field):
    with pytest.raises(ConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
        io.parse_config(text)


def test_toml_syntax_error_has_line():
    with pytest.raises(ConfigError, match="line 3"):
        io.parse_config("version = 1\n[graph]\nkind = \n", "bad.toml")


def test_spectrum_single_bond(tmp_path):
    assert run_main(tmp_path, "spectrum", SINGLE_BOND) == 0
    text = (tmp_path / "out" / "spectrum.csv").read_bytes()
    assert b"\r" not in text
    header, data = io.read_csv(tmp_path / "out" / "spectrum.csv")
    assert header == ["index", "k"]
    assert np.array_equal(data[:, 0], np.arange(1, 101))
    assert np.allclose(data[:, 1], np.arange(1, 101), atol=1e-11)
    summary = json.loads((tmp_path / "out" / "spectrum.json").read_text())
    assert summary["level_count"] == 100
    assert summary["density_exact"] == pytest.approx(1.0)


def test_commands_and_reruns(tmp_path):
    cfg = io.parse_config(STAR)
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        for command in cli.COMMANDS:
            if command == "analytic":
                continue
            bundle = cli.run(command, cfg, out_dir=out, use_cache=False)
            assert bundle.summary_path.exists()
    files = sorted(p.name for p in first.glob("*.csv"))
    assert {"spectrum.csv", "spacings.csv", "histogram.csv", "cdf.csv", "compare_poisson.csv",
            "compare_wigner.csv", "returns.csv"} <= set(files)
    for name in files:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name

    # summary numbers can be recomputed from the files
    summary = json.loads((first / "spacings.json").read_text())
    _, d = io.read_csv(first / "spacings.csv")
    assert summary["spacing_count"] == len(d) == 3000
    assert summary["mean"] == pytest.approx(float(np.mean(d[:, 1])), rel=1e-15)
    sheets = json.loads((first / "sheets.json").read_text())
    assert sheets["counts"] == [2, 2, 2] and sheets["residual"] < 1e-12
    returns = json.loads((first / "returns.json").read_text())
    assert returns["return_count"] == 1000 and returns["seeds"] == [1, 2]


def test_cache_hit_and_corruption(tmp_path, caplog):
    cfg = io.parse_config(STAR)
    cache = tmp_path / "cache"
    cli.run("spectrum", cfg, out_dir=tmp_path / "a", cache_dir=cache)
    assert len(list(cache.glob("*.csv"))) == 1
    with caplog.at_level(logging.INFO, logger="qgspacing"):
        bundle = cli.run("spectrum", cfg, out_dir=tmp_path / "b", cache_dir=cache)
    assert bundle.summary["solver"]["cache"] == "hit"
    assert "read from cache" in caplog.text
    assert (tmp_path / "a" / "spectrum.csv").read_bytes() == (tmp_path / "b" / "spectrum.csv").read_bytes()

    cached = next(cache.glob("*.csv"))
    cached.write_text(cached.read_text().replace("\n2,", "\n2,1"))
    caplog.clear()
    with caplog.at_level(logging.INFO, logger="qgspacing"):
        bundle = cli.run("spectrum", cfg, out_dir=tmp_path / "c", cache_dir=cache)
    assert "checksum" in caplog.text
    assert bundle.summary["solver"]["cache"] == "miss"
    assert (tmp_path / "a" / "spectrum.csv").read_bytes() == (tmp_path / "c" / "spectrum.csv").read_bytes()


def test_cache_key_follows_the_spectrum_inputs():
    a = io.parse_config(STAR)
    b = io.parse_config(STAR.replace("count = 500", "count = 50"))
    c = io.parse_config(STAR.replace("levels = 3001", "levels = 3002"))
    assert a.spectrum_key() == b.spectrum_key()
    assert a.spectrum_key() != c.spectrum_key()


def test_exit_codes(tmp_path, monkeypatch, capsys):
    assert run_main(tmp_path, "spectrum", "version = 1\n[graph]\nkind = 'star'\n") == 2
    assert "configuration error" in capsys.readouterr().err

    def fail(*args, **kwargs):
        raise MissingLevelsError("7 levels where the count predicts 9", (1.0, 2.0), -2)

    monkeypatch.setattr(secular, "find_levels", fail)
    assert run_main(tmp_path, "spectrum", SINGLE_BOND, "--no-cache") == 3
    err = capsys.readouterr().err
    assert "spectrum" in err and "MissingLevelsError" in err


def test_integrable_graph_has_no_surface(tmp_path):
    text = "version = 1\n[graph]\nkind = 'integrable'\nlengths = ['sqrt(2)', 'sqrt(3)']\n[solver]\nlevels = 100\n"
    assert run_main(tmp_path, "spectrum", text) == 0
    assert run_main(tmp_path, "sheets", text) == 2


def test_analytic_integrable_curve(tmp_path):
    lengths = ", ".join(f"'sqrt({n})'" if n != "e" else "'e'" for n in (167, 2, 3, 107, 5, 6, 7, "e"))
    text = (f"version = 1\n[graph]\nkind = 'integrable'\nlengths = [{lengths}]\n[solver]\nlevels = 10\n"
            f"[analytic]\nmodel = 'integrable'\n")
    assert run_main(tmp_path, "analytic", text) == 0
    path = tmp_path / "out" / "analytic_integrable.csv"
    lines = path.read_text().splitlines()
    law = integrable_pdf(support.EIGHT_BONDS)
    tag, pos, mass = lines[-1].split(",")
    assert tag == "# peak"
    assert float(pos) == law.peak[0] and float(mass) == law.peak[1]
    _, data = io.read_csv(path)
    assert data[1, 0] == pytest.approx(0.01)
    assert np.array_equal(data[:, 1], law.pdf(data[:, 0]))
    summary = json.loads((tmp_path / "out" / "analytic.json").read_text())
    assert abs(summary["normalization"] - 1.0) < 1e-9


@pytest.mark.slow
def test_compare_pentagon_with_wigner(tmp_path):
    lengths = ", ".join(repr(float(v)) for v in support.PENTAGON)
    text = (f"version = 1\n[graph]\nkind = 'complete'\nvertices = 5\nlengths = [{lengths}]\n"
            f"[solver]\nlevels = 20001\n[compare]\nreferences = ['wigner', 'poisson']\n")
    assert run_main(tmp_path, "compare", text, "--no-cache") == 0
    summary = json.loads((tmp_path / "out" / "compare.json").read_text())
    assert summary["ks"]["wigner"] < 0.025
    assert summary["ks"]["poisson"] > 0.1
    _, data = io.read_csv(tmp_path / "out" / "compare_wigner.csv")
    assert np.max(np.abs(data[:, 1])) <= summary["ks"]["wigner"] + 1e-12


def test_returns_with_quadrature(tmp_path):
    text = ("version = 1\nseeds = [0, 1]\n[graph]\nkind = 'figure_eight'\nlengths = ['sqrt(2)', 'sqrt(3)']\n"
            "[solver]\nlevels = 2001\n[returns]\ncount = 1000\ngrid_size = 400\n")
    assert run_main(tmp_path, "returns", text, "--seed", "5", "--seed", "6") == 0
    summary = json.loads((tmp_path / "out" / "returns.json").read_text())
    assert summary["seeds"] == [5, 6]
    assert summary["ks_spectrum"] < summary["ks_tolerance"]
    assert summary["ks_quadrature_spectrum"] < 0.05
    header, data = io.read_csv(tmp_path / "out" / "quadrature.csv")
    assert header == ["delta", "weight"]
    assert np.sum(data[:, 1]) == pytest.approx(1.0)
