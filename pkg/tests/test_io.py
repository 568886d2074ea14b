import json
import math

import numpy as np
import pytest

from iontrap_xxz import cli, pipelines
from iontrap_xxz.config import RunConfig, parse_config
from iontrap_xxz.plotting import CAPTIONS, emit_svg, render_svg
from iontrap_xxz.products import KINDS, DataProduct, Table, csv_body, csv_text, read_csv, write_product


def small_product(kind="kz_sweep"):
    t = Table((("rate", "J0^2"), ("rho", "1"), ("zeta_fit", "1"), ("zeta_predicted", "1")),
              [(0.1, 0.2, 0.15, 0.384615), (1.0, 0.4, 0.15, 0.384615)])
    return DataProduct(kind, {"main": t}, {"n_sites": 6, "note": "x"}, "abc")


class TestProducts:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            DataProduct("fig9", {})

    def test_filenames(self):
        p = DataProduct("fig3a", {"grid": Table((), []), "main": Table((), [])})
        assert p.filename("grid") == "fig3a_grid.csv" and p.filename("main") == "fig3a.csv"
        assert p.empty

    def test_csv_round_trip(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
        p = small_product()
        (path,) = write_product(p, tmp_path)
        parsed = read_csv(path)
        assert parsed.header["schema"] == "iontrap-xxz/kz_sweep/main v1"
        assert "config_hash=abc" in parsed.header["provenance"]
        assert "timestamp=1970-01-01T00:00:00Z" in parsed.header["provenance"]
        assert parsed.units == {"rate": "J0^2", "rho": "1", "zeta_fit": "1", "zeta_predicted": "1"}
        assert parsed.table.rows == [list(r) for r in p.tables["main"].rows]
        assert parsed.header["n_sites"] == "6"

    def test_body_independent_of_time(self, monkeypatch):
        p = small_product()
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
        a = csv_text(p, "main")
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "1000000")
        b = csv_text(p, "main")
        assert a != b
        assert a.split("\n", 3)[-1] == b.split("\n", 3)[-1]

    def test_full_precision(self):
        t = Table((("x", "1"),), [(1 / 3,), (math.nan,), (True,)])
        assert csv_body(t) == "x\n0.3333333333333333\nnan\ntrue\n"


class TestSVG:
    def test_deterministic(self):
        assert render_svg(small_product()) == render_svg(small_product())

    @pytest.mark.parametrize("kind", KINDS)
    def test_every_kind_renders_empty(self, kind, tmp_path):
        tables = {"grid": Table((), []), "trajectories": Table((), []), "fixed_points": Table((), [])} \
            if kind in ("fig3a", "fig3b") else {"main": Table((), [])}
        path = emit_svg(DataProduct(kind, tables), tmp_path)
        text = path.read_text()
        assert text.startswith("<?xml") and "<svg" in text
        assert kind in CAPTIONS

    def test_no_date(self):
        assert "<dc:date>" not in render_svg(small_product())

    def test_fig1b_has_reference_lines(self):
        products, _ = pipelines.sigma_sweep(
            parse_config("[sweep]\ndetuning_points = 12\nwith_prefactor = false\nchain_mode = real\n"))
        svg = render_svg(products[0])
        assert svg.count("stroke-dasharray") >= 2

    def test_fig1b_sweep_deterministic(self):
        cfg = parse_config("[sweep]\ndetuning_points = 8\nwith_prefactor = false\n")
        a, _ = pipelines.sigma_sweep(cfg)
        b, _ = pipelines.sigma_sweep(cfg)
        assert csv_body(a[0].tables["main"]) == csv_body(b[0].tables["main"])
        assert render_svg(a[0]) == render_svg(b[0])


class TestPipelines:
    def test_exponent_table(self):
        (p,), failures = pipelines.exponent_table(RunConfig(), [2.3, 0.5])
        assert len(failures) == 1 and "sigma=0.5" in failures[0]
        row = dict(zip(p.tables["main"].names, p.tables["main"].rows[0]))
        assert row["phi"] == pytest.approx(1.3) and row["zeta"] == pytest.approx(1 / 2.6)

    def test_phase_diagram(self):
        (p,), _ = pipelines.phase_diagram(parse_config("[sweep]\ntheta_points = 5\n"))
        t = p.tables["main"]
        assert t.column("omega_h_crit")[0] == 1.0 and abs(t.column("omega_h_crit")[-1]) < 1e-12
        np.testing.assert_array_equal(t.column("omega_h_crit_lower"), -t.column("omega_h_crit"))

    def test_fig2_zeta(self):
        (p,), _ = pipelines.zeta_sweep(parse_config("[sweep]\ndetuning_points = 10\nchain_mode = real\n"))
        t = p.tables["main"]
        s, z = t.column("sigma"), t.column("zeta")
        assert np.all(np.isnan(z[s <= 1]))
        np.testing.assert_allclose(z[s > 1], 1 / (2 * np.minimum(2, s[s > 1] - 1)))

    def test_ed_scan(self):
        cfg = parse_config("[model]\nn_sites = 6\n[sweep]\nh_grid = linspace(0, 2, 21) J0\ned_sizes = [4, 6]\n")
        (p,), failures = pipelines.ed_scan(cfg)
        assert failures == []
        assert p.tables["main"].column("m_Z")[-1] == 0.5
        assert len(p.tables["finite_size"]) == 2


def run(argv, capsys):
    rc = cli.main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


class TestCLI:
    def test_trap_modes(self, tmp_path, capsys):
        rc, out, _ = run(["trap-modes", "--n", "3", "--out", str(tmp_path)], capsys)
        assert rc == 0
        t = read_csv(tmp_path / "modes.csv").table
        np.testing.assert_allclose(t.column("omega_over_omegaz"), [1, math.sqrt(3), math.sqrt(29 / 5)], rtol=1e-10)
        assert (tmp_path / "modes.svg").exists() and (tmp_path / "run_config.txt").exists()
        assert "modes:" in out

    def test_exponents_prints_table(self, tmp_path, capsys):
        rc, out, _ = run(["exponents", "--sigma", "2.3", "--d", "1", "--p", "1", "--out", str(tmp_path),
                          "--no-plots"], capsys)
        assert rc == 0
        assert "0.769231" in out and "0.384615" in out and "1.3" in out
        assert not (tmp_path / "exponents.svg").exists()

    def test_partial_failure(self, tmp_path, capsys):
        rc, _, err = run(["exponents", "--sigma", "0.5", "2.3", "--out", str(tmp_path)], capsys)
        assert rc == cli.EXIT_PARTIAL
        assert json.loads(err.strip().splitlines()[-1])["error"] == "partial"

    def test_total_failure(self, tmp_path, capsys):
        rc, _, _ = run(["exponents", "--sigma", "0.5", "--out", str(tmp_path)], capsys)
        assert rc == cli.EXIT_FAILURE

    def test_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("[model]\nsigma = 2.3\nbogus = 1\n")
        rc, _, err = run(["exponents", "--config", str(cfg), "--out", str(tmp_path)], capsys)
        assert rc == cli.EXIT_CONFIG
        msg = json.loads(err)
        assert msg["error"] == "config" and msg["line"] == 3 and "bogus" in msg["message"]

    def test_missing_config_file(self, tmp_path, capsys):
        rc, _, _ = run(["exponents", "--config", str(tmp_path / "nope.cfg")], capsys)
        assert rc == cli.EXIT_CONFIG

    def test_reproduce_fig3a(self, tmp_path, capsys):
        rc, _, _ = run(["reproduce", "fig3a", "--out", str(tmp_path)], capsys)
        assert rc == 0
        for name in ("fig3a_grid.csv", "fig3a_trajectories.csv", "fig3a_fixed_points.csv", "fig3a.svg"):
            assert (tmp_path / name).exists()
        fp = read_csv(tmp_path / "fig3a_fixed_points.csv")
        assert fp.header["sigma"] == "2.3"
        assert fp.table.rows[1][0] == pytest.approx(0.3 * math.pi)

    def test_env_output_directory(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
        assert run(["trap-modes", "--n", "2", "--no-plots"], capsys)[0] == 0
        assert (tmp_path / "env" / "modes.csv").exists()
        assert run(["trap-modes", "--n", "2", "--no-plots", "--out", str(tmp_path / "flag")], capsys)[0] == 0
        assert (tmp_path / "flag" / "modes.csv").exists()

    def test_quench_small(self, tmp_path, capsys):
        cfg = tmp_path / "q.cfg"
        cfg.write_text("[model]\nn_sites = 4\n[sweep]\nrates = [0.1, 1, 10] J0^2\n")
        rc, _, _ = run(["quench", "--config", str(cfg), "--out", str(tmp_path), "--no-plots"], capsys)
        assert rc == 0
        t = read_csv(tmp_path / "kz_sweep.csv").table
        assert len(t) == 3 and np.all(t.column("rho") > 0)

    def test_show_defaults(self, capsys):
        rc, out, _ = run(["--show-defaults"], capsys)
        assert rc == 0 and "[sweep]" in out

    def test_no_command(self, capsys):
        assert run([], capsys)[0] == cli.EXIT_CONFIG

    def test_run_config_round_trips(self, tmp_path, capsys):
        run(["trap-modes", "--n", "4", "--out", str(tmp_path), "--no-plots"], capsys)
        again = parse_config((tmp_path / "run_config.txt").read_text())
        assert again.trap.ion_count == 4
