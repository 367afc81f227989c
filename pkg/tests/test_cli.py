import json
import os
import re

import numpy as np
import pytest

from fdmzi.cli import format_csv, fock_check, main
from fdmzi.config import ConfigError, load_config
from fdmzi.fitting import synthetic_sin2


def write_cfg(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    comments = [ln[2:] for ln in lines if ln.startswith("# ")]
    body = [ln for ln in lines if not ln.startswith("#")]
    return comments, body[0].split(","), np.array([[float(v) for v in ln.split(",")] for ln in body[1:]])


class TestFringe:
    def test_default(self, tmp_path, capsys):
        assert main(["fringe", "--out", str(tmp_path)]) == 0
        comments, header, data = read_csv(tmp_path / "fringe.csv")
        assert header == ["phase_rad", "p_upper", "p_lower"]
        assert data.shape == (361, 3)
        assert (tmp_path / "fringe.svg").read_text().startswith("<?xml")
        manifest = json.loads((tmp_path / "fringe.manifest.json").read_text())
        assert manifest["command"] == "fringe" and len(manifest["config_sha256"]) == 64
        assert "v_upper=0.9895" in capsys.readouterr().out

    def test_zero_pump_degenerate(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[fringe]\npump_mw = 0\n")
        assert main(["fringe", "--config", cfg, "--out", str(tmp_path), "--format", "csv"]) == 0
        comments, _, data = read_csv(tmp_path / "fringe.csv")
        assert "degenerate_upper=true" in comments[1]
        assert not (tmp_path / "fringe.svg").exists()
        assert "degenerate upper" in capsys.readouterr().out

    def test_lossless_override(self, tmp_path):
        cfg = write_cfg(tmp_path, "[fringe]\nlossless = true\nr1 = 0.5\nr2 = 0.5\n")
        assert main(["fringe", "--config", cfg, "--out", str(tmp_path), "--format", "csv"]) == 0
        comments, _, data = read_csv(tmp_path / "fringe.csv")
        assert float(re.search(r"v_upper=(\S+)", comments[1]).group(1)) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(data[:, 1] + data[:, 2], 1.0, atol=1e-14)


class TestSweep:
    def test_single_point(self, tmp_path):
        cfg = write_cfg(tmp_path, "[visibility_sweep]\npower_min = 140\npower_max = 140\npower_points = 1\n")
        assert main(["visibility-sweep", "--config", cfg, "--out", str(tmp_path), "--format", "csv"]) == 0
        _, header, data = read_csv(tmp_path / "visibility_sweep.csv")
        assert header == ["power_mw", "v_upper", "v_lower"]
        assert data.shape == (1, 3)
        assert data[0, 1] == pytest.approx(0.989530508391135, abs=1e-12)

    def test_default_grid(self, tmp_path):
        assert main(["visibility-sweep", "--out", str(tmp_path)]) == 0
        _, _, data = read_csv(tmp_path / "visibility_sweep.csv")
        assert data.shape == (401, 3)
        assert np.all((data[:, 1:] >= 0) & (data[:, 1:] <= 1))


class TestNoiseVis:
    def test_default(self, tmp_path, capsys):
        assert main(["noise-vis", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "mu=0.1: filter < 1.39 GHz" in out
        assert "mu=0.01: V>0.9 not reachable" in out
        for name in ("noise_vis.csv", "noise_vis_upper.svg", "noise_vis_lower.svg"):
            assert (tmp_path / name).exists()

    def test_narrowband(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[noise_vis]\ninput_bw_ghz = 0.0096\nmu = 0.1\n")
        assert main(["noise-vis", "--config", cfg, "--out", str(tmp_path), "--format", "csv"]) == 0
        m = re.search(r"filter < ([\d.]+) MHz", capsys.readouterr().out)
        assert float(m.group(1)) == pytest.approx(13.0, abs=1.0)


class TestFit:
    def test_sin2(self, tmp_path, capsys):
        p = tmp_path / "curve.csv"
        p.write_text(synthetic_sin2(0.94, 0.0042).to_csv_text(), encoding="utf-8")
        assert main(["fit", str(p), "--model", "sin2", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        eta = float(re.search(r"eta = (\S+)", out).group(1))
        assert eta == pytest.approx(0.0042, rel=1e-8)
        assert (tmp_path / "fit_residuals.csv").exists()

    def test_too_few_points(self, tmp_path):
        p = tmp_path / "short.csv"
        p.write_text("power_mw,value\n0,0\n100,0.5\n", encoding="utf-8")
        assert main(["fit", str(p), "--model", "sin2", "--out", str(tmp_path)]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["fit", str(tmp_path / "nope.csv"), "--model", "poly1"]) == 2

    def test_all_zero_unconverged(self, tmp_path):
        p = tmp_path / "zero.csv"
        p.write_text("power_mw,value\n0,0\n100,0\n200,0\n300,0\n", encoding="utf-8")
        assert main(["fit", str(p), "--model", "sin2", "--out", str(tmp_path)]) == 1

    def test_poly2_exact(self, tmp_path, capsys):
        x = np.linspace(0, 400, 11)
        y = 2.0e3 * x ** 2 + 2.9e3 * x + 4.8e4
        p = tmp_path / "noise.csv"
        p.write_text(format_csv(["power_mw", "value"], zip(x, y)), encoding="utf-8")
        assert main(["fit", str(p), "--model", "poly2", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "a = 2000" in out and "c = 48000" in out


class TestFockCheck:
    def test_pass(self, capsys):
        assert main(["fock-check", "--n-max", "8", "--trials", "20"]) == 0
        assert capsys.readouterr().out.strip().endswith("PASS")

    def test_zero_tolerance_fails(self):
        assert main(["fock-check", "--n-max", "4", "--trials", "3", "--tolerance", "0"]) == 1

    def test_deterministic(self):
        assert fock_check(6, 10, seed=3) == fock_check(6, 10, seed=3)

    def test_n_max_out_of_range(self):
        assert main(["fock-check", "--n-max", "61"]) == 2


class TestIO:
    def test_byte_identical_reruns(self, tmp_path):
        for d in ("a", "b"):
            assert main(["noise-vis", "--out", str(tmp_path / d)]) == 0
            assert main(["fringe", "--out", str(tmp_path / d)]) == 0
        for name in ("noise_vis.csv", "fringe.csv", "fringe.svg", "noise_vis_upper.svg"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_number_format(self, tmp_path):
        assert main(["fringe", "--out", str(tmp_path), "--format", "csv"]) == 0
        raw = (tmp_path / "fringe.csv").read_bytes()
        assert b"\r" not in raw
        row = raw.decode().splitlines()[4].split(",")
        assert all(float(v) == float(f"{float(v):.17g}") for v in row)
        assert len(raw.decode().splitlines()[5].split(",")[1].replace("-", "").replace(".", "")) >= 15

    @pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
    def test_unwritable_dir(self, tmp_path):
        ro = tmp_path / "ro"
        ro.mkdir()
        ro.chmod(0o500)
        assert main(["fringe", "--out", str(ro / "x")]) == 1

    def test_out_is_a_file(self, tmp_path):
        f = tmp_path / "file"
        f.write_text("x")
        assert main(["fringe", "--out", str(f)]) == 1

    @pytest.mark.parametrize("text", [
        "[bogus]\nx = 1\n",
        "[budget]\nunknown = 1\n",
        "[budget]\nt_u = 1.5\n",
        "[fringe]\nphase_points = abc\n",
        "[visibility_sweep]\npower_min = 10\npower_max = 5\n",
        "not an ini",
    ])
    def test_bad_config(self, tmp_path, text):
        cfg = write_cfg(tmp_path, text)
        assert main(["fringe", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_missing_config(self, tmp_path):
        assert main(["fringe", "--config", str(tmp_path / "none.ini")]) == 2

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["fringe", "--format", "pdf"])
        assert exc.value.code == 2

    def test_config_digest_stable(self):
        assert load_config().digest() == load_config(text="").digest()
        assert load_config().digest() != load_config(text="[fringe]\npump_mw = 100\n").digest()

    def test_config_error_type(self):
        with pytest.raises(ConfigError):
            load_config(text="[noise_vis]\nmu = 0\n")
