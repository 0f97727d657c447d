import json
import struct

import numpy as np
import pytest

from holofading import ConfigError, generate
from holofading.cli import build_aperture, main
from holofading.generator import Aperture
from holofading.variances import table_1d, table_2d


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestApertureParsing:
    def test_planar(self):
        ap = build_aperture("16,16", "0.25,0.25")
        assert ap == Aperture(lx=16, dx=0.25, ly=16, dy=0.25)

    def test_volumetric(self):
        ap = build_aperture("16,16,2", "0.5")
        assert ap.kind == "volumetric" and ap.nz == 4

    def test_single_spacing_broadcast(self):
        ap = build_aperture("16,8", "0.5")
        assert ap.dy == 0.5 and ap.ny == 16

    def test_nyquist_rejected(self):
        with pytest.raises(ConfigError, match="Nyquist"):
            build_aperture("16", "0.6")

    def test_bad_numbers(self):
        with pytest.raises(ConfigError):
            build_aperture("16,x", "0.5")

    def test_too_many_sides(self):
        with pytest.raises(ConfigError):
            build_aperture("1,2,3,4", "0.5")


class TestConfigFile:
    def test_file_supplies_defaults_and_flags_win(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("aperture=8\nspacing=0.5\nseed=3\nformat=csv\n")
        out1 = tmp_path / "a.csv"
        code, _, _ = run_cli(
            capsys, "generate", "--config", str(cfg), "--out", str(out1)
        )
        assert code == 0
        out2 = tmp_path / "b.csv"
        code, _, _ = run_cli(
            capsys, "generate", "--config", str(cfg), "--out", str(out2), "--seed", "4"
        )
        assert code == 0
        assert out1.read_text() != out2.read_text()  # flag overrode the file seed

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("aperture=8\nspacing=0.5\nbogus_key=1\n")
        code, _, err = run_cli(
            capsys, "generate", "--config", str(cfg), "--out", str(tmp_path / "x.bin")
        )
        assert code == 2
        failures = json.loads(err)["failures"]
        assert "bogus_key" in failures[0]["detail"]

    def test_missing_required(self, capsys):
        code, _, err = run_cli(capsys, "generate", "--aperture", "8")
        assert code == 2
        assert "spacing" in json.loads(err)["failures"][0]["detail"]

    def test_nyquist_error_is_machine_readable(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "generate", "--aperture", "8", "--spacing", "0.6",
            "--out", str(tmp_path / "x.bin"),
        )
        assert code == 2
        assert "Nyquist" in json.loads(err)["failures"][0]["detail"]


class TestGenerateOutputs:
    def test_binary_layout_roundtrip(self, tmp_path, capsys):
        out = tmp_path / "f.bin"
        code, _, _ = run_cli(
            capsys, "generate", "--aperture", "8,8", "--spacing", "0.5,0.5",
            "--seed", "7", "--realizations", "3", "--out", str(out),
        )
        assert code == 0
        blob = out.read_bytes()
        magic, version, nx, ny, nz, m = struct.unpack("<4s5I", blob[:24])
        assert magic == b"HOLO" and version == 1
        assert (nx, ny, nz, m) == (16, 16, 1, 3)
        data = np.frombuffer(blob[24:], dtype="<c16").reshape(m, nz, ny, nx)
        ap = Aperture(lx=8, dx=0.5, ly=8, dy=0.5)
        for r in range(3):
            want = generate(ap, seed=7, realization=r).samples
            assert np.array_equal(data[r], want)

    def test_csv_layout(self, tmp_path, capsys):
        out = tmp_path / "f.csv"
        code, _, _ = run_cli(
            capsys, "generate", "--aperture", "4", "--spacing", "0.5",
            "--realizations", "2", "--format", "csv", "--out", str(out),
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "realization,z_index,y_index,x_index,re,im"
        assert len(lines) == 1 + 2 * 8
        first = lines[1].split(",")
        assert first[:4] == ["0", "0", "0", "0"]
        ap = Aperture(lx=4, dx=0.5)
        want = generate(ap, seed=0).samples[0, 0, 0]
        assert float(first[4]) == want.real and float(first[5]) == want.imag

    def test_byte_identical_reruns(self, tmp_path, capsys):
        args = ("generate", "--aperture", "8,8", "--spacing", "0.5",
                "--seed", "11", "--realizations", "2")
        a, b = tmp_path / "a.bin", tmp_path / "b.bin"
        assert run_cli(capsys, *args, "--out", str(a))[0] == 0
        assert run_cli(capsys, *args, "--out", str(b))[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_bad_format(self, tmp_path, capsys):
        code, _, err = run_cli(
            capsys, "generate", "--aperture", "8", "--spacing", "0.5",
            "--out", str(tmp_path / "x"), "--format", "hdf5",
        )
        assert code == 2

    def test_tabulated_factor_end_to_end(self, tmp_path, capsys):
        import math

        # constant weight equal to the isotropic one: same field up to
        # the float gain multiply
        a = 2 * math.pi / math.sqrt(2 * math.pi)
        csv = tmp_path / "factor.csv"
        with open(csv, "w") as fh:
            fh.write("k_r_over_kappa,k_phi_rad,a_plus,a_minus\n")
            for i in range(5):
                for j in range(8):
                    fh.write(f"{i / 4},{2 * math.pi * j / 8},{a},{a}\n")
        out = tmp_path / "f.bin"
        code, _, _ = run_cli(
            capsys, "generate", "--aperture", "8,8", "--spacing", "0.5",
            "--seed", "2", "--factor", str(csv), "--out", str(out),
        )
        assert code == 0
        data = np.frombuffer(out.read_bytes()[24:], dtype="<c16").reshape(1, 1, 16, 16)
        want = generate(Aperture(lx=8, dx=0.5, ly=8, dy=0.5), seed=2).samples
        assert np.allclose(data[0], want, rtol=1e-12)

    def test_missing_factor_file(self, tmp_path, capsys):
        code, _, err = run_cli(
            capsys, "generate", "--aperture", "8", "--spacing", "0.5",
            "--factor", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "x.bin"),
        )
        assert code == 2
        assert "factor" in json.loads(err)["failures"][0]["detail"]


class TestVariancesCommand:
    def test_1d_csv(self, capsys):
        code, out, _ = run_cli(capsys, "variances", "--aperture", "4")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "l,m,sigma_sq"
        table = table_1d(4.0)
        assert len(lines) == 1 + len(table.ls) + 1
        l0, m0, s0 = lines[1].split(",")
        assert (int(l0), int(m0)) == (-4, 0)
        assert float(s0) == table.sigma_sq[0]
        assert lines[-1] == f"# total_power={table.total_power()!r}"

    def test_2d_csv_to_file(self, tmp_path, capsys):
        out = tmp_path / "var.csv"
        code, _, _ = run_cli(capsys, "variances", "--aperture", "4,4", "--out", str(out))
        assert code == 0
        lines = out.read_text().splitlines()
        t = table_2d(4.0, 4.0)
        assert len(lines) == 1 + len(t) + 1
        assert lines[-1].startswith("# total_power=")

    def test_non_integer_1d_rejected(self, capsys):
        code, _, err = run_cli(capsys, "variances", "--aperture", "4.5")
        assert code == 2
        assert "integer" in json.loads(err)["failures"][0]["detail"]

    def test_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli(capsys, "variances", "--aperture", "8,8", "--out", str(a))
        run_cli(capsys, "variances", "--aperture", "8,8", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()


class TestValidateCommand:
    def test_small_run_writes_artifacts(self, tmp_path, capsys):
        code, out, _ = run_cli(
            capsys, "validate", "--fig", "6", "--realizations", "300",
            "--seed", "2", "--out", str(tmp_path),
        )
        assert (tmp_path / "curve.csv").exists()
        assert (tmp_path / "report.json").exists()
        assert "fig 6" in out
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["pass"] == (code == 0)

    def test_bad_figure(self, capsys):
        code, _, err = run_cli(capsys, "validate", "--fig", "9")
        assert code == 2

    def test_failure_exit_and_report(self, capsys, monkeypatch, tmp_path):
        import holofading.cli as climod

        class FakeReport:
            fig = 6
            m = 100
            seed = 0
            rmse = 0.5
            max_abs_dev = 0.9
            passed = False
            z_consistency_max = None

            def to_json_dict(self):
                return {"fig": 6, "pass": False, "rmse": 0.5}

        monkeypatch.setattr(climod, "run_figure", lambda *a, **k: FakeReport())
        code, out, err = run_cli(capsys, "validate", "--fig", "6")
        assert code == 1
        assert "FAIL" in out
        failures = json.loads(err)["failures"]
        assert failures[0]["check"] == "fig6"

    def test_validate_byte_identical(self, tmp_path, capsys):
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        for d in (d1, d2):
            run_cli(capsys, "validate", "--fig", "6", "--realizations", "200",
                    "--seed", "3", "--out", str(d), "--threads", "2")
        assert (d1 / "curve.csv").read_bytes() == (d2 / "curve.csv").read_bytes()
        assert (d1 / "report.json").read_bytes() == (d2 / "report.json").read_bytes()


class TestCompareKlCommand:
    def test_small_run_csv(self, tmp_path, capsys):
        out = tmp_path / "kl.csv"
        code, text, _ = run_cli(
            capsys, "compare-kl", "--realizations", "400", "--seed", "1",
            "--out", str(out),
        )
        lines = out.read_text().splitlines()
        assert lines[0] == "lag_over_lambda,model_estimate,kl_estimate,closed_form"
        assert len(lines) == 1 + 65
        assert "compare-kl" in text

    def test_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run_cli(capsys, "compare-kl", "--realizations", "200", "--seed", "5",
                    "--out", str(path), "--threads", "2")
        assert a.read_bytes() == b.read_bytes()


class TestBench:
    def test_exponent_fit(self):
        from holofading.cli import fit_exponent

        sizes = [64, 128, 256, 512]
        times = [1e-3 * n for n in sizes]
        assert fit_exponent(sizes, times) == pytest.approx(1.0, abs=1e-12)
        times = [1e-6 * n * n for n in sizes]
        assert fit_exponent(sizes, times) == pytest.approx(2.0, abs=1e-12)

    def test_kl_size_cap(self, capsys):
        code, _, err = run_cli(capsys, "bench", "--kl-sizes", "8192")
        assert code == 2
        assert "4096" in json.loads(err)["failures"][0]["detail"]


class TestVersion:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
