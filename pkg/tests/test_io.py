import numpy as np
import pytest

from aggdiff.grids import Density2D, RadialDensity
from aggdiff.io import (
    DIAGNOSTIC_COLUMNS,
    RunManifest,
    parse_config,
    read_density,
    write_density,
    write_diagnostics_csv,
)


def sample_2d():
    rng = np.random.default_rng(12)
    return Density2D(0.25, (-2.0, -1.0), rng.random((8, 16)))


def sample_radial():
    rng = np.random.default_rng(13)
    return RadialDensity(0.05, rng.random(40), dimension=2)


class TestDensityFiles:
    @pytest.mark.parametrize("suffix", [".csv", ".bin"])
    def test_2d_roundtrip(self, tmp_path, suffix):
        rho = sample_2d()
        path = tmp_path / f"density{suffix}"
        write_density(path, rho)
        back = read_density(path)
        assert isinstance(back, Density2D)
        assert back.dx == pytest.approx(rho.dx, rel=1e-15)
        assert back.origin[0] == pytest.approx(rho.origin[0], abs=1e-14)
        assert back.origin[1] == pytest.approx(rho.origin[1], abs=1e-14)
        assert np.allclose(back.values, rho.values, rtol=0, atol=1e-16)

    @pytest.mark.parametrize("suffix", [".csv", ".bin"])
    def test_radial_roundtrip(self, tmp_path, suffix):
        rho = sample_radial()
        path = tmp_path / f"profile{suffix}"
        write_density(path, rho)
        back = read_density(path)
        assert isinstance(back, RadialDensity)
        assert back.dr == pytest.approx(rho.dr, rel=1e-15)
        assert np.allclose(back.values, rho.values, rtol=0, atol=1e-16)

    def test_binary_roundtrip_bitexact(self, tmp_path):
        rho = sample_2d()
        path = tmp_path / "density.bin"
        write_density(path, rho)
        back = read_density(path)
        assert np.array_equal(back.values, rho.values)

    def test_header_required(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2,3\n")
        with pytest.raises(ValueError, match="header"):
            read_density(path)

    def test_write_read_determinism(self, tmp_path):
        rho = sample_2d()
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_density(p1, rho)
        write_density(p2, rho)
        assert p1.read_bytes() == p2.read_bytes()


class TestConfig:
    def test_flat_dotted_keys(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# evolution run\n"
            "m=2.0\n"
            "grid.n=256\n"
            "init.kind = gaussian\n"
            "init.sigma=0.9\n"
            "\n"
        )
        cfg = parse_config(path)
        assert cfg["m"] == "2.0"
        assert cfg["grid.n"] == "256"
        assert cfg["init.kind"] == "gaussian"

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("novalue\n")
        with pytest.raises(ValueError, match="key=value"):
            parse_config(path)


class TestDiagnosticsCsv:
    def test_column_order(self, tmp_path):
        from aggdiff.evolve import DiagnosticsRecord

        rec = DiagnosticsRecord(
            t=0.5, mass=1.0, com_x=0.1, com_y=-0.2, m2=1.5, logm=0.8,
            entropy=0.3, interaction=-0.1, energy=0.2, dissipation=0.01,
            rho_max=0.9, support_area=3.2,
        )
        path = tmp_path / "diag.csv"
        write_diagnostics_csv(path, [rec])
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(DIAGNOSTIC_COLUMNS)
        values = lines[1].split(",")
        assert float(values[0]) == 0.5
        assert float(values[4]) == 1.5
        assert float(values[-1]) == 3.2


class TestManifest:
    def test_hashes_recorded(self, tmp_path):
        src = tmp_path / "in.txt"
        src.write_text("payload")
        out = tmp_path / "out.txt"
        out.write_text("result")
        man = RunManifest("steady", {"m": "2"}).start()
        man.add_input(src)
        man.add_output(out)
        payload = man.finish(tmp_path / "manifest.json")
        assert str(src) in payload["inputs"]
        assert str(out) in payload["outputs"]
        assert payload["wall_clock_s"] >= 0.0
        assert (tmp_path / "manifest.json").exists()
