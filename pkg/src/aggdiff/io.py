"""File formats: density CSV/binary, flat key=value configs, diagnostics CSV.

The 2D density layout is fixed: a header line
``# agdiff-density v1 d=<dim> dx=<dx> nx=<nx> ny=<ny>`` followed by
``x,y,value`` rows in row-major order.  Radial profiles reuse the header
with ny=0 and two-column ``r,value`` rows.  The binary twin starts with
magic ``AGD1``, then little-endian u32 d, nx, ny, f64 dx and origin, then
row-major f64 values.
"""

from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from .grids import Density2D, RadialDensity

__all__ = [
    "write_density",
    "read_density",
    "parse_config",
    "write_diagnostics_csv",
    "DIAGNOSTIC_COLUMNS",
    "RunManifest",
]

_MAGIC = b"AGD1"

DIAGNOSTIC_COLUMNS = (
    "t",
    "mass",
    "com_x",
    "com_y",
    "m2",
    "logm",
    "entropy",
    "interaction",
    "energy",
    "dissipation",
    "rho_max",
    "support_area",
)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_density(path: str | Path, density: Density2D | RadialDensity) -> None:
    path = Path(path)
    if path.suffix in (".bin", ".agd"):
        _write_binary(path, density)
    else:
        _write_csv(path, density)


def read_density(path: str | Path) -> Density2D | RadialDensity:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == _MAGIC:
        return _read_binary(path)
    return _read_csv(path)


def _write_csv(path: Path, density) -> None:
    lines = []
    if isinstance(density, RadialDensity):
        lines.append(
            f"# agdiff-density v1 d={density.dimension} dx={_fmt(density.dr)} nx={density.n} ny=0"
        )
        for r, v in zip(density.r, density.values):
            lines.append(f"{_fmt(r)},{_fmt(v)}")
    else:
        lines.append(f"# agdiff-density v1 d=2 dx={_fmt(density.dx)} nx={density.nx} ny={density.ny}")
        xs, ys = density.x, density.y
        for j in range(density.ny):
            for i in range(density.nx):
                lines.append(f"{_fmt(xs[i])},{_fmt(ys[j])},{_fmt(density.values[j, i])}")
    path.write_text("\n".join(lines) + "\n")


def _read_csv(path: Path):
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# agdiff-density v1"):
            raise ValueError(f"{path}: missing agdiff-density header")
        meta = dict(tok.split("=") for tok in header.split()[3:])
        d = int(meta["d"])
        dx = float(meta["dx"])
        nx = int(meta["nx"])
        ny = int(meta["ny"])
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if ny == 0:
        return RadialDensity(dx, data[:, 1], dimension=d)
    values = data[:, 2].reshape(ny, nx)
    origin = (data[0, 0] - dx / 2.0, data[0, 1] - dx / 2.0)
    return Density2D(dx, origin, values)


def _write_binary(path: Path, density) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        if isinstance(density, RadialDensity):
            fh.write(struct.pack("<III", density.dimension, density.n, 0))
            fh.write(struct.pack("<ddd", density.dr, 0.0, 0.0))
            fh.write(np.ascontiguousarray(density.values, dtype="<f8").tobytes())
        else:
            fh.write(struct.pack("<III", 2, density.nx, density.ny))
            fh.write(struct.pack("<ddd", density.dx, density.origin[0], density.origin[1]))
            fh.write(np.ascontiguousarray(density.values, dtype="<f8").tobytes())


def _read_binary(path: Path):
    raw = path.read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: bad magic")
    d, nx, ny = struct.unpack_from("<III", raw, 4)
    dx, x0, y0 = struct.unpack_from("<ddd", raw, 16)
    values = np.frombuffer(raw, dtype="<f8", offset=40)
    if ny == 0:
        return RadialDensity(dx, np.array(values[:nx]), dimension=d)
    return Density2D(dx, (x0, y0), np.array(values[: nx * ny]).reshape(ny, nx))


def parse_config(path: str | Path) -> dict[str, str]:
    """Flat key=value config with # comments; dotted keys allowed."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def write_diagnostics_csv(path: str | Path, records) -> None:
    lines = [",".join(DIAGNOSTIC_COLUMNS)]
    for rec in records:
        lines.append(",".join(_fmt(getattr(rec, name)) for name in DIAGNOSTIC_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


@dataclass
class RunManifest:
    """Record of one CLI invocation: config, file hashes, timing."""

    command: str
    config: dict
    inputs: dict[str, str] = dataclass_field(default_factory=dict)
    outputs: dict[str, str] = dataclass_field(default_factory=dict)
    wall_clock_s: float = 0.0
    tool_version: str = "0.1.0"

    _t0: float = dataclass_field(default=0.0, repr=False)

    def start(self) -> "RunManifest":
        self._t0 = time.perf_counter()
        return self

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, path: str | Path) -> None:
        self.outputs[str(path)] = sha256_file(path)

    def finish(self, path: str | Path | None = None) -> dict:
        self.wall_clock_s = time.perf_counter() - self._t0 if self._t0 else 0.0
        payload = {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "wall_clock_s": self.wall_clock_s,
            "tool_version": self.tool_version,
        }
        if path is not None:
            Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return payload
