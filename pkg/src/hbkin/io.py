"""File formats: field snapshots, trajectory CSV, tabulated-input CSV.

Snapshot layout (little-endian): magic "HBWF", version u32, d u32, N u32,
then N^d records of 8 float64 holding re/im of the 2x2 entries row-major.
CSV output carries 17 significant digits so downstream comparisons remain
meaningful at double precision; the resolved configuration is embedded as
a leading comment line for provenance.
"""

import csv
import json
import struct

import numpy as np

from .errors import KineticsError
from .fields import WignerField
from .lattice import TorusGrid

SNAPSHOT_MAGIC = b"HBWF"
SNAPSHOT_VERSION = 1


def write_snapshot(path, W):
    grid = W.grid
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIII", SNAPSHOT_MAGIC, SNAPSHOT_VERSION, grid.d, grid.N))
        flat = np.empty((grid.n_points, 8), dtype="<f8")
        entries = W.data.reshape(grid.n_points, 4)
        flat[:, 0::2] = entries.real
        flat[:, 1::2] = entries.imag
        flat.tofile(fh)


def read_snapshot(path, expect=None):
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) < 16:
            raise KineticsError("config-error", f"{path}: truncated snapshot header")
        magic, version, d, N = struct.unpack("<4sIII", header)
        if magic != SNAPSHOT_MAGIC:
            raise KineticsError("config-error", f"{path}: bad magic {magic!r}")
        if version != SNAPSHOT_VERSION:
            raise KineticsError("config-error", f"{path}: unsupported version {version}")
        if expect is not None and (d, N) != tuple(expect):
            raise KineticsError(
                "grid-mismatch", f"{path}: snapshot grid (d={d}, N={N}) != expected {expect}"
            )
        grid = TorusGrid(d, N)
        flat = np.fromfile(fh, dtype="<f8", count=grid.n_points * 8)
    if flat.size != grid.n_points * 8:
        raise KineticsError("config-error", f"{path}: truncated snapshot payload")
    flat = flat.reshape(grid.n_points, 8)
    data = (flat[:, 0::2] + 1j * flat[:, 1::2]).reshape(grid.n_points, 2, 2)
    return WignerField(grid, data)


def write_trajectory_csv(path, traj, config_dict=None):
    fmt = lambda x: f"{x:.17g}"
    with open(path, "w", newline="") as fh:
        if config_dict is not None:
            fh.write("# config: " + json.dumps(config_dict, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow([
            "t", "energy", "spin_00", "spin_11", "spin_01_re", "spin_01_im",
            "fermi_residual", "herm_residual",
        ])
        for i, t in enumerate(traj.times):
            s = traj.spin_total[i]
            writer.writerow([
                fmt(t), fmt(traj.energy[i]),
                fmt(s[0, 0].real), fmt(s[1, 1].real),
                fmt(s[0, 1].real), fmt(s[0, 1].imag),
                fmt(traj.fermi_residual[i]), fmt(traj.herm_residual[i]),
            ])


def write_report_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return str(obj)


def _read_indexed_csv(path, grid, value_columns):
    """Rows j1..jd,<values>; exactly one row per grid point required."""
    want_header = [f"j{a + 1}" for a in range(grid.d)] + list(value_columns)
    out = np.full((grid.n_points, len(value_columns)), np.nan)
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != want_header:
            raise KineticsError(
                "config-error",
                f"{path}: header must be {','.join(want_header)}",
            )
        count = 0
        for row in reader:
            if not row:
                continue
            j = [int(x) for x in row[: grid.d]]
            if any(not 0 <= jj < grid.N for jj in j):
                raise KineticsError("config-error", f"{path}: index {j} out of range")
            flat = 0
            for jj in j:
                flat = flat * grid.N + jj
            out[flat] = [float(x) for x in row[grid.d:]]
            count += 1
    if count != grid.n_points or np.isnan(out).any():
        raise KineticsError(
            "config-error",
            f"{path}: need exactly one row per grid point ({grid.n_points}), got {count}",
        )
    return out


def read_dispersion_csv(path, grid):
    """Tabulated dispersion: header j1,...,jd,omega, N^d rows."""
    return _read_indexed_csv(path, grid, ["omega"])[:, 0]


def read_diagonal_csv(path, grid):
    """Two-component diagonal occupation: header j1,...,jd,w_up,w_down."""
    vals = _read_indexed_csv(path, grid, ["w_up", "w_down"])
    return vals[:, 0], vals[:, 1]
