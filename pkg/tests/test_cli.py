import csv
import json

import numpy as np
import pytest

from hbkin import TorusGrid
from hbkin.cli import main
from hbkin.errors import KineticsError
from hbkin.io import (
    read_diagonal_csv,
    read_dispersion_csv,
    read_snapshot,
    write_snapshot,
)

from _helpers import setup


BASE = """
[grid]
d = 1
N = 16

[collision]
epsilon = 0.3

[evolve]
scheme = "rk4"
dt = 0.05
t_end = 0.2

[initial]
kind = "constant"
w = 0.5

seed = 7
"""


def write_cfg(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_traj(path):
    rows = []
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    for row in csv.DictReader(lines):
        rows.append({k: float(v) for k, v in row.items()})
    return rows


def test_simulate_constant_initial_data(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--output", str(out)]) == 0
    rows = read_traj(out / "trajectory.csv")
    energies = [r["energy"] for r in rows]
    assert max(abs(e - energies[0]) for e in energies) < 1e-10
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "completed"
    assert report["config"]["N"] == 16
    assert (out / "trajectory.png").exists()
    snaps = sorted((out / "snapshots").iterdir())
    assert len(snaps) == len(rows)
    W = read_snapshot(snaps[0])
    assert W.grid.N == 16


def test_simulate_embeds_config_in_csv(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    out = tmp_path / "out"
    main(["simulate", "--config", cfg, "--output", str(out)])
    first = (out / "trajectory.csv").read_text().splitlines()[0]
    assert first.startswith("# config:")
    assert json.loads(first[len("# config:"):])["epsilon"] == 0.3


def test_simulate_polarized_bump_duhamel_keeps_fermi(tmp_path):
    cfg = write_cfg(tmp_path, """
[grid]
d = 1
N = 16

[collision]
epsilon = 0.3

[evolve]
scheme = "exp-duhamel"
dt = 0.025
t_end = 1.0
record_every = 4
truncation = true

[initial]
kind = "polarized-bump"

seed = 3
""")
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--output", str(out)]) == 0
    rows = read_traj(out / "trajectory.csv")
    assert rows[-1]["t"] == pytest.approx(1.0)
    assert max(r["fermi_residual"] for r in rows) < 1e-6


def test_missing_dispersion_file_names_field(tmp_path, capsys):
    cfg = write_cfg(tmp_path, """
[grid]
d = 1
N = 16

[dispersion]
kind = "tabulated"
path = "no-such-file.csv"

[collision]
epsilon = 0.3
""")
    code = main(["simulate", "--config", cfg, "--output", str(tmp_path / "o")])
    assert code == 2
    assert "dispersion.path" in capsys.readouterr().err


def test_bad_scheme_and_missing_epsilon(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE.replace('scheme = "rk4"', 'scheme = "euler"'))
    assert main(["simulate", "--config", cfg]) == 2
    assert "evolve.scheme" in capsys.readouterr().err
    cfg2 = write_cfg(tmp_path, BASE.replace("epsilon = 0.3", ""), name="r2.toml")
    assert main(["simulate", "--config", cfg2]) == 2
    assert "collision.epsilon" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "absent.toml")]) == 2


def test_threads_do_not_change_output(tmp_path):
    cfg = write_cfg(tmp_path, BASE.replace('kind = "constant"', 'kind = "polarized-bump"'))
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["simulate", "--config", cfg, "--output", str(out1), "--threads", "1"]) == 0
    assert main(["simulate", "--config", cfg, "--output", str(out2), "--threads", "4"]) == 0
    a = (out1 / "trajectory.csv").read_text()
    b = (out2 / "trajectory.csv").read_text()
    # identical modulo the embedded thread count in the config comment
    assert a.splitlines()[1:] == b.splitlines()[1:]


def test_selftest_reports_known_energy_limitation(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE)
    code = main(["selftest", "--config", cfg, "--output", str(tmp_path / "st")])
    text = capsys.readouterr().out
    lines = [ln for ln in text.splitlines() if ln.startswith(("PASS", "FAIL"))]
    failing = [ln for ln in lines if ln.startswith("FAIL")]
    # exactly one failing suite: the finite-regulator energy sum
    assert len(failing) == 1 and "energy-sum" in failing[0]
    assert code == 1
    payload = json.loads((tmp_path / "st" / "selftest.json").read_text())
    assert payload["failures"] == 1


def test_sigma_coll_command_normalization(tmp_path):
    cfg = write_cfg(tmp_path, """
[grid]
d = 1
N = 32

[collision]
epsilon = 0.2

[initial]
kind = "constant"
w = 0.5

[sigma_coll]
k1 = [0, 5]
""")
    out = tmp_path / "sc"
    assert main(["sigma-coll", "--config", cfg, "--output", str(out)]) == 0
    payload = json.loads((out / "sigma_coll.json").read_text())
    for val in payload["integrals"].values():
        assert abs(val - 1.0) < 1e-3
    header = (out / "sigma_coll.csv").read_text().splitlines()[1]
    assert header == "alpha,mass_k0,mass_k5"
    assert (out / "sigma_coll.png").exists()


def test_epsilon_study_command_paired(tmp_path):
    cfg = write_cfg(tmp_path, """
[grid]
d = 1
N = 16

[collision]
epsilon = 0.4

[initial]
kind = "polarized-bump"

[epsilon_study]
pairs = [[16, 1.6], [32, 0.8], [64, 0.4]]
op = "h_eff"
""")
    out = tmp_path / "es"
    assert main(["epsilon-study", "--config", cfg, "--output", str(out)]) == 0
    payload = json.loads((out / "epsilon_study.json").read_text())
    assert payload["report"]["verdict"] == "pass"
    assert (out / "epsilon_study.csv").exists()


def test_validate_dispersion_command(tmp_path):
    cfg = write_cfg(tmp_path, """
[grid]
d = 1
N = 16

[collision]
epsilon = 0.3

[validate]
axis_N = 128
t_max = 25
samples = 24
t_min = 4
s_boxes = [1.5, 3.0]
points_per_shell = 256
""")
    out = tmp_path / "vd"
    assert main(["validate-dispersion", "--config", cfg, "--output", str(out)]) == 0
    payload = json.loads((out / "validate.json").read_text())
    assert "fitted_exponent" in payload["propagator_decay"]
    assert payload["phase_factor_bound"]["c1"] <= 1.3
    assert (out / "propagator_decay.png").exists()
    assert (out / "integrability.png").exists()


# ---------------------------------------------------------------------------
# file formats

def test_snapshot_roundtrip(tmp_path):
    _, grid, disp, W = setup(N=8, seed=90)
    path = tmp_path / "w.hbwf"
    write_snapshot(path, W)
    back = read_snapshot(path)
    assert back.grid.d == 1 and back.grid.N == 8
    np.testing.assert_array_equal(back.data, W.data)


def test_snapshot_header_validation(tmp_path):
    path = tmp_path / "bad.hbwf"
    path.write_bytes(b"XXXX" + b"\x00" * 12)
    with pytest.raises(KineticsError):
        read_snapshot(path)
    _, grid, disp, W = setup(N=8)
    good = tmp_path / "good.hbwf"
    write_snapshot(good, W)
    with pytest.raises(KineticsError) as err:
        read_snapshot(good, expect=(2, 8))
    assert err.value.code == "grid-mismatch"


def test_dispersion_csv_roundtrip(tmp_path):
    grid = TorusGrid(2, 4)
    path = tmp_path / "disp.csv"
    rng = np.random.default_rng(0)
    vals = rng.normal(size=16)
    with open(path, "w") as fh:
        fh.write("j1,j2,omega\n")
        for i in range(16):
            j = grid.multi[i]
            fh.write(f"{j[0]},{j[1]},{vals[i]:.17g}\n")
    out = read_dispersion_csv(path, grid)
    np.testing.assert_allclose(out, vals)


def test_dispersion_csv_row_count_enforced(tmp_path):
    grid = TorusGrid(1, 8)
    path = tmp_path / "disp.csv"
    with open(path, "w") as fh:
        fh.write("j1,omega\n")
        for i in range(7):
            fh.write(f"{i},0.0\n")
    with pytest.raises(KineticsError) as err:
        read_dispersion_csv(path, grid)
    assert "one row per grid point" in str(err.value)


def test_diagonal_csv(tmp_path):
    grid = TorusGrid(1, 4)
    path = tmp_path / "init.csv"
    with open(path, "w") as fh:
        fh.write("j1,w_up,w_down\n")
        for i in range(4):
            fh.write(f"{i},{0.1 * i},{0.9 - 0.1 * i}\n")
    up, down = read_diagonal_csv(path, grid)
    np.testing.assert_allclose(up, [0.0, 0.1, 0.2, 0.3])
    np.testing.assert_allclose(down, [0.9, 0.8, 0.7, 0.6])


def test_field_file_initial_data(tmp_path):
    _, grid, disp, W = setup(N=16, seed=91)
    snap = tmp_path / "w0.hbwf"
    write_snapshot(snap, W)
    cfg = write_cfg(tmp_path, BASE.replace(
        '[initial]\nkind = "constant"\nw = 0.5',
        f'[initial]\nkind = "field-file"\npath = "{snap}"'))
    out = tmp_path / "ff"
    assert main(["simulate", "--config", cfg, "--output", str(out)]) == 0
    first = read_snapshot(out / "snapshots" / "state_000000.hbwf")
    np.testing.assert_allclose(first.data, (W.data + np.conj(np.swapaxes(W.data, 1, 2))) / 2,
                               atol=1e-15)
