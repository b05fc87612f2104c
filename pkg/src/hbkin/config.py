"""Batch-run configuration: TOML parsing, validation, object builders.

Validation errors always name the offending field path so batch failures
are actionable from logs alone.
"""

import os
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .collision import CollisionParams, mollify
from .errors import KineticsError
from .fields import WignerField
from .lattice import DispersionRelation, TorusGrid


def _fail(path, msg):
    raise KineticsError("config-error", f"{path}: {msg}")


def _get(tbl, path, key, default=None, required=False, cast=None, choices=None):
    if key not in tbl:
        if required:
            _fail(f"{path}.{key}", "missing required field")
        return default
    val = tbl[key]
    if cast is not None:
        try:
            val = cast(val)
        except (TypeError, ValueError):
            _fail(f"{path}.{key}", f"cannot interpret {val!r}")
    if choices is not None and val not in choices:
        _fail(f"{path}.{key}", f"{val!r} not one of {sorted(choices)}")
    return val


@dataclass
class RunConfig:
    """Fully resolved experiment description."""

    d: int
    N: int
    dispersion_kind: str
    dispersion_c: float
    dispersion_path: str
    epsilon: float
    backend: str
    pv_cutoff_mode: str
    kappa: float
    scheme: str
    dt: float
    t_end: float
    record_every: int
    truncation: bool
    initial_kind: str
    initial_w: float
    initial_path: str
    mollify_delta: float
    seed: int
    output_dir: str
    threads: int
    plots: bool
    extra: dict = field(default_factory=dict)  # per-subcommand sections

    def to_dict(self):
        out = {k: v for k, v in self.__dict__.items() if k != "extra"}
        out["extra"] = self.extra
        return out


def load_config(path, overrides=None):
    """Parse and validate a TOML run configuration."""
    if not os.path.exists(path):
        _fail("config", f"file not found: {path}")
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as err:
        _fail("config", f"TOML parse error: {err}")
    overrides = overrides or {}

    grid = raw.get("grid", {})
    d = _get(grid, "grid", "d", required=True, cast=int)
    N = _get(grid, "grid", "N", required=True, cast=int)
    if d not in (1, 2, 3):
        _fail("grid.d", f"{d} not in 1..3 (collision cost grows as N^(2d) per point)")
    if N < 4 or N % 2:
        _fail("grid.N", f"{N} must be even and >= 4")

    dsp = raw.get("dispersion", {})
    kind = _get(dsp, "dispersion", "kind", default="nearest-neighbor",
                choices={"nearest-neighbor", "tabulated"})
    c = _get(dsp, "dispersion", "c", default=0.0, cast=float)
    path_disp = _get(dsp, "dispersion", "path", default="")
    if kind == "tabulated":
        if not path_disp:
            _fail("dispersion.path", "required for tabulated dispersion")
        if not os.path.exists(path_disp):
            _fail("dispersion.path", f"file not found: {path_disp}")

    col = raw.get("collision", {})
    epsilon = _get(col, "collision", "epsilon", required=True, cast=float)
    if epsilon <= 0:
        _fail("collision.epsilon", f"{epsilon} must be > 0")
    backend = _get(col, "collision", "backend", default="direct",
                   choices={"direct", "spectral"})
    pv_mode = _get(col, "collision", "pv_cutoff_mode", default="lorentzian",
                   choices={"lorentzian", "sharp"})
    kappa = _get(col, "collision", "kappa", default=2.0, cast=float)

    ev = raw.get("evolve", {})
    scheme = _get(ev, "evolve", "scheme", default="rk4", choices={"rk4", "exp-duhamel"})
    dt = _get(ev, "evolve", "dt", default=0.01, cast=float)
    t_end = _get(ev, "evolve", "t_end", default=1.0, cast=float)
    record_every = _get(ev, "evolve", "record_every", default=1, cast=int)
    truncation = _get(ev, "evolve", "truncation", default=False, cast=bool)
    if dt <= 0:
        _fail("evolve.dt", f"{dt} must be > 0")
    if t_end < 0:
        _fail("evolve.t_end", f"{t_end} must be >= 0")
    if record_every < 1:
        _fail("evolve.record_every", f"{record_every} must be >= 1")

    init = raw.get("initial", {})
    initial_kind = _get(init, "initial", "kind", default="constant",
                        choices={"constant", "diagonal-file", "field-file", "polarized-bump"})
    initial_w = _get(init, "initial", "w", default=0.5, cast=float)
    initial_path = _get(init, "initial", "path", default="")
    if initial_kind == "constant" and not (0.0 <= initial_w <= 1.0):
        _fail("initial.w", f"{initial_w} not in [0, 1]")
    if initial_kind in ("diagonal-file", "field-file"):
        if not initial_path:
            _fail("initial.path", f"required for kind {initial_kind!r}")
        if not os.path.exists(initial_path):
            _fail("initial.path", f"file not found: {initial_path}")

    mollify_delta = _get(raw, "", "mollify_delta", default=0.0, cast=float)
    if mollify_delta and not (0.0 < mollify_delta < 0.5):
        _fail("mollify_delta", f"{mollify_delta} not in (0, 1/2)")

    seed = int(overrides.get("seed", _get(raw, "", "seed", default=0, cast=int)))
    output_dir = str(overrides.get("output", _get(raw, "", "output_dir", default="out")))
    threads = overrides.get("threads")
    if threads is None:
        threads = _get(raw, "", "threads", default=None, cast=int)
    if threads is None:
        threads = int(os.environ.get("HBK_THREADS", "0"))
    threads = int(threads)
    if threads == 0:
        threads = os.cpu_count() or 1
    plots = _get(raw, "", "plots", default=True, cast=bool)

    extra = {
        key: raw[key]
        for key in ("epsilon_study", "sigma_coll", "validate", "selftest")
        if key in raw
    }

    return RunConfig(
        d=d, N=N,
        dispersion_kind=kind, dispersion_c=c, dispersion_path=path_disp,
        epsilon=epsilon, backend=backend, pv_cutoff_mode=pv_mode, kappa=kappa,
        scheme=scheme, dt=dt, t_end=t_end, record_every=record_every,
        truncation=truncation,
        initial_kind=initial_kind, initial_w=initial_w, initial_path=initial_path,
        mollify_delta=mollify_delta,
        seed=seed, output_dir=output_dir, threads=threads, plots=plots,
        extra=extra,
    )


# ---------------------------------------------------------------------------
# builders

def build_grid(cfg):
    return TorusGrid(cfg.d, cfg.N)


def build_dispersion(cfg, grid):
    if cfg.dispersion_kind == "nearest-neighbor":
        return DispersionRelation.nearest_neighbor(grid, c=cfg.dispersion_c)
    from .io import read_dispersion_csv
    values = read_dispersion_csv(cfg.dispersion_path, grid)
    return DispersionRelation.tabulated(grid, values)


def build_params(cfg):
    return CollisionParams(
        epsilon=cfg.epsilon,
        backend=cfg.backend,
        pv_cutoff_mode=cfg.pv_cutoff_mode,
        kappa=cfg.kappa,
        threads=cfg.threads,
    )


def build_initial(cfg, grid):
    if cfg.initial_kind == "constant":
        W = WignerField.constant(grid, cfg.initial_w * np.eye(2))
    elif cfg.initial_kind == "polarized-bump":
        W = WignerField.polarized_bump(grid)
    elif cfg.initial_kind == "diagonal-file":
        from .io import read_diagonal_csv
        w_up, w_down = read_diagonal_csv(cfg.initial_path, grid)
        W = WignerField.diagonal(grid, w_up, w_down)
    else:
        from .io import read_snapshot
        W = read_snapshot(cfg.initial_path, expect=(grid.d, grid.N))
    if cfg.mollify_delta:
        W = mollify(W, cfg.mollify_delta)
    return W
