"""Time integration of the kinetic equation dW/dt = C[W].

Two schemes:

  rk4         classical 4-stage explicit step; no structural guarantees,
              order-4 accuracy, Hermiticity restored by symmetrization.
  exp-duhamel first-order step W <- E W E* + dt * gain, with
              E = exp(-dt (D + i H)) per grid point.  Both summands are
              positive semidefinite on Fermi input, so positivity is
              preserved structurally; the upper bound W <= 1 is monitored
              and, with the truncation flag, protected by evaluating the
              operator coefficients at the spectrally clipped state.

With the truncation flag, the operator argument is clipped into [0,1]
before evaluating gain, loss and the effective Hamiltonian, while the
evolved state itself enters the affine part untouched.  On states that
already satisfy 0 <= W <= 1 this coincides with the plain dynamics.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import spin
from .collision import sigma_coll_map
from .errors import KineticsError
from .fields import WignerField

log = logging.getLogger(__name__)

FERMI_ABORT = 0.1


@dataclass
class IntegratorConfig:
    dt: float
    t_end: float
    scheme: str = "rk4"
    truncation: bool = False
    record_every: int = 1

    def __post_init__(self):
        if self.scheme not in ("rk4", "exp-duhamel"):
            raise KineticsError("config-error", f"unknown scheme {self.scheme!r}")
        if self.dt <= 0 or self.t_end < 0:
            raise KineticsError("config-error", "need dt > 0 and t_end >= 0")
        if self.record_every < 1:
            raise KineticsError("config-error", "record_every must be >= 1")


@dataclass
class TrajectoryRecord:
    """Time series of states plus conserved-quantity diagnostics."""

    times: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    spin_total: list = field(default_factory=list)
    fermi_residual: list = field(default_factory=list)
    herm_residual: list = field(default_factory=list)
    status: str = "completed"

    def append(self, t, W, disp):
        self.times.append(float(t))
        self.fields.append(W.copy())
        self.energy.append(W.energy(disp))
        self.spin_total.append(W.mean_matrix())
        self.fermi_residual.append(W.fermi_residual())
        self.herm_residual.append(W.herm_residual())

    def __len__(self):
        return len(self.times)


def dt_stability_bound(op):
    """Explicit-step heuristic 0.1 / (1 + pi sup sigma_coll); advisory only."""
    n = op.grid.n_points
    sup = max(
        sigma_coll_map(k1, 0.0, (1, 1, -1, -1), op.disp, op.params.epsilon)
        for k1 in range(n)
    )
    return 0.1 / (1.0 + math.pi * sup)


def collision_rhs(op, W, truncation=False):
    """Right-hand side, optionally with the clipped operator argument."""
    if not truncation:
        return op.full(W)
    M = W.truncated()
    _, gain, lossc, heff = op.parts(M)
    data = (gain.data
            - lossc.data @ W.data - W.data @ spin.dagger(lossc.data)
            - 1j * spin.commutator(heff.data, W.data))
    return WignerField(op.grid, data)


def _check_step(W, label):
    r = W.fermi_residual()
    if r > FERMI_ABORT:
        raise KineticsError("dt-too-large", f"{label}: post-step Fermi residual {r:.3g}")
    return W


def rk4_step(W, op, cfg):
    """One classical Runge-Kutta step of the full collision operator."""
    dt = cfg.dt
    f = lambda V: collision_rhs(op, V, cfg.truncation)
    s1 = f(W)
    s2 = f(W + (0.5 * dt) * s1)
    s3 = f(W + (0.5 * dt) * s2)
    s4 = f(W + dt * s3)
    out = W + (dt / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4)
    return _check_step(out.hermitize(), "rk4")


def exp_duhamel_step(W, op, cfg):
    """One structure-preserving step W <- E W E* + dt gain.

    E W E* is a congruence and the gain term is positive semidefinite on
    Fermi (or clipped) coefficients, so positive input stays positive.
    """
    dt = cfg.dt
    M = W.truncated() if cfg.truncation else W
    _, gain, lossc, heff = op.parts(M)
    E = spin.expm_2x2(-dt * (lossc.data + 1j * heff.data))
    data = E @ W.data @ spin.dagger(E) + dt * gain.data
    return _check_step(WignerField(op.grid, data).hermitize(), "exp-duhamel")


_STEPPERS = {"rk4": rk4_step, "exp-duhamel": exp_duhamel_step}


def evolve(W0, op, cfg):
    """Integrate from t=0 to t_end, recording diagnostics along the way.

    Terminates early with status "constraint-violated" if the state drifts
    more than 0.1 outside 0 <= W <= 1, beyond which it is meaningless as a
    fermionic occupation.
    """
    bound = dt_stability_bound(op)
    if cfg.dt > bound:
        log.warning("dt=%.3g exceeds stability heuristic %.3g", cfg.dt, bound)
    step = _STEPPERS[cfg.scheme]
    traj = TrajectoryRecord()
    W = W0.hermitize()
    traj.append(0.0, W, op.disp)
    n_steps = int(round(cfg.t_end / cfg.dt))
    if abs(n_steps * cfg.dt - cfg.t_end) > 1e-9 * max(1.0, cfg.t_end):
        n_steps = math.ceil(cfg.t_end / cfg.dt)
    for i in range(1, n_steps + 1):
        try:
            W = step(W, op, cfg)
        except KineticsError as err:
            if err.code == "dt-too-large":
                log.warning("early termination at t=%.6g: %s", i * cfg.dt, err)
                traj.status = "constraint-violated"
                return traj
            raise
        if i % cfg.record_every == 0 or i == n_steps:
            traj.append(i * cfg.dt, W, op.disp)
            if traj.fermi_residual[-1] > FERMI_ABORT:
                traj.status = "constraint-violated"
                return traj
    return traj


def unitary_propagator(h_series, dt):
    """Ordered product of exponential factors for a time-sampled generator.

    h_series holds Hermitian fields at uniformly spaced times t_j = j dt.
    Returns the per-point unitary U(t,0) solving dU/ds = i U h(s), U(t,t)=1,
    via midpoint factors: U = exp(-i dt h_(M-1/2)) ... exp(-i dt h_(1/2)).
    For a time-constant generator this is exactly exp(-i t h).
    """
    mats = [h.data if isinstance(h, WignerField) else np.asarray(h) for h in h_series]
    if len(mats) < 1:
        raise KineticsError("empty-input", "need at least one sample")
    U = np.broadcast_to(spin.EYE2, mats[0].shape).copy()
    for j in range(len(mats) - 1):
        h_mid = 0.5 * (mats[j] + mats[j + 1])
        spin.require_hermitian(h_mid, what="generator")
        U = spin.unitary_exp(h_mid, -dt) @ U
    return U


@dataclass
class StabilityReport:
    times: list
    diff_norms: list
    ratios: list
    fitted_growth_rate: float
    initial_diff: float


def stability_vs_initial_data(W0, W0p, op, cfg):
    """Evolve two initial states and track their L2 distance.

    Reports ||W_t - W'_t||_2 / ||W_0 - W'_0||_2 and a fitted exponential
    growth rate C (least squares on log ratio), so the empirical bound
    ratio <= e^(C t) can be judged.
    """
    ta = evolve(W0, op, cfg)
    tb = evolve(W0p, op, cfg)
    m = min(len(ta), len(tb))
    d0 = (W0 - W0p).norm_l2()
    times, diffs, ratios = [], [], []
    for i in range(m):
        d = (ta.fields[i] - tb.fields[i]).norm_l2()
        times.append(ta.times[i])
        diffs.append(d)
        ratios.append(d / d0 if d0 > 0 else 0.0)
    if d0 > 0:
        t = np.array(times[1:])
        r = np.maximum(np.array(ratios[1:]), 1e-300)
        C = float(np.linalg.lstsq(t[:, None], np.log(r), rcond=None)[0][0]) if t.size else 0.0
    else:
        C = 0.0
    return StabilityReport(times, diffs, ratios, C, d0)
