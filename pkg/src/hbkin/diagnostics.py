"""Quantitative checks of the operator's structural properties.

Every check returns a DiagnosticsReport carrying the residual series, the
declared tolerance, and a pass/fail verdict, so thresholds stay auditable
in serialized output.
"""

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import spin
from .collision import CollisionOperator, CollisionParams, eps_floor, lorentzian_delta
from .errors import KineticsError
from .fields import WignerField
from .lattice import DispersionRelation, TorusGrid, check_sign_vector, swap_sign_vectors

DEFAULT_EXACT_TOL = 1e-12


@dataclass
class DiagnosticsReport:
    name: str
    tolerance: float
    series: list = dc_field(default_factory=list)  # (parameter, residual) pairs
    metadata: dict = dc_field(default_factory=dict)

    @property
    def verdict(self):
        return "pass" if all(r <= self.tolerance for _, r in self.series) else "fail"

    @property
    def max_residual(self):
        return max((r for _, r in self.series), default=0.0)

    def to_dict(self):
        return {
            "name": self.name,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "series": [{"param": str(p), "residual": float(r)} for p, r in self.series],
            "metadata": self.metadata,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def fermi_residual(W, tol_herm=spin.TOL_HERM):
    """Worst violation of the matrix constraint 0 <= W <= 1 over the grid."""
    spin.require_hermitian(W.data, tol_herm, what="field")
    return W.fermi_residual()


def conservation_report(trajectory, tolerance=1e-8):
    """Drift of the energy and total-spin functionals along a trajectory.

    Energy drift is relative to max(1, |energy(0)|); spin drift is the
    Hilbert-Schmidt distance of the mean matrix from its initial value.
    """
    if len(trajectory) == 0:
        raise KineticsError("empty-input", "empty trajectory")
    e0 = trajectory.energy[0]
    s0 = trajectory.spin_total[0]
    e_res = max(abs(e - e0) for e in trajectory.energy) / max(1.0, abs(e0))
    s_res = max(float(spin.hs_norm(s - s0)) for s in trajectory.spin_total)
    return DiagnosticsReport(
        "conservation",
        tolerance,
        [("energy", e_res), ("spin", s_res)],
        {"t_end": trajectory.times[-1], "samples": len(trajectory), "status": trajectory.status},
    )


def symmetry_residual(W, op, tolerance=DEFAULT_EXACT_TOL):
    """Mirror antisymmetry: C[1-W] = -C[W] and H_eff[1-W] = H_eff[W]."""
    Wt = W.tilde()
    c_res = (op.full(Wt) + op.full(W)).norm_inf()
    h_res = (op.h_eff(Wt) - op.h_eff(W)).norm_inf()
    return DiagnosticsReport(
        "mirror-symmetry",
        tolerance,
        [("collision", c_res), ("h_eff", h_res)],
        {"epsilon": op.params.epsilon, "N": op.grid.N, "d": op.grid.d},
    )


# ---------------------------------------------------------------------------
# iterated-sum (Fubini) identity

def _nu_weighted_sum(G_of, k_base, sigma, alpha, disp, epsilon):
    """(1/pi) N^-2d sum_{a,b} G_of(a, b, a+b+base...) L(Omega~ - alpha).

    G_of(a_idx, b_idx, k4_idx) must return the (n, n) integrand values.
    """
    grid = disp.grid
    diff = grid.diff_table()
    k4 = grid.add(np.asarray(k_base), diff)
    om = disp.values
    omt = (sigma[0] * om[k_base] + sigma[1] * om[:, None]
           + sigma[2] * om[None, :] + sigma[3] * om[k4])
    L = lorentzian_delta(omt - alpha, epsilon)
    n = grid.n_points
    a = np.arange(n)
    vals = G_of(a[:, None], a[None, :], k4)
    return np.sum(L * vals) * grid.weight**2 / np.pi


def fubini_swap_residual(G, sigma, alpha, disp, epsilon, tolerance=DEFAULT_EXACT_TOL):
    """Agreement of the four iterated sums over the collision measure.

    G is either an (n, n, n, n) array over flat grid indices or a tuple of
    four (n,) factor arrays for a separable test function.  On the grid the
    four iterated sums are related by exact reindexing, so they must agree
    to roundoff for any G.
    """
    sigma = check_sign_vector(sigma)
    s2, s3, s4 = swap_sign_vectors(sigma)
    grid = disp.grid
    n = grid.n_points
    neg = grid.neg(np.arange(n))

    if isinstance(G, tuple):
        a_, b_, c_, e_ = (np.asarray(x, dtype=complex) for x in G)
        if any(x.shape != (n,) for x in (a_, b_, c_, e_)):
            raise KineticsError("grid-mismatch", "separable factor shape mismatch")
        G_eval = lambda i1, i2, i3, i4: a_[i1] * b_[i2] * c_[i3] * e_[i4]
    else:
        G = np.asarray(G, dtype=complex)
        if G.shape != (n, n, n, n):
            raise KineticsError("grid-mismatch", f"G shape {G.shape} != {(n,) * 4}")
        G_eval = lambda i1, i2, i3, i4: G[i1, i2, i3, i4]

    def iterated(sig, outer_to_args):
        total = 0.0 + 0.0j
        for kb in range(n):
            total += _nu_weighted_sum(
                lambda a, b, k4, kb=kb: G_eval(*outer_to_args(kb, a, b, k4)),
                kb, sig, alpha, disp, epsilon,
            )
        return total * grid.weight

    vals = [
        iterated(sigma, lambda kb, a, b, k4: (np.full_like(a, kb), a, b, k4)),
        iterated(s2, lambda kb, a, b, k4: (a, np.full_like(a, kb), b, k4)),
        iterated(s3, lambda kb, a, b, k4: (b, neg[a], np.full_like(a, kb), neg[k4])),
        iterated(s4, lambda kb, a, b, k4: (b, neg[a], neg[k4], np.full_like(a, kb))),
    ]
    resid = max(abs(x - y) for x in vals for y in vals)
    return DiagnosticsReport(
        "iterated-sum-swap",
        tolerance,
        [("max-pairwise", resid)],
        {
            "alpha": alpha, "epsilon": epsilon, "sigma": list(sigma),
            "values": [[float(v.real), float(v.imag)] for v in vals],
        },
    )


# ---------------------------------------------------------------------------
# regulator-refinement study

def _restrict(field_fine, grid_coarse):
    """Restrict a field on a refining grid to the coarse subgrid."""
    gf = field_fine.grid
    if gf.N % grid_coarse.N != 0 or gf.d != grid_coarse.d:
        raise KineticsError("grid-mismatch", f"N={gf.N} does not refine N={grid_coarse.N}")
    r = gf.N // grid_coarse.N
    flat = gf._encode(grid_coarse.multi * r)
    return WignerField(grid_coarse, field_fine.data[flat])


def epsilon_study(
    subject,
    schedule,
    op_name="h_eff",
    *,
    dispersion=("nearest-neighbor", 0.0),
    d=1,
    disp=None,
    backend="direct",
    kappa=2.0,
    slack=0.10,
    cross_mode_factor=2.0,
):
    """Cauchy behavior of an operator under regulator refinement.

    Two modes:
      * fixed grid: subject is a WignerField (give its DispersionRelation
        as `disp`) and schedule is a decreasing list of regulator values,
        all of which must stay above the grid's resolution floor
        ("bad-schedule" otherwise);
      * paired refinement: subject is a callable grid -> WignerField and
        schedule is a list of (N, eps) pairs with N increasing, so the
        regulator can shrink while the grid keeps resolving it.  The
        dispersion is rebuilt per grid from the (kind, c) pair.

    The report's residuals are normalized so that 1.0 is the pass
    threshold: consecutive L2 increments must be non-increasing within the
    stated slack and, for the principal value operator, the sharp-cutoff
    variant must agree with the Lorentzian one within cross_mode_factor
    times the last increment.  Raw increments live in the metadata.
    """
    if op_name not in ("h_eff", "c_diss"):
        raise KineticsError("config-error", f"unknown operator {op_name!r}")
    paired = callable(subject)

    def make(N, eps, pv_mode="lorentzian"):
        if paired:
            grid = TorusGrid(d, N)
            dsp = DispersionRelation(grid, dispersion[0], c=dispersion[1])
            W = subject(grid)
        else:
            W, dsp = subject, disp
            if dsp is None:
                raise KineticsError("config-error", "fixed-grid mode needs disp=")
            if eps < eps_floor(dsp, kappa):
                raise KineticsError(
                    "bad-schedule",
                    f"eps={eps} below floor {eps_floor(dsp, kappa):.4g} on fixed N={W.grid.N}",
                )
        params = CollisionParams(epsilon=eps, backend=backend, pv_cutoff_mode=pv_mode, kappa=kappa)
        op = CollisionOperator(dsp, params)
        return op.h_eff(W) if op_name == "h_eff" else op.diss(W)

    if paired:
        entries = [(int(N), float(e)) for N, e in schedule]
    else:
        entries = [(subject.grid.N, float(e)) for e in schedule]

    outputs = [make(N, e) for N, e in entries]
    diffs = []
    for (N0, e0), (N1, e1), f0, f1 in zip(entries, entries[1:], outputs, outputs[1:]):
        if f1.grid.N != f0.grid.N:
            f1 = _restrict(f1, f0.grid)
        diffs.append((f"eps {e0:g}->{e1:g}", (f0 - f1).norm_l2()))

    series = []
    for (pa, a), (pb, b) in zip(diffs, diffs[1:]):
        ratio = b / a if a > 0 else (0.0 if b == 0 else np.inf)
        series.append((f"increment ratio [{pa}]/[{pb}]", ratio / (1.0 + slack)))
    meta = {
        "schedule": entries,
        "operator": op_name,
        "slack": slack,
        "increments": [(p, float(v)) for p, v in diffs],
    }
    if op_name == "h_eff" and diffs:
        N_last, e_last = entries[-1]
        sharp = make(N_last, e_last, pv_mode="sharp")
        f_last = outputs[-1]
        cross = (f_last - sharp).norm_l2()
        meta["cross_mode_diff"] = cross
        bound = cross_mode_factor * diffs[-1][1]
        series.append(("cross-mode ratio", cross / bound if bound > 0 else np.inf))
    return DiagnosticsReport("epsilon-refinement", 1.0, series, meta)
