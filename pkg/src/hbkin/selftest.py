"""Built-in invariant suites, runnable as a batch command.

Each check exercises one structural property of the operators on a small
deterministic setup and reports a worst residual against its declared
threshold.  The energy-sum check is included even though it is known to
fail at any finite regulator: the smeared energy shell admits off-shell
collisions, so only the matrix (spin) sum vanishes identically on the
grid.  See the README section on conservation for the quantitative story.
"""

import numpy as np

from . import dispersion_validation as dv
from . import spin
from .collision import (
    CollisionOperator,
    CollisionParams,
    c0_trilinear,
    lorentz_bilinear,
    mollify,
    sigma_coll_map,
)
from .diagnostics import epsilon_study, fubini_swap_residual
from .evolution import IntegratorConfig, evolve, unitary_propagator
from .fields import WignerField
from .lattice import DispersionRelation, TorusGrid, propagator_field


class Check:
    def __init__(self, name, threshold, worst, detail=""):
        self.name = name
        self.threshold = threshold
        self.worst = worst
        self.detail = detail

    @property
    def ok(self):
        return self.worst <= self.threshold

    def line(self):
        status = "PASS" if self.ok else "FAIL"
        extra = f"  [{self.detail}]" if self.detail else ""
        return f"{status}  {self.name:34s} worst {self.worst:.3e}  (tol {self.threshold:.1e}){extra}"


def _setup(epsilon=0.3, N=12, d=1, backend="direct", seed=20240):
    rng = np.random.default_rng(seed)
    grid = TorusGrid(d, N)
    disp = DispersionRelation.nearest_neighbor(grid)
    op = CollisionOperator(disp, CollisionParams(epsilon=epsilon, backend=backend))
    W = WignerField.random_fermi(grid, rng, 0.05, 0.95)
    return rng, grid, disp, op, W


def run_selftest(epsilon=0.3, backend="direct", rng_seed=20240):
    """Run every invariant suite; returns the list of Check results."""
    rng, grid, disp, op, W = _setup(epsilon=epsilon, backend=backend, seed=rng_seed)
    checks = []

    # matrix algebra
    A = spin.hermitize(rng.normal(size=(200, 2, 2)) + 1j * rng.normal(size=(200, 2, 2)))
    checks.append(Check(
        "j-map involution and trace", 1e-14,
        float(np.max(np.abs(spin.j_transform(spin.j_transform(A)) - A))),
    ))
    lam, V = np.linalg.eigh(A)
    clip = np.einsum("nij,nj,nkj->nik", V, np.clip(lam, 0.0, 1.0), V.conj())
    checks.append(Check(
        "spectral clip vs abs formula", 1e-12,
        float(np.max(np.abs(spin.truncate(A) - clip))),
    ))
    checks.append(Check(
        "clip mirror identity", 1e-13,
        float(np.max(np.abs(spin.EYE2 - spin.truncate(A) - spin.truncate(spin.EYE2 - A)))),
    ))
    B = rng.normal(size=(3, 10000, 2, 2)) + 1j * rng.normal(size=(3, 10000, 2, 2))
    psd = B @ spin.dagger(B)
    checks.append(Check(
        "triple-product positivity", 1e-10,
        float(-np.min(spin.matrix_inequality_residual(psd[0], psd[1], psd[2]))),
    ))
    U = spin.unitary_exp(A, 0.37)
    checks.append(Check(
        "matrix exponential unitarity", 1e-13,
        float(np.max(np.abs(U @ spin.dagger(U) - spin.EYE2))),
    ))

    # lattice
    i = rng.integers(0, grid.n_points, size=200)
    j = rng.integers(0, grid.n_points, size=200)
    k3 = rng.integers(0, grid.n_points, size=200)
    k4 = grid.add(i, grid.sub(j, k3))
    closure = grid.multi[i] + grid.multi[j] - grid.multi[k3] - grid.multi[k4]
    checks.append(Check(
        "momentum closure", 0.0, float(np.max(np.abs(closure % grid.N))),
    ))
    checks.append(Check(
        "dispersion reflection symmetry", 0.0,
        float(np.max(np.abs(disp.values - disp.values[grid.neg(np.arange(grid.n_points))]))),
    ))
    p0 = propagator_field(0.0, disp)
    delta = np.zeros(grid.shape)
    delta[(0,) * grid.d] = 1.0
    checks.append(Check("propagator delta at t=0", 1e-14, float(np.max(np.abs(p0 - delta)))))
    pt = propagator_field(1.7, disp)
    pmt = propagator_field(-1.7, disp)
    checks.append(Check(
        "propagator time reflection", 1e-14, float(np.max(np.abs(pmt - pt.conj()))),
    ))

    # collision structure
    diss, gain, lossc, heff = op.parts(W)
    checks.append(Check(
        "mirror antisymmetry", 1e-12,
        float((op.full(W.tilde()) + op.full(W)).norm_inf()),
    ))
    checks.append(Check(
        "mirror symmetry of H_eff", 1e-12,
        float((op.h_eff(W.tilde()) - op.h_eff(W)).norm_inf()),
    ))
    checks.append(Check(
        "gain positivity", 1e-10,
        float(-np.min(spin.min_eig_hermitian(gain.data))),
    ))
    reassembled = gain.data - lossc.data @ W.data - W.data @ spin.dagger(lossc.data)
    checks.append(Check(
        "gain/loss reassembly", 1e-12, float(np.max(np.abs(diss.data - reassembled))),
    ))
    C = op.full(W)
    checks.append(Check(
        "grid spin-sum conservation", 1e-12,
        float(spin.hs_norm(grid.weight * np.sum(C.data, axis=0))),
    ))
    tr = np.trace(C.data, axis1=-2, axis2=-1).real
    checks.append(Check(
        "grid energy-sum conservation", 1e-12,
        float(abs(grid.weight * np.sum(disp.values * tr))),
        detail="known finite-regulator limitation, see README",
    ))

    # trilinear kernel
    w1 = rng.normal(size=grid.n_points) + 1j * rng.normal(size=grid.n_points)
    w2 = rng.normal(size=grid.n_points) + 1j * rng.normal(size=grid.n_points)
    w3 = rng.normal(size=grid.n_points) + 1j * rng.normal(size=grid.n_points)
    conj_resid = abs(
        c0_trilinear(w1.conj(), w2.conj(), w3.conj(), 0, disp, op.params.epsilon)
        - np.conj(c0_trilinear(w1, w2, w3, 0, disp, op.params.epsilon))
    )
    checks.append(Check("trilinear kernel conjugation", 1e-13, float(conj_resid)))

    # collision-mass map
    sig = (1, 1, -1, -1)
    alphas = np.arange(-6.0, 6.0, op.params.epsilon / 4.0)
    mass = sigma_coll_map(0, alphas, sig, disp, op.params.epsilon)
    checks.append(Check("mass map nonnegative", 0.0, float(-np.min(mass))))
    ones = np.ones(grid.n_points)
    i0 = lorentz_bilinear(ones, ones, sig, op.params.epsilon, 0, disp)
    checks.append(Check(
        "bilinear vs mass map", 1e-13,
        float(abs(i0 - np.pi * sigma_coll_map(0, 0.0, sig, disp, op.params.epsilon))),
    ))

    # iterated-sum identity
    fac = tuple(rng.normal(size=grid.n_points) + 1j * rng.normal(size=grid.n_points)
                for _ in range(4))
    rep = fubini_swap_residual(fac, sig, 0.4, disp, op.params.epsilon)
    checks.append(Check("iterated-sum swap", 1e-12, rep.max_residual))

    # mollifier
    Wm = mollify(W, 0.3)
    checks.append(Check("mollifier keeps Fermi", 1e-12, Wm.fermi_residual()))

    # regulator refinement
    profile = lambda g: WignerField.diagonal(
        g, 0.5 + 0.25 * np.cos(2 * np.pi * g.coords()[:, 0]),
        0.5 + 0.25 * np.cos(2 * np.pi * g.coords()[:, 0]))
    rep = epsilon_study(profile, [(16, 1.6), (32, 0.8), (64, 0.4)], "h_eff", d=1)
    checks.append(Check("regulator refinement cauchy", 1.0, rep.max_residual))

    # spectral backend
    ops = CollisionOperator(disp, CollisionParams(epsilon=op.params.epsilon, backend="spectral"))
    ref = op.diss(W)
    alt = ops.diss(W)
    checks.append(Check(
        "spectral backend agreement", 1e-6,
        float((alt - ref).norm_l2() / max(ref.norm_l2(), 1e-300)),
    ))

    # evolution structure
    Wc = WignerField.constant(grid, 0.5 * spin.EYE2)
    cfg = IntegratorConfig(dt=0.02, t_end=0.1)
    traj = evolve(Wc, op, cfg)
    checks.append(Check(
        "constant-state stationarity", 1e-10,
        float(max((f - Wc).norm_l2() for f in traj.fields)),
    ))
    cfg_d = IntegratorConfig(dt=0.02, t_end=0.1, scheme="exp-duhamel", truncation=True)
    traj_d = evolve(W, op, cfg_d)
    checks.append(Check(
        "positivity preservation", 1e-12,
        float(max(-min(np.min(spin.min_eig_hermitian(spin.hermitize(f.data))) for f in traj_d.fields), 0.0)),
    ))
    inner = WignerField.random_fermi(rng=np.random.default_rng(5), grid=grid, lo=0.1, hi=0.9)
    t_plain = evolve(inner, op, IntegratorConfig(dt=0.02, t_end=0.06))
    t_trunc = evolve(inner, op, IntegratorConfig(dt=0.02, t_end=0.06, truncation=True))
    checks.append(Check(
        "clipped dynamics match on interior states", 1e-12,
        float(max((a - b).norm_l2() for a, b in zip(t_plain.fields, t_trunc.fields))),
    ))
    hs = [WignerField.random_fermi(grid, rng) for _ in range(6)]
    U = unitary_propagator(hs, 0.05)
    checks.append(Check(
        "propagator unitarity", 1e-12,
        float(np.max(np.abs(U @ spin.dagger(U) - spin.EYE2))),
    ))

    # dispersivity machinery
    rs = np.linspace(0.0, 50.0, 26)
    dual = max(abs(dv.bessel_f(float(r)) - dv.bessel_f_series(float(r))) for r in rs)
    checks.append(Check("phase factor dual evaluation", 1e-10, float(dual)))
    fit_a = dv.pt_l3_decay(DispersionRelation.nearest_neighbor(TorusGrid(1, 256)), 40, samples=48, t_min=5)
    fit_b = dv.pt_l3_decay(DispersionRelation.nearest_neighbor(TorusGrid(1, 512)), 40, samples=96, t_min=5)
    rel = abs(fit_a.fitted_exponent - fit_b.fitted_exponent) / abs(fit_b.fitted_exponent)
    checks.append(Check("decay-fit stability", 0.05, float(rel)))

    return checks
