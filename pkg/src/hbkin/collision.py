"""Regularized collision operators on the discrete torus.

The dissipative part, its gain/loss split, the effective Hamiltonian and
the commutator (Vlasov-type) part are all double sums over (k2, k3) with
k4 = k1 + k2 - k3 eliminated exactly by index arithmetic, weighted by a
regularized energy kernel:

    energy delta : eps / (x^2 + eps^2)          (Lorentzian, x = omega sum)
    principal val: x / (x^2 + eps^2)            (default)
                   1{|x| >= eps} / x            (sharp cutoff, cross-check)

Everything reduces to two matrix-valued inner sums per output point,

    A[K](k1) = N^-2d sum_{k2,k3} K(omu) W(k3) J[(1-W)(k2) W(k4)]
    C[K](k1) = N^-2d sum_{k2,k3} K(omu) (1-W)(k3) J[W(k2) (1-W)(k4)]

from which (using Hermiticity of W)

    dissipative = (1-W1) A[L] + A[L]^* (1-W1) - W1 C[L] - C[L]^* W1
    gain        = A[L] + A[L]^*
    loss        = A[L]^* + C[L]^*
    eff. Ham.   = -1/2 (A[P] + A[P]^* + C[P] + C[P]^*)

with L the Lorentzian and P the principal-value kernel.  The production
effective Hamiltonian uses the shorter, algebraically equivalent form
built from J[W4 - W2] and J[W2 (1-W4) + (1-W4) W2]; the four-term variant
stays available for equality testing.

Summation order is fixed (lexicographic over (k2, k3), numpy pairwise
reduction), so results are bit-identical for a given input regardless of
the thread count used to distribute output points.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import spin
from .errors import KineticsError
from .fields import WignerField
from .lattice import check_sign_vector

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# kernels

def lorentzian_delta(x, eps):
    """eps / (x^2 + eps^2); pi times this approximates the energy delta."""
    if eps <= 0:
        raise KineticsError("bad-regulator", f"epsilon={eps} must be > 0")
    x = np.asarray(x, dtype=float)
    return eps / (x * x + eps * eps)


def pv_kernel(x, eps):
    """x / (x^2 + eps^2); odd regularization of 1/x."""
    if eps <= 0:
        raise KineticsError("bad-regulator", f"epsilon={eps} must be > 0")
    x = np.asarray(x, dtype=float)
    return x / (x * x + eps * eps)


def sharp_pv_kernel(x, eps):
    """1{|x| >= eps} / x; the sharp-cutoff principal value."""
    if eps <= 0:
        raise KineticsError("bad-regulator", f"epsilon={eps} must be > 0")
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    mask = np.abs(x) >= eps
    out[mask] = 1.0 / x[mask]
    return out


def eps_floor(disp, kappa=2.0):
    """Smallest regulator the grid resolves, kappa * L_omega / N.

    Below this the Lorentzian spans fewer than ~kappa discrete energy
    levels and the quadrature no longer approximates the collision measure.
    """
    return kappa * disp.lipschitz_bound() / disp.grid.N


@dataclass
class CollisionParams:
    """Regulator and backend selection for the collision operators."""

    epsilon: float
    backend: str = "direct"
    pv_cutoff_mode: str = "lorentzian"
    kappa: float = 2.0
    s_max: float = None  # spectral backend: override time-integral cutoff
    panel_points: int = 8  # spectral backend: Gauss nodes per oscillation panel
    threads: int = 1

    def __post_init__(self):
        if self.epsilon <= 0:
            raise KineticsError("bad-regulator", f"epsilon={self.epsilon} must be > 0")
        if self.backend not in ("direct", "spectral"):
            raise KineticsError("config-error", f"unknown backend {self.backend!r}")
        if self.pv_cutoff_mode not in ("lorentzian", "sharp"):
            raise KineticsError("config-error", f"unknown pv mode {self.pv_cutoff_mode!r}")


# ---------------------------------------------------------------------------
# hot-loop helpers: matrix fields as 4-tuples of scalar component planes
# (00, 01, 10, 11).  Plane-wise ufuncs on contiguous arrays beat numpy's
# per-matrix dispatch on stacks of 2x2 blocks by an order of magnitude.

def _planes(M):
    return tuple(np.ascontiguousarray(M[..., i, j]) for i in (0, 1) for j in (0, 1))


def _pmm(a, b):
    a00, a01, a10, a11 = a
    b00, b01, b10, b11 = b
    return (a00 * b00 + a01 * b10, a00 * b01 + a01 * b11,
            a10 * b00 + a11 * b10, a10 * b01 + a11 * b11)


def _pj(m):
    # J[M] = tr(M) 1 - M
    return (m[3], -m[1], -m[2], m[0])


def _pdag(m):
    return (m[0].conj(), m[2].conj(), m[1].conj(), m[3].conj())


def _padd(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _psub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _preduce(kern, m, out, idx):
    """out[idx] <- sum over the last two axes of kern * components.

    Uses numpy's pairwise reduction over the fixed lexicographic (k2, k3)
    layout, so the result is bit-identical for any blocking or threading.
    """
    for comp, (i, j) in zip(m, ((0, 0), (0, 1), (1, 0), (1, 1))):
        out[idx, i, j] = (kern * comp).sum(axis=(-2, -1))


# ---------------------------------------------------------------------------
# operator

class CollisionOperator:
    """Collision operator bound to one grid, dispersion and parameter set."""

    def __init__(self, disp, params):
        self.disp = disp
        self.grid = disp.grid
        self.params = params
        floor = eps_floor(disp, params.kappa)
        if params.backend == "direct" and params.epsilon < floor:
            log.warning(
                "epsilon=%.4g below grid floor %.4g (kappa=%g, N=%d); "
                "energy-shell quadrature is under-resolved",
                params.epsilon, floor, params.kappa, self.grid.N,
            )
        self._spectral_plan = None
        self._add_table = None

    # -- index tables --------------------------------------------------------

    def _tables(self):
        if self._add_table is None:
            i = np.arange(self.grid.n_points)
            self._add_table = self.grid.add(i[:, None], i[None, :])
        return self.grid.diff_table(), self._add_table

    def _check_field(self, W):
        if W.grid.d != self.grid.d or W.grid.N != self.grid.N:
            raise KineticsError("grid-mismatch", "field grid differs from operator grid")

    # -- direct backend ------------------------------------------------------

    def _reduce_direct(self, W, want):
        """Inner sums over (k2,k3) for every k1; see module docstring.

        want is a subset of {"AL", "CL", "AP", "CP", "E1", "S"}; E1 and S are
        the short-form effective-Hamiltonian objects
        E1 = sum P(omu) J[W4 - W2] W3 and S = sum P(omu) (W2 W4t + W4t W2).
        Output points are processed in blocks sized to a fixed memory
        budget; the per-point reduction order never changes, so results are
        independent of the blocking and of the thread count.
        """
        diff, add = self._tables()
        n = self.grid.n_points
        om = self.disp.values
        eps = self.params.epsilon
        Wd = W.data
        Wt = spin.tilde(Wd)
        pvk = pv_kernel if self.params.pv_cutoff_mode == "lorentzian" else sharp_pv_kernel
        need_p = bool({"AP", "CP", "E1", "S"} & want)
        need_l = bool({"AL", "CL"} & want)

        out = {key: np.zeros((n, 2, 2), dtype=complex) for key in want}
        p2 = tuple(c[None, :, None] for c in _planes(Wd))       # k2 axis
        pt2 = tuple(c[None, :, None] for c in _planes(Wt))
        p3 = tuple(c[None, None, :] for c in _planes(Wd))       # k3 axis
        pt3 = tuple(c[None, None, :] for c in _planes(Wt))
        cd = _planes(Wd)
        ct = _planes(Wt)
        om23 = (om[:, None] - om[None, :])[None]
        block = max(1, int(4e5) // (n * n))

        def run_block(b0):
            k1s = np.arange(b0, min(b0 + block, n))
            k4 = add[k1s][:, diff]              # (B,n,n) flat indices of k1+k2-k3
            omu = om[k1s][:, None, None] + om23 - om[k4]
            p4 = tuple(c[k4] for c in cd)
            pt4 = tuple(c[k4] for c in ct)
            J24 = _pj(_pmm(pt2, p4))            # J[(1-W)2 W4]
            P = _pmm(p2, pt4)                   # W2 (1-W)4
            if need_l:
                L = lorentzian_delta(omu, eps)
                if "AL" in want:
                    _preduce(L, _pmm(p3, J24), out["AL"], k1s)
                if "CL" in want:
                    _preduce(L, _pmm(pt3, _pj(P)), out["CL"], k1s)
            if need_p:
                Pk = pvk(omu, eps)
                if "AP" in want:
                    _preduce(Pk, _pmm(p3, J24), out["AP"], k1s)
                if "CP" in want:
                    _preduce(Pk, _pmm(pt3, _pj(P)), out["CP"], k1s)
                if "E1" in want:
                    _preduce(Pk, _pmm(_pj(_psub(p4, p2)), p3), out["E1"], k1s)
                if "S" in want:
                    _preduce(Pk, _padd(P, _pdag(P)), out["S"], k1s)

        starts = range(0, n, block)
        threads = self.params.threads
        if threads and threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(run_block, starts))
        else:
            for b0 in starts:
                run_block(b0)
        w2 = self.grid.weight**2
        return {key: w2 * val for key, val in out.items()}

    def _reduce(self, W, want):
        self._check_field(W)
        if self.params.backend == "spectral":
            from .spectral import spectral_reduce
            sharp = self.params.pv_cutoff_mode == "sharp"
            spectral_want = want - ({"AP", "CP", "E1", "S"} if sharp else {"E1", "S"})
            out = spectral_reduce(self, W, spectral_want)
            rest = want - set(out)
            if rest:
                # sharp principal value has no exponential representation;
                # those pieces always go through the direct path
                out.update(self._reduce_direct(W, rest))
            return out
        return self._reduce_direct(W, want)

    # -- public operators ------------------------------------------------------

    def _finish(self, data, label):
        resid = spin.herm_residual(data)
        if resid > 1e-11:
            log.warning("%s pre-symmetrization residual %.3e", label, resid)
        else:
            log.debug("%s pre-symmetrization residual %.3e", label, resid)
        return WignerField(self.grid, spin.hermitize(data)), resid

    def diss(self, W):
        """Dissipative part of the collision operator (Hermitian field)."""
        r = self._reduce(W, {"AL", "CL"})
        out, _ = self._finish(self._assemble_diss(W, r["AL"], r["CL"]), "dissipative")
        return out

    @staticmethod
    def _assemble_diss(W, AL, CL):
        Wt = spin.tilde(W.data)
        return (Wt @ AL + spin.dagger(AL) @ Wt
                - W.data @ CL - spin.dagger(CL) @ W.data)

    def gain(self, W):
        """Gain term; positive semidefinite whenever 0 <= W <= 1."""
        AL = self._reduce(W, {"AL"})["AL"]
        out, _ = self._finish(AL + spin.dagger(AL), "gain")
        return out

    def loss(self, W):
        """Loss coefficient D; the loss term proper is D W + W D*."""
        r = self._reduce(W, {"AL", "CL"})
        return WignerField(self.grid, spin.dagger(r["AL"]) + spin.dagger(r["CL"]))

    def h_eff(self, W):
        """Effective Hamiltonian (Hermitian field).

        Direct backend evaluates the reduced two-term form; the spectral
        backend evaluates the four-term form, which is algebraically equal.
        """
        if self.params.backend == "spectral" and self.params.pv_cutoff_mode == "lorentzian":
            r = self._reduce(W, {"AP", "CP"})
            H = self._assemble_heff_long(r["AP"], r["CP"])
        else:
            r = self._reduce(W, {"E1", "S"})
            H = -0.5 * (r["E1"] + spin.dagger(r["E1"]) + spin.j_transform(r["S"]))
        out, _ = self._finish(H, "effective Hamiltonian")
        return out

    @staticmethod
    def _assemble_heff_long(AP, CP):
        return -0.5 * (AP + spin.dagger(AP) + CP + spin.dagger(CP))

    def h_eff_long_form(self, W):
        """Four-term effective Hamiltonian; kept for equality testing."""
        r = self._reduce(W, {"AP", "CP"})
        out, _ = self._finish(self._assemble_heff_long(r["AP"], r["CP"]), "effective Hamiltonian")
        return out

    def cons(self, W):
        """Commutator part -i [H_eff(k), W(k)]; traceless Hermitian field."""
        H = self.h_eff(W)
        return WignerField(self.grid, -1j * spin.commutator(H.data, W.data))

    def full(self, W):
        """Dissipative plus commutator part, sharing one reduction pass."""
        want = {"AL", "CL"}
        spectral_pv = (self.params.backend == "spectral"
                       and self.params.pv_cutoff_mode == "lorentzian")
        want |= {"AP", "CP"} if spectral_pv else {"E1", "S"}
        r = self._reduce(W, want)
        diss, _ = self._finish(self._assemble_diss(W, r["AL"], r["CL"]), "dissipative")
        if spectral_pv:
            H = self._assemble_heff_long(r["AP"], r["CP"])
        else:
            H = -0.5 * (r["E1"] + spin.dagger(r["E1"]) + spin.j_transform(r["S"]))
        H = spin.hermitize(H)
        cons = -1j * spin.commutator(H, W.data)
        return WignerField(self.grid, diss.data + cons)

    def parts(self, W):
        """(dissipative, gain, loss coefficient, H_eff) from one pass."""
        want = {"AL", "CL", "AP", "CP"} if self.params.backend == "spectral" else {"AL", "CL", "E1", "S"}
        r = self._reduce(W, want)
        diss, _ = self._finish(self._assemble_diss(W, r["AL"], r["CL"]), "dissipative")
        gain = WignerField(self.grid, spin.hermitize(r["AL"] + spin.dagger(r["AL"])))
        lossc = WignerField(self.grid, spin.dagger(r["AL"]) + spin.dagger(r["CL"]))
        if "AP" in r:
            H = self._assemble_heff_long(r["AP"], r["CP"])
        else:
            H = -0.5 * (r["E1"] + spin.dagger(r["E1"]) + spin.j_transform(r["S"]))
        heff = WignerField(self.grid, spin.hermitize(H))
        return diss, gain, lossc, heff


# ---------------------------------------------------------------------------
# scalar kernel maps

def c0_trilinear(w1, w2, w3, k1, disp, epsilon):
    """Trilinear scalar collision kernel at base point k1.

    (1/pi) N^-2d sum_{k2,k3} w1(k2) w2(k3) w3(k4) * eps/(omu^2+eps^2),
    with k4 = k1 + k2 - k3.  Linear in each argument and commutes with
    complex conjugation.
    """
    grid = disp.grid
    n = grid.n_points
    for w in (w1, w2, w3):
        if np.asarray(w).shape != (n,):
            raise KineticsError("grid-mismatch", "scalar field shape mismatch")
    diff = grid.diff_table()
    k4 = grid.add(np.asarray(k1), diff)
    om = disp.values
    omu = om[k1] + om[:, None] - om[None, :] - om[k4]
    L = lorentzian_delta(omu, epsilon)
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    w3 = np.asarray(w3, dtype=complex)
    val = np.einsum("ab,a,b,ab->", L, w1, w2, w3[k4])
    return complex(val) * grid.weight**2 / np.pi


def sigma_coll_map(k1, alpha, sigma, disp, epsilon):
    """Total mass of the regularized collision measure at (k1, alpha).

    (1/pi) N^-2d sum_{k2,k3} eps / ((Omega~ - alpha)^2 + eps^2), where
    Omega~ is the signed energy combination for the sign vector sigma.
    Nonnegative and continuous in alpha; integrates to 1 over alpha.
    """
    if epsilon <= 0:
        raise KineticsError("bad-regulator", f"epsilon={epsilon} must be > 0")
    sigma = check_sign_vector(sigma)
    grid = disp.grid
    diff = grid.diff_table()
    k4 = grid.add(np.asarray(k1), diff)
    om = disp.values
    omt = (sigma[0] * om[k1] + sigma[1] * om[:, None]
           + sigma[2] * om[None, :] + sigma[3] * om[k4])
    alpha = np.asarray(alpha, dtype=float)
    x = omt[None, ...] - alpha.reshape(-1, 1, 1)
    vals = lorentzian_delta(x, epsilon).sum(axis=(1, 2)) * grid.weight**2 / np.pi
    return float(vals[0]) if alpha.ndim == 0 else vals


def omega_tilde_span(disp, sigma=(1, 1, -1, -1)):
    """sup over grid triples of |Omega~|; cheap bound via per-sign extremes."""
    om = disp.values
    hi = float(om.max())
    lo = float(om.min())
    return sum(max(s * hi, s * lo) for s in check_sign_vector(sigma))


def _bilinear(f, g, sigma, epsilon, k0, disp, kernel):
    sigma = check_sign_vector(sigma)
    grid = disp.grid
    n = grid.n_points
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    if f.shape != (n,) or g.shape != (n,):
        raise KineticsError("grid-mismatch", "scalar field shape mismatch")
    diff = grid.diff_table()
    k4 = grid.add(np.asarray(k0), diff)
    om = disp.values
    omt = (sigma[0] * om[k0] + sigma[1] * om[:, None]
           + sigma[2] * om[None, :] + sigma[3] * om[k4])
    K = kernel(omt, epsilon)
    return complex(np.einsum("ab,a,b->", K, f, g)) * grid.weight**2


def lorentz_bilinear(f, g, sigma, epsilon, k0, disp):
    """N^-2d sum f(k1') g(k2') eps/(Omega~^2 + eps^2) at base point k0."""
    return _bilinear(f, g, sigma, epsilon, k0, disp, lorentzian_delta)


def pv_bilinear(f, g, sigma, epsilon, k0, disp, sharp=False):
    """N^-2d sum f(k1') g(k2') Omega~/(Omega~^2 + eps^2) at base point k0."""
    kernel = sharp_pv_kernel if sharp else pv_kernel
    return _bilinear(f, g, sigma, epsilon, k0, disp, kernel)


# ---------------------------------------------------------------------------
# mollifier

def mollify(W, delta):
    """Local torus average over the ball |k'| <= delta (torus metric).

    Linear, preserves Hermiticity and the Fermi property (it is a convex
    combination of point values).  A radius smaller than the grid spacing
    averages nothing and returns the field unchanged, with a warning.
    """
    if not (0.0 < delta < 0.5):
        raise KineticsError("bad-radius", f"delta={delta} not in (0, 1/2)")
    grid = W.grid
    k = grid.coords()
    inside = np.flatnonzero(np.sum(k * k, axis=1) <= delta * delta + 1e-15)
    if inside.size <= 1:
        log.warning("mollifier radius %.4g below grid spacing %.4g; identity", delta, grid.spacing())
        return W.copy()
    i = np.arange(grid.n_points)
    acc = np.zeros_like(W.data)
    for off in inside:
        acc += W.data[grid.add(i, off)]
    return WignerField(grid, acc / inside.size)
