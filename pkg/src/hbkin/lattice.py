"""Discretized torus, dispersion relations and the free propagator.

The torus [0,1)^d is sampled at k = j/N with j in {0,...,N-1}^d, so that 0
is always a grid point and index arithmetic (k1 + k2 - k3 mod 1) is exact
integer arithmetic.  Points are reported in [-1/2, 1/2)^d only at output
boundaries.  The quadrature weight is N^-d per point, matching the
normalization integral_T^d dk = 1.
"""

import logging

import numpy as np

from .errors import KineticsError

log = logging.getLogger(__name__)


class TorusGrid:
    """Uniform N^d grid on the d-torus with exact mod-N index arithmetic.

    Flat indices enumerate the grid in C (row-major) order; `multi` holds
    the integer coordinates of every flat index.
    """

    def __init__(self, d, N):
        if d not in (1, 2, 3):
            raise KineticsError("config-error", f"dimension d={d} not in 1..3")
        if N < 4 or N % 2 != 0:
            raise KineticsError("config-error", f"N={N} must be even and >= 4")
        self.d = int(d)
        self.N = int(N)
        self.n_points = self.N**self.d
        self.shape = (self.N,) * self.d
        self.weight = float(self.N) ** (-self.d)
        idx = np.indices(self.shape).reshape(self.d, -1).T
        self.multi = np.ascontiguousarray(idx)  # (n_points, d) int
        self._neg = self._encode((-self.multi) % self.N)
        self._diff_table = None

    def _encode(self, multi):
        flat = np.zeros(multi.shape[:-1], dtype=np.int64)
        for axis in range(self.d):
            flat = flat * self.N + multi[..., axis]
        return flat

    def add(self, i, j):
        """Flat index of k_i + k_j mod 1 (exact)."""
        return self._encode((self.multi[i] + self.multi[j]) % self.N)

    def sub(self, i, j):
        """Flat index of k_i - k_j mod 1 (exact)."""
        return self._encode((self.multi[i] - self.multi[j]) % self.N)

    def neg(self, i):
        """Flat index of -k_i mod 1 (exact)."""
        return self._neg[i]

    def diff_table(self):
        """Cached (n, n) table of sub(i, j); built on first use."""
        if self._diff_table is None:
            i = np.arange(self.n_points)
            self._diff_table = self.sub(i[:, None], i[None, :])
        return self._diff_table

    def coords(self, i=None):
        """Wavevectors in [-1/2, 1/2)^d (reporting convention).

        The signed representative is formed in integer arithmetic before
        dividing, so k(-j) == -k(j) holds bit-exactly for every N.
        """
        m = self.multi if i is None else self.multi[i]
        return (m - self.N * (m >= self.N // 2)) / self.N

    def spacing(self):
        return 1.0 / self.N


class DispersionRelation:
    """Reflection-symmetric dispersion sampled on a TorusGrid.

    Two kinds: the nearest-neighbor band c - sum_nu cos(2 pi k^nu), and a
    tabulated array of per-point energies.  Tabulated input is symmetrized
    on load (average of omega(j) and omega(-j)); asymmetry beyond 1e-12
    triggers a warning because reflection symmetry underlies every
    structural identity checked by this package.
    """

    def __init__(self, grid, kind, c=0.0, values=None):
        self.grid = grid
        self.kind = kind
        self.c = float(c)
        if kind == "nearest-neighbor":
            # evaluate on the symmetric window so reflection symmetry is
            # bit-exact (IEEE cos is exactly even)
            self.values = self.c - np.sum(np.cos(2.0 * np.pi * grid.coords()), axis=1)
        elif kind == "tabulated":
            values = np.asarray(values, dtype=float).reshape(-1)
            if values.shape[0] != grid.n_points:
                raise KineticsError(
                    "grid-mismatch",
                    f"tabulated dispersion has {values.shape[0]} entries, grid has {grid.n_points}",
                )
            refl = values[grid.neg(np.arange(grid.n_points))]
            asym = np.max(np.abs(values - refl))
            if asym > 1e-12:
                log.warning("tabulated dispersion asymmetry %.3e; symmetrizing", asym)
            self.values = 0.5 * (values + refl)
        else:
            raise KineticsError("config-error", f"unknown dispersion kind {kind!r}")

    @classmethod
    def nearest_neighbor(cls, grid, c=0.0):
        return cls(grid, "nearest-neighbor", c=c)

    @classmethod
    def tabulated(cls, grid, values):
        return cls(grid, "tabulated", values=values)

    def __call__(self, i):
        return self.values[i]

    def lipschitz_bound(self):
        """Bound on |grad omega|, used for the regulator floor."""
        if self.kind == "nearest-neighbor":
            return 2.0 * np.pi * self.grid.d
        # finite-difference estimate along each axis
        field = self.values.reshape(self.grid.shape)
        best = 0.0
        for axis in range(self.grid.d):
            best = max(best, np.max(np.abs(np.roll(field, -1, axis) - field)) * self.grid.N)
        return float(best)

    def energy_span(self):
        """Largest achievable |omega1 + omega2 - omega3 - omega4|."""
        return 2.0 * float(self.values.max() - self.values.min())


def dispersion_nn(k, c=0.0):
    """Nearest-neighbor band at continuum points k (shape (..., d) or scalar)."""
    k = np.asarray(k, dtype=float)
    if k.ndim == 0:
        k = k[None]
    return c - np.sum(np.cos(2.0 * np.pi * k), axis=-1)


def check_sign_vector(sigma):
    sigma = tuple(int(s) for s in sigma)
    if len(sigma) != 4 or any(s not in (-1, 1) for s in sigma):
        raise KineticsError("config-error", f"sign vector {sigma} must be in {{-1,1}}^4")
    return sigma


def swap_sign_vectors(sigma):
    """The three permuted sign vectors used by the iterated-sum identity."""
    s = check_sign_vector(sigma)
    return (
        (s[1], s[0], s[2], s[3]),
        (s[2], s[1], s[0], s[3]),
        (s[3], s[1], s[0], s[2]),
    )


def omega_underline(k1, k2, k3, k4, disp):
    """omega(k1) + omega(k2) - omega(k3) - omega(k4) at flat indices."""
    return disp(k1) + disp(k2) - disp(k3) - disp(k4)


def omega_tilde(triple, sigma, disp):
    """Signed energy combination over a collision triple.

    triple = (k1, k2, k3) as flat indices (scalars or broadcastable arrays);
    the fourth wavevector is k1 + k2 - k3 mod 1.  Returns
    sigma1 w(k1) + sigma2 w(k2) + sigma3 w(k3) + sigma4 w(k1+k2-k3).
    """
    sigma = check_sign_vector(sigma)
    grid = disp.grid
    k1, k2, k3 = triple
    k4 = grid.add(k1, grid.sub(k2, k3))
    return (sigma[0] * disp(k1) + sigma[1] * disp(k2)
            + sigma[2] * disp(k3) + sigma[3] * disp(k4))


def propagator_field(t, disp, grid=None):
    """Free propagator p_t(x) for all lattice sites x of one grid period.

    p_t(x) = N^-d sum_j exp(i 2 pi x.j/N) exp(-i t omega(j/N)), i.e. the
    inverse DFT of the phase field; entry [x1,...,xd] is the site with
    coordinates x_nu mod N.
    """
    grid = disp.grid if grid is None else grid
    phase = np.exp(-1j * t * disp.values).reshape(grid.shape)
    return np.fft.ifftn(phase)


def free_propagator(t, x, disp, grid=None):
    """Free propagator at a single lattice site x (d-vector of ints).

    Sites are resolved mod N; meaningful for |x_nu| <= N/2.
    """
    grid = disp.grid if grid is None else grid
    field = propagator_field(t, disp, grid)
    x = np.atleast_1d(np.asarray(x, dtype=int))
    if x.shape != (grid.d,):
        raise KineticsError("grid-mismatch", f"site {x} is not a {grid.d}-vector")
    return complex(field[tuple(x % grid.N)])
