"""Grid-indexed fields of 2x2 matrices (the state W and friends)."""

import numpy as np

from . import spin
from .errors import KineticsError


class WignerField:
    """A map k -> 2x2 complex matrix on a TorusGrid.

    data has shape (n_points, 2, 2).  The physically meaningful states are
    Hermitian with spectrum in [0,1] ("Fermi") at every point, but the class
    itself only stores; validation is explicit via herm_residual /
    fermi_residual.
    """

    def __init__(self, grid, data):
        data = np.asarray(data, dtype=complex)
        if data.shape != (grid.n_points, 2, 2):
            raise KineticsError(
                "grid-mismatch",
                f"data shape {data.shape} != ({grid.n_points}, 2, 2)",
            )
        self.grid = grid
        self.data = data

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, grid, matrix):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape == ():
            matrix = float(matrix.real) * spin.EYE2
        return cls(grid, np.broadcast_to(matrix, (grid.n_points, 2, 2)).copy())

    @classmethod
    def diagonal(cls, grid, w_up, w_down):
        """Diagonal field from two scalar occupation arrays."""
        w_up = np.broadcast_to(np.asarray(w_up, dtype=complex), (grid.n_points,))
        w_down = np.broadcast_to(np.asarray(w_down, dtype=complex), (grid.n_points,))
        data = np.zeros((grid.n_points, 2, 2), dtype=complex)
        data[:, 0, 0] = w_up
        data[:, 1, 1] = w_down
        return cls(grid, data)

    @classmethod
    def from_function(cls, grid, fn):
        """Sample fn(k) at the grid points, k reported in [-1/2, 1/2)^d."""
        k = grid.coords()
        data = np.asarray([fn(k[i]) for i in range(grid.n_points)], dtype=complex)
        return cls(grid, data.reshape(grid.n_points, 2, 2))

    @classmethod
    def random_fermi(cls, grid, rng, lo=0.0, hi=1.0):
        """Random Hermitian field with eigenvalues uniform in [lo, hi]."""
        n = grid.n_points
        A = rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2))
        H = spin.hermitize(A)
        _, V = np.linalg.eigh(H)
        lam = rng.uniform(lo, hi, size=(n, 2))
        data = np.einsum("nij,nj,nkj->nik", V, lam, V.conj())
        return cls(grid, data)

    @classmethod
    def random_hermitian(cls, grid, rng, scale=1.0):
        n = grid.n_points
        A = rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2))
        return cls(grid, scale * spin.hermitize(A))

    @classmethod
    def polarized_bump(cls, grid, base_up=0.15, amp=0.7, base_down=0.3):
        """Spin-up occupation bump centered at k=0 over a flat spin-down sea."""
        k = grid.coords()
        bump = np.prod(0.5 * (1.0 + np.cos(2.0 * np.pi * k)), axis=1) ** 2
        return cls.diagonal(grid, base_up + amp * bump, base_down)

    # -- basic algebra -----------------------------------------------------

    def copy(self):
        return WignerField(self.grid, self.data.copy())

    def tilde(self):
        """The mirror field 1 - W."""
        return WignerField(self.grid, spin.tilde(self.data))

    def hermitize(self):
        return WignerField(self.grid, spin.hermitize(self.data))

    def truncated(self):
        """Pointwise spectral clipping into [0,1]."""
        return WignerField(self.grid, spin.truncate(self.data))

    def __add__(self, other):
        self._check(other)
        return WignerField(self.grid, self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        return WignerField(self.grid, self.data - other.data)

    def __mul__(self, scalar):
        return WignerField(self.grid, self.data * scalar)

    __rmul__ = __mul__

    def _check(self, other):
        if other.grid is not self.grid and (
            other.grid.d != self.grid.d or other.grid.N != self.grid.N
        ):
            raise KineticsError("grid-mismatch", "fields live on different grids")

    # -- norms and residuals -----------------------------------------------

    def norm_l2(self):
        """L2 norm: sqrt(N^-d sum_k tr(W(k)* W(k)))."""
        return float(np.sqrt(self.grid.weight * np.sum(np.abs(self.data) ** 2)))

    def norm_inf(self):
        """Sup over k of the pointwise Hilbert-Schmidt norm."""
        if self.data.size == 0:
            return 0.0
        return float(np.max(spin.hs_norm(self.data)))

    def herm_residual(self):
        return spin.herm_residual(self.data)

    def fermi_residual(self):
        """Worst violation of 0 <= W <= 1 over the grid (0 if satisfied)."""
        lam = spin.eigvals_hermitian(spin.hermitize(self.data))
        low = -np.min(lam)
        high = np.max(lam) - 1.0
        return float(max(low, high, 0.0))

    # -- grid functionals ----------------------------------------------------

    def mean_matrix(self):
        """N^-d sum_k W(k); the conserved total-spin matrix."""
        return self.grid.weight * np.sum(self.data, axis=0)

    def energy(self, disp):
        """N^-d sum_k omega(k) tr W(k); the conserved energy functional."""
        tr = np.trace(self.data, axis1=-2, axis2=-1)
        return float(np.real(self.grid.weight * np.sum(disp.values * tr)))
