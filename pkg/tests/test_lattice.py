from fractions import Fraction

import numpy as np
import pytest
from scipy import special

from hbkin import TorusGrid, DispersionRelation
from hbkin.errors import KineticsError
from hbkin.lattice import (
    dispersion_nn,
    free_propagator,
    omega_tilde,
    omega_underline,
    propagator_field,
    swap_sign_vectors,
)

rng = np.random.default_rng(5)


def test_grid_requires_even_n_and_low_d():
    with pytest.raises(KineticsError):
        TorusGrid(1, 7)
    with pytest.raises(KineticsError):
        TorusGrid(4, 8)


def test_grid_weight_is_exact_in_rational_arithmetic():
    for d, N in [(1, 6), (2, 8), (3, 4)]:
        grid = TorusGrid(d, N)
        assert Fraction(1, N**d) * N**d == 1
        assert abs(grid.weight * grid.n_points - 1.0) < 1e-15


def test_index_arithmetic_exact():
    grid = TorusGrid(2, 6)
    i = rng.integers(0, grid.n_points, 300)
    j = rng.integers(0, grid.n_points, 300)
    s = grid.add(i, j)
    assert np.all((grid.multi[i] + grid.multi[j]) % grid.N == grid.multi[s])
    z = grid.add(i, grid.neg(i))
    assert np.all(z == 0)


def test_momentum_conservation_exact_on_grid():
    grid = TorusGrid(3, 4)
    k1 = rng.integers(0, grid.n_points, 500)
    k2 = rng.integers(0, grid.n_points, 500)
    k3 = rng.integers(0, grid.n_points, 500)
    k4 = grid.add(k1, grid.sub(k2, k3))
    total = (grid.multi[k1] + grid.multi[k2] - grid.multi[k3] - grid.multi[k4]) % grid.N
    assert np.all(total == 0)


def test_coords_reporting_window():
    grid = TorusGrid(1, 8)
    k = grid.coords()[:, 0]
    assert k.min() >= -0.5 and k.max() < 0.5
    assert 0.0 in k


def test_dispersion_nn_values():
    assert dispersion_nn(np.zeros(3), c=0.0) == pytest.approx(-3.0)
    assert dispersion_nn(0.5 * np.ones(3), c=0.0) == pytest.approx(3.0)
    assert dispersion_nn(np.zeros(2), c=1.5) == pytest.approx(-0.5)


def test_dispersion_reflection_symmetry():
    for d, N in [(1, 16), (2, 8)]:
        grid = TorusGrid(d, N)
        disp = DispersionRelation.nearest_neighbor(grid, c=0.7)
        i = np.arange(grid.n_points)
        np.testing.assert_array_equal(disp.values, disp.values[grid.neg(i)])


def test_tabulated_dispersion_symmetrized_with_warning(caplog):
    grid = TorusGrid(1, 8)
    vals = rng.normal(size=8)
    with caplog.at_level("WARNING"):
        disp = DispersionRelation.tabulated(grid, vals)
    assert "symmetrizing" in caplog.text
    i = np.arange(8)
    np.testing.assert_allclose(disp.values, disp.values[grid.neg(i)], atol=0)


def test_tabulated_dispersion_shape_check():
    grid = TorusGrid(1, 8)
    with pytest.raises(KineticsError) as err:
        DispersionRelation.tabulated(grid, np.zeros(7))
    assert err.value.code == "grid-mismatch"


def test_omega_underline_trivial_cancellations():
    grid = TorusGrid(1, 8)
    disp = DispersionRelation.nearest_neighbor(grid)
    k = rng.integers(0, 8, 20)
    kp = rng.integers(0, 8, 20)
    assert np.allclose(omega_underline(k, k, k, k, disp), 0.0)
    assert np.allclose(omega_underline(k, kp, kp, k, disp), 0.0)


def test_omega_tilde_matches_omega_underline_exhaustively():
    grid = TorusGrid(1, 4)
    disp = DispersionRelation.nearest_neighbor(grid, c=0.2)
    for k1 in range(4):
        for k2 in range(4):
            for k3 in range(4):
                k4 = int(grid.add(k1, grid.sub(k2, k3)))
                a = omega_underline(k1, k2, k3, k4, disp)
                b = omega_tilde((k1, k2, k3), (1, 1, -1, -1), disp)
                assert a == pytest.approx(b, abs=1e-15)


def test_omega_tilde_all_plus():
    grid = TorusGrid(1, 8)
    disp = DispersionRelation.nearest_neighbor(grid, c=0.0)
    assert omega_tilde((0, 0, 0), (1, 1, 1, 1), disp) == pytest.approx(-4.0)


def test_omega_underline_swap_symmetries():
    grid = TorusGrid(1, 6)
    disp = DispersionRelation.nearest_neighbor(grid)
    for _ in range(50):
        k1, k2, k3 = rng.integers(0, 6, 3)
        k4 = int(grid.add(k1, grid.sub(k2, k3)))
        base = omega_underline(k1, k2, k3, k4, disp)
        assert omega_underline(k3, k4, k1, k2, disp) == pytest.approx(-base, abs=1e-15)
        assert omega_underline(k2, k1, k4, k3, disp) == pytest.approx(base, abs=1e-15)


def test_sign_vector_validation_and_swaps():
    with pytest.raises(KineticsError):
        omega_tilde((0, 0, 0), (1, 1, 2, -1), DispersionRelation.nearest_neighbor(TorusGrid(1, 4)))
    s2, s3, s4 = swap_sign_vectors((1, 1, -1, -1))
    assert s2 == (1, 1, -1, -1)
    assert s3 == (-1, 1, 1, -1)
    assert s4 == (-1, 1, 1, -1)


def test_free_propagator_delta_at_t0():
    grid = TorusGrid(2, 8)
    disp = DispersionRelation.nearest_neighbor(grid)
    field = propagator_field(0.0, disp)
    assert field[0, 0] == pytest.approx(1.0)
    assert np.max(np.abs(field)) == pytest.approx(1.0)
    assert np.sum(np.abs(field) > 1e-12) == 1


def test_free_propagator_bessel_oracle():
    grid = TorusGrid(1, 256)
    disp = DispersionRelation.nearest_neighbor(grid, c=0.0)
    for t in (1.0, 5.0, 12.5, 20.0):
        field = propagator_field(t, disp)
        for x in range(-32, 33):
            oracle = (1j**x) * special.jv(x, t)
            assert abs(field[x % 256] - oracle) < 1e-8


def test_free_propagator_modulus_bound():
    grid = TorusGrid(1, 64)
    disp = DispersionRelation.nearest_neighbor(grid, c=0.4)
    for t in (0.0, 3.0, 17.0):
        assert np.max(np.abs(propagator_field(t, disp))) <= 1.0 + 1e-14


def test_free_propagator_time_reflection():
    grid = TorusGrid(1, 32)
    disp = DispersionRelation.nearest_neighbor(grid)
    p = propagator_field(2.3, disp)
    m = propagator_field(-2.3, disp)
    np.testing.assert_allclose(m, p.conj(), atol=1e-14)
    # spatial reflection symmetry of the band makes p even in x
    np.testing.assert_allclose(p, p[(-np.arange(32)) % 32], atol=1e-14)


def test_free_propagator_single_site():
    grid = TorusGrid(1, 64)
    disp = DispersionRelation.nearest_neighbor(grid)
    field = propagator_field(4.0, disp)
    assert free_propagator(4.0, [5], disp) == pytest.approx(field[5])
    with pytest.raises(KineticsError):
        free_propagator(4.0, [1, 2], disp)


def test_lipschitz_bound_and_energy_span():
    grid = TorusGrid(2, 8)
    disp = DispersionRelation.nearest_neighbor(grid, c=0.3)
    assert disp.lipschitz_bound() == pytest.approx(4 * np.pi)
    assert disp.energy_span() == pytest.approx(2 * (disp.values.max() - disp.values.min()))
