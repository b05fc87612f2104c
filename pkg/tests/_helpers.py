"""Shared test fixtures and independent brute-force oracles.

The oracles here are deliberately written as plain triple loops over
explicit formulas, sharing no code with the production reduction paths.
"""

import numpy as np

from hbkin import TorusGrid, DispersionRelation, WignerField

I2 = np.eye(2, dtype=complex)


def jj(M):
    return np.trace(M) * I2 - M


def random_hermitian(rng, n=1):
    A = rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2))
    return 0.5 * (A + np.conj(np.swapaxes(A, -2, -1)))


def random_psd(rng, n=1):
    A = rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2))
    return A @ np.conj(np.swapaxes(A, -2, -1))


def setup(d=1, N=8, c=0.0, seed=0, lo=0.05, hi=0.95):
    rng = np.random.default_rng(seed)
    grid = TorusGrid(d, N)
    disp = DispersionRelation.nearest_neighbor(grid, c=c)
    W = WignerField.random_fermi(grid, rng, lo, hi)
    return rng, grid, disp, W


def omu_brute(disp, k1, k2, k3, k4):
    om = disp.values
    return om[k1] + om[k2] - om[k3] - om[k4]


def brute_collision(W, disp, eps, which="diss", pv_sharp=False):
    """Triple-loop reference for the collision operators.

    which: "diss" | "gain" | "loss" | "heff".
    """
    grid = W.grid
    n = grid.n_points
    Wd = W.data
    Wt = I2 - Wd
    out = np.zeros((n, 2, 2), dtype=complex)
    for k1 in range(n):
        acc = np.zeros((2, 2), dtype=complex)
        for k2 in range(n):
            for k3 in range(n):
                k4 = int(grid.add(k1, grid.sub(k2, k3)))
                x = omu_brute(disp, k1, k2, k3, k4)
                if which == "heff":
                    if pv_sharp:
                        kern = (1.0 / x) if abs(x) >= eps else 0.0
                    else:
                        kern = x / (x * x + eps * eps)
                    T = (Wd[k3] @ jj(Wt[k2] @ Wd[k4]) + jj(Wd[k4] @ Wt[k2]) @ Wd[k3]
                         + Wt[k3] @ jj(Wd[k2] @ Wt[k4]) + jj(Wt[k4] @ Wd[k2]) @ Wt[k3])
                    acc += -0.5 * kern * T
                    continue
                kern = eps / (x * x + eps * eps)
                if which == "diss":
                    T = (Wt[k1] @ Wd[k3] @ jj(Wt[k2] @ Wd[k4])
                         + jj(Wd[k4] @ Wt[k2]) @ Wd[k3] @ Wt[k1]
                         - Wd[k1] @ Wt[k3] @ jj(Wd[k2] @ Wt[k4])
                         - jj(Wt[k4] @ Wd[k2]) @ Wt[k3] @ Wd[k1])
                elif which == "gain":
                    T = Wd[k3] @ jj(Wt[k2] @ Wd[k4]) + jj(Wd[k4] @ Wt[k2]) @ Wd[k3]
                elif which == "loss":
                    T = jj(Wd[k4] @ Wt[k2]) @ Wd[k3] + jj(Wt[k4] @ Wd[k2]) @ Wt[k3]
                else:
                    raise ValueError(which)
                acc += kern * T
        out[k1] = acc / n**2
    return out


def brute_trilinear(w1, w2, w3, k1, disp, eps):
    grid = disp.grid
    n = grid.n_points
    acc = 0.0 + 0.0j
    for k2 in range(n):
        for k3 in range(n):
            k4 = int(grid.add(k1, grid.sub(k2, k3)))
            x = omu_brute(disp, k1, k2, k3, k4)
            acc += w1[k2] * w2[k3] * w3[k4] * eps / (x * x + eps * eps)
    return acc / (np.pi * n**2)


def scalar_bn_rhs(w_up, w_down, disp, eps):
    """Two-component scalar kinetic right-hand side (opposite-spin pairs).

    dw_up/dt(k1) = 2 N^-2d sum L(omu) [(1-w_up1)(1-w_dn2) w_up3 w_dn4
                                       - w_up1 w_dn2 (1-w_up3)(1-w_dn4)]
    and the mirror expression for w_down.
    """
    grid = disp.grid
    n = grid.n_points
    out_u = np.zeros(n)
    out_d = np.zeros(n)
    for k1 in range(n):
        au = ad = 0.0
        for k2 in range(n):
            for k3 in range(n):
                k4 = int(grid.add(k1, grid.sub(k2, k3)))
                x = omu_brute(disp, k1, k2, k3, k4)
                L = eps / (x * x + eps * eps)
                au += L * ((1 - w_up[k1]) * (1 - w_down[k2]) * w_up[k3] * w_down[k4]
                           - w_up[k1] * w_down[k2] * (1 - w_up[k3]) * (1 - w_down[k4]))
                ad += L * ((1 - w_down[k1]) * (1 - w_up[k2]) * w_down[k3] * w_up[k4]
                           - w_down[k1] * w_up[k2] * (1 - w_down[k3]) * (1 - w_up[k4]))
        out_u[k1] = 2.0 * au / n**2
        out_d[k1] = 2.0 * ad / n**2
    return out_u, out_d


def scalar_bn_rk4(w_up, w_down, disp, eps, dt):
    """One classical four-stage step of the scalar two-component system."""
    def f(u, d):
        return scalar_bn_rhs(u, d, disp, eps)

    k1u, k1d = f(w_up, w_down)
    k2u, k2d = f(w_up + 0.5 * dt * k1u, w_down + 0.5 * dt * k1d)
    k3u, k3d = f(w_up + 0.5 * dt * k2u, w_down + 0.5 * dt * k2d)
    k4u, k4d = f(w_up + dt * k3u, w_down + dt * k3d)
    new_u = w_up + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
    new_d = w_down + dt / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d)
    return new_u, new_d
