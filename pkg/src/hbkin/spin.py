"""Exact algebra for 2x2 complex matrices.

All routines are vectorized over arbitrary leading axes: a "matrix" argument
is an ndarray of shape (..., 2, 2).  Spectral operations (absolute value,
truncation into [0,1], exponentials) use the closed-form 2x2
eigendecomposition instead of iterative methods, so they are exact up to
roundoff and cheap enough for per-grid-point use.

The matrix norm used throughout is Hilbert-Schmidt.
"""

import numpy as np

from .errors import KineticsError

TOL_HERM = 1e-10
TOL_FERMI = 1e-10

EYE2 = np.eye(2, dtype=complex)

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def hs_norm(M):
    """Hilbert-Schmidt norm, per matrix (returns shape (...,))."""
    M = np.asarray(M)
    return np.sqrt(np.sum(np.abs(M) ** 2, axis=(-2, -1)))


def dagger(M):
    return np.conj(np.swapaxes(M, -2, -1))


def herm_residual(M):
    """Largest Hilbert-Schmidt deviation from Hermiticity over the batch."""
    M = np.asarray(M)
    r = hs_norm(M - dagger(M))
    return float(np.max(r)) if r.size else 0.0


def hermitize(M):
    """Symmetrize M <- (M + M*)/2.  The only sanctioned Hermiticity repair."""
    return 0.5 * (M + dagger(M))


def require_hermitian(M, tol=TOL_HERM, what="matrix"):
    r = herm_residual(M)
    if r > tol:
        raise KineticsError("not-hermitian", f"{what}: residual {r:.3e} > {tol:.1e}")


def j_transform(M):
    """J[M] = tr(M) 1 - M.  Linear involution; preserves trace and Hermiticity."""
    M = np.asarray(M, dtype=complex)
    tr = np.trace(M, axis1=-2, axis2=-1)
    return tr[..., None, None] * EYE2 - M


def tilde(M):
    """1 - M."""
    return EYE2 - np.asarray(M, dtype=complex)


def commutator(A, B):
    """AB - BA; anti-Hermitian and traceless for Hermitian A, B."""
    return A @ B - B @ A


def _herm_spectral_parts(M):
    """Mean/radius/traceless-part decomposition of a Hermitian batch.

    M = m*1 + T with T traceless; eigenvalues are m -/+ r where
    r = sqrt(((a-d)/2)^2 + |b|^2) >= 0.
    """
    a = np.asarray(M[..., 0, 0].real)
    d = np.asarray(M[..., 1, 1].real)
    b = np.asarray(M[..., 0, 1])
    m = 0.5 * (a + d)
    r = np.sqrt(0.25 * (a - d) ** 2 + np.abs(b) ** 2)
    return m, r


def eigvals_hermitian(M):
    """Both eigenvalues of a Hermitian batch, shape (..., 2), ascending."""
    m, r = _herm_spectral_parts(M)
    return np.stack([m - r, m + r], axis=-1)


def min_eig_hermitian(M):
    m, r = _herm_spectral_parts(M)
    return m - r


def herm_funcm(M, f):
    """Apply a scalar function to a Hermitian batch via spectral calculus.

    Uses f(M) = c0*1 + c1*(M - m*1) with c0 = (f(l+)+f(l-))/2 and
    c1 = (f(l+)-f(l-))/(2r); the degenerate direction r -> 0 is handled by
    c1 -> 0, which is exact for continuous f since ||M - m*1|| = sqrt(2) r.
    """
    M = np.asarray(M, dtype=complex)
    m, r = _herm_spectral_parts(M)
    fp = f(m + r)
    fm = f(m - r)
    c0 = 0.5 * (fp + fm)
    with np.errstate(divide="ignore", invalid="ignore"):
        c1 = np.where(r > 0.0, (fp - fm) / np.where(r > 0.0, 2.0 * r, 1.0), 0.0)
    T = M - m[..., None, None] * EYE2
    return c0[..., None, None] * EYE2 + c1[..., None, None] * T


def matrix_abs_hermitian(M):
    """|M| = (M*M)^(1/2) for Hermitian M."""
    return herm_funcm(M, np.abs)


def truncate(M, tol=TOL_HERM):
    """Clip the spectrum of a Hermitian matrix into [0,1].

    Computed from the absolute-value formula (1 + |M| - |1-M|)/2, which
    equals clipping each eigenvalue to [0,1] in the spectral decomposition.
    Satisfies 0 <= out <= 1, out = M whenever 0 <= M <= 1, and
    1 - out(M) = out(1 - M).
    """
    require_hermitian(M, tol)
    M = hermitize(np.asarray(M, dtype=complex))
    return 0.5 * (EYE2 + matrix_abs_hermitian(M) - matrix_abs_hermitian(EYE2 - M))


def matrix_inequality_residual(A, B, C, tol=TOL_HERM):
    """Smallest eigenvalue of the Hermitian part of A J[BC] + C J[BA].

    For positive semidefinite A, B, C the combination is itself positive
    semidefinite, so the residual is >= 0 up to roundoff.
    """
    for name, X in (("A", A), ("B", B), ("C", C)):
        require_hermitian(X, tol, what=name)
        lmin = np.min(min_eig_hermitian(np.asarray(X, dtype=complex)))
        if lmin < -tol:
            raise KineticsError("not-psd", f"{name}: min eigenvalue {lmin:.3e}")
    X = A @ j_transform(B @ C) + C @ j_transform(B @ A)
    return min_eig_hermitian(hermitize(X))


def unitary_exp(H, dt, tol=TOL_HERM):
    """exp(i dt H) for Hermitian H, via the closed 2x2 form.

    Decomposing H = m*1 + T with T traceless of radius r gives
    exp(i dt H) = e^(i dt m) (cos(dt r) 1 + i sin(dt r)/r T).
    The result is unitary to machine precision.
    """
    require_hermitian(H, tol)
    H = np.asarray(H, dtype=complex)
    m, r = _herm_spectral_parts(H)
    T = H - m[..., None, None] * EYE2
    phase = np.asarray(np.exp(1j * dt * m))
    # sin(dt r)/r == dt * sinc(dt r / pi), finite at r = 0
    c1 = np.asarray(1j * dt * np.sinc(dt * r / np.pi))
    cosr = np.asarray(np.cos(dt * r))
    out = cosr[..., None, None] * EYE2 + c1[..., None, None] * T
    return phase[..., None, None] * out


def expm_2x2(M):
    """exp(M) for an arbitrary complex 2x2 batch (closed form).

    With M = m*1 + T, T traceless, T^2 = q^2 * 1 where q^2 = -det(T):
    exp(M) = e^m (cosh(q) 1 + sinh(q)/q T).
    """
    M = np.asarray(M, dtype=complex)
    m = 0.5 * np.trace(M, axis1=-2, axis2=-1)
    T = M - m[..., None, None] * EYE2
    q2 = T[..., 0, 0] ** 2 + T[..., 0, 1] * T[..., 1, 0]
    q = np.sqrt(q2)
    small = np.abs(q) < 1e-6
    qs = np.where(small, 1.0, q)
    sinhc = np.where(small, 1.0 + q2 / 6.0 + q2 * q2 / 120.0, np.sinh(qs) / qs)
    cosh = np.where(small, 1.0 + q2 / 2.0 + q2 * q2 / 24.0, np.cosh(qs))
    out = cosh[..., None, None] * EYE2 + sinhc[..., None, None] * T
    return np.exp(m)[..., None, None] * out
