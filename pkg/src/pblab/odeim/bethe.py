"""Algebraic equations for the excited-level deformations.

The L roots z_1..z_L solve, for each k,

    sum_{j != k} z_k (z_k^2 + (3+a)(1+2a) z_k z_j + a(1+2a) z_j^2) / (z_k-z_j)^3
        - a z_k / (4(1+a)) + ((2l+1)^2 - 4a^2) / (16(a+1)) = 0,

and each root set defines a deformed potential whose spectral problem is
isospectral machinery for level L.  L = 1 closes in one line:
z_1 = ((2l+1)^2 - 4a^2)/(4a).
"""
from __future__ import annotations

import numpy as np

from .problem import BetheRoots


def bethe_residual(z: np.ndarray, alpha: float, l: float) -> np.ndarray:
    """Left-hand sides of the root system, one entry per root."""
    z = np.asarray(z, dtype=complex)
    L = z.size
    F = np.zeros(L, dtype=complex)
    cst = ((2 * l + 1) ** 2 - 4 * alpha ** 2) / (16 * (alpha + 1))
    for k in range(L):
        s = 0.0 + 0j
        for j in range(L):
            if j == k:
                continue
            d = z[k] - z[j]
            s += z[k] * (z[k] ** 2 + (3 + alpha) * (1 + 2 * alpha) * z[k] * z[j]
                         + alpha * (1 + 2 * alpha) * z[j] ** 2) / d ** 3
        F[k] = s - alpha * z[k] / (4 * (1 + alpha)) + cst
    return F


def closed_form_first_root(alpha: float, l: float) -> float:
    """Exact single root for L = 1."""
    return ((2 * l + 1) ** 2 - 4 * alpha ** 2) / (4 * alpha)


def solve_bethe(alpha: float, l: float, z0: np.ndarray,
                tol: float = 1e-12, itmax: int = 60) -> BetheRoots:
    """Damped Newton iteration from an initial root guess.

    The Jacobian is forward-difference (h = 1e-7) and the step is halved
    until the residual decreases.  Raises if the target residual is not
    reached within ``itmax`` iterations.
    """
    z = np.asarray(z0, dtype=complex).copy()
    if z.ndim != 1 or z.size == 0:
        raise ValueError("z0 must be a nonempty 1-d array")
    for _ in range(itmax):
        F = bethe_residual(z, alpha, l)
        if np.abs(F).max() < tol:
            break
        J = np.zeros((z.size, z.size), dtype=complex)
        h = 1e-7
        for m in range(z.size):
            zp = z.copy()
            zp[m] += h
            J[:, m] = (bethe_residual(zp, alpha, l) - F) / h
        step = np.linalg.solve(J, -F)
        lam = 1.0
        while lam > 1e-6:
            if np.abs(bethe_residual(z + lam * step, alpha, l)).max() < np.abs(F).max():
                break
            lam /= 2
        z = z + lam * step
    res = float(np.abs(bethe_residual(z, alpha, l)).max())
    if res >= tol:
        raise RuntimeError(f"root iteration stalled at residual {res:.3e}")
    return BetheRoots(alpha=alpha, l=l, z=tuple(z), residual=res)


def excited_potential(roots: BetheRoots):
    """Deformed potential V(x) = x^(2a) + l(l+1)/x^2 - 2 (d/dx)^2 sum_k ln(x^(2a+2) - z_k).

    Returns a vectorized callable.  With m = 2a+2,
    (d/dx)^2 ln(x^m - z) = m(m-1) x^(m-2)/(x^m - z) - m^2 x^(2m-2)/(x^m - z)^2.
    """
    alpha, l = roots.alpha, roots.l
    zs = np.asarray(roots.z)
    m = 2.0 * alpha + 2.0

    def V(x):
        x = np.asarray(x, dtype=float)
        xm = x ** m
        base = x ** (2 * alpha) + l * (l + 1) / x ** 2
        corr = np.zeros_like(xm, dtype=complex)
        for z in zs:
            d = xm - z
            corr += m * (m - 1) * x ** (m - 2) / d - m ** 2 * x ** (2 * m - 2) / d ** 2
        return base - 2.0 * corr

    return V


def excited_potential_z(roots: BetheRoots):
    """Same operator after z = x^(2a+2), psi = x^((kappa-2)/(2 kappa)) Psi.

    Returns W(z, E) with kappa = 1/(1+a):

    W = [kappa^2 l(l+1) + (kappa^2-4)/4] / (4 z^2)
        + [kappa^2/4 - sum_k (kappa-2)/z_k] / z
        + sum_k [ 2/(z - z_k)^2 + (kappa-2)/(z_k (z - z_k)) ]
        - (kappa^2 E / 4) z^(kappa-2)
    """
    alpha, l = roots.alpha, roots.l
    zs = np.asarray(roots.z)
    kap = 1.0 / (1.0 + alpha)

    def W(z, energy):
        z = np.asarray(z, dtype=complex)
        out = (kap ** 2 * l * (l + 1) + (kap ** 2 - 4) / 4) / (4 * z ** 2)
        out = out + (kap ** 2 / 4 - np.sum((kap - 2) / zs)) / z
        for zk in zs:
            out = out + 2 / (z - zk) ** 2 + (kap - 2) / (zk * (z - zk))
        return out - kap ** 2 * energy / 4 * z ** (kap - 2)

    return W
