"""Spectral determinant D(E) and its functional-relation checks.

D(E) = (1/2) W[chi, psi] with both solutions canonically normalized; its
zeros are the eigenvalues of -d^2/dx^2 + x^(2a) + l(l+1)/x^2.  The lateral
solutions obtained by rotating x -> qx, E -> E/q^2 with q = exp(i pi/(1+a))
tie D to itself through Wronskian identities; those residuals are computed
here, together with an independent finite-difference oracle for the
spectrum and the zero-product representation of D.
"""
from __future__ import annotations

import cmath
import math
import warnings

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gamma as _gamma

from .problem import SpectralProblem, WaveValue
from .shooting import chi_at_match, psi_at_match, rotate_on_arc


def spectral_D(problem: SpectralProblem, energy: complex) -> complex:
    """D(E) = (1/2) W[chi, psi] at the matching point."""
    psi = psi_at_match(problem, energy)
    chi, logfac = chi_at_match(problem, energy)
    return 0.5 * (chi.value * psi.derivative - chi.derivative * psi.value) \
        * np.exp(logfac)


def _chi_true(problem: SpectralProblem, energy: complex) -> WaveValue:
    chi, logfac = chi_at_match(problem, energy)
    f = np.exp(logfac)
    return WaveValue(chi.x, chi.value * f, chi.derivative * f)


def chi_minus_at_match(problem: SpectralProblem, energy: complex) -> WaveValue:
    """Rotated partner chi^-(x,E) = i q^(-1/2) chi(qx, E/q^2) at x_match.

    Built by shooting chi inward on the real axis at energy E/q^2, then
    continuing along the arc |z| = x_match to arg z = pi/(1+a).
    Normalized so that W[chi, chi^-] = 2.
    """
    q = problem.q
    e2 = energy / q ** 2
    chi, logfac = chi_at_match(problem, e2)
    y = rotate_on_arc(problem, e2, [chi.value, chi.derivative],
                      math.pi / (1.0 + problem.alpha))
    f = np.exp(logfac)
    # d/dx of chi(qx) is q chi'(qx)
    return WaveValue(problem.x_match,
                     1j * q ** (-0.5) * y[0] * f,
                     1j * q ** 0.5 * y[1] * f)


def _chi_minus_minus(problem: SpectralProblem, energy: complex) -> WaveValue:
    """Twice-rotated partner -q^(-1) chi(q^2 x, E/q^4) at x_match."""
    q = problem.q
    e4 = energy / q ** 4
    chi, logfac = chi_at_match(problem, e4)
    y = rotate_on_arc(problem, e4, [chi.value, chi.derivative],
                      2.0 * math.pi / (1.0 + problem.alpha))
    f = np.exp(logfac)
    return WaveValue(problem.x_match,
                     -y[0] * f / q,
                     -q * y[1] * f)


def quantum_wronskian_residual(problem: SpectralProblem, energy: complex) -> complex:
    """Residual of the two-parameter determinant identity.

    q^(l+1/2) D(q^2 E, l) D(E, -l-1) - q^(-l-1/2) D(E, l) D(q^2 E, -l-1)
        = q^(l+1/2) - q^(-l-1/2)
    """
    q = problem.q
    l = complex(problem.l)
    conj = problem.conjugate_l()
    t1 = q ** (l + 0.5) * spectral_D(problem, q ** 2 * energy) \
        * spectral_D(conj, energy)
    t2 = q ** (-l - 0.5) * spectral_D(problem, energy) \
        * spectral_D(conj, q ** 2 * energy)
    return t1 - t2 - (q ** (l + 0.5) - q ** (-l - 0.5))


def symmetry_checks(problem: SpectralProblem, energy: complex) -> dict[str, complex]:
    """Wronskian pins and rotation identities at one energy.

    Residual entries (should vanish):
      chi_pair_wronskian        |W[chi, chi^-] - 2|
      psi_pair_wronskian        |W[psi+, psi-] - 2i(q^(l+1/2) - q^(-l-1/2))|
      rotation_first            coefficient of chi in psi vs -i q^(-l-1/2) D(E/q^2, l)
      rotation_second           same for the l -> -l-1 solution
      determinant_consistency   W[chi, psi-]/2 vs D(E, -l-1)
      zero_energy_product       |D(0,l) D(0,-l-1) - 1|
    Reported values (no pinned target):
      closure_a, closure_u      expansion of the twice-rotated solution
                                in the (chi, chi^-) basis
    """
    q = problem.q
    l = complex(problem.l)
    conj = problem.conjugate_l()

    psi_p = psi_at_match(problem, energy)
    psi_m = psi_at_match(conj, energy)
    chi = _chi_true(problem, energy)
    chm = chi_minus_at_match(problem, energy)
    chmm = _chi_minus_minus(problem, energy)

    out: dict[str, complex] = {}
    out["chi_pair_wronskian"] = abs(chi.wronskian(chm) - 2.0)
    out["psi_pair_wronskian"] = abs(
        psi_p.wronskian(psi_m) - 2j * (q ** (l + 0.5) - q ** (-l - 0.5)))

    c_coef = psi_p.wronskian(chm) / 2.0
    out["rotation_first"] = abs(
        c_coef - (-1j) * q ** (-l - 0.5) * spectral_D(problem, energy / q ** 2))
    a_coef = psi_m.wronskian(chm) / 2.0
    out["rotation_second"] = abs(
        a_coef - (-1j) * q ** (l + 0.5) * spectral_D(conj, energy / q ** 2))
    b_coef = chi.wronskian(psi_m) / 2.0
    out["determinant_consistency"] = abs(b_coef - spectral_D(conj, energy))
    out["zero_energy_product"] = abs(
        spectral_D(problem, 0.0) * spectral_D(conj, 0.0) - 1.0)

    out["closure_a"] = chmm.wronskian(chm) / 2.0
    out["closure_u"] = chi.wronskian(chmm) / 2.0
    return out


def _sl_eigs(alpha: float, lr: float, count: int, x_max: float, m: int) -> np.ndarray:
    """Lowest eigenvalues of the staggered-flux discretization.

    The substitution u = psi/x^(l+1) gives a Sturm-Liouville problem with
    weight x^(2l+2); the flux form keeps the operator symmetric tridiagonal
    and second-order accurate.
    """
    h = x_max / m
    xc = (np.arange(m) + 0.5) * h
    xf = np.arange(m + 1) * h
    wgt = xc ** (2 * lr + 2)
    flux = xf ** (2 * lr + 2) / h ** 2
    dmain = (flux[:-1] + flux[1:]) / wgt + xc ** (2 * alpha)
    doff = -flux[1:-1] / np.sqrt(wgt[:-1] * wgt[1:])
    return eigh_tridiagonal(dmain, doff, select="i",
                            select_range=(0, count - 1), eigvals_only=True)


def fd_oracle_eigs(problem: SpectralProblem, count: int,
                   x_max: float | None = None, n: int = 6000,
                   richardson: bool = True) -> np.ndarray:
    """Independent spectrum estimate by direct discretization.

    Two grids plus Richardson extrapolation push the O(h^2) error of the
    scheme to O(h^4).
    """
    l = complex(problem.l)
    if abs(l.imag) > 0:
        raise ValueError("oracle requires real l")
    lr = l.real
    alpha = problem.alpha

    if x_max is None:
        x_max = 5.0
        for _ in range(8):
            ev = _sl_eigs(alpha, lr, count, x_max, n)
            # domain ends well past the classical turning point of the top level
            if (0.75 * x_max) ** (2 * alpha) >= 2.0 * ev[-1]:
                break
            x_max *= 1.4
    else:
        ev = _sl_eigs(alpha, lr, count, x_max, n)
    if not richardson:
        return ev
    ev_half = _sl_eigs(alpha, lr, count, x_max, n // 2)
    return (4.0 * ev - ev_half) / 3.0


def _secant_refine(f, lo: float, hi: float, flo: float, fhi: float,
                   rel_tol: float) -> float:
    """Secant iteration kept inside a sign-change bracket."""
    x0, f0, x1, f1 = lo, flo, hi, fhi
    for _ in range(80):
        if f1 == f0:
            x2 = 0.5 * (lo + hi)
        else:
            x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
            if not lo < x2 < hi:
                x2 = 0.5 * (lo + hi)
        f2 = f(x2)
        if flo * f2 <= 0:
            hi, fhi = x2, f2
        else:
            lo, flo = x2, f2
        if abs(x2 - x1) <= rel_tol * max(abs(x2), 1e-30):
            return x2
        x0, f0, x1, f1 = x1, f1, x2, f2
    warnings.warn("secant refinement hit the iteration cap", RuntimeWarning)
    return x1


def eigenvalues(problem: SpectralProblem, count: int,
                rel_tol: float = 1e-8) -> np.ndarray:
    """First ``count`` zeros of D(E) on the real axis.

    Brackets come from the discretized-operator oracle; each zero is then
    refined by a bracketed secant iteration to ``rel_tol`` relative
    accuracy.  A completeness warning is raised if a level cannot be
    bracketed near its oracle estimate.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    oracle = fd_oracle_eigs(problem, count + 1)
    gaps = np.diff(oracle)

    def d_real(e: float) -> float:
        return spectral_D(problem, e).real

    found: list[float] = []
    for k in range(count):
        g = gaps[k] if k < len(gaps) else gaps[-1]
        lo, hi = oracle[k] - 0.35 * g, oracle[k] + 0.35 * g
        flo, fhi = d_real(lo), d_real(hi)
        if flo * fhi > 0:
            # widen to the midpoints with the neighbours and rescan densely
            lo = 0.5 * (oracle[k - 1] + oracle[k]) if k > 0 else oracle[k] - 0.75 * g
            hi = 0.5 * (oracle[k] + oracle[k + 1])
            grid = np.linspace(lo, hi, 13)
            vals = [d_real(e) for e in grid]
            for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
                if fa * fb <= 0:
                    lo, hi, flo, fhi = a, b, fa, fb
                    break
            else:
                warnings.warn(
                    f"level {k}: no sign change near oracle value {oracle[k]:.6g}; "
                    f"zero set is incomplete ({len(found)} of {count})",
                    RuntimeWarning)
                continue
        found.append(_secant_refine(d_real, lo, hi, flo, fhi, rel_tol))
    return np.array(found)


def truncated_product(problem: SpectralProblem, energy: complex,
                      levels: np.ndarray | None = None,
                      n_levels: int = 16) -> complex:
    """D(E)/D(0) from its zeros, with an asymptotic tail correction.

    The finite product over known levels is completed by estimating the
    tail sums sum 1/E_n^m (m = 1, 2, 3) from the growth law
    E_n ~ A (n + delta)^p, p = 2a/(a+1), fitted to the last two levels,
    and exponentiating -sum_m E^m S_m / m.
    """
    if levels is None:
        levels = eigenvalues(problem, n_levels)
    levels = np.asarray(levels, dtype=float)
    if levels.size < 3:
        raise ValueError("need at least 3 levels for the tail fit")
    alpha = problem.alpha
    p = 2.0 * alpha / (alpha + 1.0)
    nn = levels.size - 1
    ratio = (levels[-1] / levels[-2]) ** (1.0 / p)
    delta = (ratio * (nn - 1) - nn) / (1.0 - ratio)
    amp = levels[-1] / (nn + delta) ** p

    def tail_sum(m: int) -> float:
        pm = p * m
        t = nn + 1 + delta
        val = t ** (1.0 - pm) / (pm - 1.0) + 0.5 * t ** (-pm) \
            + pm * t ** (-pm - 1.0) / 12.0
        return val / amp ** m

    log_tail = -(energy * tail_sum(1) + energy ** 2 * tail_sum(2) / 2.0
                 + energy ** 3 * tail_sum(3) / 3.0)
    return np.prod(1.0 - energy / levels) * cmath.exp(log_tail)


def blz_A(alpha: float, lam: complex, p: complex, branch: str = "+") -> complex:
    """Vacuum eigenvalue A_{+/-}(lambda, p) expressed through D.

    A_{+/-}(lambda, p) = D(rho lambda^2, l) with l = +/- 2p/kappa - 1/2,
    kappa = 1/(1+alpha), rho = (2/kappa)^(2-2kappa) Gamma(1-kappa)^2.
    Requires kappa < 1/2, i.e. alpha > 1, and Re(l) > -3/2.
    """
    if branch not in ("+", "-"):
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")
    kappa = 1.0 / (1.0 + alpha)
    rho = (2.0 / kappa) ** (2.0 - 2.0 * kappa) * _gamma(1.0 - kappa) ** 2
    sign = 1.0 if branch == "+" else -1.0
    l_eff = sign * 2.0 * p / kappa - 0.5
    prob = SpectralProblem(alpha=alpha, l=l_eff)
    return spectral_D(prob, rho * lam ** 2)
