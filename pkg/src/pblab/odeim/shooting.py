"""Shooting machinery for -psi'' + (x^(2a) + l(l+1)/x^2) psi = E psi.

Two canonically normalized solutions are produced:

* ``psi``: fixed by behaviour at the origin, psi ~ N x^(l+1) (1 + ...),
  with N chosen so that the spectral determinant built from it satisfies
  the exact zero-energy product and rotation identities.
* ``chi``: fixed by decay at +infinity, chi ~ x^(-a/2) exp(-x^(1+a)/(1+a)),
  seeded from an asymptotic Riccati series and integrated inward in
  renormalized segments (a log factor is carried separately).
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import gamma as _gamma

from .problem import SpectralProblem, WaveValue


def psi_series(problem: SpectralProblem, energy: complex):
    """Small-x series of psi; returns eval_at(x) -> (value, derivative).

    psi = N x^(l+1) sum_s c_s x^s on the lattice s = 2j + (2+2a)m with
    c_s = (c_{s-2-2a} - E c_{s-2}) / (s (2l+1+s)).
    """
    alpha = problem.alpha
    l = complex(problem.l)
    step_e = 2.0 + 2.0 * alpha
    smax = float(problem.series_cutoff)
    c: dict[float, complex] = {0.0: 1.0 + 0j}
    todo = sorted({round(2 * j + step_e * m, 12) for j in range(40) for m in range(40)
                   if 0 < 2 * j + step_e * m <= smax})
    for s in todo:
        prev2 = c.get(round(s - 2, 12), 0.0)
        prevs = c.get(round(s - step_e, 12), 0.0)
        if prev2 == 0.0 and prevs == 0.0:
            continue
        den = s * (2 * l + 1 + s)
        if abs(den) <= 1e-9:
            raise ValueError(f"resonant exponent s={s} for l={problem.l}")
        c[s] = (prevs - energy * prev2) / den
    u = (2 * l + 1) / step_e
    norm = math.sqrt(2 * math.pi / (1 + alpha)) * step_e ** (-u) / _gamma(1 + u)

    def eval_at(x: float) -> tuple[complex, complex]:
        ps = sum(cs * x ** s for s, cs in c.items())
        dps = sum(cs * (l + 1 + s) * x ** s for s, cs in c.items())
        return norm * x ** (l + 1) * ps, norm * x ** l * dps

    return eval_at


def _sch_rhs(x, y, alpha, l, energy):
    psi, dpsi = y
    return [dpsi, (x ** (2 * alpha) + l * (l + 1) / x ** 2 - energy) * psi]


def psi_at_match(problem: SpectralProblem, energy: complex) -> WaveValue:
    """Origin-normalized solution carried to the matching point."""
    alpha = problem.alpha
    l = complex(problem.l)
    x0 = problem.seed_point(energy)
    y0 = np.array(psi_series(problem, energy)(x0), dtype=complex)
    r = solve_ivp(_sch_rhs, (x0, problem.x_match), y0, args=(alpha, l, energy),
                  method="DOP853", rtol=1e-13, atol=1e-300)
    if not r.success:
        raise RuntimeError(f"psi shot failed: {r.message}")
    return WaveValue(problem.x_match, r.y[0, -1], r.y[1, -1])


def riccati_series(problem: SpectralProblem, energy: complex,
                   niter: int = 12, emin: float | None = None) -> dict[float, complex]:
    """Large-x correction u to the log-derivative w = -x^a - a/(2x) + u.

    From w' + w^2 = x^(2a) + l(l+1)/x^2 - E:
        u = [E - A x^-2 + u' - (a/x) u + u^2] / (2 x^a),
        A = l(l+1) - a/2 - a^2/4,
    iterated on exponent dictionaries truncated below ``emin``.
    """
    alpha = problem.alpha
    l = complex(problem.l)
    A = l * (l + 1) - alpha / 2 - alpha ** 2 / 4
    if emin is None:
        emin = -8 * (1 + alpha)
    base = {round(-alpha, 12): energy / 2, round(-2 - alpha, 12): -A / 2}
    u = dict(base)
    for _ in range(niter):
        new = dict(base)
        for e, d in u.items():
            ee = round(e - 1 - alpha, 12)
            if ee >= emin:
                new[ee] = new.get(ee, 0.0) + d * e / 2
        for e, d in u.items():
            ee = round(e - 1 - alpha, 12)
            if ee >= emin:
                new[ee] = new.get(ee, 0.0) - alpha * d / 2
        for e1, d1 in u.items():
            for e2, d2 in u.items():
                ee = round(e1 + e2 - alpha, 12)
                if ee >= emin:
                    new[ee] = new.get(ee, 0.0) + d1 * d2 / 2
        u = new
    return u


def chi_seed(problem: SpectralProblem, energy: complex,
             x_far: float) -> tuple[complex, complex]:
    """(log chi, chi'/chi) at the far boundary from the asymptotic series."""
    alpha = problem.alpha
    u = riccati_series(problem, energy)
    w = -x_far ** alpha - alpha / (2 * x_far) + sum(d * x_far ** e for e, d in u.items())
    ln_chi = -x_far ** (1 + alpha) / (1 + alpha) - (alpha / 2) * math.log(x_far)
    for e, d in u.items():
        if abs(e + 1) <= 1e-9:
            raise ValueError(f"non-integrable exponent e={e} in decay series")
        ln_chi += d * x_far ** (e + 1) / (e + 1)
    return ln_chi, w


def chi_at_match(problem: SpectralProblem, energy: complex) -> tuple[WaveValue, complex]:
    """Decaying solution integrated inward; true chi = value * exp(logfac).

    Returns (scaled WaveValue at x_match, logfac).  The integration is cut
    into segments, each renormalized to unit size, so the exponential
    contrast between the two behaviours never reaches the state vector.
    """
    alpha = problem.alpha
    l = complex(problem.l)
    x_far = problem.far_point(energy)
    ln_chi, w = chi_seed(problem, energy, x_far)
    y = np.array([1.0 + 0j, w])
    logfac = ln_chi + 0j
    xs = np.linspace(x_far, problem.x_match, problem.n_segments + 1)
    for a, b in zip(xs[:-1], xs[1:]):
        r = solve_ivp(_sch_rhs, (a, b), y, args=(alpha, l, energy),
                      method="DOP853", rtol=1e-13, atol=1e-300)
        if not r.success:
            raise RuntimeError(f"chi shot failed on [{a}, {b}]: {r.message}")
        y = r.y[:, -1]
        sc = abs(y[0]) + abs(y[1])
        y = y / sc
        logfac = logfac + np.log(sc)
    return WaveValue(problem.x_match, y[0], y[1]), logfac


def rotate_on_arc(problem: SpectralProblem, energy: complex,
                  y: np.ndarray, theta_end: float,
                  n_segments: int = 8) -> np.ndarray:
    """Continue (f, df/dz) from x_match along the arc z = x_match e^(i theta).

    ``energy`` is the energy of the equation being continued (the rotated
    frame's energy, not the physical one).  Renormalization is skipped:
    on the arcs used here the solution stays within a few e-folds.
    """
    alpha = problem.alpha
    l = complex(problem.l)
    xm = problem.x_match

    def arc(th, y):
        z = xm * np.exp(1j * th)
        dz = 1j * z
        return [y[1] * dz, (z ** (2 * alpha) + l * (l + 1) / z ** 2 - energy) * y[0] * dz]

    r = solve_ivp(arc, (0.0, theta_end), np.asarray(y, dtype=complex),
                  method="DOP853", rtol=1e-13, atol=1e-300,
                  max_step=theta_end / n_segments)
    if not r.success:
        raise RuntimeError(f"arc continuation failed: {r.message}")
    return r.y[:, -1]
