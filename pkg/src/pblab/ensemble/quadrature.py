"""Deterministic reference integrals for small ensembles (M <= 3).

Nested adaptive quadrature over the joint eigenvalue density.  These are
slow but independent of the sampler, so they serve as ground truth for
the Monte Carlo identity checks at low dimension.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .spec import EnsembleSpec, Gaussian, MultiPenner, PolynomialCouplings

MAX_QUAD_DIM = 3


def default_domain(spec: EnsembleSpec) -> tuple[float, float]:
    """A finite integration interval carrying all but a negligible tail."""
    pot = spec.potential
    if isinstance(pot, Gaussian):
        return (-10.0 * pot.a, 10.0 * pot.a)
    if isinstance(pot, PolynomialCouplings):
        if not pot.confining():
            raise ValueError("polynomial potential must be confining for quadrature")
        k = len(pot.t) - 1
        while pot.t[k] == 0.0:
            k -= 1
        r = 1.3 * (60.0 / abs(pot.t[k])) ** (1.0 / k)
        return (-r, r)
    if isinstance(pot, MultiPenner):
        return (min(pot.positions), max(pot.positions))
    raise ValueError(f"unsupported potential {pot!r}")


def log_weight(spec: EnsembleSpec, xs: np.ndarray) -> float:
    """Unnormalized log-density of a configuration (real part only).

    Coincident points give log(0) = -inf, i.e. zero density; silenced.
    """
    xs = np.asarray(xs, dtype=float)
    pot = spec.potential
    lw = 0.0
    with np.errstate(divide="ignore"):
        for i in range(len(xs)):
            for j in range(i + 1, len(xs)):
                lw += spec.beta * np.log(abs(xs[i] - xs[j]))
        if isinstance(pot, MultiPenner):
            for l, w in enumerate(pot.positions):
                lw += -pot.C * pot.masses[l] * np.sum(np.log(np.abs(xs - w)))
        else:
            t = pot.couplings()
            for k, tk in enumerate(t):
                if tk != 0.0:
                    lw += tk * np.sum(xs ** k)
    return lw


def nested_quad(
    f: Callable[[Sequence[float]], complex],
    bounds: Sequence[tuple[float, float]],
    epsabs: float = 1e-12,
    epsrel: float = 1e-10,
    limit: int = 200,
    complex_ok: bool = False,
) -> tuple[complex, float]:
    """Iterated 1D adaptive quadrature of f over a box.

    Returns (value, error_estimate).  The error estimate is the outer
    quad's report scaled by the dimension; inner-level errors are assumed
    comparable, so treat it as an order of magnitude, not a bound.
    """
    ndim = len(bounds)
    if ndim > MAX_QUAD_DIM:
        raise ValueError(f"quadrature only supported up to {MAX_QUAD_DIM} dimensions")
    inner_abs = epsabs * (100.0 if ndim > 1 else 1.0)

    def integrate(level: int, xs: list[float]) -> tuple[complex, float]:
        lo, hi = bounds[level]
        ea = epsabs if level == 0 else inner_abs
        if level == ndim - 1:
            g = lambda x: f(xs + [x])
        else:
            g = lambda x: integrate(level + 1, xs + [x])[0]
        val, err = quad(g, lo, hi, epsabs=ea, epsrel=epsrel, limit=limit, complex_func=complex_ok)
        return val, err

    val, err = integrate(0, [])
    return val, err * ndim


def ensemble_average(
    spec: EnsembleSpec,
    observable: Callable[[np.ndarray], complex],
    domain: tuple[float, float] | None = None,
    epsabs: float = 1e-12,
) -> tuple[complex, float]:
    """<observable> under the joint density, via nested quadrature.

    Returns (value, error_estimate) where the estimate combines the
    numerator and denominator quad reports.
    """
    if spec.n_eigen > MAX_QUAD_DIM:
        raise ValueError(f"ensemble_average requires n_eigen <= {MAX_QUAD_DIM}")
    dom = domain if domain is not None else default_domain(spec)
    bounds = [dom] * spec.n_eigen

    def dens(xs: Sequence[float]) -> float:
        return float(np.exp(log_weight(spec, np.asarray(xs))))

    znum, enum_ = nested_quad(
        lambda xs: observable(np.asarray(xs)) * dens(xs), bounds, epsabs=epsabs, complex_ok=True
    )
    zden, eden = nested_quad(lambda xs: dens(xs), bounds, epsabs=epsabs)
    if zden == 0:
        raise ValueError("normalization integral vanished; check the domain")
    avg = znum / zden
    est = abs(enum_ / zden) + abs(avg) * abs(eden / zden)
    return avg, est


def power_sum_moment(
    spec: EnsembleSpec, n: int, domain: tuple[float, float] | None = None
) -> tuple[float, float]:
    """<p_n> = <sum_i x_i^n> with its quadrature error estimate."""
    if n == 0:
        return float(spec.n_eigen), 0.0
    val, est = ensemble_average(spec, lambda xs: np.sum(xs ** n), domain=domain)
    return float(np.real(val)), est
