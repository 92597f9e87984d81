"""Moment and partition-function identities of the log-gas.

Three families of checks, all of which must vanish for the exact
ensemble:

* ``virasoro_residual``        : quadratic constraints tying moments of
  power sums p_n to the couplings (one residual per integer n >= -1).
* ``loop_identity_residual``   : the pointwise Ward identity obtained by
  integrating a total derivative against a (z - x)^alpha insertion.
* ``bpz_ode_residual`` and ``confluent_bpz_residual`` : the second-order
  ODE in the insertion point z satisfied by the deformed partition
  function when alpha is 1 or -beta/2.  Derivatives with respect to z,
  the source positions, and the couplings are taken by central finite
  differences over nested quadrature evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import default_domain, nested_quad
from .spec import EnsembleSpec, MCStat, MultiPenner, PolynomialCouplings, SampleBatch


def _weighted_stat(values: np.ndarray, log_weights: np.ndarray) -> MCStat:
    """Self-normalized importance-sampling mean with delta-method stderr."""
    lw = np.asarray(log_weights)
    n = len(values)
    if np.all(lw == 0):
        mean = np.mean(values)
        stderr = float(np.std(values) / np.sqrt(n))
        return MCStat(mean=complex(mean), stderr=stderr, n_samples=n)
    w = np.exp(lw - np.max(np.real(lw)))
    wsum = np.sum(w)
    mean = np.sum(w * values) / wsum
    resid = values - mean
    stderr = float(np.sqrt(np.sum(np.abs(w) ** 2 * np.abs(resid) ** 2)) / abs(wsum))
    return MCStat(mean=complex(mean), stderr=stderr, n_samples=n)


def virasoro_stat(xs: np.ndarray, couplings: tuple[float, ...], kappa: float, n: int) -> np.ndarray:
    """Per-configuration statistic whose ensemble mean vanishes.

        kappa * sum_{m=0}^{n} p_m p_{n-m}
      + sum_{m>=1} m t_m p_{n+m}
      + (1 - kappa) (n + 1) p_n          with p_0 = M.

    xs has shape (n_samples, M); n >= -1 (the quadratic sum is empty for
    n = -1 and the linear term drops since n + 1 = 0).
    """
    if n < -1:
        raise ValueError(f"constraint index must be >= -1, got {n}")
    m_eig = xs.shape[1]

    def p(k: int) -> np.ndarray:
        if k == 0:
            return np.full(xs.shape[0], float(m_eig))
        return np.sum(xs ** k, axis=1)

    out = np.zeros(xs.shape[0])
    for m in range(0, n + 1):
        out += kappa * p(m) * p(n - m)
    for m in range(1, len(couplings)):
        if couplings[m] != 0.0:
            out += m * couplings[m] * p(n + m)
    if n >= 0:
        out += (1.0 - kappa) * (n + 1) * p(n)
    return out


def virasoro_residual(batch: SampleBatch, n: int) -> MCStat:
    """Monte Carlo estimate of the n-th moment constraint residual."""
    couplings = batch.spec.potential.couplings()
    vals = virasoro_stat(batch.configs, couplings, batch.spec.kappa, n)
    return _weighted_stat(vals, batch.log_weights)


def virasoro_quadrature_residual(
    spec: EnsembleSpec, n: int, domain: tuple[float, float] | None = None
) -> tuple[float, float]:
    """The same constraint evaluated by nested quadrature (M <= 3).

    Returns (residual, error_estimate), normalized by the partition
    function.
    """
    from .quadrature import ensemble_average

    couplings = spec.potential.couplings()
    val, est = ensemble_average(
        spec, lambda xs: virasoro_stat(xs[None, :], couplings, spec.kappa, n)[0], domain=domain
    )
    return float(np.real(val)), est


def loop_identity_residual(batch: SampleBatch, z: complex, alpha: float) -> MCStat:
    """Ward identity at external point z with a (z - x)^alpha insertion.

        < sum_k [ (1 - alpha)/(z - x_k)^2
                  + sum_{j != k} beta / ((z - x_k)(x_k - x_j))
                  - V'(x_k)/(z - x_k) ] >_alpha  =  0

    for any alpha and any z off the eigenvalue support.  The insertion
    enters as the reweighting exp(alpha * sum_i log(z - x_i)) on top of
    the batch's own log-weights.
    """
    spec = batch.spec
    couplings = spec.potential.couplings()
    xs = batch.configs
    dz = np.asarray(z, dtype=complex) - xs  # (n, M)
    if np.any(np.abs(dz) < 1e-12):
        raise ValueError("z collides with an eigenvalue; move it off the support")

    vprime = np.zeros_like(xs)
    for k, tk in enumerate(couplings):
        if k >= 1 and tk != 0.0:
            vprime += -k * tk * xs ** (k - 1)

    vals = np.sum((1.0 - alpha) / dz ** 2 - vprime / dz, axis=1)
    m = xs.shape[1]
    if m > 1:
        diff = xs[:, :, None] - xs[:, None, :]  # [i, k, j] = x_k - x_j
        mask = ~np.eye(m, dtype=bool)
        inv = np.zeros_like(diff)
        inv[:, mask] = 1.0 / diff[:, mask]
        r = np.sum(inv, axis=2)  # r_k = sum_{j != k} 1/(x_k - x_j)
        vals = vals + spec.beta * np.sum(r / dz, axis=1)

    logw = batch.log_weights + alpha * np.sum(np.log(dz), axis=1)
    return _weighted_stat(vals, logw)


@dataclass(frozen=True)
class IdentityResidual:
    """Finite-difference identity residual with separated error sources."""

    residual: float
    fd_error: float
    quad_error: float
    scale: float

    @property
    def combined(self) -> float:
        return self.fd_error + self.quad_error


def _match_alpha(alpha: float, beta: float) -> str:
    if abs(alpha - 1.0) < 1e-12:
        return "screening"
    if abs(alpha + beta / 2.0) < 1e-12:
        return "degenerate"
    raise ValueError(f"identity requires alpha in {{1, -beta/2}}, got {alpha}")


def _combine(kind: str, kappa: float, zz: float, z1: float, drift: float, src: float) -> float:
    # screening (alpha = 1):      kappa Z'' - V'(z) Z' - T[Z] = 0
    # degenerate (alpha = -b/2):        Z'' + V'(z) Z' - kappa T[Z] = 0
    if kind == "screening":
        return kappa * zz - drift * z1 - src
    return zz + drift * z1 - kappa * src


def _combine_err(kind: str, kappa: float, ezz: float, ez1: float, drift: float, esrc: float) -> float:
    if kind == "screening":
        return kappa * ezz + abs(drift) * ez1 + esrc
    return ezz + abs(drift) * ez1 + kappa * esrc


def bpz_ode_residual(
    spec: EnsembleSpec,
    alpha: float,
    z: float,
    fd_step: float = 1e-4,
    epsabs: float = 1e-12,
) -> IdentityResidual:
    """Second-order ODE in z for the source-deformed partition function.

    Valid for alpha = 1 and alpha = -beta/2 with a multi-source
    potential; the source term is sum_l (z - w_l)^{-1} dZ/dw_l with the
    source derivatives taken by moving each source position.
    """
    pot = spec.potential
    if not isinstance(pot, MultiPenner):
        raise ValueError("this identity needs a multi-source potential")
    kind = _match_alpha(alpha, spec.beta)
    kappa = spec.kappa
    w0 = pot.positions
    beta = spec.beta
    expo = [-pot.C * m for m in pot.masses]
    # the eigenvalue density carries |x - w_l|^(-C m_l) at each source;
    # the integral over the hull only exists when every exponent is > -1
    for p in expo:
        if p <= -1.0:
            raise ValueError(f"endpoint exponent -C*m = {p} is not integrable; need -C*m > -1")

    def Z_at(zv: float, positions: tuple[float, ...]) -> tuple[float, float]:
        lo, hi = min(positions), max(positions)
        if lo <= zv <= hi:
            raise ValueError(f"z={zv} must lie outside the source hull [{lo}, {hi}]")

        def integrand(xs: list[float]) -> float:
            arr = np.asarray(xs)
            with np.errstate(divide="ignore"):
                lw = alpha * np.sum(np.log(np.abs(zv - arr)))
                for i in range(len(arr)):
                    for j in range(i + 1, len(arr)):
                        lw += beta * np.log(abs(arr[i] - arr[j]))
                for w, p in zip(positions, expo):
                    lw += p * np.sum(np.log(np.abs(arr - w)))
            return float(np.exp(lw))

        bounds = [(lo, hi)] * spec.n_eigen
        val, err = nested_quad(integrand, bounds, epsabs=epsabs)
        return float(np.real(val)), err

    drift = pot.C * sum(m / (z - wl) for m, wl in zip(pot.masses, w0))

    def residual_at(h: float) -> tuple[float, float, float]:
        z0, e0 = Z_at(z, w0)
        zp, ep = Z_at(z + h, w0)
        zm, em = Z_at(z - h, w0)
        z1 = (zp - zm) / (2 * h)
        zz = (zp - 2 * z0 + zm) / h ** 2
        ezz = (ep + 2 * e0 + em) / h ** 2
        ez1 = (ep + em) / (2 * h)
        src, esrc = 0.0, 0.0
        for l, wl in enumerate(w0):
            wp = tuple(w + (h if i == l else 0.0) for i, w in enumerate(w0))
            wm = tuple(w - (h if i == l else 0.0) for i, w in enumerate(w0))
            vp, eep = Z_at(z, wp)
            vm, eem = Z_at(z, wm)
            src += (vp - vm) / (2 * h) / (z - wl)
            esrc += (eep + eem) / (2 * h) / abs(z - wl)
        res = _combine(kind, kappa, zz, z1, drift, src)
        qerr = _combine_err(kind, kappa, ezz, ez1, drift, esrc)
        scale = max(abs(zz), abs(drift * z1), abs(src), abs(z0))
        return res, qerr, scale

    r_h, qe_h, scale = residual_at(fd_step)
    r_2h, _, _ = residual_at(2 * fd_step)
    return IdentityResidual(residual=abs(r_h), fd_error=abs(r_h - r_2h), quad_error=qe_h, scale=scale)


def confluent_bpz_residual(
    spec: EnsembleSpec,
    alpha: float,
    z: float,
    fd_step: float = 1e-4,
    domain: tuple[float, float] | None = None,
    epsabs: float = 1e-12,
) -> IdentityResidual:
    """Same ODE for polynomial couplings; coupling derivatives replace
    the source derivatives:

        T[Z] = sum_{k>=1} k t_k sum_{a+b=k-2, a,b>=0} z^a dZ/dt_b,

    with dZ/dt_0 = M Z used exactly.
    """
    pot = spec.potential
    if not isinstance(pot, PolynomialCouplings):
        raise ValueError("this identity needs polynomial couplings")
    kind = _match_alpha(alpha, spec.beta)
    kappa = spec.kappa
    t0 = pot.couplings()
    dom = domain if domain is not None else default_domain(spec)
    if dom[0] <= z <= dom[1]:
        raise ValueError(f"z={z} must lie outside the integration domain {dom}")
    m_eig = spec.n_eigen
    bounds = [dom] * m_eig
    beta = spec.beta
    kmax = len(t0) - 1
    bmax = max(kmax - 2, 0)

    def Z_at(zv: float, t: tuple[float, ...]) -> tuple[float, float]:
        def integrand(xs: list[float]) -> float:
            arr = np.asarray(xs)
            with np.errstate(divide="ignore"):
                lw = alpha * np.sum(np.log(np.abs(zv - arr)))
                for i in range(len(arr)):
                    for j in range(i + 1, len(arr)):
                        lw += beta * np.log(abs(arr[i] - arr[j]))
            for k, tk in enumerate(t):
                if tk != 0.0:
                    lw += tk * np.sum(arr ** k)
            return float(np.exp(lw))

        val, err = nested_quad(integrand, bounds, epsabs=epsabs)
        return float(np.real(val)), err

    drift = -sum(k * t0[k] * z ** (k - 1) for k in range(1, kmax + 1))
    # coefficient in front of dZ/dt_b inside the source term
    bcoef = {b: sum(k * t0[k] * z ** (k - 2 - b) for k in range(b + 2, kmax + 1)) for b in range(0, bmax + 1)}

    def residual_at(h: float) -> tuple[float, float, float]:
        z0, e0 = Z_at(z, t0)
        zp, ep = Z_at(z + h, t0)
        zm, em = Z_at(z - h, t0)
        z1 = (zp - zm) / (2 * h)
        zz = (zp - 2 * z0 + zm) / h ** 2
        ezz = (ep + 2 * e0 + em) / h ** 2
        ez1 = (ep + em) / (2 * h)
        dzdt = {0: m_eig * z0}
        ed = {0: m_eig * e0}
        for b in range(1, bmax + 1):
            tp = tuple(tk + (h if k == b else 0.0) for k, tk in enumerate(t0))
            tm = tuple(tk - (h if k == b else 0.0) for k, tk in enumerate(t0))
            vp, eep = Z_at(z, tp)
            vm, eem = Z_at(z, tm)
            dzdt[b] = (vp - vm) / (2 * h)
            ed[b] = (eep + eem) / (2 * h)
        src = sum(bcoef[b] * dzdt[b] for b in dzdt)
        esrc = sum(abs(bcoef[b]) * ed[b] for b in ed)
        res = _combine(kind, kappa, zz, z1, drift, src)
        qerr = _combine_err(kind, kappa, ezz, ez1, drift, esrc)
        scale = max(abs(zz), abs(drift * z1), abs(src), abs(z0))
        return res, qerr, scale

    r_h, qe_h, scale = residual_at(fd_step)
    r_2h, _, _ = residual_at(2 * fd_step)
    return IdentityResidual(residual=abs(r_h), fd_error=abs(r_h - r_2h), quad_error=qe_h, scale=scale)
