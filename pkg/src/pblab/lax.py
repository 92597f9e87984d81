"""The 2x2 linear problem attached to a pole configuration.

For a state (Q, Qdot, U) at time t, the matrices L(x) and B(x) defined
here satisfy the compatibility (zero-curvature) condition

    dL/dt - dB/dx + [L, B] = 0

along trajectories on the zero-integral manifold.  The first column F
of a solution of dPhi/dx = L Phi solves the scalar second-order ODE
with coefficients built from the fields P and b, and its t-flow under
B solves the backward parabolic equation; ``reconstruct`` integrates
the x-system, and the residual helpers verify each statement.

All x-derivatives of matrix entries are analytic (the entries are
ratios of polynomials whose coefficients are assembled exactly from
the pole data); only derivatives along the time direction use stencils
over a dense trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npp
from scipy.integrate import solve_ivp

from .poles import PoleState, Trajectory, eval_fields, poles_rhs, _invpow, _pad


@dataclass(frozen=True)
class Matrix2:
    """A 2x2 complex matrix with convenience algebra."""

    a11: complex
    a12: complex
    a21: complex
    a22: complex

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    @staticmethod
    def from_array(m: np.ndarray) -> "Matrix2":
        return Matrix2(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def max_abs(self) -> float:
        return float(np.abs(self.as_array()).max())

    @property
    def trace(self) -> complex:
        return self.a11 + self.a22


class _LaxCache:
    """Polynomial data of L and B for one state, evaluable at any x."""

    def __init__(self, state: PoleState):
        kappa = state.kappa
        Q, Qd, U = state.Q, state.Qdot, complex(state.U)
        t = state.t
        dy = poles_rhs(t, state.pack(), kappa)
        Qdd = dy[kappa : 2 * kappa]
        dd = Q[:, None] - Q[None, :]
        R = np.sum(_invpow(dd, 1), axis=1)
        Rd = -np.sum((Qd[:, None] - Qd[None, :]) * _invpow(dd, 2), axis=1)
        ct = kappa * Qd - 2 * R
        ctd = kappa * Qdd - 2 * Rd
        Y = npp.polyfromroots(Q)
        Yx = npp.polyder(Y)
        deg = kappa
        Ld = np.zeros(deg, dtype=complex)
        Ldt = np.zeros(deg, dtype=complex)
        Bd = np.zeros(max(deg - 1, 1), dtype=complex)
        for k in range(kappa):
            others = [j for j in range(kappa) if j != k]
            Nk = npp.polyfromroots(Q[others]) if others else np.array([1.0 + 0j])
            wk = np.prod(Q[k] - Q[others]) if others else 1.0 + 0j
            lk = Nk / wk
            Ld = Ld - ct[k] * _pad(lk, deg)
            Nkd = np.zeros(deg - 1 if deg > 1 else 1, dtype=complex)
            for j in others:
                rest = [m for m in range(kappa) if m != k and m != j]
                Pm = npp.polyfromroots(Q[rest]) if rest else np.array([1.0 + 0j])
                Nkd = Nkd - Qd[j] * _pad(Pm, Nkd.size)
            wkd = wk * np.sum([(Qd[k] - Qd[j]) / (Q[k] - Q[j]) for j in others]) if others else 0.0
            lkd = _pad(Nkd / wk, deg) - _pad(Nk, deg) * wkd / wk ** 2
            Ldt = Ldt - (ctd[k] * _pad(lk, deg) + ct[k] * lkd)
            # (Yx - wk) is divisible by (x - Q_k) since Yx(Q_k) = wk
            num = Yx.astype(complex).copy()
            num[0] -= wk
            if abs(npp.polyval(Q[k], num)) > 1e-9 * (1 + np.abs(num).max()):
                raise ValueError("inconsistent pole data: exact division check failed")
            quo, _ = npp.polydiv(num, np.array([-Q[k], 1.0]))
            Bd = Bd + ct[k] / wk * _pad(quo, Bd.size)
        self.kappa = kappa
        self.t = t
        self.U = U
        self.Y = Y
        self.Ld = Ld
        self.Bd = Bd / kappa
        self.Ldt = Ldt

    def _entry_values(self, x):
        x = np.asarray(x, dtype=complex)
        kappa, t, U = self.kappa, self.t, self.U
        ev = lambda c: npp.polyval(x, c)
        der = lambda c, m=1: npp.polyder(c, m) if c.size > m else np.zeros(1, dtype=complex)
        Y, Yx, Yxx = ev(self.Y), ev(der(self.Y)), ev(der(self.Y, 2))
        Ld, Ldx, Ldxx = ev(self.Ld), ev(der(self.Ld)), ev(der(self.Ld, 2))
        Bd, Bdx, Bdxx = ev(self.Bd), ev(der(self.Bd)), ev(der(self.Bd, 2))
        Ldt, Ldtx = ev(self.Ldt), ev(der(self.Ldt))
        v = t - x ** 2
        fv = -x ** 4 / 2 + t * x ** 2 - (kappa - 2) * x + U
        fvx = -2 * x ** 3 + 2 * t * x - (kappa - 2)
        L11 = (-v + Ld) / 2
        L11x = (2 * x + Ldx) / 2
        L12, L12x = Y, Yx
        Nm = kappa * Bd + Ldx + Ld ** 2 / 2 + fv
        Nmx = kappa * Bdx + Ldxx + Ld * Ldx + fvx
        L21 = -Nm / (2 * Y)
        L21x = -(Nmx * Y - Nm * Yx) / (2 * Y ** 2)
        L22 = (-v - Ld) / 2
        L22x = (2 * x - Ldx) / 2
        g = (U + t ** 2 / 2) / kappa
        B11 = (-x + g + Bd) / 2
        B11x = (-1 + Bdx) / 2
        B12 = -Yx / kappa
        B12x = -Yxx / kappa
        Nb = 2 * L21 * Yx + kappa * Ldt - kappa * Bdx
        Nbx = 2 * (L21x * Yx + L21 * Yxx) + kappa * Ldtx - kappa * Bdxx
        B21 = -Nb / (2 * kappa * Y)
        B21x = -(Nbx * Y - Nb * Yx) / (2 * kappa * Y ** 2)
        B22 = (-x + g - Bd) / 2
        B22x = (-1 - Bdx) / 2
        return dict(
            L=(L11, L12, L21, L22), Lx=(L11x, L12x, L21x, L22x),
            B=(B11, B12, B21, B22), Bx=(B11x, B12x, B21x, B22x),
        )

    def L(self, x) -> np.ndarray:
        e = self._entry_values(x)["L"]
        return np.array([[e[0], e[1]], [e[2], e[3]]])

    def B(self, x) -> np.ndarray:
        e = self._entry_values(x)["B"]
        return np.array([[e[0], e[1]], [e[2], e[3]]])

    def Lx(self, x) -> np.ndarray:
        e = self._entry_values(x)["Lx"]
        return np.array([[e[0], e[1]], [e[2], e[3]]])

    def Bx(self, x) -> np.ndarray:
        e = self._entry_values(x)["Bx"]
        return np.array([[e[0], e[1]], [e[2], e[3]]])


def lax_pair(state: PoleState, x: complex) -> tuple[Matrix2, Matrix2]:
    """Evaluate (L, B) at a single point x off the poles."""
    if np.any(np.abs(np.asarray(x) - state.Q) < 1e-10):
        raise ValueError("x collides with a pole")
    cache = _LaxCache(state)
    return Matrix2.from_array(cache.L(x)), Matrix2.from_array(cache.B(x))


def zero_curvature_residual(
    traj: Trajectory, t: float, x: complex, fd_step: float = 1e-3
) -> Matrix2:
    """dL/dt - dB/dx + [L, B] at (t, x); dB/dx analytic, dL/dt by a
    five-point stencil over the dense trajectory."""
    Lm = {}
    for m in (-2, -1, 1, 2):
        st = traj.state_at(t + m * fd_step)
        Lm[m] = _LaxCache(st).L(x)
    Lt = (Lm[-2] - 8 * Lm[-1] + 8 * Lm[1] - Lm[2]) / (12 * fd_step)
    cache = _LaxCache(traj.state_at(t))
    L = cache.L(x)
    B = cache.B(x)
    Bx = cache.Bx(x)
    return Matrix2.from_array(Lt - Bx + L @ B - B @ L)


@dataclass(frozen=True)
class LinSolution:
    """Fundamental-vector solution of dPhi/dx = L Phi along a segment.

    ``values`` has shape (2, n): row 0 is F, row 1 is G.
    """

    x_grid: np.ndarray
    values: np.ndarray
    t: float
    state: PoleState
    dense: object = field(repr=False)

    def at(self, x: complex) -> np.ndarray:
        return self.dense(x)


def reconstruct(
    state: PoleState,
    x_start: float,
    x_end: float,
    init: tuple[complex, complex] = (1.0 + 0j, 0.3 + 0j),
    n_points: int = 201,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> LinSolution:
    """Integrate the x-system from (x_start, init) to x_end."""
    cache = _LaxCache(state)

    def rhs(x, fg):
        return cache.L(x) @ fg

    xs = np.linspace(x_start, x_end, n_points)
    r = solve_ivp(rhs, (x_start, x_end), np.asarray(init, dtype=complex),
                  method="DOP853", rtol=rtol, atol=atol, dense_output=True, t_eval=xs)
    if not r.success:
        raise RuntimeError(f"x-integration failed: {r.message}")
    return LinSolution(x_grid=xs, values=r.y, t=state.t, state=state, dense=r.sol)


def detour_waypoints(
    state: PoleState,
    x_start: complex,
    x_end: complex,
    clearance: float = 0.25,
) -> list[complex]:
    """Straight-segment waypoints from x_start to x_end that skirt the poles.

    The x-system coefficients are singular at the Q_k.  Every pole closer
    than ``clearance`` to the straight segment is bypassed by a rectangular
    bump of height 1.5 * clearance on the opposite side.  Raises if no
    clear path is found at this clearance; supply waypoints manually then.
    """
    a = complex(x_start)
    b = complex(x_end)
    seg = b - a
    length = abs(seg)
    if length == 0:
        raise ValueError("x_start and x_end coincide")
    u = seg / length

    bumps = []
    for qk in np.atleast_1d(state.Q):
        w = (qk - a) / u
        if -clearance < w.real < length + clearance and abs(w.imag) < clearance:
            side = -1.0 if w.imag >= 0 else 1.0
            bumps.append([w.real - 2 * clearance, w.real + 2 * clearance, side])
    bumps.sort()
    merged: list[list[float]] = []
    for s0, s1, side in bumps:
        if merged and s0 <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], s1)
        else:
            merged.append([s0, s1, side])

    off = 1.5 * clearance * 1j * u
    pts = [a]
    for s0, s1, side in merged:
        s0 = max(s0, 0.0)
        s1 = min(s1, length)
        for p in (a + s0 * u, a + s0 * u + side * off,
                  a + s1 * u + side * off, a + s1 * u):
            if abs(p - pts[-1]) > 1e-12 * (1 + length):
                pts.append(p)
    if abs(b - pts[-1]) > 1e-12 * (1 + length):
        pts.append(b)

    qs = np.atleast_1d(state.Q)
    for p0, p1 in zip(pts[:-1], pts[1:]):
        d = p1 - p0
        tt = np.clip(((qs - p0) / d).real, 0.0, 1.0)
        dist = np.abs(qs - (p0 + tt * d))
        if dist.min() < 0.5 * clearance:
            raise ValueError(
                "no clear path at this clearance; pass explicit waypoints")
    return pts


def reconstruct_path(
    state: PoleState,
    waypoints: list[complex],
    init: tuple[complex, complex] = (1.0 + 0j, 0.3 + 0j),
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> np.ndarray:
    """Integrate the x-system along straight segments between waypoints.

    Returns the final (F, G) pair.  Endpoint values depend only on the
    homotopy class of the path relative to the Q_k; the poles are apparent
    singularities, so all pole-avoiding paths agree.
    """
    if len(waypoints) < 2:
        raise ValueError("need at least two waypoints")
    cache = _LaxCache(state)
    y = np.asarray(init, dtype=complex)
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        seg = complex(b) - complex(a)

        def rhs(s, w, a=a, seg=seg):
            return seg * (cache.L(a + s * seg) @ w)

        r = solve_ivp(rhs, (0.0, 1.0), y, method="DOP853", rtol=rtol, atol=atol)
        if not r.success:
            raise RuntimeError(f"segment {a} -> {b} failed: {r.message}")
        y = r.y[:, -1]
    return y


def scalar_coeffs_from_lax(state: PoleState, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (c1, c0) of F'' = c1 F' + c0 F implied by the
    x-system, via elimination of the second component."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    cache = _LaxCache(state)
    e = cache._entry_values(x)
    L11, L12, L21, L22 = e["L"]
    L11x, L12x, _, _ = e["Lx"]
    c1 = L11 + L22 + L12x / L12
    c0 = L11x + L12 * L21 - L11 * (L22 + L12x / L12)
    return c1, c0


def scalar_ode_residual(linsol: LinSolution, xs: np.ndarray) -> np.ndarray:
    """Residual of F'' - (P - v) F' - b F = 0 for the reconstructed F."""
    xs = np.atleast_1d(np.asarray(xs))
    st = linsol.state
    cache = _LaxCache(st)
    f = eval_fields(st, xs)
    v = st.t - xs ** 2
    out = np.empty(xs.size, dtype=complex)
    for i, xv in enumerate(xs):
        phi = linsol.at(xv)
        L = cache.L(xv)
        Lx = cache.Lx(xv)
        Fp = (L @ phi)[0]
        Fpp = (Lx @ phi + L @ (L @ phi))[0]
        out[i] = Fpp - (f.P[i] - v[i]) * Fp - f.b[i] * phi[0]
    return out


def flow_residual(
    traj: Trajectory,
    t: float,
    xs: np.ndarray,
    x_start: float = -3.0,
    init: tuple[complex, complex] = (1.0 + 0j, 0.3 + 0j),
    fd_step: float = 2e-3,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> np.ndarray:
    """Residual of kappa F_t + F_xx + (t - x^2) F_x = 0 where F_t is
    realized by the B-flow: the initial vector is evolved in t at fixed
    x_start, re-integrated in x at each shifted time, and differenced
    with a five-point stencil."""
    xs = np.atleast_1d(np.asarray(xs))
    kappa = traj.kappa

    def evolve(t_target: float) -> np.ndarray:
        if t_target == t:
            return np.asarray(init, dtype=complex)

        def rhs(s, w):
            return _LaxCache(traj.state_at(s)).B(x_start) @ w

        r = solve_ivp(rhs, (t, t_target), np.asarray(init, dtype=complex),
                      method="DOP853", rtol=rtol, atol=atol)
        if not r.success:
            raise RuntimeError(f"t-flow failed: {r.message}")
        return r.y[:, -1]

    F_at = {}
    for m in (-2, -1, 1, 2):
        tm = t + m * fd_step
        sol_m = reconstruct(traj.state_at(tm), x_start, float(np.real(xs).max() + 0.5),
                            init=tuple(evolve(tm)), rtol=rtol, atol=atol)
        F_at[m] = np.array([sol_m.at(xv)[0] for xv in xs])
    Ft = (F_at[-2] - 8 * F_at[-1] + 8 * F_at[1] - F_at[2]) / (12 * fd_step)

    st = traj.state_at(t)
    sol0 = reconstruct(st, x_start, float(np.real(xs).max() + 0.5), init=init, rtol=rtol, atol=atol)
    cache = _LaxCache(st)
    out = np.empty(xs.size, dtype=complex)
    for i, xv in enumerate(xs):
        phi = sol0.at(xv)
        L = cache.L(xv)
        Lx = cache.Lx(xv)
        Fp = (L @ phi)[0]
        Fpp = (Lx @ phi + L @ (L @ phi))[0]
        out[i] = kappa * Ft[i] + Fpp + (t - xv ** 2) * Fp
    return out


def monodromy_residual(
    state: PoleState,
    pole_index: int = 0,
    radius: float | None = None,
    init: tuple[complex, complex] = (0.7 - 0.2j, -0.1 + 0.5j),
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> float:
    """Integrate dPhi/dx = L Phi around one pole; the solution is
    single-valued, so the return defect must vanish."""
    kappa = state.kappa
    if not 0 <= pole_index < kappa:
        raise ValueError(f"pole_index must be in [0, {kappa})")
    c = state.Q[pole_index]
    if radius is None:
        if kappa == 1:
            radius = 0.3
        else:
            others = np.abs(np.delete(state.Q, pole_index) - c)
            radius = 0.45 * float(others.min())
    cache = _LaxCache(state)

    def rhs(th, fg):
        z = c + radius * np.exp(1j * th)
        return (1j * radius * np.exp(1j * th)) * (cache.L(z) @ fg)

    start = np.asarray(init, dtype=complex)
    r = solve_ivp(rhs, (0.0, 2 * np.pi), start, method="DOP853", rtol=rtol, atol=atol)
    if not r.success:
        raise RuntimeError(f"loop integration failed: {r.message}")
    return float(np.abs(r.y[:, -1] - start).max())


def schrodinger_residual(linsol: LinSolution, xs: np.ndarray) -> np.ndarray:
    """Residual of Psi'' = V Psi in the oscillator gauge
    Psi = F Y^(-1/2) exp((t x - x^3/3)/2), expressed through F and its
    derivatives so no square-root branch is needed:

        F'' + 2 g' F' + (g'' + g'^2) F - V F,   g' = -(P - v)/2.
    """
    xs = np.atleast_1d(np.asarray(xs))
    st = linsol.state
    cache = _LaxCache(st)
    f = eval_fields(st, xs)
    v = st.t - xs ** 2
    out = np.empty(xs.size, dtype=complex)
    for i, xv in enumerate(xs):
        phi = linsol.at(xv)
        L = cache.L(xv)
        Lx = cache.Lx(xv)
        Fp = (L @ phi)[0]
        Fpp = (Lx @ phi + L @ (L @ phi))[0]
        gp = -(f.P[i] - v[i]) / 2
        gpp = -(f.Px[i] + 2 * xv) / 2
        out[i] = Fpp + 2 * gp * Fp + (gpp + gp ** 2) * phi[0] - f.V[i] * phi[0]
    return out


def potential_consistency(state: PoleState, xs: np.ndarray) -> float:
    """|V_explicit - [b + (P-v)^2/4 - (P-v)'/2]| over the points."""
    xs = np.atleast_1d(np.asarray(xs))
    f = eval_fields(state, xs)
    v = state.t - xs ** 2
    comp = f.b + (f.P - v) ** 2 / 4 - (f.Px + 2 * xs) / 2
    return float(np.abs(f.V - comp).max())
