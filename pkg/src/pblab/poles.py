"""Pole dynamics of rational solutions at integer coupling.

A configuration of kappa poles Q_k(t), together with the companion
variable U(t), evolves by

    kappa^2 Q_k'' = -2 Q_k (t - Q_k^2) + (kappa - 2) - sum_{j!=k} 8/(Q_k - Q_j)^3,
    kappa U'      = -sum_k Q_k^2.

Conserved structure: the per-pole quantities returned by
``first_integrals`` are each constant along the flow only on the
manifold where they are all equal; their sum is constant always.  The
distinguished trajectories used everywhere downstream live on the
normalized manifold where every integral vanishes (``demo_state``
projects onto it).

Field picture: P(x) = sum_k 1/(x - Q_k) and the auxiliary field b(x)
built from c_k = kappa Q_k' + t - Q_k^2 - 2 R_k satisfy a coupled
parabolic system in (t, x); ``governing_residual`` checks it with
time derivatives taken by a five-point stencil along the trajectory.
``hirota_residual`` checks the equivalent bilinear form for
Y(x) = prod_k (x - Q_k) with all derivatives analytic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npp
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares


@dataclass(frozen=True)
class PoleState:
    """Pole positions, velocities, and companion variable at one time."""

    kappa: int
    t: float
    Q: np.ndarray
    Qdot: np.ndarray
    U: complex
    collision_eps: float = 1e-6

    def __post_init__(self) -> None:
        q = np.asarray(self.Q, dtype=complex)
        qd = np.asarray(self.Qdot, dtype=complex)
        if self.kappa < 1:
            raise ValueError(f"kappa must be a positive integer, got {self.kappa}")
        if q.shape != (self.kappa,) or qd.shape != (self.kappa,):
            raise ValueError(f"Q/Qdot must have shape ({self.kappa},)")
        if self.kappa > 1:
            dd = np.abs(q[:, None] - q[None, :])
            dd[np.eye(self.kappa, dtype=bool)] = np.inf
            if dd.min() <= self.collision_eps:
                raise ValueError(f"pole collision: min separation {dd.min():.3e} <= {self.collision_eps}")
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "Qdot", qd)

    @property
    def R(self) -> np.ndarray:
        """R_k = sum_{j != k} 1/(Q_k - Q_j)."""
        dd = self.Q[:, None] - self.Q[None, :]
        return np.sum(_invpow(dd, 1), axis=1)

    def pack(self) -> np.ndarray:
        return np.concatenate([self.Q, self.Qdot, [complex(self.U)]])


def _invpow(dd: np.ndarray, p: int) -> np.ndarray:
    # 1/dd^p with zero diagonal
    out = np.zeros_like(dd)
    m = ~np.eye(dd.shape[0], dtype=bool)
    out[m] = 1.0 / dd[m] ** p
    return out


def _unpack(y: np.ndarray, kappa: int) -> tuple[np.ndarray, np.ndarray, complex]:
    return y[:kappa], y[kappa : 2 * kappa], y[2 * kappa]


def poles_rhs(t: float, y: np.ndarray, kappa: int) -> np.ndarray:
    """Right-hand side of the first-order system in (Q, Qdot, U)."""
    Q, Qd, _ = _unpack(y, kappa)
    dd = Q[:, None] - Q[None, :]
    inter = np.sum(8.0 * _invpow(dd, 3), axis=1)
    Qdd = (-2 * Q * (t - Q ** 2) + (kappa - 2) - inter) / kappa ** 2
    Ud = -np.sum(Q ** 2) / kappa
    return np.concatenate([Qd, Qdd, [Ud]])


def first_integrals(state: PoleState) -> np.ndarray:
    """Per-pole conserved quantities (on the all-equal manifold).

    I_k = (kappa Q_k')^2/2 + t Q_k^2 - Q_k^4/2 - (kappa - 2) Q_k + U
          - sum_{j!=k} 2/(Q_k - Q_j)^2
          - kappa sum_{j!=k} (Q_k' + Q_j')/(Q_k - Q_j)
          + sum_{j!=k} sum_{l!=k,j} 2/((Q_k - Q_j)(Q_j - Q_l)).

    sum_k I_k is conserved for every trajectory; the individual I_k are
    conserved precisely when they are all equal.
    """
    kappa, t = state.kappa, state.t
    Q, Qd, U = state.Q, state.Qdot, complex(state.U)
    dd = Q[:, None] - Q[None, :]
    I = (kappa * Qd) ** 2 / 2 + t * Q ** 2 - Q ** 4 / 2 - (kappa - 2) * Q + U
    I = I - np.sum(2.0 * _invpow(dd, 2), axis=1)
    iv = _invpow(dd, 1)
    I = I - kappa * np.sum((Qd[:, None] + Qd[None, :]) * iv, axis=1)
    for k in range(kappa):
        s = 0.0 + 0.0j
        for j in range(kappa):
            if j == k:
                continue
            for l in range(kappa):
                if l == k or l == j:
                    continue
                s += 2.0 / ((Q[k] - Q[j]) * (Q[j] - Q[l]))
        I[k] += s
    return I


@dataclass(frozen=True)
class Trajectory:
    """Dense solution of the pole system over a time span."""

    states: tuple[PoleState, ...]
    kappa: int
    t_span: tuple[float, float]
    nfev: int
    dense: object = field(repr=False)  # OdeSolution

    def state_at(self, t: float) -> PoleState:
        lo, hi = self.t_span
        if not (min(lo, hi) - 1e-12 <= t <= max(lo, hi) + 1e-12):
            raise ValueError(f"t={t} outside integrated span {self.t_span}")
        y = self.dense(t)
        return PoleState(kappa=self.kappa, t=float(t), Q=y[: self.kappa],
                         Qdot=y[self.kappa : 2 * self.kappa], U=y[2 * self.kappa])


def integrate_poles(
    state0: PoleState,
    t_final: float,
    n_states: int = 31,
    rtol: float = 1e-12,
    atol: float = 1e-12,
) -> Trajectory:
    """Integrate the pole system from ``state0.t`` to ``t_final``."""
    t0 = state0.t
    if t_final == t0:
        raise ValueError("t_final must differ from the initial time")
    sol = solve_ivp(
        poles_rhs, (t0, t_final), state0.pack(), args=(state0.kappa,),
        method="DOP853", rtol=rtol, atol=atol, dense_output=True,
    )
    if not sol.success:
        raise RuntimeError(f"pole integration failed: {sol.message}")
    snaps = []
    for t in np.linspace(t0, t_final, n_states):
        y = sol.sol(t)
        snaps.append(PoleState(kappa=state0.kappa, t=float(t), Q=y[: state0.kappa],
                               Qdot=y[state0.kappa : 2 * state0.kappa], U=y[2 * state0.kappa]))
    return Trajectory(states=tuple(snaps), kappa=state0.kappa,
                      t_span=(t0, t_final), nfev=sol.nfev, dense=sol.sol)


def project_zero_manifold(state: PoleState) -> tuple[PoleState, float]:
    """Adjust Qdot (and shift U) so all first integrals vanish.

    Returns the projected state and the residual spread of the
    integrals after optimization.  For kappa = 1 only the U shift is
    needed.
    """
    kappa = state.kappa
    if kappa == 1:
        I = first_integrals(state)
        new = PoleState(kappa=1, t=state.t, Q=state.Q, Qdot=state.Qdot,
                        U=complex(state.U) - I[0])
        return new, 0.0

    def with_qdot(v: np.ndarray) -> PoleState:
        qd = v[:kappa] + 1j * v[kappa:]
        return PoleState(kappa=kappa, t=state.t, Q=state.Q, Qdot=qd, U=state.U)

    def eqs(v: np.ndarray) -> np.ndarray:
        I = first_integrals(with_qdot(v))
        d = I - I.mean()
        return np.concatenate([d.real, d.imag])

    v0 = np.concatenate([state.Qdot.real, state.Qdot.imag])
    r = least_squares(eqs, v0, xtol=3e-16, ftol=3e-16, gtol=3e-16)
    st = with_qdot(r.x)
    I = first_integrals(st)
    spread = float(np.abs(I - I.mean()).max())
    out = PoleState(kappa=kappa, t=state.t, Q=state.Q, Qdot=st.Qdot,
                    U=complex(state.U) - I.mean())
    return out, spread


def demo_state(
    kappa: int,
    t: float = 0.0,
    radius: float = 0.4,
    center: complex = 1.2j,
    qdot_scale: float = 0.1,
    project: bool = True,
) -> PoleState:
    """A well-separated pole ring off the real axis, optionally projected
    onto the zero-integral manifold."""
    ang = 2 * np.pi * np.arange(kappa) / kappa + 0.3
    Q = center + radius * np.exp(1j * ang)
    Qd = qdot_scale * np.exp(1j * ang / 2) + 0j
    st = PoleState(kappa=kappa, t=t, Q=Q, Qdot=Qd, U=0.0 + 0.0j)
    if project:
        st, _ = project_zero_manifold(st)
    return st


@dataclass(frozen=True)
class FieldEval:
    """Fields of the pole configuration at points x.

    P = sum_k 1/(x - Q_k) and b is the auxiliary field; the normalized
    combinations b_plus = -P/kappa and b_one = b/kappa are the ones
    entering the scalar linear ODE.  V is the single-well potential of
    the oscillator gauge.
    """

    x: np.ndarray
    P: np.ndarray
    b: np.ndarray
    V: np.ndarray
    Px: np.ndarray
    Pxx: np.ndarray
    bx: np.ndarray
    bxx: np.ndarray
    kappa: int

    @property
    def b_plus(self) -> np.ndarray:
        return -self.P / self.kappa

    @property
    def b_one(self) -> np.ndarray:
        return self.b / self.kappa


def eval_fields(state: PoleState, x: np.ndarray) -> FieldEval:
    """P, b, V and their x-derivatives at the given points."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    kappa, t = state.kappa, state.t
    Q, Qd, U = state.Q, state.Qdot, complex(state.U)
    R = state.R
    c = kappa * Qd + t - Q ** 2 - 2 * R
    dx = x[:, None] - Q[None, :]
    if np.any(np.abs(dx) < 1e-10):
        raise ValueError("evaluation point collides with a pole")
    P = np.sum(1.0 / dx, axis=1)
    Px = -np.sum(1.0 / dx ** 2, axis=1)
    Pxx = 2 * np.sum(1.0 / dx ** 3, axis=1)
    b = 0.5 * (np.sum(c / dx, axis=1) - Q.sum() - (t ** 2 / 2 + U))
    bx = -0.5 * np.sum(c / dx ** 2, axis=1)
    bxx = np.sum(c / dx ** 3, axis=1)
    V = (0.75 * np.sum(1.0 / dx ** 2, axis=1)
         + 0.5 * np.sum((kappa * Qd - R) / dx, axis=1)
         - U / 2 + (kappa - 2) * x / 2 - t * x ** 2 / 2 + x ** 4 / 4)
    return FieldEval(x=x, P=P, b=b, V=V, Px=Px, Pxx=Pxx, bx=bx, bxx=bxx, kappa=kappa)


def governing_residual(
    traj: Trajectory, t: float, x: np.ndarray, fd_step: float = 1e-4
) -> tuple[np.ndarray, np.ndarray]:
    """Residuals of the coupled system for (P, b) at time t, points x.

        r1 = kappa (P_t - 1) + P_xx + P_x (P - v) + P (P_x + 2x) + 2 b_x
        r2 = kappa b_t + b_xx + v b_x + 2 b P_x,        v = t - x^2.

    x-derivatives are analytic; t-derivatives use a five-point stencil
    on the dense trajectory.
    """
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    evals = {m: eval_fields(traj.state_at(t + m * fd_step), x) for m in (-2, -1, 0, 1, 2)}
    f0 = evals[0]

    def stencil(attr: str) -> np.ndarray:
        g = {m: getattr(evals[m], attr) for m in (-2, -1, 1, 2)}
        return (g[-2] - 8 * g[-1] + 8 * g[1] - g[2]) / (12 * fd_step)

    Pt = stencil("P")
    bt = stencil("b")
    v = t - x ** 2
    kappa = traj.kappa
    r1 = kappa * (Pt - 1.0) + f0.Pxx + f0.Px * (f0.P - v) + f0.P * (f0.Px + 2 * x) + 2 * f0.bx
    r2 = kappa * bt + f0.bxx + v * f0.bx + 2 * f0.b * f0.Px
    return r1, r2


def _pad(c: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros(size, dtype=complex)
    out[: c.size] = c
    return out


def _y_time_derivs(state: PoleState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficient arrays (length kappa+1) of Y, Y_t, Y_tt for
    Y(x) = prod_k (x - Q_k), using the equations of motion for Q''.
    """
    kappa = state.kappa
    Q, Qd = state.Q, state.Qdot
    dy = poles_rhs(state.t, state.pack(), kappa)
    Qdd = dy[kappa : 2 * kappa]
    size = kappa + 1
    Y = _pad(npp.polyfromroots(Q), size)
    Yt = np.zeros(size, dtype=complex)
    Ytt = np.zeros(size, dtype=complex)
    for j in range(kappa):
        others = [l for l in range(kappa) if l != j]
        Nj = npp.polyfromroots(Q[others]) if others else np.array([1.0 + 0j])
        Yt -= Qd[j] * _pad(Nj, size)
        Ytt -= Qdd[j] * _pad(Nj, size)
        for m in others:
            rest = [l for l in range(kappa) if l != j and l != m]
            Njm = npp.polyfromroots(Q[rest]) if rest else np.array([1.0 + 0j])
            Ytt += Qd[j] * Qd[m] * _pad(Njm, size)
    return Y, Yt, Ytt


def hirota_residual(state: PoleState, x: np.ndarray) -> np.ndarray:
    """Bilinear-form residual for Y = prod (x - Q_k), all analytic.

    With D = kappa d_t + d_xx and the scalar function
    f = -(kappa-2) x - (t - x^2)^2/2 + t^2/2 + U, the residual is

        Y D^2 Y - (DY)^2 - 2 Y_x (DY)_x + 2 Y_xx DY
          + Y (kappa f_t Y + f_x Y_x) + 2 f (Y Y_xx - Y_x^2).
    """
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    kappa, t = state.kappa, state.t
    Q, U = state.Q, complex(state.U)
    size = kappa + 1
    Y, Yt, Ytt = _y_time_derivs(state)
    der = lambda c, m=1: _pad(npp.polyder(c, m), size) if c.size > m else np.zeros(size, dtype=complex)
    Yx = der(Y)
    Yxx = der(Y, 2)
    DY = kappa * Yt + Yxx
    DYx = der(DY)
    DDY = kappa ** 2 * Ytt + 2 * kappa * der(Yt, 2) + der(Y, 4)
    ev = lambda c: npp.polyval(x, c)
    Yv, Yxv, Yxxv, DYv, DYxv, DDYv = map(ev, (Y, Yx, Yxx, DY, DYx, DDY))
    fv = -(kappa - 2) * x - (t - x ** 2) ** 2 / 2 + t ** 2 / 2 + U
    fx = -(kappa - 2) + 2 * x * (t - x ** 2)
    kft = -kappa * (t - x ** 2) + kappa * t - np.sum(Q ** 2)
    return (Yv * DDYv - DYv ** 2 - 2 * Yxv * DYxv + 2 * Yxxv * DYv
            + Yv * (kft * Yv + fx * Yxv) + 2 * fv * (Yv * Yxxv - Yxv ** 2))
