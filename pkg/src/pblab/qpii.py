"""Edge evolution equation and the limit law of the largest eigenvalue.

The field F(t, x) solves the backward parabolic equation

    kappa * F_t + F_xx + (t - x^2) F_x = 0,

integrated from a terminal profile at large t down to the target times,
with F -> 0 on the left and F_x -> 0 on the right.  As x -> +infinity,
F(t, x) approaches the cumulative distribution of the soft-edge limit
law at coupling beta = 2 kappa, up to the rescaling

    CDF_beta(s) = lim_{x->inf} F(kappa^{2/3} s, x).

The approach is first order in 1/x (the correction is proportional to
the density), so ``extract_tw`` fits a0 + a1/x + a2/x^2 over a few
stations near the right boundary instead of reading the boundary value.

``empirical_soft_edge_cdf`` produces the matching Monte Carlo law from
the tridiagonal ensemble: with eigenvalues scaled so the spectral edge
sits at 2 sqrt(N), the statistic s = N^(1/6) (lambda_max - 2 sqrt(N))
converges to the same limit.  Only the largest eigenvalue is needed, so
it is located by bisection with Sturm counts rather than by a full
eigendecomposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import erf

from .ensemble.sampler import tridiag_draws


@dataclass(frozen=True)
class Grid2D:
    """Uniform rectangular grid; t and x are both ascending."""

    t_min: float
    t_max: float
    x_min: float
    x_max: float
    n_t: int
    n_x: int

    def __post_init__(self) -> None:
        if not (self.t_min < self.t_max and self.x_min < self.x_max):
            raise ValueError("grid bounds must be ordered")
        if self.n_t < 8 or self.n_x < 8:
            raise ValueError(f"need at least 8 points per axis, got {self.n_t}x{self.n_x}")

    @property
    def t(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n_t)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)


@dataclass(frozen=True)
class Field2D:
    """Solution values on a grid, indexed [i_t, i_x] with ascending t.

    Values are clipped into [0, 1] only against roundoff-level
    excursions; anything beyond ``clip_tol`` is a solver failure.
    """

    grid: Grid2D
    values: np.ndarray
    kappa: float
    clip_tol: float = 1e-5

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.shape != (self.grid.n_t, self.grid.n_x):
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.n_t}x{self.grid.n_x}")
        if v.min() < -self.clip_tol or v.max() > 1.0 + self.clip_tol:
            raise ValueError(f"field leaves [0,1] by more than {self.clip_tol}: [{v.min()}, {v.max()}]")
        dx_mono = np.diff(v, axis=1).min()
        if dx_mono < -1e-6:
            raise ValueError(f"field decreases in x by {-dx_mono}")
        object.__setattr__(self, "values", np.clip(v, 0.0, 1.0))


@dataclass(frozen=True)
class TWTable:
    """Tabulated cumulative distribution of the edge law at coupling beta.

    For Monte Carlo tables ``stderr`` carries the pointwise binomial
    standard error; ``flags`` marks rows whose extraction diagnostics
    failed (never set on empirical tables).
    """

    t_values: np.ndarray
    cdf_values: np.ndarray
    beta: float
    stderr: np.ndarray | None = None
    flags: np.ndarray | None = None

    def __post_init__(self) -> None:
        t = np.asarray(self.t_values, dtype=float)
        c = np.asarray(self.cdf_values, dtype=float)
        if t.ndim != 1 or c.shape != t.shape:
            raise ValueError("t_values and cdf_values must be 1D of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("t_values must be strictly increasing")
        if c.min() < -1e-9 or c.max() > 1 + 1e-9:
            raise ValueError("cdf values must lie in [0, 1]")
        if np.any(np.diff(c) < -1e-6):
            raise ValueError("cdf must be nondecreasing (up to solver tolerance)")

    def mean_sd(self) -> tuple[float, float]:
        """Mean and standard deviation of the tabulated law."""
        pdf = np.gradient(self.cdf_values, self.t_values)
        mu = float(np.trapezoid(self.t_values * pdf, self.t_values))
        var = float(np.trapezoid((self.t_values - mu) ** 2 * pdf, self.t_values))
        return mu, float(np.sqrt(var))


def default_grid(kappa: float, s_min: float = -5.0, s_max: float = 2.0) -> Grid2D:
    """A grid wide enough to extract the edge law on [s_min, s_max]."""
    c = kappa ** (2.0 / 3.0)
    t_lo = c * s_min - 1.0
    t_hi = max(10.0, c * s_max + 3.0)
    n_t = max(801, int((t_hi - t_lo) * 80))
    return Grid2D(t_min=t_lo, t_max=t_hi, x_min=-8.0, x_max=20.0, n_t=n_t, n_x=1401)


def _terminal_profile(x: np.ndarray, t_max: float, kind: str) -> np.ndarray:
    # quasi-stationary layer at x = -sqrt(t_max); the solution forgets the
    # precise layer shape within a unit of t, so both choices agree downstream
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-2.0 * (x + np.sqrt(t_max))))
    if kind == "erf":
        return 0.5 * (1.0 + erf(t_max ** 0.25 * (x + np.sqrt(t_max))))
    raise ValueError(f"terminal profile must be 'sigmoid' or 'erf', got {kind!r}")


def _apply_L(F: np.ndarray, x: np.ndarray, dx: float, t: float) -> np.ndarray:
    # L F = F_xx + (t - x^2) F_x on interior points; boundary rows unused
    v = t - x ** 2
    out = np.zeros_like(F)
    out[1:-1] = (F[2:] - 2 * F[1:-1] + F[:-2]) / dx ** 2 + v[1:-1] * (F[2:] - F[:-2]) / (2 * dx)
    return out


def _step(F: np.ndarray, x: np.ndarray, dx: float, dt: float, t0: float, t1: float,
          kappa: float, theta: float) -> np.ndarray:
    # one backward step t0 -> t1 = t0 - dt of the theta scheme:
    #   [I - r L(t1)] F_new = [I + (1-theta) dt/kappa L(t0)] F_old,  r = theta dt / kappa
    n = x.size
    rhs = F + (1 - theta) * dt / kappa * _apply_L(F, x, dx, t0)
    v = t1 - x ** 2
    r = theta * dt / kappa
    ab = np.zeros((3, n))
    ab[0, 2:] = -r * (1 / dx ** 2 + v[1:-1] / (2 * dx))
    ab[1, 1:-1] = 1 + 2 * r / dx ** 2
    ab[2, :-2] = -r * (1 / dx ** 2 - v[1:-1] / (2 * dx))
    ab[1, 0] = 1.0          # left Dirichlet F = 0
    ab[1, -1] = 1.0         # right Neumann F_{n-1} - F_{n-2} = 0
    ab[2, -2] = -1.0
    rhs[0] = 0.0
    rhs[-1] = 0.0
    return solve_banded((1, 1), ab, rhs)


def solve_qpii(
    kappa: float,
    grid: Grid2D | None = None,
    terminal: str = "sigmoid",
    rannacher: int = 4,
) -> Field2D:
    """Integrate the edge evolution equation backward over the grid.

    Backward Euler for the first ``rannacher`` steps damps the terminal
    layer, then Crank-Nicolson carries the smooth solution.
    """
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    g = grid if grid is not None else default_grid(kappa)
    x = g.x
    dx = x[1] - x[0]
    ts = g.t[::-1]  # integrate downward
    F = _terminal_profile(x, g.t_max, terminal)
    rows = [F.copy()]
    for n in range(1, g.n_t):
        dt = ts[n - 1] - ts[n]
        theta = 1.0 if n <= rannacher else 0.5
        F = _step(F, x, dx, dt, ts[n - 1], ts[n], kappa, theta)
        rows.append(F.copy())
    values = np.array(rows)[::-1]  # back to ascending t
    return Field2D(grid=g, values=values, kappa=kappa)


def qpii_residual(field: Field2D, settle: float = 1.0) -> float:
    """Max interior PDE residual of the stored solution, by central
    differences on the grid, skipping the first ``settle`` units of t
    below the terminal row (where the startup layer dominates).  Scales
    like the discretization error, so it is a smoke test of
    self-consistency, not of convergence."""
    g = field.grid
    t, x = g.t, g.x
    dt = t[1] - t[0]
    dx = x[1] - x[0]
    F = field.values
    Ft = (F[2:, 1:-1] - F[:-2, 1:-1]) / (2 * dt)
    Fxx = (F[1:-1, 2:] - 2 * F[1:-1, 1:-1] + F[1:-1, :-2]) / dx ** 2
    Fx = (F[1:-1, 2:] - F[1:-1, :-2]) / (2 * dx)
    v = t[1:-1, None] - x[None, 1:-1] ** 2
    res = np.abs(field.kappa * Ft + Fxx + v * Fx)
    keep = t[1:-1] <= g.t_max - settle
    if not keep.any():
        raise ValueError("settle window leaves no interior rows")
    return float(res[keep].max())


def extract_tw(
    field: Field2D,
    s_values: np.ndarray | None = None,
    stations: tuple[float, ...] = (0.6, 0.8, 1.0),
    plateau_tol: float = 0.05,
) -> TWTable:
    """Read off the edge law CDF_beta(s) = F(kappa^(2/3) s, x -> inf).

    The x -> inf limit is the constant term of a fit in powers of 1/x
    across ``stations`` (fractions of x_max).  Rows where the fitted
    finite-x correction at x_max exceeds ``plateau_tol`` are flagged:
    there the domain is too small for the extraction to be trusted.
    """
    g = field.grid
    if s_values is None:
        s_values = np.linspace(-5.0, 2.0, 141)
    s_values = np.asarray(s_values, dtype=float)
    c = field.kappa ** (2.0 / 3.0)
    t_need = c * s_values
    if t_need.min() < g.t_min - 1e-12 or t_need.max() > g.t_max + 1e-12:
        raise ValueError(
            f"grid t-range [{g.t_min}, {g.t_max}] does not cover rescaled times "
            f"[{t_need.min()}, {t_need.max()}]"
        )
    x = g.x
    xs = g.x_max * np.asarray(stations)
    js = [int(np.argmin(np.abs(x - xv))) for xv in xs]
    if len(set(js)) != len(js):
        raise ValueError("stations collapse onto identical grid columns")
    A = np.vander(1.0 / x[js], len(js), increasing=True)
    coef = np.linalg.solve(A, field.values[:, js].T)  # rows: a0, a1, ...
    a0 = coef[0]
    corr = np.abs(field.values[:, -1] - a0)  # finite-x correction magnitude
    cdf = np.interp(t_need, g.t, a0)
    flags = np.interp(t_need, g.t, corr) > plateau_tol
    cdf = np.clip(cdf, 0.0, 1.0)
    # enforce exact monotonicity against roundoff-level CN ripples
    cdf = np.maximum.accumulate(cdf)
    return TWTable(t_values=s_values, cdf_values=cdf, beta=2.0 * field.kappa, flags=flags)


def largest_eigenvalues(
    n_eigen: int, beta: float, n_samples: int, seed: int, batch: int = 20000
) -> np.ndarray:
    """Largest eigenvalue of the scaled tridiagonal ensemble, per sample.

    The draw is scaled by a = sqrt(2/beta) so the spectral edge sits at
    2 sqrt(N) for every beta.  lambda_max is found by bisection on the
    Sturm count (number of pivots < shift), 55 halvings from the bracket
    [2 sqrt(N) - 10 N^(-1/6), Gershgorin + 0.1].
    """
    if n_eigen < 2:
        raise ValueError("need at least 2 eigenvalues for edge statistics")
    rng = np.random.default_rng(seed)
    a = np.sqrt(2.0 / beta)
    out = np.empty(n_samples)
    done = 0
    n = n_eigen
    while done < n_samples:
        b = min(batch, n_samples - done)
        d, e = tridiag_draws(n, beta, b, rng)
        d = a * d
        e = a * e
        pad_l = np.pad(np.abs(e), ((0, 0), (1, 0)))
        pad_r = np.pad(np.abs(e), ((0, 0), (0, 1)))
        gersh = np.max(np.abs(d) + pad_l + pad_r, axis=1)
        lo = np.full(b, 2 * np.sqrt(n) - 10 * n ** (-1.0 / 6.0))
        hi = gersh + 0.1
        e2 = e ** 2
        for _ in range(55):
            mid = 0.5 * (lo + hi)
            q = d[:, 0] - mid
            cnt = (q < 0).astype(np.int32)
            for k in range(1, n):
                q = d[:, k] - mid - e2[:, k - 1] / q
                cnt += q < 0
            allbelow = cnt == n
            hi = np.where(allbelow, mid, hi)
            lo = np.where(allbelow, lo, mid)
        out[done : done + b] = 0.5 * (lo + hi)
        done += b
    return out


def empirical_soft_edge_cdf(
    beta: float,
    n_eigen: int,
    n_samples: int,
    seed: int,
    t_values: np.ndarray | None = None,
) -> TWTable:
    """Monte Carlo CDF of s = N^(1/6) (lambda_max - 2 sqrt(N)).

    Returns a TWTable with pointwise binomial standard errors.
    """
    if t_values is None:
        t_values = np.linspace(-5.0, 2.0, 141)
    t_values = np.asarray(t_values, dtype=float)
    lam = largest_eigenvalues(n_eigen, beta, n_samples, seed)
    s = np.sort(n_eigen ** (1.0 / 6.0) * (lam - 2.0 * np.sqrt(n_eigen)))
    cdf = np.searchsorted(s, t_values, side="right") / n_samples
    stderr = np.sqrt(np.clip(cdf * (1 - cdf), 0.0, None) / n_samples)
    return TWTable(t_values=t_values, cdf_values=cdf, beta=beta, stderr=stderr)
