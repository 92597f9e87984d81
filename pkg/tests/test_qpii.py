import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal
from scipy.special import airy

from pblab.ensemble import tridiag_draws
from pblab.qpii import (
    Grid2D,
    empirical_soft_edge_cdf,
    extract_tw,
    largest_eigenvalues,
    qpii_residual,
    solve_qpii,
)

S_GRID = np.linspace(-5.0, 2.0, 141)


@pytest.fixture(scope="module")
def painleve_tables():
    """Edge laws from the Hastings-McLeod solution of q'' = t q + 2 q^3.

    Integrated downward from t=8 with Airy initial data, carrying the
    running integrals J0 = int_t q^2, J1 = int_t x q^2, I = int_t q.
    The three classical laws on a dense native grid:

        F2 = exp(-int (x-s) q^2),  F1 = sqrt(F2) e^(-I/2),
        G4 = sqrt(F2) cosh(I/2).
    """
    t0 = 8.0
    ai, aip, _, _ = airy(t0)

    def rhs(t, y):
        q = y[0]
        return [y[1], t * q + 2.0 * q ** 3, -q * q, -t * q * q, -q]

    sol = solve_ivp(rhs, (t0, -10.0), [ai, aip, 0.0, 0.0, 0.0],
                    method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
    grid = np.linspace(-9.5, 4.0, 2701)
    y = sol.sol(grid)
    j = y[3] - grid * y[2]
    f2 = np.exp(-j)
    half = np.sqrt(f2)
    return grid, half * np.exp(-0.5 * y[4]), f2, half * np.cosh(0.5 * y[4])


@pytest.fixture(scope="module")
def field_k1():
    return solve_qpii(1.0)


def test_edge_law_matches_exact_solution_unit_coupling(painleve_tables, field_k1):
    grid, f1, f2, g4 = painleve_tables
    table = extract_tw(field_k1, s_values=S_GRID)
    exact = np.interp(S_GRID, grid, f2)
    assert not table.flags.any()
    assert np.max(np.abs(table.cdf_values - exact)) <= 5e-4


def test_edge_law_matches_exact_solution_doubled_coupling(painleve_tables):
    # at kappa=2 the table lands on the rescaled argument of the
    # symplectic-type law
    grid, f1, f2, g4 = painleve_tables
    table = extract_tw(solve_qpii(2.0), s_values=S_GRID)
    exact = np.interp(2.0 ** (2.0 / 3.0) * S_GRID, grid, g4)
    assert not table.flags.any()
    assert np.max(np.abs(table.cdf_values - exact)) <= 5e-4


def test_edge_law_matches_exact_solution_halved_coupling(painleve_tables):
    grid, f1, f2, g4 = painleve_tables
    table = extract_tw(solve_qpii(0.5), s_values=S_GRID)
    exact = np.interp(S_GRID, grid, f1)
    assert not table.flags.any()
    assert np.max(np.abs(table.cdf_values - exact)) <= 5e-4


def test_terminal_layer_shape_is_forgotten(field_k1):
    # two different terminal profiles must converge to the same interior
    # solution well before the readout region
    alt = solve_qpii(1.0, terminal="erf")
    t1 = extract_tw(field_k1, s_values=S_GRID)
    t2 = extract_tw(alt, s_values=S_GRID)
    assert np.max(np.abs(t1.cdf_values - t2.cdf_values)) <= 5e-5


def test_stored_solution_satisfies_pde(field_k1):
    assert qpii_residual(field_k1) <= 5e-5


def test_table_statistics_near_known_values(field_k1):
    # mean/sd of the unit-coupling law, classical values -1.7711, 0.9018
    mu, sd = extract_tw(field_k1, s_values=S_GRID).mean_sd()
    assert abs(mu - (-1.7711)) <= 5e-3
    assert abs(sd - 0.9018) <= 5e-3


def test_solver_input_validation():
    with pytest.raises(ValueError, match="kappa"):
        solve_qpii(0.0)
    with pytest.raises(ValueError, match="terminal"):
        solve_qpii(1.0, terminal="step")
    with pytest.raises(ValueError):
        Grid2D(t_min=1.0, t_max=0.0, x_min=-8.0, x_max=20.0, n_t=100, n_x=100)


def test_extraction_rejects_uncovered_range(field_k1):
    with pytest.raises(ValueError, match="cover"):
        extract_tw(field_k1, s_values=np.array([-50.0, 0.0]))


def test_sturm_bisection_agrees_with_dense_solver():
    # same draw protocol as the production path, then a dense reference
    n, beta, seed, count = 30, 2.0, 11, 40
    rng = np.random.default_rng(seed)
    a = np.sqrt(2.0 / beta)
    d, e = tridiag_draws(n, beta, count, rng)
    d = a * d
    e = a * e
    dense = np.array([eigh_tridiagonal(d[i], e[i], eigvals_only=True)[-1]
                      for i in range(count)])
    fast = largest_eigenvalues(n, beta, count, seed)
    assert np.max(np.abs(fast - dense)) <= 1e-10


def test_empirical_table_is_a_cdf():
    table = empirical_soft_edge_cdf(2.0, 50, 2000, seed=5)
    assert table.beta == 2.0
    assert np.all(np.diff(table.cdf_values) >= 0)
    assert table.cdf_values.min() >= 0.0 and table.cdf_values.max() <= 1.0
    assert table.stderr is not None and table.stderr.max() <= 0.5 / np.sqrt(2000) + 1e-12


def test_edge_statistics_need_a_matrix():
    with pytest.raises(ValueError):
        largest_eigenvalues(1, 2.0, 10, seed=0)
