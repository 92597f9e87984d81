import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pblab.ensemble import (
    EnsembleSpec,
    Gaussian,
    MultiPenner,
    PolynomialCouplings,
    bpz_ode_residual,
    confluent_bpz_residual,
    ensemble_average,
    loop_identity_residual,
    power_sum_moment,
    sample_gbeta,
    virasoro_quadrature_residual,
    virasoro_residual,
)


def test_second_moment_matches_closed_form():
    # E[sum x_i^2] = a^2 (M + beta M (M-1) / 2) for the Gaussian weight
    for M, beta, a in ((2, 2.0, 1.0), (3, 1.0, 0.7), (5, 3.7, 1.3)):
        spec = EnsembleSpec(n_eigen=M, beta=beta, potential=Gaussian(a=a))
        batch = sample_gbeta(spec, 200000, seed=3)
        p2 = batch.power_sums([2])[:, 0]
        exact = a * a * (M + beta * M * (M - 1) / 2.0)
        err = p2.std(ddof=1) / np.sqrt(p2.size)
        assert abs(p2.mean() - exact) <= 4.0 * err


def test_second_moment_quadrature_matches_closed_form():
    spec = EnsembleSpec(n_eigen=2, beta=2.0, potential=Gaussian(a=1.0))
    val, est = power_sum_moment(spec, 2)
    assert abs(val - 4.0) <= 1e-8


def test_zeroth_power_sum_is_matrix_size():
    spec = EnsembleSpec(n_eigen=3, beta=1.5)
    val, est = power_sum_moment(spec, 0)
    assert val == 3.0 and est == 0.0


def test_moment_constraints_hold_in_sample_mean():
    batch = sample_gbeta(EnsembleSpec(n_eigen=4, beta=2.5), 50000, seed=1)
    for n in range(-1, 5):
        stat = virasoro_residual(batch, n)
        assert stat.consistent_with_zero(), f"order {n}: {stat}"


def test_moment_constraints_hold_under_quadrature():
    # M=2 is small enough for nested quadrature to settle the constraint
    # deterministically
    spec = EnsembleSpec(n_eigen=2, beta=2.0)
    for n in range(-1, 5):
        res, est = virasoro_quadrature_residual(spec, n)
        assert abs(res) <= 1e-6, f"order {n}: residual {res}"


def test_loop_identity_at_complex_point():
    batch = sample_gbeta(EnsembleSpec(n_eigen=3, beta=2.0), 50000, seed=2)
    stat = loop_identity_residual(batch, z=1.1 + 0.8j, alpha=1.0)
    assert stat.consistent_with_zero()


def test_source_ode_holds_for_screening_weight():
    spec = EnsembleSpec(
        n_eigen=1, beta=2.0,
        potential=MultiPenner(masses=(-1.5, -2.0), positions=(0.0, 1.0), C=1.0),
    )
    r = bpz_ode_residual(spec, alpha=1.0, z=2.5)
    assert r.residual <= 10.0 * r.combined
    assert r.residual <= 1e-3 * r.scale


def test_source_ode_holds_for_degenerate_weight():
    spec = EnsembleSpec(
        n_eigen=1, beta=2.0,
        potential=MultiPenner(masses=(-1.5, -2.0), positions=(0.0, 1.0), C=1.0),
    )
    r = bpz_ode_residual(spec, alpha=-1.0, z=2.5)
    assert r.residual <= 10.0 * r.combined
    assert r.residual <= 1e-3 * r.scale


def test_coupling_ode_holds_for_gaussian_weight():
    spec = EnsembleSpec(n_eigen=1, beta=2.0,
                        potential=PolynomialCouplings(t=(0.0, 0.0, -0.5)))
    r = confluent_bpz_residual(spec, alpha=1.0, z=16.0)
    assert r.residual <= 10.0 * r.combined


def test_source_ode_rejects_nonintegrable_endpoint():
    spec = EnsembleSpec(
        n_eigen=1, beta=2.0,
        potential=MultiPenner(masses=(0.8, 1.1), positions=(0.0, 1.0), C=1.3),
    )
    with pytest.raises(ValueError, match="integrable"):
        bpz_ode_residual(spec, alpha=1.0, z=2.5)


def test_source_ode_rejects_insertion_inside_hull():
    spec = EnsembleSpec(
        n_eigen=1, beta=2.0,
        potential=MultiPenner(masses=(-1.5, -2.0), positions=(0.0, 1.0), C=1.0),
    )
    with pytest.raises(ValueError, match="hull"):
        bpz_ode_residual(spec, alpha=1.0, z=0.5)


def test_loop_identity_holds_for_generic_exponent():
    # the first-order identity holds for any insertion exponent, not
    # just the two special ones the second-order equations need
    batch = sample_gbeta(EnsembleSpec(n_eigen=3, beta=2.0), 50000, seed=4)
    stat = loop_identity_residual(batch, z=1.4 + 0.9j, alpha=0.7)
    assert stat.consistent_with_zero()


def test_second_order_identity_rejects_generic_exponent():
    spec = EnsembleSpec(
        n_eigen=1, beta=2.0,
        potential=MultiPenner(masses=(-1.5, -2.0), positions=(0.0, 1.0), C=1.0),
    )
    with pytest.raises(ValueError, match="alpha"):
        bpz_ode_residual(spec, alpha=0.7, z=2.5)


def test_spec_validation():
    with pytest.raises(ValueError):
        EnsembleSpec(n_eigen=0, beta=2.0)
    with pytest.raises(ValueError):
        EnsembleSpec(n_eigen=2, beta=-1.0)
    with pytest.raises(ValueError):
        Gaussian(a=0.0)
    with pytest.raises(ValueError):
        MultiPenner(masses=(1.0,), positions=(0.0, 1.0), C=1.0)


def test_sampling_requires_gaussian_potential():
    spec = EnsembleSpec(n_eigen=2, beta=2.0,
                        potential=PolynomialCouplings(t=(0.0, 0.0, -0.5)))
    with pytest.raises(ValueError):
        sample_gbeta(spec, 10, seed=0)


def test_samples_are_sorted_and_reproducible():
    spec = EnsembleSpec(n_eigen=5, beta=1.0)
    b1 = sample_gbeta(spec, 300, seed=9)
    b2 = sample_gbeta(spec, 300, seed=9)
    assert np.array_equal(b1.configs, b2.configs)
    assert np.all(np.diff(b1.configs, axis=1) >= 0)


@settings(max_examples=20, deadline=None)
@given(
    m=st.integers(min_value=1, max_value=6),
    beta=st.floats(min_value=0.2, max_value=6.0),
    seed=st.integers(min_value=0, max_value=2 ** 31),
)
def test_zeroth_power_sum_counts_eigenvalues(m, beta, seed):
    batch = sample_gbeta(EnsembleSpec(n_eigen=m, beta=beta), 8, seed=seed)
    assert np.all(batch.power_sums([0]) == m)


@settings(max_examples=25, deadline=None)
@given(
    m=st.integers(min_value=2, max_value=8),
    beta=st.floats(min_value=0.2, max_value=6.0),
    seed=st.integers(min_value=0, max_value=2 ** 31),
)
def test_power_sums_satisfy_cauchy_schwarz(m, beta, seed):
    batch = sample_gbeta(EnsembleSpec(n_eigen=m, beta=beta), 16, seed=seed)
    p = batch.power_sums([1, 2])
    assert np.all(p[:, 0] ** 2 <= m * p[:, 1] * (1.0 + 1e-12))
