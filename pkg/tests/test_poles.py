import numpy as np
import pytest

from pblab.poles import (
    PoleState,
    demo_state,
    eval_fields,
    first_integrals,
    governing_residual,
    hirota_residual,
    integrate_poles,
    project_zero_manifold,
)

XS = np.array([0.31, 1.7, 2.5])


def test_first_integrals_conserved_on_zero_manifold(k2_traj):
    base = first_integrals(k2_traj.states[0])
    drift = max(np.abs(first_integrals(s) - base).max() for s in k2_traj.states)
    assert drift <= 1e-8


def test_only_the_sum_survives_off_the_manifold():
    st = demo_state(3, project=False)
    I0 = first_integrals(st)
    traj = integrate_poles(st, 3.0)
    I1 = first_integrals(traj.states[-1])
    assert abs(I1.sum() - I0.sum()) <= 1e-8
    assert np.abs(I1 - I0).max() >= 0.1


def test_projection_lands_on_zero_integrals():
    st = demo_state(4)
    assert np.abs(first_integrals(st)).max() <= 1e-10


def test_projection_reports_spread():
    raw = demo_state(3, project=False)
    st, spread = project_zero_manifold(raw)
    assert np.abs(first_integrals(st)).max() <= 1e-10
    assert spread >= 0.0


def test_governing_equations_hold_along_flow(k2_traj):
    r1, r2 = governing_residual(k2_traj, 1.3, XS)
    assert np.abs(r1).max() <= 1e-6
    assert np.abs(r2).max() <= 1e-6


def test_bilinear_form_of_flow(k2_traj):
    st = k2_traj.state_at(1.3)
    assert np.abs(hirota_residual(st, XS)).max() <= 1e-6


def test_bilinear_form_holds_for_larger_rings():
    st = demo_state(3)
    traj = integrate_poles(st, 1.5)
    assert np.abs(hirota_residual(traj.state_at(1.2), XS)).max() <= 1e-6


def test_state_validation():
    with pytest.raises(ValueError):
        PoleState(kappa=2, t=0.0, Q=np.array([1.0 + 1j]), Qdot=np.zeros(2), U=0j)
    with pytest.raises(ValueError):  # coincident poles
        PoleState(kappa=2, t=0.0, Q=np.array([1j, 1j]), Qdot=np.zeros(2), U=0j)
    with pytest.raises(ValueError):
        demo_state(0)


def test_trajectory_bounds_checked(k2_traj):
    with pytest.raises(ValueError):
        k2_traj.state_at(99.0)
    with pytest.raises(ValueError):
        integrate_poles(demo_state(2), 0.0)


def test_trajectory_endpoints(k2_traj):
    assert k2_traj.states[0].t == 0.0
    assert k2_traj.states[-1].t == 3.5
    st = k2_traj.state_at(1.234)
    assert st.t == 1.234 and st.kappa == 2


def test_field_normalizations(k2_traj):
    # b_plus = -P/kappa and b_one = b/kappa at generic points
    st = k2_traj.state_at(0.7)
    f = eval_fields(st, XS)
    P = np.array([np.sum(1.0 / (x - st.Q)) for x in XS])
    assert np.abs(f.b_plus - (-P / st.kappa)).max() <= 1e-12


def test_eval_rejects_points_on_poles(k2_traj):
    st = k2_traj.state_at(0.7)
    with pytest.raises(ValueError):
        eval_fields(st, np.array([st.Q[0]]))
