import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scatterdm.core import PhysicalConfig
from scatterdm.dynamical_map import (
    MapSnapshot,
    MapTrajectory,
    apply_map,
    bloch_affine,
    bloch_vector,
    choi_matrix,
    choi_min_eig,
    is_cp,
    random_state,
    solve_map,
    state_from_bloch,
    trace_distance,
    validate_state,
)
from scatterdm.two_excitation import lattice_for

E = np.array([[1, 0], [0, 0]], dtype=complex)
G = np.array([[0, 0], [0, 1]], dtype=complex)


def kraus_amplitude_damping(p):
    # independent channel: spontaneous decay with survival probability p
    return [np.array([[np.sqrt(p), 0], [0, 1]]), np.array([[0, 0], [np.sqrt(1 - p), 0]])]


def test_identity_snapshot():
    snap = MapSnapshot(0.0, 0.0, 1.0, 1.0)
    rho = random_state(np.random.default_rng(1))
    assert np.allclose(apply_map(snap, rho), rho)
    assert np.allclose(np.linalg.eigvalsh(choi_matrix(snap)), [0, 0, 0, 2])


def test_populations_from_basis_states():
    snap = MapSnapshot(1.0, 0.2, 0.5, 0.3 - 0.1j)
    assert apply_map(snap, G)[0, 0] == pytest.approx(0.2)
    assert apply_map(snap, E)[0, 0] == pytest.approx(0.5)


def test_matches_kraus_amplitude_damping():
    p = 0.37
    snap = MapSnapshot(1.0, 0.0, p, np.sqrt(p))
    rng = np.random.default_rng(3)
    for _ in range(5):
        rho = random_state(rng)
        ref = sum(K @ rho @ K.conj().T for K in kraus_amplitude_damping(p))
        assert np.allclose(apply_map(snap, rho), ref, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0, 1),
    st.floats(0, 1),
    st.floats(0, 1),
    st.floats(-np.pi, np.pi),
    st.integers(0, 2**31),
)
def test_bloch_form_consistent(p_g, p_e, cabs, theta, seed):
    snap = MapSnapshot(0.0, p_g, p_e, cabs * np.exp(1j * theta))
    rho = random_state(np.random.default_rng(seed))
    M, v = bloch_affine(snap)
    out = apply_map(snap, rho)
    assert np.allclose(bloch_vector(out), M @ bloch_vector(rho) + v, atol=1e-12)
    assert abs(np.trace(out) - 1) < 1e-14
    assert np.linalg.det(M) == pytest.approx(snap.det_M, abs=1e-12)


def test_real_c_gives_no_rotation_and_negative_delta_reflects():
    M, _ = bloch_affine(MapSnapshot(0.0, 0.6, 0.3, 0.5))
    assert np.allclose(M[:2, :2], 0.5 * np.eye(2))
    assert M[2, 2] < 0


def test_state_helpers_round_trip():
    r = np.array([0.3, -0.2, 0.5])
    assert np.allclose(bloch_vector(state_from_bloch(r)), r)
    assert np.allclose(state_from_bloch([0, 0, 1]), G)
    with pytest.raises(ValueError):
        validate_state(np.array([[1.2, 0], [0, -0.2]]))
    with pytest.raises(ValueError):
        validate_state(np.array([[0.5, 0.1], [0.3, 0.5]]))
    assert trace_distance(E, G) == pytest.approx(1.0)


def test_non_cp_snapshot_is_flagged():
    snap = MapSnapshot(0.0, 0.5, 0.5, 1.0)
    assert choi_min_eig(snap) < -0.1
    assert not is_cp(snap)


def test_snapshot_validation():
    with pytest.raises(ValueError):
        MapSnapshot(0.0, 1.2, 0.5, 0.0)
    with pytest.raises(ValueError):
        MapSnapshot(0.0, 0.2, 0.5, 1.5)
    with pytest.raises(ValueError):
        MapTrajectory([0.0], [0.0], [1.0], [1.0])


def test_emission_trajectory():
    t = np.linspace(0, 5, 11)
    tr = MapTrajectory.emission(t)
    assert np.allclose(tr.p_e, np.exp(-t))
    assert np.allclose(tr.det_M, np.exp(-2 * t))


@pytest.mark.parametrize("alpha", [1e-3, 1.0])
def test_solver_trajectory(alpha):
    cfg = PhysicalConfig(alpha=alpha)
    traj, _, _ = solve_map(cfg, lattice_for(cfg, dt=5e-3, t_max=8.0))
    assert (traj.p_g[0], traj.p_e[0], traj.c[0]) == (0, 1, 1)
    assert min(choi_min_eig(traj.snapshot(i)) for i in range(0, len(traj), 10)) > -1e-6
    if alpha < 0.01:
        t = traj.t
        assert np.abs(traj.p_e - np.exp(-t)).max() < 5e-3
        assert np.abs(traj.c - np.exp(-(20j + 0.5) * t)).max() < 5e-3
    else:
        neg = traj.t[traj.delta < 0]
        assert neg.size and 0.5 < neg[0] < 2.0


def test_semi_trajectory_is_cp():
    cfg = PhysicalConfig.semi_infinite(k0a_over_pi=4.0, alpha=0.5)
    traj, _, _ = solve_map(cfg, lattice_for(cfg, dt=5e-3, t_max=6.0))
    assert min(choi_min_eig(traj.snapshot(i)) for i in range(0, len(traj), 10)) > -1e-6
