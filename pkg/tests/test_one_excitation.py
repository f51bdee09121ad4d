import numpy as np
import pytest
from scipy.integrate import solve_ivp

from scatterdm.core import ConfigError, PhysicalConfig, wavepacket_amplitude
from scatterdm.one_excitation import (
    e_infinite,
    e_semi_dde,
    e_semi_series,
    e_sm,
    phi_infinite,
    solve_one_excitation,
)
from scatterdm.two_excitation import lattice_for


def e_by_ode(t, cfg):
    # e' = -lam e - i V phi(-t), integrated to tight tolerance
    def rhs(s, y):
        e = y[0] + 1j * y[1]
        d = -cfg.lam * e - 1j * cfg.V * wavepacket_amplitude(-s, cfg, front=1.0)
        return [d.real, d.imag]

    sol = solve_ivp(rhs, (0, t[-1]), [0.0, 0.0], t_eval=t, method="DOP853", rtol=1e-11, atol=1e-13)
    return sol.y[0] + 1j * sol.y[1]


@pytest.mark.parametrize("alpha,k", [(0.5, 20.0), (1.0, 20.0), (2.0, 21.0), (1.0, 19.5)])
def test_e_infinite_against_ode(alpha, k):
    cfg = PhysicalConfig(alpha=alpha, k=k)
    t = np.linspace(0, 8, 801)
    assert np.abs(e_infinite(t, cfg) - e_by_ode(t, cfg)).max() < 1e-8


def test_e_infinite_resonant_limit_is_continuous():
    t = np.linspace(0, 6, 61)
    exact = e_infinite(t, PhysicalConfig(alpha=1.0))
    assert np.allclose(exact, np.sqrt(0.5) * t * np.exp(-(20j + 0.5) * t), atol=1e-14)
    near = e_infinite(t, PhysicalConfig(alpha=1.0 + 1e-7))
    assert np.abs(near - exact).max() < 1e-6


def test_e_infinite_starts_at_zero_and_decays():
    cfg = PhysicalConfig(alpha=0.3)
    assert e_infinite(0.0, cfg) == 0
    assert abs(e_infinite(300.0, cfg)) < 1e-8


def test_photon_field_right_of_qubit_includes_emission():
    cfg = PhysicalConfig(alpha=1.0)
    right, left = phi_infinite(np.array([1.0, -1.0]), 3.0, cfg, lambda s: e_infinite(s, cfg))
    e2 = e_infinite(2.0, cfg)
    assert right[0] == pytest.approx(wavepacket_amplitude(-2.0, cfg) - 1j * cfg.V * e2, abs=1e-14)
    assert right[1] == pytest.approx(wavepacket_amplitude(-4.0, cfg), abs=1e-14)
    assert left[1] == pytest.approx(-1j * cfg.V * e2, abs=1e-14)
    assert left[0] == 0


def test_semi_before_first_echo_is_phase_shifted_infinite():
    cfg = PhysicalConfig.semi_infinite(k0a_over_pi=4.0, alpha=0.8)
    t = np.linspace(0, 0.99 * cfg.tau, 200)
    inf = PhysicalConfig(alpha=0.8)
    assert np.allclose(e_semi_series(t, cfg), 1j * e_infinite(t, inf), atol=1e-13)


@pytest.mark.parametrize("k0a,alpha,k", [(0.5, 1.0, 20.0), (4.0, 1e-3, 20.0), (4.0, 20.0, 20.0), (1.0, 1.0, 21.0), (2.5, 0.3, 20.0)])
def test_series_against_dde(k0a, alpha, k):
    cfg = PhysicalConfig.semi_infinite(k0a_over_pi=k0a, alpha=alpha, k=k)
    lat = lattice_for(cfg, dt=2e-3, t_max=12.0)
    dde = e_semi_dde(lat.t, cfg).values
    assert np.abs(e_semi_series(lat.t, cfg) - dde).max() < 1e-6


def test_dde_fourth_order():
    cfg = PhysicalConfig.semi_infinite(k0a_over_pi=4.0, alpha=1.0)
    ref = e_semi_series(np.array([6 * cfg.a]), cfg)[0]
    errs = []
    for dt in (4e-3, 2e-3):
        lat = lattice_for(cfg, dt=dt, t_max=6 * cfg.a)
        errs.append(abs(e_semi_dde(lat.t, cfg).values[-1] - ref))
    assert errs[0] / errs[1] > 10


def test_e_sm_against_dde_emission_hook():
    cfg = PhysicalConfig.semi_infinite(k0a_over_pi=1.5)
    lat = lattice_for(cfg, dt=2e-3, t_max=8.0)
    dde = e_semi_dde(lat.t, cfg, source=False, e0=1.0).values
    assert np.abs(e_sm(lat.t, cfg) - dde).max() < 1e-6


@pytest.mark.parametrize("k0a", [1.0, 4.0])
def test_bound_state_population(k0a):
    # integer k0a/pi: final value theorem gives e -> 1 / (1 + gamma tau / 2)
    cfg = PhysicalConfig.semi_infinite(k0a_over_pi=k0a)
    final = abs(e_sm(40.0, cfg)) ** 2
    assert final == pytest.approx(1 / (1 + cfg.tau / 2) ** 2, rel=1e-6)


def test_half_integer_mirror_decays():
    cfg = PhysicalConfig.semi_infinite(k0a_over_pi=0.5)
    assert abs(e_sm(15.0, cfg)) < 1e-6


def test_e_sm_needs_mirror():
    with pytest.raises(ConfigError):
        e_sm(1.0, PhysicalConfig())


@pytest.mark.parametrize("cfg", [PhysicalConfig(alpha=0.7), PhysicalConfig.semi_infinite(k0a_over_pi=4.0, alpha=0.7)])
def test_norm_conserved(cfg):
    sol = solve_one_excitation(cfg, lattice_for(cfg, dt=4e-3, t_max=8.0))
    assert np.abs(sol.norm_residual).max() < 2e-5
    assert sol.p_g[0] == 0
    assert np.all(sol.p_g >= 0) and np.all(sol.p_g <= 1)


def test_norm_residual_converges():
    cfg = PhysicalConfig.semi_infinite(k0a_over_pi=1.0, alpha=2.0)
    r = [np.abs(solve_one_excitation(cfg, lattice_for(cfg, dt=dt, t_max=5.0)).norm_residual).max() for dt in (8e-3, 4e-3)]
    assert r[1] < r[0] / 2


def test_dde_and_series_methods_agree_in_solver():
    cfg = PhysicalConfig.semi_infinite(k0a_over_pi=2.0, alpha=1.0)
    lat = lattice_for(cfg, dt=4e-3, t_max=5.0)
    a = solve_one_excitation(cfg, lat, method="series")
    b = solve_one_excitation(cfg, lat, method="dde")
    assert np.abs(a.p_g - b.p_g).max() < 1e-6
    with pytest.raises(ValueError):
        solve_one_excitation(cfg, lat, method="euler")
