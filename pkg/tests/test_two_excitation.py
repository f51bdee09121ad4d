import numpy as np
import pytest

from scatterdm.core import ConfigError, PhysicalConfig
from scatterdm.one_excitation import e_sm, solve_one_excitation
from scatterdm.two_excitation import (
    closed_form_resonant,
    closed_form_resonant_derivatives,
    exact_psi_left_of_qubit,
    lattice_for,
    norm_residual,
    overlap_c,
    solve_infinite,
    solve_semi_infinite,
    steady_state_probabilities,
)


def test_closed_form_initial_values():
    for alpha in (0.01, 1.0, 7.0):
        p_g, p_e, c = closed_form_resonant(np.array([0.0]), alpha)
        assert p_g[0] == pytest.approx(0, abs=1e-15)
        assert p_e[0] == pytest.approx(1, abs=1e-14)
        assert c[0] == pytest.approx(1, abs=1e-14)


def test_closed_form_continuous_through_alpha_one():
    t = np.linspace(0, 10, 201)
    a = np.array(closed_form_resonant(t, 1.0))
    for alpha in (1 - 1e-7, 1 + 1e-7):
        b = np.array(closed_form_resonant(t, alpha))
        assert np.abs(a - b).max() < 1e-6


@pytest.mark.parametrize("alpha", [1e-5, 1e5])
def test_closed_form_spontaneous_limits(alpha):
    t = np.linspace(0, 10, 101)
    p_g, p_e, c = closed_form_resonant(t, alpha)
    assert np.abs(p_g).max() < 1e-3
    assert np.abs(p_e - np.exp(-t)).max() < 1e-3
    assert np.abs(c - np.exp(-(20j + 0.5) * t)).max() < 1e-3


@pytest.mark.parametrize("alpha", [0.3, 1.0, 2.5])
def test_closed_form_derivatives_against_differences(alpha):
    t = np.linspace(0.1, 8, 50)
    h = 1e-5
    up = closed_form_resonant(t + h, alpha)
    dn = closed_form_resonant(t - h, alpha)
    for d, u, v in zip(closed_form_resonant_derivatives(t, alpha), up, dn):
        assert np.abs(d - (u - v) / (2 * h)).max() < 1e-6


@pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0])
def test_infinite_solver_matches_closed_form(alpha):
    cfg = PhysicalConfig(alpha=alpha)
    lat = lattice_for(cfg, dt=2e-3, t_max=6.0)
    sol = solve_infinite(cfg, lat)
    _, p_e, c = closed_form_resonant(lat.t, alpha)
    assert np.abs(sol.p_e - p_e).max() < 1e-5
    assert np.abs(sol.c.values - c).max() < 1e-5


def test_infinite_off_resonance_norm():
    cfg = PhysicalConfig(alpha=0.8, k=21.0)
    lat = lattice_for(cfg, dt=4e-3, t_max=6.0, store_every=2)
    sol = solve_infinite(cfg, lat)
    for t in (1.0, 3.0, 6.0):
        assert abs(norm_residual(sol, t)) < 1e-4


def test_c_equals_photon_overlap():
    # c from the solver vs <phi(t)|psi(t)> built from both stored fields
    for cfg in (PhysicalConfig(alpha=1.5), PhysicalConfig.semi_infinite(k0a_over_pi=2.0, alpha=1.5)):
        lat = lattice_for(cfg, dt=4e-3, t_max=4.0, store_every=2)
        one = solve_one_excitation(cfg, lat)
        two = solve_semi_infinite(cfg, lat, e_values=one.e_of_t.values) if cfg.is_semi else solve_infinite(cfg, lat)
        ov = overlap_c(one, two)
        assert np.abs(ov.values - two.c.values[::2]).max() < 1e-4


def test_semi_matches_infinite_before_echo():
    semi = PhysicalConfig.semi_infinite(a=3.0, alpha=1.0)
    lat = lattice_for(semi, dt=5e-3, t_max=5.5)
    two = solve_semi_infinite(semi, lat)
    _, p_e, c = closed_form_resonant(lat.t, 1.0)
    early = lat.t < 5.9
    assert np.abs(two.p_e[early] - p_e[early]).max() < 1e-5
    assert np.abs(np.abs(two.c.values[early]) - np.abs(c[early])).max() < 1e-5


def test_semi_norm_and_exact_region():
    cfg = PhysicalConfig.semi_infinite(k0a_over_pi=4.0, alpha=1.0)
    lat = lattice_for(cfg, dt=4e-3, t_max=4 * cfg.a, store_every=1)
    one = solve_one_excitation(cfg, lat)
    two = solve_semi_infinite(cfg, lat, e_values=one.e_of_t.values, left_region="independent")
    assert max(abs(norm_residual(two, t)) for t in lat.t[::40]) < 1e-4
    assert np.abs(two.left_amplitude - e_sm(lat.t, cfg)).max() < 1e-5
    hist = two.psi
    xs = hist.x[hist.x < -cfg.a - 1e-12][::7]
    k = hist.n_frames - 1
    got = hist.value("psi", xs, np.full(xs.shape, k * hist.H))
    assert np.abs(got - exact_psi_left_of_qubit(xs, k * hist.H, cfg)).max() < 1e-5


def test_skipping_mirror_delay_breaks_norm():
    cfg = PhysicalConfig.semi_infinite(k0a_over_pi=4.0, alpha=1.0)
    lat = lattice_for(cfg, dt=4e-3, t_max=4 * cfg.a, store_every=1)
    two = solve_semi_infinite(cfg, lat, left_region="independent", skip_mirror_delay=True)
    assert abs(norm_residual(two, lat.t_max)) > 1e-2


def test_exact_region_rejects_points_right_of_qubit():
    cfg = PhysicalConfig.semi_infinite(k0a_over_pi=1.0)
    with pytest.raises(ValueError):
        exact_psi_left_of_qubit(np.array([0.0]), 1.0, cfg)


def test_steady_state_sum_rule_alpha_one():
    cfg = PhysicalConfig(alpha=1.0)
    lat = lattice_for(cfg, dt=4e-3, t_max=15.0, store_every=2)
    p_rr, p_rl, p_ll, p_e = steady_state_probabilities(solve_infinite(cfg, lat))
    assert p_rr + p_rl + p_ll + p_e == pytest.approx(1.0, abs=1e-4)
    assert min(p_rr, p_rl, p_ll) > 0


def test_steady_state_guards():
    cfg = PhysicalConfig(alpha=1.0)
    lat = lattice_for(cfg, dt=1e-2, t_max=3.0, store_every=1)
    with pytest.raises(ValueError):
        steady_state_probabilities(solve_infinite(cfg, lat))
    with pytest.raises(ValueError):
        steady_state_probabilities(solve_infinite(cfg, lattice_for(cfg, dt=1e-2, t_max=3.0)), require_decay=False)
    semi = PhysicalConfig.semi_infinite(k0a_over_pi=1.0)
    lat = lattice_for(semi, dt=1e-2, t_max=1.0, store_every=1)
    with pytest.raises(ConfigError):
        steady_state_probabilities(solve_semi_infinite(semi, lat))
