import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from scatterdm.core import PhysicalConfig
from scatterdm.dynamical_map import MapTrajectory, solve_map
from scatterdm.master_equation import extract_rates
from scatterdm.nm_measures import (
    MeasureReport,
    blp_measure,
    delta_closed_form,
    delta_stationary_analysis,
    divisibility_verdict,
    gm_measure,
    measure_report,
    negativity_profile,
)
from scatterdm.two_excitation import closed_form_resonant, lattice_for

T = np.linspace(0, 15, 3001)


@pytest.mark.parametrize("alpha", [1e-3, 0.4, 1.0, 3.0, 6.0, 50.0])
def test_delta_matches_population_difference(alpha):
    t = np.linspace(0, 20, 1000)
    p_g, p_e, _ = closed_form_resonant(t, alpha)
    assert np.abs(delta_closed_form(t, alpha) - (p_e - p_g)).max() < 1e-12
    assert delta_closed_form(0.0, alpha) == pytest.approx(1.0)


def test_delta_alpha_one_is_two_sided_limit():
    t = np.linspace(0, 12, 400)
    avg = 0.5 * (delta_closed_form(t, 1 - 1e-6) + delta_closed_form(t, 1 + 1e-6))
    assert np.abs(delta_closed_form(t, 1.0) - avg).max() < 1e-8


def test_delta_closed_form_against_solver():
    cfg = PhysicalConfig(alpha=1.0)
    traj, _, _ = solve_map(cfg, lattice_for(cfg, dt=2e-3, t_max=6.0))
    assert np.abs(traj.delta - delta_closed_form(traj.t, 1.0)).max() < 1e-4


@pytest.mark.parametrize("alpha", [0.01, 0.3, 1.0, 2.0, 4.9])
def test_stationary_point_is_the_minimum(alpha):
    res = delta_stationary_analysis(alpha)
    assert res["count"] == 1
    ref = minimize_scalar(lambda t: delta_closed_form(t, alpha), bounds=(1e-6, 200), method="bounded",
                          options={"xatol": 1e-12})
    assert res["t_star"] == pytest.approx(ref.x, abs=1e-5)
    assert res["delta_min"] == pytest.approx(ref.fun, abs=1e-12)
    assert res["delta_min"] < 0


@pytest.mark.parametrize("alpha", [5.0, 5.01, 6.0, 10.0, 200.0])
def test_no_negative_delta_for_large_alpha(alpha):
    assert delta_stationary_analysis(alpha)["count"] == 0
    assert delta_closed_form(T, alpha).min() >= -1e-15


def test_alpha_one_crossing():
    res = delta_stationary_analysis(1.0)
    t = res["t_star"]
    assert 2 * t - 5 + 4 * np.exp(-t) == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        delta_stationary_analysis(0.0)


def test_negativity_profile_nonnegative():
    n = negativity_profile(MapTrajectory.from_closed_form(T, 1.0))
    assert n.min() == 0 and not np.signbit(n).any()
    assert n.max() == pytest.approx(-delta_stationary_analysis(1.0)["delta_min"], rel=1e-5)


def test_emission_is_markovian():
    tr = MapTrajectory.emission(T)
    assert gm_measure(tr) == 0
    assert blp_measure(tr) == pytest.approx(0, abs=1e-14)
    v = divisibility_verdict(tr, extract_rates(tr))
    assert v == {"cp_broken": False, "p_broken": False}


def test_alpha_one_is_non_markovian():
    tr = MapTrajectory.from_closed_form(T, 1.0)
    rates = extract_rates(tr)
    assert gm_measure(tr) > 1e-3
    assert blp_measure(tr) > 0
    assert divisibility_verdict(tr, rates) == {"cp_broken": True, "p_broken": True}
    assert (tr.det_M < 0).any()


def test_large_alpha_keeps_p_divisibility():
    tr = MapTrajectory.from_closed_form(T, 10.0)
    assert not divisibility_verdict(tr, extract_rates(tr))["p_broken"]


def test_blp_angle_grid_guard():
    with pytest.raises(ValueError):
        blp_measure(MapTrajectory.emission(T), n_angles=8)


def test_blp_refinement_not_below_grid():
    tr = MapTrajectory.from_closed_form(T, 1.0)
    assert blp_measure(tr, 64) >= blp_measure(tr, 16) - 1e-12


def test_weak_drive_mirror_reduces_to_emission_with_mirror():
    cfg = PhysicalConfig.semi_infinite(k0a_over_pi=4.0, alpha=1e-3)
    traj, _, _ = solve_map(cfg, lattice_for(cfg, dt=5e-3, t_max=15.0))
    ref = gm_measure(MapTrajectory.emission_with_mirror(traj.t, cfg))
    assert gm_measure(traj) == pytest.approx(ref, rel=0.05)


def test_gm_converges_in_dt():
    cfg = PhysicalConfig(alpha=1.0)
    g = [gm_measure(solve_map(cfg, lattice_for(cfg, dt=dt, t_max=12.0))[0]) for dt in (5e-3, 2.5e-3)]
    assert abs(g[0] - g[1]) <= 0.02 * g[1]


def test_report_hierarchy():
    cfg = PhysicalConfig(alpha=1.0)
    rep = measure_report(cfg, MapTrajectory.from_closed_form(T, 1.0))
    assert rep.hierarchy_violations() == []
    assert rep.max_n_delta > 0 and "singular" in rep.notes
    bad = MeasureReport(cfg, T, np.zeros_like(T), gm=0.1, blp=0.0, cp_broken=False, p_broken=False)
    assert bad.hierarchy_violations() == ["gm>0 => blp>0"]
    with pytest.raises(ValueError):
        MeasureReport(cfg, T, np.zeros_like(T), gm=-1.0, blp=0.0, cp_broken=False, p_broken=False)
