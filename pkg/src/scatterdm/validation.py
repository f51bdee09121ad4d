"""Invariant suite run by ``scatterdm validate`` at test resolution."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import PhysicalConfig
from .two_excitation import lattice_for


@dataclass
class CheckResult:
    name: str
    value: float
    limit: float

    @property
    def ok(self):
        return bool(np.isfinite(self.value) and self.value <= self.limit)


def _semi_cfg():
    return PhysicalConfig.semi_infinite(k0a_over_pi=4.0, alpha=1.0)


def check_one_excitation_norm():
    from .one_excitation import solve_one_excitation

    out = []
    for name, cfg in (("one-excitation norm (inf)", PhysicalConfig()), ("one-excitation norm (semi)", _semi_cfg())):
        sol = solve_one_excitation(cfg, lattice_for(cfg, dt=4e-3, t_max=6.0))
        out.append(CheckResult(name, float(np.abs(sol.norm_residual).max()), 1e-4))
    return out


def check_two_excitation(fault):
    """Norm conservation in both geometries and the exact region left of the qubit."""
    from .one_excitation import e_sm, solve_one_excitation
    from .two_excitation import exact_psi_left_of_qubit, norm_residual, solve_infinite, solve_semi_infinite

    skip = fault == "skip-mirror-delay"
    out = []
    cfg = PhysicalConfig()
    lat = lattice_for(cfg, dt=4e-3, t_max=8.0, store_every=2)
    sol = solve_infinite(cfg, lat)
    out.append(CheckResult("two-excitation norm (inf)", abs(norm_residual(sol, lat.t_max)), 1e-3))

    cfg = _semi_cfg()
    lat = lattice_for(cfg, dt=4e-3, t_max=6 * cfg.a, store_every=1)
    one = solve_one_excitation(cfg, lat)
    sol = solve_semi_infinite(cfg, lat, e_values=one.e_of_t.values, left_region="independent", skip_mirror_delay=skip)
    worst = max(abs(norm_residual(sol, t)) for t in lat.t[:: max(1, lat.n_steps // 20)])
    out.append(CheckResult("two-excitation norm (semi)", worst, 1e-3))
    hist = sol.psi
    xs = hist.x[hist.x < -cfg.a - 1e-12]
    err = 0.0
    for k in range(0, hist.n_frames, max(1, hist.n_frames // 20)):
        s = k * hist.H
        num = hist.value("psi", xs, np.full(xs.shape, s))
        err = max(err, float(np.abs(num - exact_psi_left_of_qubit(xs, s, cfg)).max()))
    out.append(CheckResult("exact region x < -a (semi)", err, 1e-4))
    u_err = float(np.abs(sol.left_amplitude - e_sm(lat.t, cfg)).max())
    out.append(CheckResult("left amplitude vs mirror emission", u_err, 1e-4))
    return out


def check_closed_forms():
    from .dynamical_map import solve_map
    from .two_excitation import closed_form_resonant

    cfg = PhysicalConfig(alpha=1.0)
    lat = lattice_for(cfg, dt=2e-3, t_max=10.0)
    traj, _, _ = solve_map(cfg, lat)
    p_g, p_e, c = closed_form_resonant(traj.t, 1.0, cfg.omega0)
    err = max(np.abs(traj.p_g - p_g).max(), np.abs(traj.p_e - p_e).max(), np.abs(traj.c - c).max())
    return [CheckResult("closed forms (inf, alpha=1)", float(err), 1e-3)]


def check_me_consistency(n_states=5):
    from .dynamical_map import MapTrajectory, apply_map, random_state, trace_distance
    from .master_equation import extract_rates, integrate_me

    t = np.linspace(0.0, 10.0, 2001)
    traj = MapTrajectory.from_closed_form(t, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rates = extract_rates(traj)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(n_states):
        rho0 = random_state(rng)
        states, bad = integrate_me(rates, rho0, reseed=lambda i: apply_map(traj.snapshot(i), rho0))
        for i in np.flatnonzero(~bad):
            worst = max(worst, trace_distance(states[i], apply_map(traj.snapshot(i), rho0)))
    return [CheckResult("master equation vs map", worst, 1e-3)]


def check_hierarchy():
    from .cli import make_lattice, run_point

    count = 0
    for cfg in (PhysicalConfig(alpha=1.0), PhysicalConfig.semi_infinite(k0a_over_pi=1.0, alpha=0.1)):
        report = run_point(cfg, make_lattice(cfg, 5e-3, 10.0))[2]
        count += len(report.hierarchy_violations())
    return [CheckResult("measure hierarchy violations", float(count), 0.0)]


def check_delta_analysis():
    from scipy.optimize import minimize_scalar

    from .nm_measures import delta_closed_form, delta_stationary_analysis

    worst = 0.0
    for a in (0.2, 1.0, 4.9):
        res = delta_stationary_analysis(a)
        ref = minimize_scalar(lambda x: delta_closed_form(x, a), bounds=(0.0, 30.0), method="bounded", options={"xatol": 1e-10})
        worst = max(worst, abs(res["t_star"] - ref.x) if res["count"] == 1 and res["delta_min"] < 0 else np.inf)
    t = np.arange(0.0, 20.0, 1e-3)
    neg = max(max(0.0, -float(delta_closed_form(t, a).min())) for a in (5.01, 6.0, 10.0))
    return [CheckResult("delta stationary point", worst, 1e-6), CheckResult("delta >= 0 for alpha > 5", neg, 0.0)]


def run_checks(fault=None):
    results = []
    results += check_one_excitation_norm()
    results += check_two_excitation(fault)
    results += check_closed_forms()
    results += check_me_consistency()
    results += check_hierarchy()
    results += check_delta_analysis()
    return results
