"""Non-Markovianity diagnostics built on a MapTrajectory.

Times are in units of 1/Gamma throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .master_equation import singular_windows

TOL = 1e-6
ALPHA_ONE_EPS = 1e-9


@dataclass
class MeasureReport:
    params: object
    t: np.ndarray
    n_delta_profile: np.ndarray
    gm: float
    blp: float
    cp_broken: bool
    p_broken: bool
    notes: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.gm < 0 or self.blp < 0:
            raise ValueError("measures must be nonnegative")

    @property
    def max_n_delta(self):
        return float(self.n_delta_profile.max())

    def hierarchy_violations(self, tol=TOL):
        """Names of the hierarchy / sufficient-condition statements that fail."""
        out = []
        if self.gm > tol and not self.blp > 0:
            out.append("gm>0 => blp>0")
        if self.blp > tol and not self.cp_broken:
            out.append("blp>0 => cp_broken")
        if self.extra.get("negative_delta_with_c") and not self.gm > 0:
            out.append("delta<0 & c!=0 => gm>0")
        return out


def delta_closed_form(t, alpha):
    """p_e - p_g for resonant scattering in the infinite waveguide."""
    t = np.asarray(t, dtype=float)
    a = float(alpha)
    if abs(a - 1) < ALPHA_ONE_EPS:
        return np.exp(-t) * (3 - 2 * t) - 2 * np.exp(-2 * t)
    num = 8 * a * np.exp(-(a + 1) * t / 2) + (a - 5) * (a + 1) * np.exp(-t) + 4 * (1 - a) * np.exp(-(a + 1) * t)
    return num / (a * a - 1)


def _h(t, alpha):
    """(f - g) e^{-alpha t} with f = 5e^{at} + 4a, g = 4a e^{(a+1)t/2} + a e^{at} + 4.

    Its zeros are the stationary points of delta.
    """
    a = alpha
    return 5 - a + (4 * a - 4) * np.exp(-a * t) - 4 * a * np.exp((1 - a) * t / 2)


def delta_stationary_analysis(alpha, t_max=200.0, xtol=1e-12):
    """Locate the stationary point of delta by bisection on the f/g crossing.

    Returns dict(count, t_star, delta_min). At alpha = 1 the crossing reduces
    to 2t - 5 + 4e^{-t} = 0.
    """
    a = float(alpha)
    if a <= 0:
        raise ValueError("alpha must be positive")
    if abs(a - 1) < ALPHA_ONE_EPS:
        fn = lambda t: 2 * t - 5 + 4 * np.exp(-t)
    else:
        fn = lambda t: _h(t, a)
    # h(0) = 1 - a and h -> (5 - a) or -inf at large t; one sign change at most
    lo = 1e-12
    hi = t_max
    f_lo = fn(lo)
    f_hi = fn(hi)
    if a >= 5 or np.sign(f_lo) == np.sign(f_hi) or f_hi == 0:
        return {"count": 0, "t_star": None, "delta_min": None}
    t_star = brentq(fn, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)
    return {"count": 1, "t_star": float(t_star), "delta_min": float(delta_closed_form(t_star, a))}


def negativity_profile(traj):
    return np.maximum(0.0, -traj.delta)


def gm_measure(traj):
    """Total increase of |det M_t| over the sampled trajectory."""
    d = np.abs(traj.det_M)
    return float(np.maximum(0.0, np.diff(d)).sum())


def _blp_growth(traj, theta):
    D = np.sqrt(np.abs(traj.c) ** 2 * np.sin(theta) ** 2 + traj.delta**2 * np.cos(theta) ** 2)
    return float(np.maximum(0.0, np.diff(D)).sum())


def blp_measure(traj, n_angles=64):
    """Backflow of trace distance maximised over antipodal pure pairs in the XZ plane."""
    if n_angles < 16:
        raise ValueError("n_angles must be at least 16")
    grid = np.linspace(0.0, np.pi / 2, n_angles)
    vals = np.array([_blp_growth(traj, th) for th in grid])
    i = int(np.argmax(vals))
    best = vals[i]
    step = grid[1] - grid[0]
    lo, hi = max(0.0, grid[i] - step), min(np.pi / 2, grid[i] + step)
    res = minimize_scalar(lambda th: -_blp_growth(traj, th), bounds=(lo, hi), method="bounded", options={"xatol": 1e-8})
    return float(max(best, -res.fun))


def divisibility_verdict(traj, rates, tol=TOL):
    ok = ~rates.singular
    m = np.minimum(np.minimum(rates.gamma_plus, rates.gamma_minus), rates.gamma_z)[ok]
    m = m[np.isfinite(m)]
    cp_broken = bool(m.size and m.min() < -tol)
    p_broken = bool(np.any((traj.delta < 0) & (np.abs(traj.c) > tol)))
    return {"cp_broken": cp_broken, "p_broken": p_broken}


def measure_report(cfg, traj, rates=None, n_angles=64):
    from .master_equation import extract_rates

    if rates is None:
        rates = extract_rates(traj)
    verdict = divisibility_verdict(traj, rates)
    wins = singular_windows(rates.singular)
    notes = "; ".join(f"[{traj.t[a]:.4g},{traj.t[b - 1]:.4g}]" for a, b in wins)
    neg_c = bool(np.any((traj.delta < 0) & (np.abs(traj.c) > TOL)))
    return MeasureReport(
        params=cfg,
        t=traj.t,
        n_delta_profile=negativity_profile(traj),
        gm=gm_measure(traj),
        blp=blp_measure(traj, n_angles),
        cp_broken=verdict["cp_broken"],
        p_broken=verdict["p_broken"],
        notes=f"singular windows: {notes}" if wins else "no singular windows",
        extra={"negative_delta_with_c": neg_c},
    )
