"""One-excitation sector: a photon hits the qubit in its ground state.

Gives the qubit amplitude e(t), the photon field and p_g = |e|^2 for the
infinite waveguide (closed form) and the semi-infinite one (echo series and a
delay-differential integrator).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ComplexSeries, ConfigError, LatticeSpec, piecewise_trapezoid, wavepacket_amplitude
from .history import FieldHistory

POLE_EPS = 1e-8


def e_infinite(t, cfg):
    """Qubit amplitude in the infinite waveguide, e(0) = 0."""
    t = np.asarray(t, dtype=float)
    g = cfg.gamma
    p = cfg.pole
    pref = math.sqrt(cfg.alpha * g * g / 2)
    if abs(p) < POLE_EPS * g:
        # removable singularity: (e^{-mu t} - e^{-lam t}) / p -> -i t e^{-lam t} to first order
        out = pref * t * np.exp(-cfg.lam * t) * (1 - 0.5j * p * t)
    else:
        out = 1j * pref * (np.exp(-cfg.mu * t) - np.exp(-cfg.lam * t)) / p
    return out if out.ndim else complex(out)


def _interp(e_history, s):
    """e at (possibly off-grid) times s from a ComplexSeries or a callable."""
    if callable(e_history):
        return np.asarray(e_history(s), dtype=complex)
    tt = e_history.t
    s = np.asarray(s, dtype=float)
    if np.any(s > tt[-1] + 1e-9 * e_history.dt):
        raise IndexError("retarded time outside stored history")
    v = e_history.values
    return np.interp(s, tt, v.real, left=0.0) + 1j * np.interp(s, tt, v.imag, left=0.0)


def _step(y):
    return np.where(y > 0, 1.0, np.where(y == 0, 0.5, 0.0))


def phi_infinite(x, t, cfg, e_history):
    """Right- and left-moving photon amplitudes at (x, t)."""
    x = np.asarray(x, dtype=float)
    V = cfg.V
    gate_r = _step(x) * _step(t - x)
    gate_l = _step(-x) * _step(t + x)
    er = _interp(e_history, np.clip(t - x, 0, t)) * gate_r
    el = _interp(e_history, np.clip(t + x, 0, t)) * gate_l
    right = wavepacket_amplitude(x - t, cfg) - 1j * V * er
    left = -1j * V * el
    return right, left


def _echo_kernel(n, t, cfg):
    """Q_n(t) = e^{-mu t} gamma(n+1, z) / (lam-mu)^{n+1} with z = (lam-mu) t.

    Equals the convolution n! * int_0^t e^{-mu(t-s)} s^n e^{-lam s} ds / n!, and
    is evaluated without dividing by the (possibly vanishing) pole.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    d = cfg.lam - cfg.mu
    out = np.zeros(t.shape, dtype=complex)
    z = d * t
    small = (np.abs(z) < n + 8.0) & (t > 0)
    big = (~small) & (t > 0)
    if small.any():
        # e^{-lam t} t^{n+1} sum_k z^k / ((n+1)...(n+1+k))
        zs = z[small]
        term = np.full(zs.shape, 1.0 / (n + 1), dtype=complex)
        total = term.copy()
        for kk in range(1, 400):
            term = term * zs / (n + 1 + kk)
            total += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        ts = t[small]
        out[small] = np.exp(-cfg.lam * ts) * ts ** (n + 1) * total
    if big.any():
        # scaled upward recurrence h_m = e^{-mu t} gamma(m, z), stable for |z| > n
        tb = t[big]
        zb = z[big]
        el = np.exp(-cfg.lam * tb)
        h = np.exp(-cfg.mu * tb) - el
        zm = np.ones(tb.shape, dtype=complex)
        for m in range(1, n + 1):
            zm = zm * zb
            h = m * h - zm * el
        out[big] = h / d ** (n + 1)
    return out


def default_n_max(t_max, cfg):
    return int(math.ceil(t_max / cfg.tau)) + 1


def e_semi_series(t, cfg, n_max=None):
    """Qubit amplitude in front of a mirror from the exact echo series.

    Direct-drive term plus round-trip echoes n = 1..n_max, each switched on at
    t = 2na. The overall phase convention of the chiral field makes this
    i * e_infinite(t) before the first echo returns.
    """
    if not cfg.is_semi:
        raise ConfigError("geometry", "e_semi_series needs a semi-infinite config")
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    g = cfg.gamma
    need = int(math.ceil(t.max() / cfg.tau)) if t.size else 0
    if n_max is None:
        n_max = need + 1
    if n_max < need:
        raise ValueError(f"n_max={n_max} below the echo count {need}")
    out = 1j * e_infinite(t, _as_infinite(cfg))
    ck = cfg.k - cfg.omega0 - 0.5j * cfg.alpha * g
    for n in range(1, n_max + 1):
        tn = t - 2 * n * cfg.a
        on = tn > 0
        if not on.any():
            break
        ts = tn[on]
        lognf = math.lgamma(n + 1)
        with np.errstate(over="raise"):
            try:
                first = np.exp(n * np.log(ts) - lognf - cfg.lam * ts)
                second = -1j * ck * _echo_kernel(n, ts, cfg) / math.exp(lognf)
            except FloatingPointError as exc:
                raise OverflowError(f"echo term n={n} overflows") from exc
        out[on] += -1j * math.sqrt(cfg.alpha * g) * (g / 2) ** (n - 0.5) * (first + second)
    return complex(out[0]) if scalar else out


def _as_infinite(cfg):
    from dataclasses import replace

    from .core import Infinite

    return replace(cfg, geometry=Infinite())


def _delay_steps(dt, cfg):
    d = cfg.tau / dt
    n = int(round(d))
    if n < 1:
        raise ValueError(f"delay 2a={cfg.tau:g} is smaller than dt={dt:g}")
    if abs(d - n) > 1e-9 * d:
        raise ValueError("grid must place the echo times 2na on grid points")
    return n


def e_semi_dde(t_grid, cfg, source=True, delay=True, e0=0.0):
    """Integrate the mirror delay equation for e(t) by fixed-step RK4.

    Delayed values at half steps come from cubic Hermite interpolation of the
    stored solution and its one-sided derivatives; the echo times are grid
    points so no interpolation straddles a kink. ``source``/``delay``/``e0`` are
    test hooks (source=False, e0=1 gives spontaneous emission).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    h = float(t_grid[1] - t_grid[0])
    if not np.allclose(np.diff(t_grid), h, rtol=1e-9, atol=0) or abs(t_grid[0]) > 1e-12:
        raise ValueError("t_grid must be uniform and start at 0")
    D = _delay_steps(h, cfg)
    n = t_grid.size
    lam = cfg.lam
    g2 = cfg.gamma / 2
    amp = math.sqrt(g2) * 1j * math.sqrt(cfg.alpha * cfg.gamma) if source else 0.0
    mu = cfg.mu
    tau = cfg.tau

    y = np.zeros(n, dtype=complex)
    dr = np.zeros(n, dtype=complex)  # derivative at t_m from the right
    dl = np.zeros(n, dtype=complex)  # derivative at t_m from the left
    y[0] = e0

    def rhs(s, e, ed, on):
        src = np.exp(-mu * s)
        if on:
            src = src - np.exp(mu * (tau - s))
        return -lam * e + (g2 * ed if on and delay else 0.0) + amp * src

    for m in range(n - 1):
        t = m * h
        on = m >= D
        if on:
            j = m - D
            yd0, yd1 = y[j], y[j + 1]
            ydm = 0.5 * (yd0 + yd1) + h * (dr[j] - dl[j + 1]) / 8
        else:
            yd0 = yd1 = ydm = 0.0
        k1 = rhs(t, y[m], yd0, on)
        k2 = rhs(t + h / 2, y[m] + h / 2 * k1, ydm, on)
        k3 = rhs(t + h / 2, y[m] + h / 2 * k2, ydm, on)
        k4 = rhs(t + h, y[m] + h * k3, yd1, on)
        y[m + 1] = y[m] + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        dr[m] = k1
        dl[m + 1] = rhs(t + h, y[m + 1], yd1, on)
    return ComplexSeries(0.0, h, y)


def e_sm(t, cfg):
    """Spontaneous-emission amplitude with the mirror (e(0)=1, no photon)."""
    if not cfg.is_semi:
        raise ConfigError("geometry", "e_sm needs a semi-infinite config")
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    lam = cfg.lam
    out = np.exp(-lam * t)
    base = np.log(cfg.gamma / 2) + 2 * cfg.a * lam
    n = 1
    while True:
        tn = t - 2 * n * cfg.a
        on = tn > 0
        if not on.any():
            break
        logterm = -lam * t[on] + n * (base + np.log(tn[on])) - math.lgamma(n + 1)
        if np.any(logterm.real > 700):
            raise OverflowError(f"e_sm echo term n={n} overflows")
        out[on] += np.exp(logterm)
        n += 1
    return complex(out[0]) if scalar else out


def phi_semi(x, t, cfg, e_history):
    """Chiral photon amplitude in the unfolded semi-infinite waveguide."""
    x = np.asarray(x, dtype=float)
    a = cfg.a
    V = cfg.V
    g1 = _step(x + a) * _step(t - x - a)
    g2 = _step(x - a) * _step(t - x + a)
    e1 = _interp(e_history, np.clip(t - x - a, 0, t)) * g1
    e2 = _interp(e_history, np.clip(t - x + a, 0, t)) * g2
    return wavepacket_amplitude(x - t, cfg) - V * (e1 - e2)


@dataclass(frozen=True)
class OneExcitationSolution:
    cfg: object
    lattice: LatticeSpec
    e_of_t: ComplexSeries
    phi_field: object
    p_g: np.ndarray
    norm_residual: np.ndarray

    @property
    def t(self):
        return self.e_of_t.t


def field_limits_infinite(cfg, e, n, h):
    """Photon amplitudes on the marched parts of the lattice at step n.

    Returns (right-moving on x = 0..t, left-moving on x = 0..-t), both indexed
    by |x|/h. The right-moving value at x=0 is the limit from x>0.
    """
    m = np.arange(n + 1)
    ret = e[n - m]
    right = wavepacket_amplitude((m - n) * h, cfg, front=1.0) - 1j * cfg.V * ret
    left = -1j * cfg.V * ret
    return right, left


def field_limits_semi(cfg, e, n, h, D):
    """Chiral photon amplitude on x_i = -a + i h, i = 0..n+D, at step n.

    Returns (right limits, left limits) so that jumps at x = -a, x = a and at
    the wavefront x = t - a are resolved exactly.
    """
    i = np.arange(n + D + 1)
    V = cfg.V
    rel = cfg.x0 + (i - n) * h
    base_r = wavepacket_amplitude(rel, cfg, front=0.0)
    base_l = wavepacket_amplitude(rel, cfg, front=1.0)
    first = np.zeros(i.size, dtype=complex)
    first[: n + 1] = e[n - i[: n + 1]]
    second = np.zeros(i.size, dtype=complex)
    second[D:] = e[n + D - i[D:]]
    right = base_r - V * first + V * second
    left = base_l - V * first + V * second
    left[0] = base_l[0]
    if D < i.size:
        left[D] = base_l[D] - V * first[D]
    return right, left


def solve_one_excitation(cfg, lattice, method="series"):
    """e(t) on the lattice grid, p_g, and the norm residual at every step.

    Semi-infinite ``method`` is 'series' (exact echo series) or 'dde'.
    """
    lattice.validate_for(cfg)
    h = lattice.dt
    n_steps = lattice.n_steps
    t = lattice.t
    if cfg.is_semi:
        D = lattice.delay_steps(cfg)
        if method == "dde":
            e = e_semi_dde(t, cfg).values
        elif method == "series":
            e = e_semi_series(t, cfg)
        else:
            raise ValueError(f"unknown method {method!r}")
    else:
        e = e_infinite(t, cfg)
    tail = np.exp(-cfg.alpha * cfg.gamma * t)
    resid = np.empty(n_steps + 1)
    hist = FieldHistory.empty_for(cfg, lattice, ("phi",) if cfg.is_semi else ("phi_R", "phi_L"))
    for n in range(n_steps + 1):
        if cfg.is_semi:
            fr, fl = field_limits_semi(cfg, e, n, h, D)
            norm = piecewise_trapezoid(np.abs(fr) ** 2, np.abs(fl) ** 2, h)
            if hist is not None and hist.wants(n):
                hist.store_semi(n, "phi", fl, fr[n], lambda x, s: wavepacket_amplitude(x - s, cfg))
        else:
            r, l = field_limits_infinite(cfg, e, n, h)
            norm = piecewise_trapezoid(np.abs(r) ** 2, np.abs(r) ** 2, h)
            norm += piecewise_trapezoid(np.abs(l) ** 2, np.abs(l) ** 2, h)
            if hist is not None and hist.wants(n):
                hist.store_infinite(n, "phi_R", r, lambda x, s: wavepacket_amplitude(x - s, cfg))
                hist.store_infinite(n, "phi_L", l, None, left=True)
        resid[n] = abs(e[n]) ** 2 + tail[n] + norm - 1.0
    return OneExcitationSolution(
        cfg=cfg,
        lattice=lattice,
        e_of_t=ComplexSeries(0.0, h, e),
        phi_field=hist,
        p_g=np.abs(e) ** 2,
        norm_residual=resid,
    )
