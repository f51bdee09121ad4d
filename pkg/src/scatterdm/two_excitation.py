"""Two-excitation sector: a photon hits the qubit in its excited state.

The single-photon-plus-excited-qubit amplitude psi(x, t) obeys an advection
equation with non-local (and, with a mirror, delayed) sources. We march it
along characteristics with dx = dt, so every non-local lookup lands on a
lattice site. Each step is an exponential trapezoid rule along the
characteristic:

    psi_new = e^{-lam h} psi_old + h/2 (e^{-lam h} S_old + S_new)

where S_old and S_new are one-sided limits of the source on the step.
The two-photon amplitude is never stored; its norm and the steady-state
scattering probabilities are rebuilt from the psi history on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import ComplexSeries, ConfigError, LatticeSpec, piecewise_trapezoid, trapezoid_weights, wavepacket_amplitude
from .history import FieldHistory
from .one_excitation import e_infinite, e_semi_series, e_sm, field_limits_infinite, field_limits_semi


@dataclass
class TwoExcitationSolution:
    cfg: object
    lattice: LatticeSpec
    psi: Optional[FieldHistory]
    p_e: np.ndarray
    c: ComplexSeries
    # running integrals used to rebuild the two-photon norm
    n_right: np.ndarray = field(default=None, repr=False)
    n_left: np.ndarray = field(default=None, repr=False)
    overlap_delay: np.ndarray = field(default=None, repr=False)
    left_amplitude: np.ndarray = field(default=None, repr=False)

    @property
    def t(self):
        return self.lattice.t

    @property
    def chi_norm(self):
        """Two-photon norm implied by conservation, 1 - p_e."""
        return 1.0 - self.p_e


# closed forms at resonance (time in units of 1/gamma) ------------------------


def _q(t, eps):
    """(e^{-eps t/2} - 1) / eps, finite at eps = 0."""
    if eps == 0:
        return -0.5 * t
    return np.expm1(-0.5 * eps * t) / eps


def closed_form_resonant(t, alpha, omega0=20.0):
    """Exact (p_g, p_e, c) for k = omega0 in the infinite waveguide.

    Written in terms of expm1 of (alpha-1) t / 2 so the alpha -> 1 limit and
    large alpha t are both free of cancellation and overflow; at t=0 it gives
    (0, 1, 1).
    """
    t = np.asarray(t, dtype=float)
    eps = alpha - 1.0
    q = _q(t, eps)
    e1 = eps * q
    et = np.exp(-t)
    p_g = 2 * alpha * et * q * q
    P = (6 + eps) + 8 * alpha * q + 2 * alpha * (alpha + 1) * q * q - 4 * np.exp(-alpha * t)
    p_e = et * P / (alpha + 1)
    B = 2 - 4 * q - 4 * e1 * q - 2 * e1 * e1
    g = (eps * np.exp(-0.5 * t) + np.exp(-1.5 * t) * B) / (2 + eps)
    c = np.exp(-1j * omega0 * t) * g
    return p_g, p_e, c


def closed_form_resonant_derivatives(t, alpha, omega0=20.0):
    """Time derivatives of closed_form_resonant, (dp_g, dp_e, dc)."""
    t = np.asarray(t, dtype=float)
    eps = alpha - 1.0
    q = _q(t, eps)
    dq = -0.5 * (1 + eps * q)
    et = np.exp(-t)
    p_g, p_e, c = closed_form_resonant(t, alpha, omega0)
    dp_g = 2 * alpha * et * (-q * q + 2 * q * dq)
    dP = 8 * alpha * dq + 4 * alpha * (alpha + 1) * q * dq + 4 * alpha * np.exp(-alpha * t)
    dp_e = -p_e + et * dP / (alpha + 1)
    B = 2 - 4 * q - 4 * eps * q * q - 2 * eps * eps * q * q
    dB = -4 * dq - 8 * eps * q * dq - 4 * eps * eps * q * dq
    g = (eps * np.exp(-0.5 * t) + np.exp(-1.5 * t) * B) / (2 + eps)
    dg = (-0.5 * eps * np.exp(-0.5 * t) + np.exp(-1.5 * t) * (dB - 1.5 * B)) / (2 + eps)
    dc = np.exp(-1j * omega0 * t) * (dg - 1j * omega0 * g)
    return dp_g, dp_e, dc


# infinite waveguide -----------------------------------------------------------


def solve_infinite(cfg, lattice, e_values=None):
    """March the right/left pair on the four-region scheme.

    Region x <= 0 of the right mover is source free (exact transport of the
    wavepacket times the bare decay); the left mover vanishes for x > 0. The
    marched regions 0 < x < t and -t < x < 0 take their sources from the
    first, which is known in closed form, so no stored history is consulted
    during the march.
    """
    if cfg.is_semi:
        raise ConfigError("geometry", "solve_infinite needs an infinite config")
    lattice.validate_for(cfg)
    h = lattice.dt
    N = lattice.n_steps
    g = cfg.gamma
    lam = cfg.lam
    E = np.exp(-lam * h)
    g2 = g / 2
    tt = lattice.t
    e = e_infinite(tt, cfg) if e_values is None else np.asarray(e_values)
    expl = np.exp(-lam * h * np.arange(N + 2))
    w = wavepacket_amplitude(-h * np.arange(N + 2), cfg, front=1.0)
    tail = np.exp(-cfg.alpha * g * tt)

    p_e = np.empty(N + 1)
    c = np.empty(N + 1, dtype=complex)
    nr = np.empty(N + 1)
    nl = np.empty(N + 1)
    hist = FieldHistory.empty_for(cfg, lattice, ("psi_R", "psi_L"))

    def outer(x, s):
        return wavepacket_amplitude(x - s, cfg) * np.exp(-lam * s)

    r = np.array([w[0]], dtype=complex)
    left = np.zeros(1, dtype=complex)
    for n in range(N + 1):
        phr, phl = field_limits_infinite(cfg, e, n, h)
        a_r = np.abs(r) ** 2
        a_l = np.abs(left) ** 2
        nr[n] = tail[n] * np.exp(-g * tt[n]) + piecewise_trapezoid(a_r, a_r, h)
        nl[n] = piecewise_trapezoid(a_l, a_l, h)
        p_e[n] = nr[n] + nl[n]
        ov_r = np.conj(phr) * r
        ov_l = np.conj(phl) * left
        c[n] = tail[n] * expl[n] + piecewise_trapezoid(ov_r, ov_r, h) + piecewise_trapezoid(ov_l, ov_l, h)
        if hist is not None and hist.wants(n):
            hist.store_infinite(n, "psi_R", r, outer)
            hist.store_infinite(n, "psi_L", left, None, left=True)
        if n == N:
            break
        # sources at (m, n) and (m+1, n+1): -gamma/2 psi_R(-x, t-x), from the source-free region
        s_old = -g2 * w[n] * expl[n::-1]
        s_new = -g2 * w[n + 1] * expl[n::-1]
        inc = 0.5 * h * (E * s_old + s_new)
        r_next = np.empty(n + 2, dtype=complex)
        r_next[0] = w[n + 1] * expl[n + 1]
        r_next[1:] = E * r + inc
        l_next = np.empty(n + 2, dtype=complex)
        l_next[0] = 0.0
        l_next[1:] = E * left + inc
        r, left = r_next, l_next

    return TwoExcitationSolution(
        cfg=cfg, lattice=lattice, psi=hist, p_e=p_e, c=ComplexSeries(0.0, h, c),
        n_right=nr, n_left=nl,
    )


def _cumtrapz(y, h):
    out = np.zeros(len(y), dtype=np.result_type(y, float))
    if len(y) > 1:
        out[1:] = np.cumsum(0.5 * h * (y[1:] + y[:-1]))
    return out


def _plane_sum(f, w1, w2):
    return np.einsum("i,ij,j->", w1, f, w2)


def steady_state_probabilities(solution, cfg=None, t=None, require_decay=True):
    """Probabilities that both photons leave right (RR), one each way (RL) or both left (LL).

    The two-photon amplitudes are rebuilt at time ``t`` (default: the last
    stored frame) from the psi history and integrated over their light-cone
    support. Returns (P_RR, P_RL, P_LL, p_e(t)).
    """
    cfg = cfg or solution.cfg
    if cfg.is_semi:
        raise ConfigError("geometry", "steady-state probabilities are defined for the infinite waveguide")
    hist = solution.psi
    if hist is None:
        raise ValueError("solution was computed without a stored field history")
    h = solution.lattice.dt
    K = hist.n_frames - 1 if t is None else int(round(t / hist.H))
    n = K * hist.step
    pe = solution.p_e[n]
    if require_decay and pe >= 1e-4:
        raise ValueError(f"qubit not yet decayed: p_e(t_max) = {pe:.3g}")
    H = hist.H
    g = cfg.gamma
    j = np.arange(K + 1)
    w = trapezoid_weights(K + 1, H)
    j1, j2 = np.meshgrid(j, j, indexing="ij")
    # X_RR: psi_R(x1-x2, t-x2) conj psi_R(x2-x1, t-x1) on [0,t]^2
    A = hist.lookup("psi_R", j1 - j2, K - j2)
    x_rr = _plane_sum(A * np.conj(A.T), w, w)
    # X_RL: x1 in [0,t], x2 = -j2 H in [-t,0]
    A = hist.lookup("psi_R", j1 - j2, K - j2)
    B = hist.lookup("psi_L", j1 - j2, K - j1)
    x_rl = _plane_sum(A * np.conj(B), w, w)
    # X_LL: x1 = -j1 H, x2 = -j2 H
    A = hist.lookup("psi_L", -j1 + j2, K - j2)
    x_ll = _plane_sum(A * np.conj(A.T), w, w)
    n_r = _cumtrapz(solution.n_right, h)[n]
    n_l = _cumtrapz(solution.n_left, h)[n]
    p_rr = 0.25 * g * (2 * n_r + 2 * x_rr.real)
    p_rl = 0.5 * g * (n_r + n_l + 2 * x_rl.real)
    p_ll = 0.25 * g * (2 * n_l + 2 * x_ll.real)
    return float(p_rr), float(p_rl), float(p_ll), float(pe)


# semi-infinite waveguide ------------------------------------------------------


def exact_psi_left_of_qubit(x, t, cfg, n_max=None):
    """psi(x, t) = phi(x - t) e_sm(t) for x < -a (only the qubit's own echoes matter there)."""
    x = np.asarray(x, dtype=float)
    if np.any(x >= -cfg.a):
        raise ValueError("exact solution holds for x < -a only")
    if n_max is not None:
        amp = _e_sm_truncated(t, cfg, n_max)
    else:
        amp = e_sm(t, cfg)
    return wavepacket_amplitude(x - t, cfg) * amp


def _e_sm_truncated(t, cfg, n_max):
    lam = cfg.lam
    out = np.exp(-lam * t) + 0j
    for n in range(1, n_max + 1):
        tn = t - 2 * n * cfg.a
        if tn <= 0:
            break
        out += np.exp(-lam * t) * ((cfg.gamma / 2) * np.exp(2 * cfg.a * lam) * tn) ** n / math.factorial(n)
    return out


def _left_amplitude_march(cfg, N, h, D, delay=True):
    """u(t) along a characteristic left of the qubit, marched with the solver's scheme.

    Every characteristic in x < -a carries phi(xi) u(t), so this single
    recursion is the lattice march of that whole region.
    """
    E = np.exp(-cfg.lam * h)
    g2 = cfg.gamma / 2
    u = np.zeros(N + 1, dtype=complex)
    u[0] = 1.0
    for n in range(N):
        s_old = g2 * u[n - D] if (delay and n >= D) else 0.0
        s_new = g2 * u[n + 1 - D] if (delay and n + 1 > D) else 0.0
        u[n + 1] = E * u[n] + 0.5 * h * (E * s_old + s_new)
    return u


def solve_semi_infinite(cfg, lattice, e_values=None, left_region="exact", skip_mirror_delay=False):
    """March the chiral delay equation on x_i = -a + i h.

    The region x < -a is supplied as phi(x - t) u(t), with u either the exact
    spontaneous-emission amplitude (``left_region='exact'``) or marched by the
    solver's own scheme (``'independent'``). ``skip_mirror_delay`` drops the
    round-trip self term (fault injection for the validation suite).
    """
    if not cfg.is_semi:
        raise ConfigError("geometry", "solve_semi_infinite needs a semi-infinite config")
    lattice.validate_for(cfg)
    h = lattice.dt
    N = lattice.n_steps
    D = lattice.delay_steps(cfg)
    g = cfg.gamma
    g2 = g / 2
    lam = cfg.lam
    E = np.exp(-lam * h)
    tt = lattice.t
    alpha_tail = np.exp(-cfg.alpha * g * tt)
    e = e_semi_series(tt, cfg) if e_values is None else np.asarray(e_values)
    if left_region == "exact":
        u = e_sm(tt, cfg)
    elif left_region == "independent":
        u = _left_amplitude_march(cfg, N, h, D, delay=not skip_mirror_delay)
    else:
        raise ValueError(f"unknown left_region {left_region!r}")
    delay_on = not skip_mirror_delay
    amp0 = 1j * math.sqrt(cfg.alpha * g)
    wexp = amp0 * np.exp(-cfg.mu * h * np.arange(N + D + 2))

    imax = N + D
    ring = np.zeros((D + 1, imax + 2), dtype=complex)
    fr = np.zeros(N + 1, dtype=complex)
    ring[0, 0] = amp0  # psi(-a, 0) from the left (inside the wavepacket)
    p_e = np.empty(N + 1)
    c = np.empty(N + 1, dtype=complex)
    ov = np.zeros(N + 1, dtype=complex)
    hist = FieldHistory.empty_for(cfg, lattice, ("psi",))

    def frame(m):
        return ring[m % (D + 1)]

    for n in range(N + 1):
        F = frame(n)
        length = n + D + 1
        psi_l = F[:length]
        psi_r = psi_l.copy()
        psi_r[n] = fr[n]
        phr, phl = field_limits_semi(cfg, e, n, h, D)
        p_e[n] = abs(u[n]) ** 2 * alpha_tail[n] + piecewise_trapezoid(np.abs(psi_r) ** 2, np.abs(psi_l) ** 2, h)
        c[n] = u[n] * alpha_tail[n] + piecewise_trapezoid(np.conj(phr) * psi_r, np.conj(phl) * psi_l, h)
        if n >= D:
            ov[n] = _delay_overlap(n, D, h, u, alpha_tail, wexp, frame(n - D), fr, F)
        if hist is not None and hist.wants(n):
            un = u[n]
            hist.store_semi(n, "psi", psi_l, fr[n], lambda x, s: wavepacket_amplitude(x - s, cfg) * un)
        if n == N:
            break

        # ---- source at (i, n), i = 0..n+D, limits for the interval after t_n
        i = np.arange(n + D + 1)
        s_old = np.zeros(i.size, dtype=complex)
        # region I: 0 <= i <= n (i = n on the left track)
        iI = i[: min(n, n + D) + 1]
        A = wexp[n] * u[n - iI]
        B = np.empty(iI.size, dtype=complex)
        inb = iI <= D
        B[inb] = ring[(n - iI[inb]) % (D + 1), D - iI[inb]]
        B[~inb] = wexp[n - D] * u[n - iI[~inb]] if n >= D else 0.0
        s_old[iI] -= g2 * (A - B)
        # region II: D <= i <= n+D
        iII = i[D:]
        C = np.empty(iII.size, dtype=complex)
        inc = iII <= 2 * D
        C[inc] = ring[(n + D - iII[inc]) % (D + 1), 2 * D - iII[inc]]
        if np.any(~inc):
            C[~inc] = wexp[n - D] * u[n + D - iII[~inc]]
        Ep = wexp[n] * u[n + D - iII]
        s_old[iII] -= g2 * (C - Ep)
        # self delay
        if delay_on and n >= D:
            d_in = i >= D
            s_old[d_in] += g2 * ring[(n - D) % (D + 1), i[d_in] - D]
            s_old[~d_in] += g2 * wexp[n - i[~d_in]] * u[n - D]
        # right track on the wavefront x = t - a (region I off)
        so_r = 0.0
        if n >= D:
            # C lookup psi(2D - n, D); E' lookup is in the exact region
            cval = ring[D % (D + 1), 2 * D - n] if n <= 2 * D else wexp[n - D] * u[D]
            so_r -= g2 * (cval - wexp[n] * u[D])
            if delay_on:
                so_r += g2 * fr[n - D]

        # ---- source at (i', n+1), i' = 1..n+D+1, limits for the interval before t_{n+1}
        m1 = n + 1
        ip = i + 1
        s_new = np.zeros(ip.size, dtype=complex)
        right_edge = m1 == D  # lookups sit on the wavefront from its right side
        jI = ip[ip <= m1]
        A = wexp[m1] * u[m1 - jI]
        B = np.empty(jI.size, dtype=complex)
        inb = jI <= D
        mb = m1 - jI[inb]
        ib = D - jI[inb]
        bvals = ring[mb % (D + 1), ib]
        if right_edge:
            bvals = np.where(ib == mb, fr[mb], bvals)
        B[inb] = bvals
        if np.any(~inb):
            B[~inb] = wexp[m1 - D] * u[m1 - jI[~inb]]
        s_new[jI - 1] -= g2 * (A - B)
        jII = ip[ip > D]
        C = np.empty(jII.size, dtype=complex)
        inc = jII <= 2 * D
        mc = m1 + D - jII[inc]
        ic = 2 * D - jII[inc]
        cvals = ring[mc % (D + 1), ic]
        if right_edge:
            cvals = np.where(ic == mc, fr[np.clip(mc, 0, N)], cvals)
        C[inc] = cvals
        if np.any(~inc):
            C[~inc] = wexp[m1 - D] * u[m1 + D - jII[~inc]]
        Ep = wexp[m1] * u[m1 + D - jII]
        s_new[jII - 1] -= g2 * (C - Ep)
        if delay_on and m1 > D:
            d_in = ip >= D
            s_new[d_in] += g2 * ring[(m1 - D) % (D + 1), ip[d_in] - D]
            s_new[~d_in] += g2 * wexp[m1 - ip[~d_in]] * u[m1 - D]
        sn_r = 0.0
        if m1 > D:
            cval = ring[D % (D + 1), 2 * D - m1] if m1 <= 2 * D else wexp[m1 - D] * u[D]
            sn_r -= g2 * (cval - wexp[m1] * u[D])
            if delay_on:
                sn_r += g2 * fr[m1 - D]

        new = np.zeros(imax + 2, dtype=complex)
        new[1 : n + D + 2] = E * F[: n + D + 1] + 0.5 * h * (E * s_old + s_new)
        new[0] = wexp[m1] * u[m1]
        fr[m1] = E * fr[n] + 0.5 * h * (E * so_r + sn_r)
        ring[m1 % (D + 1)] = new

    return TwoExcitationSolution(
        cfg=cfg, lattice=lattice, psi=hist, p_e=p_e, c=ComplexSeries(0.0, h, c),
        overlap_delay=ov, left_amplitude=u,
    )


def _delay_overlap(n, D, h, u, alpha_tail, wexp, Fold, fr, Fnew):
    """O = int psi(y, t-2a) conj psi(y+2a, t) dy at step n >= D."""
    m = n - D
    j = np.arange(-D, n + 1)
    a_l = np.empty(j.size, dtype=complex)
    neg = j < 0
    a_l[neg] = wexp[m - j[neg]] * u[m]
    a_l[~neg] = Fold[: n + 1]
    b_l = Fnew[: n + D + 1].copy()
    a_r = a_l.copy()
    b_r = b_l.copy()
    k = m + D  # position of the wavefront within j-array (j = m)
    a_r[k] = fr[m]
    b_r[k] = fr[n]
    tail = u[m] * np.conj(u[n]) * alpha_tail[n]
    return tail + piecewise_trapezoid(a_r * np.conj(b_r), a_l * np.conj(b_l), h)


def chi_norm_reconstructed(solution, t):
    """Two-photon norm at stored time ``t`` rebuilt from the psi history.

    For the mirror geometry this combines the running integrals of p_e and of
    the round-trip overlap with a plane integral of the exchange term, split
    into tiles at x = -a, a, t - a, t + a so no jump falls inside a tile.
    """
    cfg = solution.cfg
    if not cfg.is_semi:
        p_rr, p_rl, p_ll, _ = steady_state_probabilities(solution, t=t, require_decay=False)
        return p_rr + p_rl + p_ll
    hist = solution.psi
    if hist is None:
        raise ValueError("solution was computed without a stored field history")
    h = solution.lattice.dt
    D = solution.lattice.delay_steps(cfg)
    K = int(round(t / hist.H))
    n = K * hist.step
    Dh = D // hist.step
    g = cfg.gamma
    n_int = _cumtrapz(solution.p_e, h)[n]
    ov = solution.overlap_delay
    ov_int = _cumtrapz(ov[D:], h)[n - D] if n >= D else 0.0
    H = hist.H
    breaks = sorted({0, Dh, K, K + Dh})
    W = 0j
    for a1, b1 in zip(breaks[:-1], breaks[1:]):
        for a2, b2 in zip(breaks[:-1], breaks[1:]):
            j1 = np.arange(a1, b1 + 1)
            j2 = np.arange(a2, b2 + 1)
            t1 = _exchange_amp(hist, j1, j2, K, Dh, 0.5 * (a2 + b2), a1 >= K)
            t2 = _exchange_amp(hist, j2, j1, K, Dh, 0.5 * (a1 + b1), a2 >= K).T
            W += _plane_sum(t1 * np.conj(t2), trapezoid_weights(j1.size, H), trapezoid_weights(j2.size, H))
    return float(g * (n_int - ov_int.real) + 0.5 * g * W.real)


def _exchange_amp(hist, j1, j2, K, Dh, mid2, right):
    """T(x1, x2) on the grid j1 x j2 with the x2 gates taken at the tile midpoint."""
    J1, J2 = np.meshgrid(j1, j2, indexing="ij")
    out = np.zeros(J1.shape, dtype=complex)
    if 0 < mid2 < K:
        out += hist.lookup("psi", J1 - J2, K - J2, right_track=right)
    if Dh < mid2 < K + Dh:
        out -= hist.lookup("psi", J1 - J2 + Dh, K + Dh - J2, right_track=right)
    return out


def norm_residual(solution, t):
    """p_e + reconstructed two-photon norm - 1 at the stored frame nearest ``t``."""
    hist = solution.psi
    if hist is None:
        raise ValueError("solution was computed without a stored field history")
    k = int(round(t / hist.H))
    return solution.p_e[k * hist.step] + chi_norm_reconstructed(solution, k * hist.H) - 1.0


def overlap_c(one_exc, two_exc):
    """c(t) = <phi(t)|psi(t)> on the stored frames, from the two solutions' histories."""
    if one_exc.cfg != two_exc.cfg or one_exc.lattice != two_exc.lattice:
        raise ValueError("solutions are on different lattices or configurations")
    hist = two_exc.psi
    if hist is None:
        raise ValueError("two-excitation solution has no stored history")
    cfg = two_exc.cfg
    step = hist.step
    H = hist.H
    e = one_exc.e_of_t.values[::step]
    tail = np.exp(-cfg.alpha * cfg.gamma * hist.t)
    out = np.empty(hist.n_frames, dtype=complex)
    zero = -hist.j_min
    for k in range(hist.n_frames):
        if cfg.is_semi:
            Dh = hist.lattice.delay_steps(cfg) // step
            phr, phl = field_limits_semi(cfg, e, k, H, Dh)
            row = hist.frames["psi"][k, zero : zero + k + Dh + 1]
            row_r = row.copy()
            row_r[k] = hist.front_right["psi"][k]
            u = two_exc.left_amplitude[k * step]
            out[k] = u * tail[k] + piecewise_trapezoid(np.conj(phr) * row_r, np.conj(phl) * row, H)
        else:
            phr, phl = field_limits_infinite(cfg, e, k, H)
            rr = hist.frames["psi_R"][k, zero : zero + k + 1]
            ll = hist.frames["psi_L"][k, zero - k : zero + 1][::-1]
            lam_part = np.exp(-cfg.lam * k * H)
            out[k] = tail[k] * lam_part + piecewise_trapezoid(np.conj(phr) * rr, np.conj(phr) * rr, H) + piecewise_trapezoid(
                np.conj(phl) * ll, np.conj(phl) * ll, H
            )
    return ComplexSeries(0.0, H, out)


def lattice_for(cfg, dt=1e-3, t_max=10.0, store_every=0):
    return LatticeSpec.for_config(cfg, dt=dt, t_max=t_max, store_every=store_every)
