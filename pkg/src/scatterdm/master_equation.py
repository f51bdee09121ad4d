"""Time-local master equation reproducing the dynamical map.

The generator is L = dF/dt F^{-1} in the operator basis {1, sx, sy, sz}/sqrt(2),
and the rates follow by matching it to

    drho/dt = -i[(S/2) s+ s-, rho] + g+ D[s+] + g- D[s-] + gz D[sz]

with D[A] rho = A rho A^+ - {A^+ A, rho}/2. Samples where the map is not
invertible (delta or c near zero) are flagged as singular.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamical_map import validate_state

SINGULAR_EPS = 1e-6

# basis ordering (|e>, |g>): sz = |e><e| - |g><g|
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SP = np.array([[0, 1], [0, 0]], dtype=complex)  # s+ = |e><g|
SM = SP.T.copy()
BASIS = [np.eye(2, dtype=complex) / np.sqrt(2), SX / np.sqrt(2), SY / np.sqrt(2), SZ / np.sqrt(2)]


class SingularWindowWarning(UserWarning):
    pass


@dataclass
class RateTrajectory:
    t: np.ndarray
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    gamma_z: np.ndarray
    S: np.ndarray
    singular: np.ndarray
    # (p_g, p_e, dp_g, dp_e, dlog c, c) the rates were built from, for midpoint evaluation
    source: Optional[tuple] = field(default=None, repr=False)

    @property
    def dt(self):
        return float(self.t[1] - self.t[0])

    def at(self, i):
        return self.gamma_plus[i], self.gamma_minus[i], self.gamma_z[i], self.S[i]


def singular_flags(traj, eps=SINGULAR_EPS):
    """Samples where |delta| or |c| is below ``eps``, plus both ends of any
    interval across which delta changes sign or c passes through zero."""
    delta = traj.delta
    c = traj.c
    flag = (np.abs(delta) < eps) | (np.abs(c) < eps)
    edge = np.sign(delta[1:]) != np.sign(delta[:-1])
    # c passing through zero between samples flips its phase by ~pi on top of
    # the smooth carrier rotation, seen in the second difference of the phase
    with np.errstate(divide="ignore", invalid="ignore"):
        step = c[1:] * np.conj(c[:-1])
        bend = np.abs(np.angle(step[1:] * np.conj(step[:-1]))) > np.pi / 2
    edge[1:] |= bend
    edge[:-1] |= bend
    flag[:-1] |= edge
    flag[1:] |= edge
    return flag


def _derivs(traj, analytic):
    """(dp_g, dp_e, dc/c)."""
    if analytic:
        if not traj.has_derivatives:
            raise ValueError("trajectory carries no analytic derivatives")
        with np.errstate(divide="ignore", invalid="ignore"):
            return traj.dp_g, traj.dp_e, traj.dc / traj.c
    dt = traj.dt
    # c carries a fast carrier e^{-i w0 t}; differencing log c keeps it exact
    with np.errstate(divide="ignore", invalid="ignore"):
        logc = np.log(np.abs(traj.c)) + 1j * np.unwrap(np.angle(traj.c))
        dlogc = _diff4(logc, dt)
    return _diff4(traj.p_g, dt), _diff4(traj.p_e, dt), dlogc


def _diff4(y, dt):
    """Fourth-order finite-difference derivative on a uniform grid."""
    y = np.asarray(y)
    if y.size < 5:
        return np.gradient(y, dt, edge_order=2 if y.size > 2 else 1)
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * dt)
    # one-sided five-point stencils at the two ends of each side
    d[0] = (-25 * y[0] + 48 * y[1] - 36 * y[2] + 16 * y[3] - 3 * y[4]) / (12 * dt)
    d[1] = (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]) / (12 * dt)
    d[-1] = (25 * y[-1] - 48 * y[-2] + 36 * y[-3] - 16 * y[-4] + 3 * y[-5]) / (12 * dt)
    d[-2] = (3 * y[-1] + 10 * y[-2] - 18 * y[-3] + 6 * y[-4] - y[-5]) / (12 * dt)
    return d


def extract_rates(traj, use_analytic_derivatives=False, eps=SINGULAR_EPS):
    """Rates (g+, g-, gz) and the Hamiltonian shift S from a map trajectory."""
    dp_g, dp_e, ratio = _derivs(traj, use_analytic_derivatives)
    flags = singular_flags(traj, eps)
    if flags.all():
        raise ValueError("trajectory is singular everywhere")
    source = (traj.p_g, traj.p_e, dp_g, dp_e, ratio, traj.c)
    return RateTrajectory(traj.t.copy(), *rates_from(*source[:5]), flags, source=source)


def rates_from(p_g, p_e, dp_g, dp_e, dlogc):
    """(g+, g-, gz, S) from the map functions and their derivatives."""
    delta = p_e - p_g
    with np.errstate(divide="ignore", invalid="ignore"):
        gp = (p_e * dp_g - p_g * dp_e) / delta
        gm = -(dp_e - dp_g) / delta - gp
    gz = -(gp + gm) / 4 - np.real(dlogc) / 2
    S = -2 * np.imag(dlogc)
    return gp, gm, gz, S


def F_matrix(p_g, p_e, c):
    """Matrix of the map in the operator basis, F_ij = Tr[G_i Phi(G_j)]."""
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, c.real, c.imag, 0.0],
            [0.0, -c.imag, c.real, 0.0],
            [p_e + p_g - 1, 0.0, 0.0, p_e - p_g],
        ]
    )


def build_generator_matrix(traj, i, use_analytic_derivatives=False, eps=SINGULAR_EPS):
    """L = dF/dt F^{-1} at sample i."""
    dp_g, dp_e, ratio = _derivs(traj, use_analytic_derivatives)
    dc = ratio * traj.c
    F = F_matrix(traj.p_g[i], traj.p_e[i], traj.c[i])
    if abs(traj.delta[i]) < eps or abs(traj.c[i]) < eps:
        raise np.linalg.LinAlgError(f"map not invertible at t={traj.t[i]:g}")
    dF = F_matrix(dp_g[i], dp_e[i], dc[i])
    dF[0, 0] = 0.0
    dF[3, 0] = dp_e[i] + dp_g[i]
    return np.linalg.solve(F.T, dF.T).T


def liouvillian(gp, gm, gz, S):
    """Superoperator rho -> drho/dt acting on 2x2 matrices (as a callable)."""
    H = 0.5 * S * (SP @ SM)
    ops = [(gp, SP), (gm, SM), (gz, SZ)]

    def L(rho):
        out = -1j * (H @ rho - rho @ H)
        for g, A in ops:
            Ad = A.conj().T
            out = out + g * (A @ rho @ Ad - 0.5 * (Ad @ A @ rho + rho @ Ad @ A))
        return out

    return L


def generator_from_rates(rates, i):
    """4x4 matrix of the master-equation generator built from the rates at sample i."""
    L = liouvillian(*rates.at(i))
    out = np.empty((4, 4))
    for col, Gj in enumerate(BASIS):
        LG = L(Gj)
        for row, Gi in enumerate(BASIS):
            out[row, col] = np.trace(Gi @ LG).real
    return out


def _hermite(f, df, h, s):
    """Cubic Hermite value and derivative at fraction s of every interval."""
    f0, f1, d0, d1 = f[:-1], f[1:], df[:-1], df[1:]
    val = (2 * s**3 - 3 * s**2 + 1) * f0 + (s**3 - 2 * s**2 + s) * h * d0 + (-2 * s**3 + 3 * s**2) * f1 + (s**3 - s**2) * h * d1
    der = (6 * s**2 - 6 * s) / h * (f0 - f1) + (3 * s**2 - 4 * s + 1) * d0 + (3 * s**2 - 2 * s) * d1
    return val, der


def midpoint_rates(rates):
    """(g+, g-, gz, S) at interval midpoints, shape (4, n - 1).

    The rates have poles where delta or c vanish, so when the map functions
    are available they are interpolated (cubic Hermite) and the rates rebuilt;
    otherwise the rates are interpolated linearly.
    """
    if rates.source is None:
        arrs = (rates.gamma_plus, rates.gamma_minus, rates.gamma_z, rates.S)
        return np.array([(a[:-1] + a[1:]) / 2 for a in arrs])
    p_g, p_e, dp_g, dp_e, dlogc, c = rates.source
    h = rates.dt
    pg, dpg = _hermite(p_g, dp_g, h, 0.5)
    pe, dpe = _hermite(p_e, dp_e, h, 0.5)
    cm, dcm = _hermite(c, dlogc * c, h, 0.5)
    with np.errstate(divide="ignore", invalid="ignore"):
        dl = dcm / cm
    return np.array(rates_from(pg, pe, dpg, dpe, dl))


def _stage_rates(rates):
    """Rates at (start, midpoint, end) of every step, shape (n - 1, 3, 4).

    Non-finite entries are replaced by the last finite stage set.
    """
    ends = np.array([rates.gamma_plus, rates.gamma_minus, rates.gamma_z, rates.S])
    mid = midpoint_rates(rates)
    st = np.stack([ends[:, :-1], mid, ends[:, 1:]], axis=0).transpose(2, 0, 1)
    good = np.isfinite(st).all(axis=(1, 2))
    if not good.all():
        idx = np.where(good, np.arange(good.size), -1)
        idx = np.maximum.accumulate(idx)
        st = np.where(idx[:, None, None] >= 0, st[np.maximum(idx, 0)], 0.0)
    return st


def _rhs(r, ree, reg):
    """(d rho_ee, d rho_eg) for rates r = (g+, g-, gz, S)."""
    gp, gm, gz, S = r
    return gp * (1 - ree) - gm * ree, -(0.5 * (gp + gm) + 2 * gz + 0.5j * S) * reg


def singular_windows(flags):
    """(start, stop) index ranges of consecutive flagged samples."""
    flags = np.asarray(flags, dtype=bool)
    edges = np.diff(np.concatenate([[0], flags.astype(np.int8), [0]]))
    return list(zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)))


def integrate_me(rates, rho0, reseed=None, max_window=5):
    """RK4 integration of the master equation on the rate grid.

    Midpoint rates come from ``midpoint_rates``; where the rates are not
    finite the last finite set is held. With ``reseed`` the state at the
    first sample after every singular window is replaced by ``reseed(i)``.
    Without it the solver steps through, and after a window longer than
    ``max_window`` samples every later sample is marked unreliable.
    Returns (states, unreliable).
    """
    rho = validate_state(rho0)
    n = rates.t.size
    h = rates.dt
    stages = _stage_rates(rates)
    ree = np.empty(n)
    reg = np.empty(n, dtype=complex)
    ree[0], reg[0] = rho[0, 0].real, rho[0, 1]
    unreliable = rates.singular.copy()
    windows = singular_windows(rates.singular)
    ends = {int(b) for a, b in windows if b < n}
    long_ends = {int(b) for a, b in windows if b - a > max_window}
    split = False
    for i in range(n - 1):
        if reseed is not None and (i + 1) in ends:
            new = validate_state(reseed(i + 1), tol=1e-9)
            ree[i + 1], reg[i + 1] = new[0, 0].real, new[0, 1]
            continue
        if reseed is None and (i + 1) in long_ends and not split:
            warnings.warn(f"stepped through a singular window ending at t={rates.t[i + 1]:g}", SingularWindowWarning)
            split = True
        r0, rm, r1 = stages[i]
        e, q = ree[i], reg[i]
        k1 = _rhs(r0, e, q)
        k2 = _rhs(rm, e + 0.5 * h * k1[0], q + 0.5 * h * k1[1])
        k3 = _rhs(rm, e + 0.5 * h * k2[0], q + 0.5 * h * k2[1])
        k4 = _rhs(r1, e + h * k3[0], q + h * k3[1])
        ree[i + 1] = e + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        reg[i + 1] = q + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if split:
            unreliable[i + 1] = True
    states = np.empty((n, 2, 2), dtype=complex)
    states[:, 0, 0] = ree
    states[:, 1, 1] = 1 - ree
    states[:, 0, 1] = reg
    states[:, 1, 0] = np.conj(reg)
    return states, unreliable
