"""The qubit's dynamical map built from (p_g, p_e, c).

Density matrices are 2x2 in the ordered basis (|e>, |g>), so rho[0, 0] is the
excited population. Bloch vectors are r = (2 Re rho_ge, 2 Im rho_ge,
rho_gg - rho_ee).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

CP_TOL = 1e-6


@dataclass(frozen=True)
class MapSnapshot:
    t: float
    p_g: float
    p_e: float
    c: complex

    def __post_init__(self):
        for name in ("p_g", "p_e"):
            v = getattr(self, name)
            if not (-CP_TOL <= v <= 1 + CP_TOL):
                raise ValueError(f"{name}={v} outside [0, 1]")
        if abs(self.c) > 1 + CP_TOL:
            raise ValueError(f"|c|={abs(self.c)} exceeds 1")

    @property
    def delta(self):
        return self.p_e - self.p_g

    @property
    def theta(self):
        return float(np.angle(self.c))

    @property
    def det_M(self):
        return abs(self.c) ** 2 * self.delta


@dataclass
class MapTrajectory:
    """Uniformly sampled (p_g, p_e, c), optionally with exact time derivatives."""

    t: np.ndarray
    p_g: np.ndarray
    p_e: np.ndarray
    c: np.ndarray
    dp_g: Optional[np.ndarray] = None
    dp_e: Optional[np.ndarray] = None
    dc: Optional[np.ndarray] = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.p_g = np.asarray(self.p_g, dtype=float)
        self.p_e = np.asarray(self.p_e, dtype=float)
        self.c = np.asarray(self.c, dtype=complex)
        n = self.t.size
        if not (self.p_g.size == self.p_e.size == self.c.size == n) or n < 2:
            raise ValueError("trajectory arrays must share a length >= 2")

    @property
    def dt(self):
        return float(self.t[1] - self.t[0])

    @property
    def delta(self):
        return self.p_e - self.p_g

    @property
    def det_M(self):
        return np.abs(self.c) ** 2 * self.delta

    @property
    def has_derivatives(self):
        return self.dp_g is not None and self.dp_e is not None and self.dc is not None

    def __len__(self):
        return self.t.size

    def snapshot(self, i):
        return MapSnapshot(float(self.t[i]), float(self.p_g[i]), float(self.p_e[i]), complex(self.c[i]))

    @classmethod
    def from_closed_form(cls, t, alpha, omega0=20.0):
        from .two_excitation import closed_form_resonant, closed_form_resonant_derivatives

        p_g, p_e, c = closed_form_resonant(t, alpha, omega0)
        dp_g, dp_e, dc = closed_form_resonant_derivatives(t, alpha, omega0)
        return cls(t, p_g, p_e, c, dp_g, dp_e, dc)

    @classmethod
    def emission(cls, t, omega0=20.0, gamma=1.0):
        """Spontaneous emission into an infinite waveguide."""
        t = np.asarray(t, dtype=float)
        lam = 1j * omega0 + gamma / 2
        c = np.exp(-lam * t)
        return cls(t, np.zeros_like(t), np.exp(-gamma * t), c, np.zeros_like(t), -gamma * np.exp(-gamma * t), -lam * c)

    @classmethod
    def emission_with_mirror(cls, t, cfg):
        """Spontaneous emission in front of a mirror: p_g = 0, p_e = |e_sm|^2, c = e_sm."""
        from .one_excitation import e_sm

        amp = e_sm(t, cfg)
        return cls(t, np.zeros(np.shape(t)), np.abs(amp) ** 2, amp)


def validate_state(rho, tol=1e-12):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("qubit state must be 2x2")
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise ValueError("state is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-10:
        raise ValueError("state trace is not 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("state is not positive")
    return rho


def state_from_bloch(r):
    x, y, z = r
    rho_ge = 0.5 * (x + 1j * y)
    rho_gg = 0.5 * (1 + z)
    return np.array([[1 - rho_gg, np.conj(rho_ge)], [rho_ge, rho_gg]], dtype=complex)


def bloch_vector(rho):
    rho = np.asarray(rho)
    rho_ge = rho[1, 0]
    return np.array([2 * rho_ge.real, 2 * rho_ge.imag, (rho[1, 1] - rho[0, 0]).real])


def random_state(rng):
    """Random mixed state: Bloch vector uniform in the unit ball."""
    v = rng.normal(size=3)
    v *= rng.uniform() ** (1 / 3) / np.linalg.norm(v)
    return state_from_bloch(v)


def _act(snap, X):
    """Linear action of the map on an arbitrary 2x2 matrix."""
    X = np.asarray(X, dtype=complex)
    out = np.empty((2, 2), dtype=complex)
    out[0, 0] = snap.p_g * X[1, 1] + snap.p_e * X[0, 0]
    out[1, 1] = (1 - snap.p_g) * X[1, 1] + (1 - snap.p_e) * X[0, 0]
    out[0, 1] = snap.c * X[0, 1]
    out[1, 0] = np.conj(snap.c) * X[1, 0]
    return out


def apply_map(snap, rho0):
    """Evolved state: rho_ee = p_e - delta rho_gg(0), rho_eg scaled by c."""
    return _act(snap, validate_state(rho0))


def bloch_affine(snap):
    """(M, v) with r(t) = M r(0) + v.

    The transverse block is |c| times a rotation by -arg c in the
    (2 Re rho_ge, 2 Im rho_ge) plane; det M = |c|^2 delta.
    """
    cr, ci = snap.c.real, snap.c.imag
    M = np.array([[cr, ci, 0.0], [-ci, cr, 0.0], [0.0, 0.0, snap.delta]])
    v = np.array([0.0, 0.0, 1 - snap.p_e - snap.p_g])
    return M, v


def choi_matrix(snap):
    """Choi matrix sum_ij |i><j| (x) Phi(|i><j|); trace 2, PSD iff the map is CP."""
    J = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            E = np.zeros((2, 2))
            E[i, j] = 1.0
            J[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = _act(snap, E)
    return J


def choi_min_eig(snap):
    return float(np.linalg.eigvalsh(choi_matrix(snap)).min())


def is_cp(snap, tol=CP_TOL):
    return choi_min_eig(snap) >= -tol


def trace_distance(rho, sigma):
    return 0.5 * float(np.abs(np.linalg.eigvalsh(np.asarray(rho) - np.asarray(sigma))).sum())


def build_trajectory(one_exc, two_exc):
    """MapTrajectory from paired one- and two-excitation solutions."""
    if one_exc.cfg != two_exc.cfg or one_exc.lattice != two_exc.lattice:
        raise ValueError("solutions are on different lattices or configurations")
    return MapTrajectory(two_exc.lattice.t, one_exc.p_g, two_exc.p_e, two_exc.c.values)


def solve_map(cfg, lattice):
    """Run both sectors on ``lattice`` and return (trajectory, one_exc, two_exc)."""
    from .one_excitation import solve_one_excitation
    from .two_excitation import solve_infinite, solve_semi_infinite

    one = solve_one_excitation(cfg, lattice)
    if cfg.is_semi:
        two = solve_semi_infinite(cfg, lattice, e_values=one.e_of_t.values)
    else:
        two = solve_infinite(cfg, lattice, e_values=one.e_of_t.values)
    return build_trajectory(one, two), one, two
