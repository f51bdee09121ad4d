"""Shared types, the incoming wavepacket, special functions and quadrature.

Units: the decay rate gamma sets the unit of inverse time, the speed of
light is one, so lengths and times share the same unit.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace

import numpy as np


class ConfigError(ValueError):
    """Invalid physical or lattice configuration. Carries the offending key."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class Infinite:
    """Qubit side-coupled to an infinite waveguide, located at x=0."""

    @property
    def a(self):
        return 0.0


@dataclass(frozen=True)
class SemiInfinite:
    """Qubit at distance ``a`` from a perfect mirror (unfolded: coupling at x=-a and x=+a)."""

    a: float


@dataclass(frozen=True)
class PhysicalConfig:
    gamma: float = 1.0
    omega0: float = 20.0
    k: float = 20.0
    alpha: float = 1.0
    geometry: object = field(default_factory=Infinite)

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ConfigError("gamma", f"must be positive and finite, got {self.gamma}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ConfigError("alpha", f"must be positive and finite, got {self.alpha}")
        for key in ("omega0", "k"):
            if not math.isfinite(getattr(self, key)):
                raise ConfigError(key, "must be finite")
        if isinstance(self.geometry, SemiInfinite):
            if not (self.geometry.a > 0 and math.isfinite(self.geometry.a)):
                raise ConfigError("a", f"must be positive, got {self.geometry.a}")
        elif not isinstance(self.geometry, Infinite):
            raise ConfigError("geometry", f"unknown geometry {self.geometry!r}")

    @classmethod
    def semi_infinite(cls, k0a_over_pi=None, a=None, **kw):
        """Semi-infinite config from either ``a`` or ``k0 a / pi`` (with k0 = omega0)."""
        cfg = cls(**kw)
        if a is None:
            if k0a_over_pi is None:
                raise ConfigError("a", "give either a or k0a_over_pi")
            a = k0a_over_pi * math.pi / cfg.omega0
        return replace(cfg, geometry=SemiInfinite(float(a)))

    @property
    def is_semi(self):
        return isinstance(self.geometry, SemiInfinite)

    @property
    def a(self):
        return self.geometry.a

    @property
    def x0(self):
        return -self.a

    @property
    def V(self):
        return math.sqrt(self.gamma / 2)

    @property
    def delta_k(self):
        return self.alpha * self.gamma

    @property
    def tau(self):
        return 2 * self.a

    @property
    def k0a_over_pi(self):
        return self.omega0 * self.a / math.pi

    @property
    def lam(self):
        """Complex decay constant of the bare qubit, i*omega0 + gamma/2."""
        return 1j * self.omega0 + self.gamma / 2

    @property
    def mu(self):
        """Complex decay constant of the wavepacket along its characteristic."""
        return 1j * self.k + self.alpha * self.gamma / 2

    @property
    def pole(self):
        """k - omega0 + i gamma (1 - alpha) / 2; vanishes at resonance with alpha=1."""
        return self.k - self.omega0 + 0.5j * self.gamma * (1 - self.alpha)


@dataclass(frozen=True)
class LatticeSpec:
    """Characteristics-aligned lattice: dx == dt.

    ``store_every`` > 0 keeps every ``store_every``-th frame, subsampled by
    the same factor in space, in the solution's FieldHistory. Zero stores none.
    """

    dt: float
    t_max: float
    x_min: float
    x_max: float
    store_every: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt", "must be positive")
        if not self.t_max > 0:
            raise ConfigError("tmax", "must be positive")
        if self.x_min >= self.x_max:
            raise ConfigError("x_min", "must be below x_max")
        if self.store_every < 0:
            raise ConfigError("store_every", "must be nonnegative")

    @property
    def dx(self):
        return self.dt

    @property
    def n_steps(self):
        return int(round(self.t_max / self.dt))

    @property
    def t(self):
        return np.arange(self.n_steps + 1) * self.dt

    def delay_steps(self, cfg):
        """Number of steps in the round trip 2a; the lattice must resolve it exactly."""
        d = cfg.tau / self.dt
        n = int(round(d))
        if n < 1 or abs(d - n) > 1e-9 * max(1.0, d):
            raise ConfigError("dt", f"2a={cfg.tau:g} is not an integer multiple of dt={self.dt:g}")
        if self.store_every and n % self.store_every:
            raise ConfigError("dt", "store_every must divide the round-trip step count")
        return n

    def validate_for(self, cfg):
        if self.x_min > cfg.x0 + 1e-12:
            raise ConfigError("x_min", "lattice must start left of the wavepacket front")
        if self.x_max < self.t_max + cfg.a - 1e-9:
            raise ConfigError("x_max", "lattice does not cover the light cone")
        if cfg.is_semi:
            self.delay_steps(cfg)
        if self.store_every and self.n_steps % self.store_every:
            raise ConfigError("store_every", "must divide the number of steps")

    @classmethod
    def for_config(cls, cfg, dt=1e-3, t_max=10.0, store_every=0):
        """Build a lattice for ``cfg``, shrinking dt so that 2a is a whole number of
        steps (a multiple of ``store_every`` when storing) and rounding t_max up to
        a whole number of (stored) steps."""
        if not dt > 0:
            raise ConfigError("dt", "must be positive")
        if cfg.is_semi:
            unit = max(store_every, 1)
            d = max(unit, unit * math.ceil(cfg.tau / dt / unit - 1e-9))
            dt = cfg.tau / d
        n = math.ceil(t_max / dt - 1e-9)
        if store_every:
            n = store_every * math.ceil(n / store_every)
        t_max = n * dt
        x_min = cfg.x0 - 40.0 / (cfg.alpha * cfg.gamma)
        lat = cls(dt=dt, t_max=t_max, x_min=x_min, x_max=t_max + cfg.a, store_every=store_every)
        lat.validate_for(cfg)
        return lat


@dataclass(frozen=True)
class ComplexSeries:
    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("series needs at least two samples")
        if not np.all(np.isfinite(v)):
            raise ValueError("series contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def t(self):
        return self.t0 + self.dt * np.arange(self.values.size)

    def __len__(self):
        return self.values.size

    def at(self, t):
        """Value at a time lying on the grid (to rounding)."""
        i = np.rint((np.asarray(t) - self.t0) / self.dt).astype(int)
        if np.any(i < 0) or np.any(i >= self.values.size):
            raise IndexError("time outside stored series")
        return self.values[i]


def wavepacket_amplitude(x, cfg, front=0.5):
    """Incoming exponential wavepacket phi(x) = i sqrt(alpha gamma) exp[(ik + alpha gamma/2)(x-x0)] theta(x0-x).

    ``front`` is the step value at x == x0 (1/2 by convention; solvers pass 1 or 0
    to pick the one-sided limit).
    """
    x = np.asarray(x, dtype=float)
    y = x - cfg.x0
    step = np.where(y < 0, 1.0, np.where(y == 0, front, 0.0))
    ys = np.minimum(y, 0.0)
    out = 1j * math.sqrt(cfg.alpha * cfg.gamma) * np.exp(cfg.mu * ys) * step
    return out if out.ndim else complex(out)


def _overflows(n, z):
    # log |z^n e^{-z}|
    if z == 0:
        return False
    return n * math.log(abs(z)) - z.real > 700.0


def lower_incomplete_gamma(n, z):
    """Lower incomplete gamma function gamma(n, z) for integer n >= 1 and complex z.

    Uses the Kummer series when |z| is small compared with n and the upward
    recurrence gamma(m+1, z) = m gamma(m, z) - z^m e^{-z} otherwise, which is the
    stable direction in that regime.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    z = complex(z)
    if _overflows(n, z) or (z != 0 and -z.real > 700.0):
        raise OverflowError(f"z^n e^-z out of range for n={n}, z={z}")
    if z == 0:
        return 0j
    if abs(z) < n + 1.0:
        g = z ** n * np.exp(-z) * _kummer_sum(n, z)
    else:
        g = -np.expm1(-z)
        ez = np.exp(-z)
        zm = 1.0 + 0j
        with np.errstate(over="ignore", invalid="ignore"):
            for m in range(1, n):
                zm *= z
                g = m * g - zm * ez
    g = complex(g)
    if not (math.isfinite(g.real) and math.isfinite(g.imag)):
        raise OverflowError(f"gamma(n, z) out of range for n={n}, z={z}")
    return g


def _kummer_sum(n, z, tol=1e-17, max_terms=2000):
    """sum_k z^k / (n (n+1) ... (n+k)), so that gamma(n,z) = z^n e^{-z} * sum."""
    term = 1.0 / n + 0j
    total = term
    comp = 0j
    for k in range(1, max_terms):
        term *= z / (n + k)
        # Kahan summation
        y = term - comp
        s = total + y
        comp = (s - total) - y
        total = s
        if abs(term) < tol * abs(total):
            break
    return total


def trapezoid_norm(values, dx):
    """Trapezoid estimate of the integral of |values|^2 over a uniform grid."""
    if not dx > 0:
        raise ValueError("dx must be positive")
    v = np.abs(np.asarray(values)) ** 2
    if v.size < 2:
        return 0.0 if v.size == 0 else float(v[0] * dx)
    return float(dx * (v.sum() - 0.5 * (v[0] + v[-1])))


def piecewise_trapezoid(f_right, f_left, dx):
    """Trapezoid rule for a function with jumps at grid nodes.

    ``f_right[i]`` is the limit from the right at node i, ``f_left[i]`` the limit
    from the left; interval [i, i+1] contributes dx/2 (f_right[i] + f_left[i+1]).
    """
    f_right = np.asarray(f_right)
    f_left = np.asarray(f_left)
    if f_right.size < 2:
        return 0.0 * f_right.sum()
    return 0.5 * dx * (f_right[:-1].sum() + f_left[1:].sum())


def trapezoid_weights(n, dx):
    w = np.full(n, dx)
    if n:
        w[0] = w[-1] = 0.5 * dx
    if n == 1:
        w[0] = 0.0
    return w


# configuration file ---------------------------------------------------------

_PHYS_KEYS = {"gamma": float, "omega0": float, "k": float, "alpha": float}
_LAT_KEYS = {"dt": float, "tmax": float, "store_every": int}


def read_config(path):
    """Read an INI-style file with optional [physical] and [lattice] sections.

    [physical] accepts gamma, omega0, k, alpha, geometry (inf|semi), a,
    k0a_over_pi. [lattice] accepts dt, tmax, store_every. Returns a flat dict
    of parsed values; unknown keys raise ConfigError.
    """
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError("config", str(exc)) from exc
    out = {}
    allowed = {
        "physical": dict(_PHYS_KEYS, geometry=str, a=float, k0a_over_pi=float),
        "lattice": _LAT_KEYS,
    }
    for section in parser.sections():
        if section not in allowed:
            raise ConfigError(section, "unknown section")
        for key, raw in parser.items(section):
            conv = allowed[section].get(key)
            if conv is None:
                raise ConfigError(key, f"unknown key in [{section}]")
            try:
                out[key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(key, f"cannot parse {raw!r}") from exc
    return out


def config_from_dict(d):
    """Build a PhysicalConfig from a flat dict of the keys understood by read_config."""
    kw = {k: d[k] for k in _PHYS_KEYS if d.get(k) is not None}
    geometry = d.get("geometry") or "inf"
    if geometry == "inf":
        return PhysicalConfig(**kw)
    if geometry == "semi":
        if d.get("a") is None and d.get("k0a_over_pi") is None:
            raise ConfigError("a", "semi geometry needs a or k0a_over_pi")
        return PhysicalConfig.semi_infinite(k0a_over_pi=d.get("k0a_over_pi"), a=d.get("a"), **kw)
    raise ConfigError("geometry", f"expected inf or semi, got {geometry!r}")
