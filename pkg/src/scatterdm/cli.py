"""Command-line driver.

    scatterdm simulate       one parameter point: trajectory and rates CSVs
    scatterdm negativity-map N_delta(alpha, t) grid for the infinite waveguide
    scatterdm sweep-alpha    GM/BLP/verdicts over alpha and geometries
    scatterdm validate       invariant suite with a residual report

Settings come from built-in defaults, then ``--config``, then flags.
Exit codes: 0 success, 1 validation failure, 2 config error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import io
from .core import ConfigError, LatticeSpec, PhysicalConfig, config_from_dict, read_config

WORKERS_ENV = "SCATTERDM_WORKERS"
DEFAULT_K0A = (0.5, 1.0, 2.0, 4.0)
DEFAULTS = {"gamma": 1.0, "omega0": 20.0, "k": 20.0, "alpha": 1.0, "geometry": "inf", "dt": 5e-3, "tmax": 10.0}


@dataclass
class RunRequest:
    mode: str
    physical: PhysicalConfig
    lattice: LatticeSpec
    output_dir: Path
    alphas: Optional[np.ndarray] = None
    k0a_list: tuple = DEFAULT_K0A
    include_infinite: bool = True
    workers: int = 1
    strict_dt: bool = False
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.alphas is not None:
            a = np.asarray(self.alphas, dtype=float)
            if a.size == 0 or np.any(a <= 0) or np.any(np.diff(a) <= 0):
                raise ConfigError("alphas", "alpha grid must be positive and strictly increasing")
            self.alphas = a


# pipeline -----------------------------------------------------------------


def make_lattice(cfg, dt, t_max, strict=False):
    """Lattice for one run. With ``strict`` a semi-infinite dt must divide 2a."""
    if cfg.is_semi and strict:
        d = cfg.tau / dt
        if abs(d - round(d)) > 1e-9 * max(1.0, d) or round(d) < 1:
            raise ConfigError("dt", f"dt={dt:g} does not divide the round-trip delay 2a={cfg.tau:g}")
    return LatticeSpec.for_config(cfg, dt=dt, t_max=t_max)


def run_point(cfg, lattice, n_angles=64):
    """Both sectors, the map, the rates and the measures for one configuration."""
    from .dynamical_map import solve_map
    from .master_equation import extract_rates
    from .nm_measures import measure_report

    traj, _, _ = solve_map(cfg, lattice)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rates = extract_rates(traj)
    report = measure_report(cfg, traj, rates, n_angles=n_angles)
    return traj, rates, report


def _sweep_task(args):
    cfg, dt, t_max, strict = args
    lattice = make_lattice(cfg, dt, t_max, strict)
    return run_point(cfg, lattice)[2]


def sweep_configs(alphas, k0a_list, include_infinite=True, omega0=20.0, k=20.0, gamma=1.0):
    cfgs = []
    for a in alphas:
        if include_infinite:
            cfgs.append(PhysicalConfig(gamma=gamma, omega0=omega0, k=k, alpha=float(a)))
        for g in k0a_list:
            cfgs.append(PhysicalConfig.semi_infinite(k0a_over_pi=g, gamma=gamma, omega0=omega0, k=k, alpha=float(a)))
    return cfgs


def run_sweep(cfgs, dt, t_max, workers=1, strict_dt=False):
    """MeasureReports in ``cfgs`` order. Without ``strict_dt`` each semi-infinite
    point shrinks dt to the nearest divisor of 2a."""
    if strict_dt:
        for c in cfgs:
            make_lattice(c, dt, t_max, strict=True)
    tasks = [(c, dt, t_max, strict_dt) for c in cfgs]
    if workers <= 1:
        return [_sweep_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_task, tasks))


def negativity_grid(alphas, t, cfg_template=None, dt=5e-3):
    """N_delta(alpha, t); closed form at resonance, full solver otherwise."""
    from .dynamical_map import solve_map
    from .nm_measures import delta_closed_form

    cfg0 = cfg_template or PhysicalConfig()
    out = np.empty((len(alphas), len(t)))
    for i, a in enumerate(alphas):
        if cfg0.k == cfg0.omega0 and not cfg0.is_semi:
            delta = delta_closed_form(t / cfg0.gamma, a)
        else:
            cfg = PhysicalConfig(gamma=cfg0.gamma, omega0=cfg0.omega0, k=cfg0.k, alpha=float(a), geometry=cfg0.geometry)
            traj, _, _ = solve_map(cfg, make_lattice(cfg, dt, float(t[-1])))
            delta = np.interp(t, traj.t, traj.delta)
        out[i] = np.maximum(0.0, -delta)
    return out


# subcommands ----------------------------------------------------------------


def simulate(req):
    out = req.output_dir
    traj, rates, report = run_point(req.physical, req.lattice)
    io.write_trajectory(out / "trajectory.csv", traj)
    io.write_rates(out / "rates.csv", rates)
    io.write_script(out / "trajectory.gp", io.plot_trajectory_script("trajectory.csv", "rates.csv"))
    io.write_metadata(
        out / "metadata.json",
        "simulate",
        physical=io.config_dict(req.physical),
        lattice={"dt": req.lattice.dt, "t_max": req.lattice.t_max},
        gm=report.gm,
        blp=report.blp,
        notes=report.notes,
    )
    print(f"wrote {out / 'trajectory.csv'} ({len(traj)} rows); gm={report.gm:.6g} blp={report.blp:.6g}")
    return 0


def negativity_map(req):
    if req.physical.is_semi:
        raise ConfigError("geometry", "negativity-map runs on the infinite waveguide")
    alphas = req.alphas if req.alphas is not None else np.logspace(-3, math.log10(20.0), 60)
    t = np.linspace(0.0, req.lattice.t_max, int(round(req.lattice.t_max / 0.05)) + 1)
    grid = negativity_grid(alphas, t, req.physical, req.lattice.dt)
    out = req.output_dir
    io.write_negativity_grid(out / "negativity.csv", alphas, t, grid)
    io.write_script(out / "negativity.gp", io.plot_negativity_script("negativity.csv"))
    io.write_metadata(out / "metadata.json", "negativity-map", physical=io.config_dict(req.physical))
    i, j = np.unravel_index(np.argmax(grid), grid.shape)
    print(f"max n_delta={grid[i, j]:.6g} at alpha={alphas[i]:.4g}, t={t[j]:.4g}")
    return 0


def sweep_alpha(req):
    alphas = req.alphas if req.alphas is not None else np.logspace(-3, math.log10(20.0), 40)
    p = req.physical
    cfgs = sweep_configs(alphas, req.k0a_list, req.include_infinite, p.omega0, p.k, p.gamma)
    reports = run_sweep(cfgs, req.settings["dt"], req.settings["tmax"], req.workers, req.strict_dt)
    out = req.output_dir
    io.write_sweep(out / "sweep.csv", reports)
    io.write_script(out / "sweep.gp", io.plot_sweep_script("sweep.csv"))
    bad = [(r.params.alpha, io.geometry_label(r.params), v) for r in reports for v in r.hierarchy_violations()]
    io.write_metadata(
        out / "metadata.json",
        "sweep-alpha",
        k0a_over_pi=list(req.k0a_list),
        dt=req.settings["dt"],
        t_max=req.settings["tmax"],
        hierarchy_violations=bad,
    )
    print(f"wrote {len(reports)} sweep points; hierarchy violations: {len(bad)}")
    return 0


def validate(req, fault=None):
    from .validation import run_checks

    results = run_checks(fault=fault)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'}  {r.name:<{width}}  residual={r.value:.3e}  limit={r.limit:.1e}")
    failed = sum(not r.ok for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


# argument handling ------------------------------------------------------------


def _parser():
    p = argparse.ArgumentParser(prog="scatterdm", description="Single-photon scattering dynamical maps and non-Markovianity.")
    sub = p.add_subparsers(dest="mode", required=True)
    for name in ("simulate", "negativity-map", "sweep-alpha", "validate"):
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path)
        s.add_argument("--alpha", type=float)
        s.add_argument("--k", type=float)
        s.add_argument("--omega0", type=float)
        s.add_argument("--gamma", type=float)
        s.add_argument("--geometry", choices=("inf", "semi"))
        s.add_argument("--a", type=float)
        s.add_argument("--k0a-over-pi", type=float, dest="k0a_over_pi")
        s.add_argument("--dt", type=float)
        s.add_argument("--tmax", type=float)
        s.add_argument("--out", type=Path, default=Path("."))
        s.add_argument("--workers", type=int)
        if name in ("negativity-map", "sweep-alpha"):
            s.add_argument("--alphas", type=str, help="comma-separated increasing alpha values")
        if name == "sweep-alpha":
            s.add_argument("--k0a-list", type=str, help="comma-separated k0a/pi values for the semi-infinite curves")
            s.add_argument("--no-infinite", action="store_true")
        if name == "validate":
            s.add_argument("--inject-fault", choices=("skip-mirror-delay",))
    return p


def _float_list(text, key):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(key, f"cannot parse {text!r}") from exc


def _workers(flag):
    if flag is not None:
        n = flag
    elif os.environ.get(WORKERS_ENV):
        try:
            n = int(os.environ[WORKERS_ENV])
        except ValueError as exc:
            raise ConfigError(WORKERS_ENV, "must be an integer") from exc
    else:
        n = os.cpu_count() or 1
    if n < 1:
        raise ConfigError("workers", "must be at least 1")
    return n


def build_request(args):
    settings = dict(DEFAULTS)
    if args.mode == "negativity-map":
        settings["tmax"] = 10.0
    if args.mode == "sweep-alpha":
        settings["tmax"] = 15.0
    from_file = read_config(args.config) if args.config is not None else {}
    settings.update(from_file)
    for key in ("alpha", "k", "omega0", "gamma", "geometry", "a", "k0a_over_pi", "dt", "tmax"):
        v = getattr(args, key)
        if v is not None:
            settings[key] = v
    # giving a mirror distance implies the semi-infinite geometry unless stated otherwise
    has_mirror = settings.get("a") is not None or settings.get("k0a_over_pi") is not None
    if has_mirror and args.geometry is None and "geometry" not in from_file:
        settings["geometry"] = "semi"
    cfg = config_from_dict(settings)
    if not settings["dt"] > 0:
        raise ConfigError("dt", "must be positive")
    if not settings["tmax"] > 0:
        raise ConfigError("tmax", "must be positive")
    explicit_dt = args.dt is not None or "dt" in from_file
    lattice = make_lattice(cfg, settings["dt"], settings["tmax"], strict=explicit_dt)
    kw = {}
    if getattr(args, "alphas", None):
        kw["alphas"] = np.array(_float_list(args.alphas, "alphas"))
    if getattr(args, "k0a_list", None):
        kw["k0a_list"] = tuple(_float_list(args.k0a_list, "k0a_list"))
    if getattr(args, "no_infinite", False):
        kw["include_infinite"] = False
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    return RunRequest(
        args.mode, cfg, lattice, out, workers=_workers(args.workers), strict_dt=explicit_dt, settings=settings, **kw
    )


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        req = build_request(args)
        if args.mode == "simulate":
            return simulate(req)
        if args.mode == "negativity-map":
            return negativity_map(req)
        if args.mode == "sweep-alpha":
            return sweep_alpha(req)
        return validate(req, fault=args.inject_fault)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
