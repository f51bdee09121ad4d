"""CSV output, gnuplot scripts and run metadata.

Data files hold numbers only, formatted with a fixed format so that equal
inputs give identical bytes. Run parameters go to a JSON sidecar.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import PhysicalConfig

FMT = "{:.12e}"

TRAJECTORY_COLUMNS = ("t", "p_g", "p_e", "re_c", "im_c", "delta", "det_M")
RATES_COLUMNS = ("t", "gamma_plus", "gamma_minus", "gamma_z", "S", "singular_flag")
NEGATIVITY_COLUMNS = ("alpha", "t", "n_delta")
SWEEP_COLUMNS = ("alpha", "k0a_over_pi", "gm", "blp", "max_n_delta", "cp_broken", "p_broken")


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FMT.format(float(v) + 0.0)


def write_csv(path, columns, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path):
    """Columns of a CSV written here as a dict of string lists."""
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        head = next(r)
        cols = {h: [] for h in head}
        for row in r:
            for h, v in zip(head, row):
                cols[h].append(v)
    return cols


def write_trajectory(path, traj):
    c = traj.c
    rows = zip(traj.t, traj.p_g, traj.p_e, c.real, c.imag, traj.delta, traj.det_M)
    return write_csv(path, TRAJECTORY_COLUMNS, rows)


def write_rates(path, rates):
    rows = zip(rates.t, rates.gamma_plus, rates.gamma_minus, rates.gamma_z, rates.S, rates.singular)
    return write_csv(path, RATES_COLUMNS, rows)


def write_negativity_grid(path, alphas, t, n_delta):
    """n_delta has shape (len(alphas), len(t)); rows are ordered by alpha then t."""
    rows = ((a, tt, v) for a, line in zip(alphas, n_delta) for tt, v in zip(t, line))
    return write_csv(path, NEGATIVITY_COLUMNS, rows)


def geometry_label(cfg):
    return FMT.format(cfg.k0a_over_pi) if cfg.is_semi else "inf"


def write_sweep(path, reports):
    rows = (
        (r.params.alpha, geometry_label(r.params), r.gm, r.blp, r.max_n_delta, r.cp_broken, r.p_broken)
        for r in reports
    )
    return write_csv(path, SWEEP_COLUMNS, rows)


def config_dict(cfg: PhysicalConfig):
    d = {k: getattr(cfg, k) for k in ("gamma", "omega0", "k", "alpha")}
    d["geometry"] = "semi" if cfg.is_semi else "inf"
    if cfg.is_semi:
        d["a"] = cfg.a
        d["k0a_over_pi"] = cfg.k0a_over_pi
    return d


def write_metadata(path, command, **fields):
    from . import __version__

    meta = {"command": command, "version": __version__}
    meta.update(fields)
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
    return path


# gnuplot scripts; they read only the CSVs written next to them


def plot_trajectory_script(traj_csv, rates_csv):
    return f"""set datafile separator ","
set key autotitle columnhead
set xlabel "t Gamma"
set multiplot layout 2,1
plot "{traj_csv}" using 1:2 with lines, "" using 1:3 with lines, "" using 1:6 with lines
plot "{rates_csv}" using 1:2 with lines, "" using 1:3 with lines, "" using 1:4 with lines
unset multiplot
"""


def plot_negativity_script(grid_csv):
    return f"""set datafile separator ","
set logscale x
set xlabel "alpha"
set ylabel "t Gamma"
set view map
set dgrid3d
splot "{grid_csv}" using 1:2:3 with pm3d notitle
"""


def plot_sweep_script(sweep_csv):
    return f"""set datafile separator ","
set logscale x
set xlabel "alpha"
set ylabel "GM"
set key outside
plot for [g in system("awk -F, 'NR>1{{print $2}}' {sweep_csv} | sort -u")] \\
    "< awk -F, -v g=".g." '$2==g' {sweep_csv}" using 1:3 with linespoints title g
"""


def write_script(path, text):
    Path(path).write_text(text)
    return path
