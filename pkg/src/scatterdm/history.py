"""Stored field frames on a coarsened characteristics lattice, plus a binary dump.

Frames are kept every ``store_every`` steps and subsampled in space by the same
factor, so the stored grid is again characteristics aligned (spacing H in both
x and t). Each frame covers a fixed window; the analytically known part of a
field (incoming wavepacket region) is filled in when the frame is stored.

Binary layout written by ``FieldHistory.dump``::

    8 bytes   magic b"WGFH0001"
    4 bytes   little-endian uint32 header length L
    L bytes   UTF-8 JSON header (config, lattice, window, component names)
    frames    complex128 little-endian, one (n_frames, n_x) row-major block per
              component, in header order
    fronts    complex128 (n_frames,) block per component listed in
              header["front_right"]
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict

import numpy as np

from .core import Infinite, LatticeSpec, PhysicalConfig, SemiInfinite

MAGIC = b"WGFH0001"


class FieldHistory:
    def __init__(self, cfg, lattice, names, j_min, j_max, semi):
        self.cfg = cfg
        self.lattice = lattice
        self.step = lattice.store_every
        self.H = self.step * lattice.dt
        self.j_min = j_min
        self.j_max = j_max
        self.semi = semi
        self.n_frames = lattice.n_steps // self.step + 1
        n_x = j_max - j_min + 1
        self.names = tuple(names)
        self.frames = {nm: np.zeros((self.n_frames, n_x), dtype=complex) for nm in names}
        self.front_right = {nm: np.zeros(self.n_frames, dtype=complex) for nm in names} if semi else {}

    @classmethod
    def empty_for(cls, cfg, lattice, names):
        """History sized for ``lattice``, or None when the lattice stores nothing."""
        if not lattice.store_every:
            return None
        step = lattice.store_every
        K = lattice.n_steps // step
        if cfg.is_semi:
            Dh = lattice.delay_steps(cfg) // step
            # x_j = -a + j H covers [-3a - t_max, t_max + a]
            return cls(cfg, lattice, names, -(K + Dh), K + Dh, True)
        return cls(cfg, lattice, names, -K, K, False)

    @property
    def origin(self):
        return -self.cfg.a if self.semi else 0.0

    @property
    def x(self):
        return self.origin + self.H * np.arange(self.j_min, self.j_max + 1)

    @property
    def t(self):
        return self.H * np.arange(self.n_frames)

    def wants(self, n):
        return n % self.step == 0

    def store_semi(self, n, name, values, front_right, left_fn):
        """Store chiral frame at step n from lattice values on x_i = -a + i h, i = 0..n+D."""
        k = n // self.step
        row = self.frames[name][k]
        coarse = values[:: self.step]
        row[-self.j_min : -self.j_min + coarse.size] = coarse
        xs = self.origin + self.H * np.arange(self.j_min, 0)
        if left_fn is not None:
            row[: -self.j_min] = left_fn(xs, n * self.lattice.dt)
        self.front_right[name][k] = front_right

    def store_infinite(self, n, name, values, outer_fn, left=False):
        """Store a frame at step n from values indexed by |x|/h = 0..n.

        Right movers (left=False) occupy x >= 0 with ``outer_fn(x, t)`` filling
        x < 0; left movers occupy x <= 0 and vanish for x > 0.
        """
        k = n // self.step
        row = self.frames[name][k]
        coarse = values[:: self.step]
        zero = -self.j_min
        if left:
            row[zero - coarse.size + 1 : zero + 1] = coarse[::-1]
        else:
            row[zero : zero + coarse.size] = coarse
            if outer_fn is not None:
                xs = self.H * np.arange(self.j_min, 0)
                row[:zero] = outer_fn(xs, n * self.lattice.dt)

    def lookup(self, name, j, k, right_track=False):
        """Field at stored position index j (x = origin + j H) and frame k.

        With ``right_track`` the limit from the right is returned where the
        point sits on the wavefront characteristic x = t - a (semi-infinite).
        """
        j = np.asarray(j)
        k = np.asarray(k)
        if np.any(k < 0) or np.any(k >= self.n_frames):
            raise IndexError("time outside stored history")
        if np.any(j < self.j_min) or np.any(j > self.j_max):
            raise IndexError("position outside stored window")
        out = self.frames[name][k, j - self.j_min]
        if right_track and self.semi:
            on = j == k
            if np.any(on):
                out = np.where(on, self.front_right[name][k], out)
        return out

    def value(self, name, x, t):
        """Field at lattice points (x, t), which must lie on the stored grid."""
        j = np.rint((np.asarray(x) - self.origin) / self.H).astype(int)
        k = np.rint(np.asarray(t) / self.H).astype(int)
        return self.lookup(name, j, k)

    # binary dump -----------------------------------------------------------

    def header(self):
        geo = {"kind": "semi", "a": self.cfg.a} if self.semi else {"kind": "inf"}
        phys = {k: getattr(self.cfg, k) for k in ("gamma", "omega0", "k", "alpha")}
        return {
            "physical": dict(phys, geometry=geo),
            "lattice": asdict(self.lattice),
            "j_min": self.j_min,
            "j_max": self.j_max,
            "n_frames": self.n_frames,
            "spacing": self.H,
            "origin": self.origin,
            "components": list(self.names),
            "front_right": list(self.front_right),
        }

    def dump(self, path):
        head = json.dumps(self.header(), sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(head)))
            fh.write(head)
            for nm in self.names:
                fh.write(self.frames[nm].astype("<c16").tobytes())
            for nm in self.front_right:
                fh.write(self.front_right[nm].astype("<c16").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            if fh.read(8) != MAGIC:
                raise ValueError("not a field-history dump")
            (n,) = struct.unpack("<I", fh.read(4))
            head = json.loads(fh.read(n))
            phys = dict(head["physical"])
            geo = phys.pop("geometry")
            geometry = SemiInfinite(geo["a"]) if geo["kind"] == "semi" else Infinite()
            cfg = PhysicalConfig(geometry=geometry, **phys)
            lattice = LatticeSpec(**head["lattice"])
            obj = cls(cfg, lattice, head["components"], head["j_min"], head["j_max"], geo["kind"] == "semi")
            shape = (obj.n_frames, obj.j_max - obj.j_min + 1)
            for nm in obj.names:
                buf = fh.read(16 * shape[0] * shape[1])
                obj.frames[nm] = np.frombuffer(buf, dtype="<c16").reshape(shape).astype(complex)
            for nm in head["front_right"]:
                buf = fh.read(16 * obj.n_frames)
                obj.front_right[nm] = np.frombuffer(buf, dtype="<c16").astype(complex)
        return obj
