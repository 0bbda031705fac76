"""Time lattice, discrete paths, and velocity-change variables.

A path is ``n+1`` positions ``z_0..z_n`` on a uniform time lattice with both
endpoints pinned; the motion inside each step is uniform, so the dynamics is
carried entirely by the per-step velocity changes
``s_j = (z_{j+1} - 2 z_j + z_{j-1}) / eps``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LatticeConfig",
    "Path",
    "StepQuantities",
    "second_differences",
    "straight_line_path",
    "interior_from_velocity_changes",
    "write_path_csv",
    "read_path_csv",
]


@dataclass(frozen=True)
class LatticeConfig:
    """Uniform time lattice plus regularization and endpoint data.

    ``eps`` is always derived from ``(t_a, t_b, n)`` so that ``n * eps``
    equals ``t_b - t_a`` exactly in floating point.
    """

    t_a: float
    t_b: float
    n: int
    gamma: float
    z_a: float
    z_b: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least n = 2 time steps")
        if not self.t_b > self.t_a:
            raise ValueError("t_b must exceed t_a")
        if not self.gamma > 0:
            raise ValueError("regularization gamma must be positive")

    @property
    def eps(self) -> float:
        return (self.t_b - self.t_a) / self.n

    @property
    def duration(self) -> float:
        return self.t_b - self.t_a

    @property
    def times(self) -> np.ndarray:
        return self.t_a + self.eps * np.arange(self.n + 1)


@dataclass(frozen=True)
class Path:
    """Positions ``z_0..z_n``; endpoints are fixed by the lattice config."""

    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim != 1 or z.size < 3:
            raise ValueError("a path needs at least 3 points")
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.size - 1


@dataclass(frozen=True)
class StepQuantities:
    """Per-step velocity changes and weight factors, all of length n-1."""

    s: np.ndarray
    M: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        if not (len(self.s) == len(self.M) == len(self.Q)):
            raise ValueError("s, M, Q must have equal length")
        if not np.all(np.isfinite(self.Q)):
            raise ValueError("non-finite step factor Q")


def validate_path(path: Path, cfg: LatticeConfig) -> None:
    if path.n != cfg.n:
        raise ValueError(f"path has {path.n} steps, lattice expects {cfg.n}")
    if not (np.isclose(path.z[0], cfg.z_a, rtol=0, atol=1e-9)
            and np.isclose(path.z[-1], cfg.z_b, rtol=0, atol=1e-9)):
        raise ValueError("path endpoints do not match the lattice config")


def second_differences(path: Path, cfg: LatticeConfig) -> np.ndarray:
    """Velocity changes ``s_j = (z_{j+1} - 2 z_j + z_{j-1}) / eps``, j = 1..n-1."""
    validate_path(path, cfg)
    z = path.z
    return (z[2:] - 2.0 * z[1:-1] + z[:-2]) / cfg.eps


def straight_line_path(cfg: LatticeConfig) -> Path:
    """Uniform-velocity path between the endpoints (all s_j = 0)."""
    j = np.arange(cfg.n + 1)
    return Path(cfg.z_a + j * (cfg.z_b - cfg.z_a) / cfg.n)


def second_difference_matrix(n: int) -> np.ndarray:
    """Interior second-difference matrix T (size n-1), ``T z_int`` stencil."""
    d = n - 1
    T = np.zeros((d, d))
    idx = np.arange(d)
    T[idx, idx] = -2.0
    T[idx[:-1], idx[:-1] + 1] = 1.0
    T[idx[1:], idx[1:] - 1] = 1.0
    return T


def interior_from_velocity_changes(s, cfg: LatticeConfig) -> np.ndarray:
    """Interior positions of the unique path with given velocity changes.

    Solves the bridge problem: ``s_j`` fixed for j = 1..n-1 and both
    endpoints pinned.  ``s`` may be a single vector of length n-1 or a
    batch of shape (..., n-1).
    """
    s = np.asarray(s, dtype=float)
    n = cfg.n
    if s.shape[-1] != n - 1:
        raise ValueError("velocity-change vector must have length n-1")
    T = second_difference_matrix(n)
    b = np.zeros(n - 1)
    b[0] = cfg.z_a
    b[-1] = cfg.z_b
    Tinv = np.linalg.inv(T)
    line = Tinv @ (-b)
    return line + cfg.eps * (s @ Tinv.T)


def make_path(cfg: LatticeConfig, interior) -> Path:
    interior = np.asarray(interior, dtype=float)
    if interior.size != cfg.n - 1:
        raise ValueError("interior must have n-1 points")
    return Path(np.concatenate([[cfg.z_a], interior, [cfg.z_b]]))


def write_path_csv(path: Path, cfg: LatticeConfig, fname) -> None:
    """Dump a path as CSV rows (j, t_j, z_j)."""
    validate_path(path, cfg)
    t = cfg.times
    with open(fname, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "t", "z"])
        for j, (tj, zj) in enumerate(zip(t, path.z)):
            writer.writerow([j, repr(float(tj)), repr(float(zj))])


def read_path_csv(fname) -> Path:
    z = []
    with open(fname, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["j", "t", "z"]:
            raise ValueError("unrecognized path file header")
        for row in reader:
            z.append(float(row[2]))
    return Path(np.asarray(z))
