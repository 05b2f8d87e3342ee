"""Time-sampled sequences of fields."""

from __future__ import annotations

from typing import Callable, Iterator, Sequence

import numpy as np

from .spectral import Field, Grid


class Trajectory:
    """Fields sampled at strictly increasing times on one grid."""

    def __init__(self, times: Sequence[float], fields: Sequence[Field]):
        times = np.asarray(times, dtype=np.float64).reshape(-1)
        fields = list(fields)
        if len(times) != len(fields):
            raise ValueError(f"{len(times)} times for {len(fields)} fields")
        if len(times) > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("trajectory times must be strictly increasing")
        if fields:
            g = fields[0].grid
            if any(f.grid != g for f in fields):
                raise ValueError("all trajectory fields must share a grid")
        times.setflags(write=False)
        self.times = times
        self.fields = fields

    @property
    def grid(self) -> Grid:
        if not self.fields:
            raise ValueError("empty trajectory has no grid")
        return self.fields[0].grid

    def __len__(self) -> int:
        return len(self.fields)

    def __getitem__(self, i) -> Field:
        return self.fields[i]

    def __iter__(self) -> Iterator[tuple[float, Field]]:
        return iter(zip(self.times, self.fields))

    def map(self, fn: Callable[[Field], Field]) -> "Trajectory":
        return Trajectory(self.times, [fn(f) for f in self.fields])

    def window(self, t_lo: float, t_hi: float) -> "Trajectory":
        sel = (self.times >= t_lo - 1e-12) & (self.times <= t_hi + 1e-12)
        idx = np.nonzero(sel)[0]
        return Trajectory(self.times[idx], [self.fields[i] for i in idx])

    def __add__(self, other: "Trajectory") -> "Trajectory":
        _same_times(self, other)
        return Trajectory(self.times, [a + b for a, b in zip(self.fields, other.fields)])

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        _same_times(self, other)
        return Trajectory(self.times, [a - b for a, b in zip(self.fields, other.fields)])

    def __mul__(self, scalar) -> "Trajectory":
        return Trajectory(self.times, [scalar * f for f in self.fields])

    __rmul__ = __mul__

    def __repr__(self) -> str:
        if not self.fields:
            return "Trajectory(empty)"
        return (f"Trajectory({len(self)} samples, t=[{self.times[0]:.4g}, {self.times[-1]:.4g}], "
                f"n={self.grid.n})")


def _same_times(a: Trajectory, b: Trajectory) -> None:
    if len(a) != len(b) or not np.allclose(a.times, b.times, rtol=0, atol=1e-12):
        raise ValueError("trajectories are sampled at different times")


def rescale_trajectory(traj: Trajectory, lam: float) -> Trajectory:
    """Parabolic rescaling ``u_lam(t, x) = lam u(lam^2 t, lam x)``.

    Realised exactly on the torus by keeping the coefficients, shrinking the
    box by ``lam`` (so every dyadic index shifts by ``log2 lam``), multiplying
    amplitudes by ``lam`` and dividing times by ``lam^2``.
    """
    g = traj.grid
    g2 = Grid(g.n, g.box_length / lam, g.dealias_fraction)
    fields = [Field(g2, lam * f.coeffs) for f in traj.fields]
    return Trajectory(traj.times / lam ** 2, fields)


def dilate(f: Field, lam: float) -> Field:
    """Single-field version of :func:`rescale_trajectory`: ``lam f(lam x)``."""
    g = f.grid
    return Field(Grid(g.n, g.box_length / lam, g.dealias_fraction), lam * f.coeffs)
