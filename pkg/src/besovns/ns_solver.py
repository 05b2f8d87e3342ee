"""Pseudospectral Navier-Stokes solver on the periodic box (unit viscosity).

The projected equation ``d_t u = Lap u - P div(u (x) u)`` is stepped with the
second-order exponential Runge-Kutta scheme of Cox and Matthews:

    a       = e^{-|k|^2 h} u_n + h phi1 N(u_n)
    u_{n+1} = a + h phi2 (N(a) - N(u_n))

with ``N(u) = -P div(u (x) u)`` dealiased by the 2/3 rule.
"""

from __future__ import annotations

import math
import time as _time
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .expint import phi1, phi2
from .littlewood_paley import DyadicPartition, build_partition
from .norms import BesovParams, besov_norm, lp_norm
from .rng import make_rng
from .spectral import (Field, Grid, curl, divergence, irfft3, leray_project, sup_norm,
                       symmetric_square_divergence)
from .trajectory import Trajectory

SCHEMES = ("etd_rk2",)


class SolverInstabilityError(RuntimeError):
    """Raised when a step produces non-finite values; carries the valid prefix."""

    def __init__(self, message: str, partial: Trajectory):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid
    dt: float
    horizon: float
    scheme: str = "etd_rk2"
    save_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.save_every < 1:
            raise ValueError("save_every must be >= 1")
        stiff = self.dt * self.grid.max_retained_kmag ** 2
        if stiff > 10.0:
            raise ValueError(f"dt * k_max^2 = {stiff:.3g} exceeds 10")

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.horizon / self.dt - 1e-9)))

    @property
    def step(self) -> float:
        return self.horizon / self.n_steps


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------

INITIAL_KINDS = ("taylor_green", "taylor_green_3d", "single_mode", "random_besov")


@dataclass(frozen=True)
class InitialData:
    """Recipe for ``u0``.

    ``taylor_green``: ``A (sin x cos y, -cos x sin y, 0)`` scaled to the box.
    ``taylor_green_3d``: ``A (sin x cos y cos z, -cos x sin y cos z, 0)``.
    ``single_mode``: ``A e_y cos(k0 . x)`` with ``k0`` along x (integer indices ``mode``).
    ``random_besov``: Leray-projected Gaussian noise with spectrum ``|k|^{-slope}``,
    rescaled to critical Besov norm ``M`` at exponent ``p``.
    """

    kind: str = "taylor_green"
    amplitude: float = 1.0
    M: float = 4.0
    p: float = 4.0
    seed: int = 0
    mode: tuple[int, int, int] = (1, 0, 0)
    slope: float = 2.0

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise ValueError(f"unknown initial data kind {self.kind!r}; choose from {INITIAL_KINDS}")


def _random_solenoidal(grid: Grid, seed: int, envelope: np.ndarray) -> Field:
    rng = make_rng(seed)
    noise = rng.standard_normal((3,) + grid.physical_shape)
    f = Field.from_physical(grid, noise)
    c = np.array(f.coeffs) * envelope
    c[:, 0, 0, 0] = 0.0
    return leray_project(Field(grid, c))


def make_initial_data(cfg: InitialData, grid: Grid, part: DyadicPartition | None = None) -> Field:
    x = grid.coordinates() * grid.k0
    A = cfg.amplitude
    if cfg.kind == "taylor_green":
        u = np.stack([np.sin(x[0]) * np.cos(x[1]), -np.cos(x[0]) * np.sin(x[1]), 0 * x[2]])
        return Field.from_physical(grid, A * u)
    if cfg.kind == "taylor_green_3d":
        cz = np.cos(x[2])
        u = np.stack([np.sin(x[0]) * np.cos(x[1]) * cz, -np.cos(x[0]) * np.sin(x[1]) * cz, 0 * cz])
        return Field.from_physical(grid, A * u)
    if cfg.kind == "single_mode":
        m = np.asarray(cfg.mode, dtype=np.float64)
        if m[1] != 0:
            raise ValueError("single_mode places the amplitude in y; the mode needs no y index")
        phase = m[0] * x[0] + m[2] * x[2]
        u = np.zeros((3,) + grid.physical_shape)
        u[1] = A * np.cos(phase)
        return Field.from_physical(grid, u)
    # random_besov
    if not cfg.M > 0:
        raise ValueError("target norm M must be positive")
    env = np.where(grid.k2 > 0, grid.kmag, 1.0) ** (-cfg.slope)
    f = _random_solenoidal(grid, cfg.seed, env)
    part = build_partition(grid) if part is None else part
    norm = besov_norm(f, BesovParams.critical(cfg.p), part)
    if not norm > 0:
        raise ValueError("seed field has zero norm; target unreachable")
    return f * (cfg.M / norm)


def block_normalized_noise(grid: Grid, js, p: float, seed: int = 0,
                           part: DyadicPartition | None = None, iterations: int = 30) -> Field:
    """Solenoidal noise white inside each block of ``js``, with ``2^{js} ||Delta_j u||_p = 1``.

    ``s = -1 + 3/p``.  Block norms see their neighbours through the profile
    overlap, so the per-block weights are found by fixed-point iteration.
    """
    part = build_partition(grid) if part is None else part
    js = list(js)
    s = -1.0 + 3.0 / p
    base = _random_solenoidal(grid, seed, np.ones(grid.spectral_shape))
    pieces = {j: part.block(base, j) for j in js}
    w = {j: 1.0 for j in js}
    f = base
    for _ in range(iterations):
        f = sum((w[j] * pieces[j] for j in js[1:]), w[js[0]] * pieces[js[0]])
        errs = []
        for j in js:
            val = 2.0 ** (j * s) * lp_norm(part.block(f, j), p)
            w[j] /= val
            errs.append(abs(val - 1.0))
        if max(errs) < 1e-10:
            break
    return sum((w[j] * pieces[j] for j in js[1:]), w[js[0]] * pieces[js[0]])


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------

@dataclass
class RunInfo:
    steps: int = 0
    wall_time: float = 0.0
    max_cfl: float = 0.0
    warnings: list[str] = dc_field(default_factory=list)


def _nonlinear(grid: Grid, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    phys = irfft3(c, grid.n)
    return -symmetric_square_divergence(grid, phys), phys


def integrate(u0: Field, cfg: SolverConfig, info: RunInfo | None = None) -> Trajectory:
    """Integrate from ``u0`` and return the samples every ``save_every`` steps.

    The final time is always saved.  A non-finite state raises
    :class:`SolverInstabilityError` holding the samples saved so far.  A
    nonlinear CFL number above 1 triggers a warning.
    """
    g = cfg.grid
    if u0.grid != g:
        raise ValueError("initial data grid differs from solver grid")
    if u0.components != 3:
        raise ValueError("initial data must be a vector field")
    scale = max(u0.l2_norm(), 1e-300)
    if divergence(u0).l2_norm() > 1e-10 * scale * g.k_cutoff:
        raise ValueError("initial data is not divergence-free")
    info = RunInfo() if info is None else info
    start = _time.perf_counter()
    h = cfg.step
    z = g.k2 * h
    E = np.exp(-z)
    P1 = h * phi1(z)
    P2 = h * phi2(z)
    c = np.array(u0.coeffs)
    times, fields = [0.0], [u0]
    warned = False
    for step in range(1, cfg.n_steps + 1):
        Nu, phys = _nonlinear(g, c)
        umax = float(np.sqrt(np.max(np.sum(phys ** 2, axis=0))))
        cfl = umax * h / g.dx
        info.max_cfl = max(info.max_cfl, cfl)
        if cfl > 1.0 and not warned:
            msg = f"nonlinear CFL {cfl:.3g} > 1 at step {step}"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            info.warnings.append(msg)
            warned = True
        a = E * c + P1 * Nu
        Na, _ = _nonlinear(g, a)
        c = (a + P2 * (Na - Nu)) * g.mask
        if not np.all(np.isfinite(c)):
            info.steps = step
            info.wall_time = _time.perf_counter() - start
            raise SolverInstabilityError(f"non-finite state at step {step}",
                                         Trajectory(times, fields))
        if step % cfg.save_every == 0 or step == cfg.n_steps:
            times.append(step * h)
            fields.append(Field(g, c))
    info.steps = cfg.n_steps
    info.wall_time = _time.perf_counter() - start
    return Trajectory(times, fields)


def vorticity_traj(traj: Trajectory) -> Trajectory:
    return traj.map(curl)


def energies(traj: Trajectory) -> np.ndarray:
    """``||u(t)||_{L^2}^2`` per sample."""
    return np.array([f.l2_norm() ** 2 for f in traj.fields])


def divergence_defect(traj: Trajectory) -> float:
    """``max_t ||div u|| / (k_cutoff ||u||)`` over nonzero samples."""
    worst = 0.0
    for f in traj.fields:
        nu = f.l2_norm()
        if nu > 0:
            worst = max(worst, divergence(f).l2_norm() / (f.grid.k_cutoff * nu))
    return worst


def taylor_green_exact(grid: Grid, t: float, amplitude: float = 1.0) -> Field:
    """Exact solution ``e^{-2 k0^2 t} u0`` of the embedded 2D Taylor-Green vortex."""
    u0 = make_initial_data(InitialData("taylor_green", amplitude=amplitude), grid)
    return u0 * math.exp(-2.0 * grid.k0 ** 2 * t)


def pointwise_dyadic_bounds(traj: Trajectory, part: DyadicPartition | None = None,
                            js=None) -> dict[int, float]:
    """``max_t sup_x |Delta_j u(t, x)| / 2^j`` for each resolvable ``j``."""
    part = build_partition(traj.grid) if part is None else part
    js = part.resolvable_js() if js is None else js
    return {j: max(sup_norm(part.block(f, j)) for f in traj.fields) / 2.0 ** j for j in js}
