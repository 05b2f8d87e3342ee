"""Lebesgue, Besov and Kato norms and the hypothesis functionals built on them.

All spatial integrals are quadratures over the collocation grid of the box;
``p = inf`` uses the max over a twice-refined grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
import scipy.fft as sfft

from .littlewood_paley import DyadicPartition, build_partition
from .spectral import (Field, Grid, gradient, heat_semigroup, pointwise_magnitude,
                       riesz_potential, sup_norm)
from .trajectory import Trajectory

INF = math.inf


def _check_p(p: float) -> None:
    if not (p >= 1):
        raise ValueError(f"integrability index must be >= 1, got {p}")


def lp_norm(f: Field, p: float) -> float:
    """``||f||_{L^p}`` over the box; vector fields use the pointwise Euclidean magnitude."""
    _check_p(p)
    if p == INF:
        return sup_norm(f)
    mag = pointwise_magnitude(f.physical())
    if p == 1:
        return float(mag.sum() * f.grid.cell_volume)
    return float((np.sum(mag ** p) * f.grid.cell_volume) ** (1.0 / p))


def lq_aggregate(values: Sequence[float], q: float) -> float:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return 0.0
    if q == INF:
        return float(v.max())
    return float(np.sum(v ** q) ** (1.0 / q))


@dataclass(frozen=True)
class BesovParams:
    """Regularity ``s`` and integrability ``p, q`` of a homogeneous Besov norm."""

    s: float
    p: float
    q: float = INF

    def __post_init__(self):
        _check_p(self.p)
        _check_p(self.q)

    @classmethod
    def critical(cls, p: float, q: float = INF) -> "BesovParams":
        """Scaling-critical index ``s = -1 + 3/p``."""
        return cls(-1.0 + 3.0 / p, p, q)


def block_norms(f: Field, p: float, part: DyadicPartition) -> dict[int, float]:
    """``||Delta_j f||_{L^p}`` for every block of the partition."""
    return {j: lp_norm(part.block(f, j), p) for j in part.js}


def besov_norm(f: Field, bp: BesovParams, part: DyadicPartition | None = None) -> float:
    """``|| 2^{js} ||Delta_j f||_{L^p} ||_{l^q}`` over the partition's blocks."""
    part = build_partition(f.grid) if part is None else part
    bn = block_norms(f, bp.p, part)
    return lq_aggregate([2.0 ** (j * bp.s) * v for j, v in bn.items()], bp.q)


def critical_besov_norm(f: Field, p: float, part: DyadicPartition | None = None,
                        q: float = INF) -> float:
    return besov_norm(f, BesovParams.critical(p, q), part)


# ---------------------------------------------------------------------------
# Time-weighted norms
# ---------------------------------------------------------------------------

@dataclass
class NormReport:
    """Per-time values of one norm, with the parameters that define it."""

    times: np.ndarray
    values: np.ndarray
    norm_kind: str
    s: float = float("nan")
    p: float = float("nan")
    q: float = float("nan")
    a: float = float("nan")
    extra: dict[str, np.ndarray] = dc_field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must align")
        if np.any(~np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError(f"{self.norm_kind}: report values must be finite and nonnegative")

    @property
    def sup(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0

    def __len__(self) -> int:
        return self.values.size


def kato_norm(traj: Trajectory, s: float, p: float, q: float = INF) -> float:
    """Kato norm ``|| t^{-s/2} ||f(t)||_{L^p} ||_{L^q(dt/t)}`` of a sampled trajectory.

    For ``q = inf`` the sup is taken over the samples.  For finite ``q`` the
    ``dt/t`` integral is a trapezoid rule in ``log t`` over samples with
    ``t > 0``.
    """
    if len(traj) == 0:
        raise ValueError("kato_norm of an empty trajectory")
    t = traj.times
    norms = np.array([lp_norm(f, p) for f in traj.fields])
    with np.errstate(divide="ignore", invalid="ignore"):
        weighted = np.where(t > 0, t ** (-s / 2.0) * norms, 0.0 if s < 0 else np.where(norms > 0, np.inf, 0.0))
    if q == INF:
        return float(np.max(weighted))
    pos = t > 0
    if np.count_nonzero(pos) < 2:
        return 0.0
    return float(np.trapezoid(weighted[pos] ** q, np.log(t[pos])) ** (1.0 / q))


def heat_times(grid: Grid, horizon: float | None = None, per_decade: int = 8) -> np.ndarray:
    """Geometric sample times from ``(L/(pi n))^2`` to ``horizon`` (default ``10/k0^2``)."""
    t0 = (grid.box_length / (math.pi * grid.n)) ** 2
    t1 = 10.0 / grid.k0 ** 2 if horizon is None else horizon
    count = max(2, int(math.ceil(per_decade * math.log10(t1 / t0))) + 1)
    return np.geomspace(t0, t1, count)


def heat_trajectory(f: Field, times: Sequence[float]) -> Trajectory:
    return Trajectory(times, [heat_semigroup(f, float(t)) for t in times])


def heat_flow_besov_ratio(f: Field, bp: BesovParams, part: DyadicPartition | None = None,
                          horizon: float | None = None) -> tuple[float, float, float]:
    """Kato norm of ``exp(t Laplacian) f`` against ``||f||_{B^s_{p,q}}``.

    Returns ``(kato_value, besov_value, kato_value / besov_value)``.
    """
    if not bp.s < 0:
        raise ValueError("heat-flow characterisation needs s < 0")
    part = build_partition(f.grid) if part is None else part
    traj = heat_trajectory(f, heat_times(f.grid, horizon))
    kv = kato_norm(traj, bp.s, bp.p, bp.q)
    bv = besov_norm(f, bp, part)
    return kv, bv, kv / bv


# ---------------------------------------------------------------------------
# Hypothesis functionals
# ---------------------------------------------------------------------------

def magnitude_field(f: Field) -> Field:
    """Band projection of the pointwise magnitude ``|f|`` (a scalar field)."""
    return Field.from_physical(f.grid, pointwise_magnitude(f.physical()))


def magnitude_potential(f: Field, p: float) -> Field:
    """``|D|^{-1+3/p} |f|``; the torus forces the zero mode of ``|f|`` to be dropped."""
    if not p > 3:
        raise ValueError(f"need p > 3, got {p}")
    return riesz_potential(magnitude_field(f), 1.0 - 3.0 / p)


def potential_norm(f: Field, p: float) -> float:
    """``A(t) = || |D|^{-1+3/p} |f| ||_{L^p}``."""
    return lp_norm(magnitude_potential(f, p), p)


def weighted_log_functional(f: Field, p: float, a: float) -> float:
    """``int eta^p / ln(e + eta)^a dx`` with ``eta = | |D|^{-1+3/p} |f| |``."""
    if not (0.0 <= a <= 1.0):
        raise ValueError(f"a must lie in [0, 1], got {a}")
    eta = np.abs(magnitude_potential(f, p).physical()[0])
    integrand = eta ** p
    if a > 0:
        integrand = integrand / np.log(np.e + eta) ** a
    return float(integrand.sum() * f.grid.cell_volume)


def sphere_directions(n_dirs: int, iterations: int = 200, seed: int = 0) -> np.ndarray:
    """Unit directions for the ray functional.

    Up to 26 directions come from the cube's faces, edges and corners in that
    order.  Larger sets start from a Fibonacci lattice and are relaxed by
    Coulomb repulsion.
    """
    if n_dirs < 6:
        raise ValueError("need at least 6 directions")
    base = []
    for v in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
        base += [v, tuple(-c for c in v)]
    for i in range(3):
        for sa in (1, -1):
            for sb in (1, -1):
                v = [0, 0, 0]
                v[i] = sa
                v[(i + 1) % 3] = sb
                base.append(tuple(v))
    for sx in (1, -1):
        for sy in (1, -1):
            for sz in (1, -1):
                base.append((sx, sy, sz))
    base = np.asarray(base, dtype=np.float64)
    base /= np.linalg.norm(base, axis=1, keepdims=True)
    if n_dirs <= 26:
        return base[:n_dirs]
    i = np.arange(n_dirs) + 0.5
    z = 1 - 2 * i / n_dirs
    th = math.pi * (1 + 5 ** 0.5) * i
    r = np.sqrt(1 - z ** 2)
    pts = np.stack([r * np.cos(th), r * np.sin(th), z], axis=1)
    step = 0.1 / math.sqrt(n_dirs)
    for _ in range(iterations):
        d = pts[:, None, :] - pts[None, :, :]
        dist = np.linalg.norm(d, axis=2) + np.eye(n_dirs)
        force = np.sum(d / dist[..., None] ** 3, axis=1)
        force -= np.sum(force * pts, axis=1, keepdims=True) * pts
        pts = pts + step * force / np.max(np.linalg.norm(force, axis=1))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts


def evaluate_at_points(f: Field, points: np.ndarray) -> np.ndarray:
    """Exact trigonometric interpolation of ``f`` at arbitrary points ``(m, 3)``.

    Returns shape ``(components, m)``.
    """
    g = f.grid
    sel = g.mask & (np.max(np.abs(f.coeffs), axis=0) > 0)
    k = g.wavevector[:, sel]  # (3, K)
    c = f.coeffs[:, sel] * g.hermitian_weight[sel]  # (C, K)
    out = np.zeros((f.components, points.shape[0]))
    chunk = max(1, 2_000_000 // max(1, k.shape[1]))
    for s in range(0, points.shape[0], chunk):
        ph = np.exp(1j * (points[s:s + chunk] @ k))  # (m, K)
        out[:, s:s + chunk] = np.real(c @ ph.T)
    return out / g.n ** 3


def ray_profiles(f: Field, p: float, directions: np.ndarray, samples: int | None = None,
                 center: np.ndarray | None = None) -> np.ndarray:
    """Per-direction ``|| |D_lam|^{-1+1/p} |f|(c + lam e) ||_{L^p(d lam)}^p``.

    Each ray is sampled on one box length centred at ``center`` and treated as
    periodic; the 1D multiplier ``|kappa|^{-(1-1/p)}`` drops the mean.
    """
    if not p > 3:
        raise ValueError(f"need p > 3, got {p}")
    g = f.grid
    L = g.box_length
    m = 4 * g.n if samples is None else samples
    c = np.full(3, L / 2) if center is None else np.asarray(center, dtype=np.float64)
    lam = (np.arange(m) - m // 2) * (L / m)
    kappa = np.abs(np.fft.fftfreq(m, L / m) * 2 * math.pi)
    sym = np.zeros(m)
    sym[1:] = kappa[1:] ** (-(1.0 - 1.0 / p))
    vals = []
    for e in directions:
        pts = c[None, :] + lam[:, None] * e[None, :]
        mag = pointwise_magnitude(evaluate_at_points(f, pts)[:, :, None, None])[:, 0, 0]
        h = sfft.ifft(sfft.fft(mag) * sym).real
        vals.append(float(np.sum(np.abs(h) ** p) * (L / m)))
    return np.asarray(vals)


def ray_functional(f: Field, p: float, n_dirs: int = 26, samples: int | None = None) -> float:
    """Sup over sampled directions of the 1D fractional-integral ray norm (p-th power)."""
    dirs = sphere_directions(n_dirs)
    if np.linalg.matrix_rank(dirs) < 3:
        raise ValueError("direction set does not span R^3")
    return float(np.max(ray_profiles(f, p, dirs, samples)))


# ---------------------------------------------------------------------------
# Interpolation inequality
# ---------------------------------------------------------------------------

def interpolation_exponents(p: float, r: float) -> tuple[float, float, float]:
    """Exponents of ``||w||_r <~ ||w||_2^a1 ||grad w||_2^a2 ||w||_{B^{-1+3/p}_{p,inf}}^a3``."""
    if not (2.0 < r <= 3.0 < p):
        raise ValueError(f"need 2 < r <= 3 < p, got p={p}, r={r}")
    den = p * r + 2 * p - 4 * r
    assert den != 0, "denominator vanishes only outside the admissible range"
    a1 = 2.0 * (4 * p + r - p * r - 6) / den
    a2 = 6.0 * (p - r) * (r - 2) / (r * den)
    a3 = 3.0 * p * (r - 2) ** 2 / (r * den)
    return a1, a2, a3


@dataclass
class InterpolationCheck:
    lhs: float
    factors: tuple[float, float, float]
    exponents: tuple[float, float, float]
    constant: float


def interpolation_check(w: Field, p: float, r: float,
                        part: DyadicPartition | None = None) -> InterpolationCheck:
    """Measured constant in the three-factor interpolation bound for ``||w||_{L^r}``."""
    exps = interpolation_exponents(p, r)
    lhs = lp_norm(w, r)
    factors = (lp_norm(w, 2.0), lp_norm(gradient(w), 2.0), critical_besov_norm(w, p, part))
    rhs = math.prod(fv ** e for fv, e in zip(factors, exps))
    const = lhs / rhs if rhs > 0 else float("nan")
    return InterpolationCheck(lhs, factors, exps, const)
