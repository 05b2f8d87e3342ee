"""Linear cascade decomposition ``u = u_1L + ... + u_mL + v``.

Layer 1 is the heat flow of the initial data.  Layer ``k+1`` solves the forced
heat system

    d_t u_{k+1} - Lap u_{k+1} + P div( u_k (x) u_k + sum_{i<k} (u_i (x) u_k + u_k (x) u_i) ) = 0

with zero initial data.  Writing ``W_k = u_1 + ... + u_k`` the forcing is
``-(P div(W_k (x) W_k) - P div(W_{k-1} (x) W_{k-1}))``, which is how it is
evaluated here.  Every layer is marched with the exact heat factor and the
exponential trapezoid rule of :mod:`besovns.expint`.

The remainder ``v = u - V_1`` with ``V_1 = W_m``, ``V_2 = W_{m-1}``,
``V_3 = u_m`` solves

    d_t v - Lap v + P div( v (x) v + V_1 (x) v + v (x) V_1 + V_3 (x) V_1 + V_2 (x) V_3 ) = 0

where ``V_3 (x) V_1 + V_2 (x) V_3 = V_1 (x) V_1 - V_2 (x) V_2`` is symmetric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .expint import trapezoid_weights
from .littlewood_paley import DyadicPartition, build_partition
from .norms import BesovParams, NormReport, besov_norm, lp_norm
from .spectral import (Field, Grid, divergence, gradient, irfft3, laplacian,
                       projected_divergence_coeffs, symmetric_square_divergence)
from .trajectory import Trajectory

SOLENOIDAL_TOL = 1e-10


def cascade_depth(p: float) -> int:
    """Number of linear layers ``m = floor(p) + 3``."""
    if not p > 3:
        raise ValueError(f"cascade needs p > 3, got {p}")
    return int(math.floor(p)) + 3


# ---------------------------------------------------------------------------
# Duhamel integral
# ---------------------------------------------------------------------------

def _tensor_coeffs(F: Field) -> np.ndarray:
    if F.components != 9:
        raise ValueError("Duhamel forcing must be a 9-component tensor field")
    return F.coeffs.reshape((3, 3) + F.grid.spectral_shape)


def duhamel_integral(F: Trajectory, t: float) -> Field:
    """``-int_{t_0}^t exp((t-s) Lap) P div F(s) ds`` on the samples of ``F``.

    ``t_0`` is the first sample time (normally 0).  Between samples ``F`` is
    taken piecewise linear and each mode is integrated exactly against the
    heat factor, so the rule is second order and exact for constant forcing.
    If ``t`` falls between samples the forcing is linearly interpolated.
    """
    if len(F) == 0:
        raise ValueError("empty forcing trajectory")
    times = F.times
    if not (times[0] - 1e-12 <= t <= times[-1] + 1e-12):
        raise ValueError(f"t={t} outside forcing span [{times[0]}, {times[-1]}]")
    g = F.grid
    k2 = g.k2
    acc = np.zeros((3,) + g.spectral_shape, dtype=np.complex128)
    prev = projected_divergence_coeffs(g, _tensor_coeffs(F[0]))
    for i in range(1, len(F)):
        t_prev = times[i - 1]
        if t_prev >= t:
            break
        t_next = min(times[i], t)
        cur = projected_divergence_coeffs(g, _tensor_coeffs(F[i]))
        if t_next < times[i]:
            theta = (t_next - t_prev) / (times[i] - t_prev)
            cur = (1 - theta) * prev + theta * cur
        h = t_next - t_prev
        wa, wb = trapezoid_weights(k2, h)
        acc = np.exp(-k2 * h) * acc + wa * prev + wb * cur
        prev = cur
    return Field(g, -acc)


# ---------------------------------------------------------------------------
# Cascade state
# ---------------------------------------------------------------------------

@dataclass
class CascadeState:
    """Sampled layers ``u_kL`` (``layers[k-1]``) and, once attached, the remainder ``v``."""

    p: float
    layers: list[Trajectory]
    remainder: Trajectory | None = None
    substeps: int = 0

    def __post_init__(self):
        m = cascade_depth(self.p)
        if len(self.layers) != m:
            raise ValueError(f"p={self.p} needs m={m} layers, got {len(self.layers)}")
        t0 = self.layers[0].times
        for lay in self.layers[1:]:
            if lay.times.shape != t0.shape or not np.array_equal(lay.times, t0):
                raise ValueError("cascade layers must share sample times")

    @property
    def m(self) -> int:
        return len(self.layers)

    @property
    def times(self) -> np.ndarray:
        return self.layers[0].times

    @property
    def grid(self) -> Grid:
        return self.layers[0].grid

    def layer(self, k: int) -> Trajectory:
        """``u_kL`` for ``k = 1..m``."""
        if not 1 <= k <= self.m:
            raise ValueError(f"layer index {k} outside 1..{self.m}")
        return self.layers[k - 1]

    def partial(self, k: int) -> Trajectory:
        """``W_k = u_1L + ... + u_kL``."""
        out = self.layers[0]
        for lay in self.layers[1:k]:
            out = out + lay
        return out

    @property
    def v1(self) -> Trajectory:
        return self.partial(self.m)

    @property
    def v2(self) -> Trajectory:
        return self.partial(self.m - 1)

    @property
    def v3(self) -> Trajectory:
        return self.layers[-1]


def default_sample_times(horizon: float, n_samples: int = 64) -> np.ndarray:
    if n_samples < 2:
        raise ValueError("need at least two samples")
    return np.linspace(0.0, horizon, n_samples)


def stability_limit(grid: Grid) -> float:
    """Largest admissible cascade step ``1 / k_cutoff^2``."""
    return 1.0 / grid.k_cutoff ** 2


def _check_initial(u0: Field) -> None:
    if u0.components != 3:
        raise ValueError("initial data must be a vector field")
    scale = max(u0.l2_norm(), 1e-300)
    if divergence(u0).l2_norm() > SOLENOIDAL_TOL * scale * u0.grid.k_cutoff:
        raise ValueError("initial data is not divergence-free")
    if np.max(np.abs(u0.mean())) * math.sqrt(u0.grid.volume) > SOLENOIDAL_TOL * scale:
        raise ValueError("initial data must have zero mean")


def compute_cascade(u0: Field, p: float, horizon: float, dt: float,
                    times: Sequence[float] | None = None, n_samples: int = 64,
                    layers: int | None = None) -> CascadeState:
    """March all cascade layers together and sample them at ``times``.

    Parameters
    ----------
    u0 : divergence-free, zero-mean initial velocity.
    p : integrability index (> 3); fixes ``m = floor(p) + 3``.
    horizon : final time.
    dt : largest internal step; must satisfy ``dt <= 1/k_cutoff^2``.
    times : sample times starting at 0 (default ``n_samples`` uniform samples).
    layers : compute only the first ``layers`` layers; the rest are left zero.
    """
    m = cascade_depth(p)
    g = u0.grid
    if not dt > 0 or dt > stability_limit(g) * (1 + 1e-12):
        raise ValueError(f"dt={dt} violates the cascade stability bound {stability_limit(g):.4g}")
    _check_initial(u0)
    times = default_sample_times(horizon, n_samples) if times is None else np.asarray(times, float)
    if times[0] != 0.0 or np.any(np.diff(times) <= 0) or times[-1] > horizon * (1 + 1e-12):
        raise ValueError("sample times must start at 0, increase, and stay within the horizon")
    active = m if layers is None else int(layers)
    if not 1 <= active <= m:
        raise ValueError(f"layers must lie in 1..{m}")

    k2 = g.k2
    mask = g.mask
    shape = (3,) + g.spectral_shape
    U = [np.array(u0.coeffs)] + [np.zeros(shape, np.complex128) for _ in range(active - 1)]

    def squares(U):
        # S_k = P div(W_k (x) W_k) for k = 1..active-1
        out = []
        w = np.zeros(shape, np.complex128)
        for k in range(active - 1):
            w = w + U[k]
            out.append(symmetric_square_divergence(g, irfft3(w, g.n)))
        return out

    def forcing(S, k):
        # forcing of layer index k (0-based, k >= 1)
        return -(S[k - 1] - S[k - 2]) if k >= 2 else -S[0]

    samples = [[Field(g, U[k])] for k in range(active)]
    S = squares(U)
    substeps = 0
    for i in range(1, len(times)):
        span = times[i] - times[i - 1]
        ns = max(1, int(math.ceil(span / dt - 1e-9)))
        h = span / ns
        E = np.exp(-k2 * h)
        wa, wb = trapezoid_weights(k2, h)
        for _ in range(ns):
            newU = [E * U[0]]
            newS: list[np.ndarray] = []
            w = np.zeros(shape, np.complex128)
            for k in range(1, active):
                w = w + newU[k - 1]
                newS.append(symmetric_square_divergence(g, irfft3(w, g.n)))
                fk_old = forcing(S, k)
                fk_new = forcing(newS, k)
                newU.append((E * U[k] + wa * fk_old + wb * fk_new) * mask)
            U, S = newU, newS
            substeps += 1
        for k in range(active):
            samples[k].append(Field(g, U[k]))
    trajs = [Trajectory(times, s) for s in samples]
    zero = [Field.zeros(g, 3)] * len(times)
    trajs += [Trajectory(times, zero) for _ in range(m - active)]
    return CascadeState(p, trajs, substeps=substeps)


# ---------------------------------------------------------------------------
# Remainder
# ---------------------------------------------------------------------------

def _centered_derivative(traj: Trajectory, i: int) -> np.ndarray:
    """Second-order finite difference of the coefficients at interior sample ``i``."""
    t = traj.times
    h0, h1 = t[i] - t[i - 1], t[i + 1] - t[i]
    a = -h1 / (h0 * (h0 + h1))
    b = (h1 - h0) / (h0 * h1)
    c = h0 / (h1 * (h0 + h1))
    return a * traj[i - 1].coeffs + b * traj[i].coeffs + c * traj[i + 1].coeffs


def remainder_residual(u_traj: Trajectory, state: CascadeState) -> tuple[Trajectory, NormReport]:
    """Remainder ``v = u - V_1`` and the relative residual of its equation.

    The residual at interior sample ``t_i`` is the L2 norm of

        d_t v - Lap v + P div(v (x) v + V_1 (x) v + v (x) V_1 + V_1 (x) V_1 - V_2 (x) V_2)

    with a second-order centred difference for ``d_t v``, divided by
    ``||d_t u|| + ||Lap u|| + ||P div(u (x) u)||`` at the same time.  The
    report's ``extra['absolute']`` carries the unnormalised norms.
    """
    if u_traj.grid != state.grid:
        raise ValueError("trajectory and cascade live on different grids")
    if len(u_traj) != len(state.times) or not np.allclose(u_traj.times, state.times,
                                                           rtol=1e-12, atol=1e-14):
        raise ValueError("trajectory and cascade are sampled at different times")
    g = state.grid
    V1, V2 = state.v1, state.v2
    v = u_traj - V1
    state.remainder = v
    rel, absolute, tt = [], [], []
    for i in range(1, len(v) - 1):
        vp = v[i].physical()
        v1p = V1[i].physical()
        v2p = V2[i].physical()
        # v(x)v + V1(x)v + v(x)V1 + V1(x)V1 - V2(x)V2 = (v+V1)(x)(v+V1) - V2(x)V2
        up = vp + v1p
        nl = symmetric_square_divergence(g, up) - symmetric_square_divergence(g, v2p)
        res = _centered_derivative(v, i) + k2_apply(g, v[i].coeffs) + nl
        r = Field(g, res).l2_norm()
        scale = (Field(g, _centered_derivative(u_traj, i)).l2_norm()
                 + laplacian(u_traj[i]).l2_norm()
                 + Field(g, symmetric_square_divergence(g, u_traj[i].physical())).l2_norm())
        tt.append(v.times[i])
        absolute.append(r)
        rel.append(r / scale if scale > 0 else 0.0)
    rep = NormReport(np.array(tt), np.array(rel), "remainder_residual",
                     extra={"absolute": np.array(absolute)})
    return v, rep


def k2_apply(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of ``-Lap f``."""
    return grid.k2 * coeffs


# ---------------------------------------------------------------------------
# Dyadic decay fits
# ---------------------------------------------------------------------------

def block_min_wavenumber2(part: DyadicPartition, j: int, support: np.ndarray | None = None) -> float:
    """Smallest ``|k|^2`` at which block ``j`` (optionally restricted to ``support``) is nonzero."""
    sel = part.block_support(j)
    if support is not None:
        sel = sel & support
    if not np.any(sel):
        raise ValueError(f"block {j} has empty support")
    return float(part.grid.k2[sel].min())


@dataclass
class DecayFit:
    """Least-squares decay of ``||Delta_j u_kL(t)||_{L^r}``.

    ``rate[j]`` is ``-d/dt ln ||Delta_j u_kL||``; ``c_fit[j] = rate[j] 2^{-2j}``
    is the dimensionless constant in ``exp(-c t 2^{2j})``.  ``slope`` is the
    fitted exponent of ``||Delta_j u_kL(t_star)||`` against ``2^j``.
    """

    k: int
    r: float
    rate: dict[int, float]
    c_fit: dict[int, float]
    r2: dict[int, float]
    npoints: dict[int, int]
    slope: float
    slope_r2: float
    t_star: float
    window: tuple[float, float]
    skipped: list[int] = dc_field(default_factory=list)


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    A = np.vstack([x, np.ones_like(x)]).T
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (a * x + b)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss if ss > 0 else 1.0
    return float(a), float(b), float(r2)


def fit_dyadic_decay(state: CascadeState, k: int, r: float, js: Sequence[int] | None = None,
                     part: DyadicPartition | None = None, window: tuple[float, float] | None = None,
                     t_star: float | None = None, signal_floor: float = 1e-12) -> DecayFit:
    """Fit temporal decay rates per block and the spatial prefactor slope.

    Temporal fits use samples in ``window`` (default ``[T/8, T]`` with ``T``
    the last sample time) where the block norm exceeds ``signal_floor`` times
    the largest block norm of the layer; blocks with fewer than three such
    samples are skipped.  The spatial slope regresses
    ``ln ||Delta_j u_kL(t_star)||`` on ``j ln 2`` over the fitted blocks.
    """
    if r < max(3.0, state.p / k):
        raise ValueError(f"need r >= max(3, p/k) = {max(3.0, state.p / k)}")
    lay = state.layer(k)
    part = build_partition(state.grid) if part is None else part
    js = part.resolvable_js() if js is None else list(js)
    t = lay.times
    T = t[-1]
    lo, hi = (T / 8.0, T) if window is None else window
    norms = np.array([[lp_norm(part.block(f, j), r) for f in lay.fields] for j in js])
    peak = norms.max() if norms.size else 0.0
    if not peak > 0:
        raise ValueError(f"layer {k} carries no signal")
    sel_t = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    rate, c_fit, r2, npts, skipped = {}, {}, {}, {}, []
    for row, j in zip(norms, js):
        ok = sel_t & (row > signal_floor * peak)
        if np.count_nonzero(ok) < 3:
            skipped.append(j)
            continue
        a, _, q = _linfit(t[ok], np.log(row[ok]))
        rate[j] = -a
        c_fit[j] = -a * 2.0 ** (-2 * j)
        r2[j] = q
        npts[j] = int(np.count_nonzero(ok))
    if not rate:
        raise ValueError(f"insufficient signal to fit layer {k}")
    ts = t[0] if t_star is None else t_star
    i_star = int(np.argmin(np.abs(t - ts)))
    fitted = [j for j in js if j in rate]
    slope, slope_r2 = float("nan"), float("nan")
    if len(fitted) >= 2:
        vals = np.array([norms[js.index(j), i_star] for j in fitted])
        if np.all(vals > 0):
            slope, _, slope_r2 = _linfit(np.array(fitted) * math.log(2.0), np.log(vals))
    return DecayFit(k, r, rate, c_fit, r2, npts, slope, slope_r2, float(t[i_star]), (lo, hi), skipped)


# ---------------------------------------------------------------------------
# Monitored norms of the decomposition
# ---------------------------------------------------------------------------

def x_norm(v_traj: Trajectory, part: DyadicPartition | None = None) -> NormReport:
    """Per-time ``t^{-1} ||v||_{B^0_{1,inf}} + ||v||_{B^2_{1,inf}}``; samples at ``t <= 0`` are skipped.

    ``extra`` carries the two summands separately; the sup is ``report.sup``.
    """
    if len(v_traj) == 0:
        return NormReport(np.zeros(0), np.zeros(0), "x_norm")
    part = build_partition(v_traj.grid) if part is None else part
    b0, b2 = BesovParams(0.0, 1.0), BesovParams(2.0, 1.0)
    tt, lo, hi = [], [], []
    for t, f in v_traj:
        if t <= 0:
            continue
        tt.append(t)
        lo.append(besov_norm(f, b0, part) / t)
        hi.append(besov_norm(f, b2, part))
    lo, hi = np.array(lo), np.array(hi)
    return NormReport(np.array(tt), lo + hi, "x_norm", s=float("nan"), p=1.0, q=math.inf,
                      extra={"low": lo, "high": hi})


def cascade_kato_table(state: CascadeState) -> dict[tuple[int, float], float]:
    """``sup_{t>0} t^{(1-3/q)/2} ||u_kL(t)||_{L^q}`` for ``q`` in ``{max(p/k,1), p, inf}``."""
    out = {}
    for k in range(1, state.m + 1):
        lay = state.layer(k)
        for q in sorted({max(state.p / k, 1.0), state.p, math.inf}):
            e = 0.5 * (1.0 - (0.0 if q == math.inf else 3.0 / q))
            vals = [t ** e * lp_norm(f, q) for t, f in lay if t > 0]
            out[(k, q)] = float(max(vals)) if vals else 0.0
    return out


@dataclass
class EnergyBound:
    sup_l2: float
    sup_grad: float
    times: np.ndarray
    l2: np.ndarray
    grad_cumulative: np.ndarray


def energy_bound(v_traj: Trajectory) -> EnergyBound:
    """``sup_t t^{-1/4} ||v(t)||_2`` and ``sup_t t^{-1/4} ||grad v||_{L^2(Q_t)}``."""
    t = v_traj.times
    l2 = np.array([f.l2_norm() for f in v_traj.fields])
    g2 = np.array([gradient(f).l2_norm() ** 2 for f in v_traj.fields])
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (g2[1:] + g2[:-1]) * np.diff(t))]) if len(t) else g2
    cum = np.sqrt(cum)
    pos = t > 0
    w = np.where(pos, t, 1.0) ** -0.25
    sup_l2 = float(np.max((w * l2)[pos])) if np.any(pos) else 0.0
    sup_g = float(np.max((w * cum)[pos])) if np.any(pos) else 0.0
    return EnergyBound(sup_l2, sup_g, t, l2, cum)


def top_layer_regularity(state: CascadeState, part: DyadicPartition | None = None) -> NormReport:
    """X-norm report of ``u_mL``."""
    return x_norm(state.layer(state.m), part)
