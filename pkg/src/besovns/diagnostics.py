"""Hypothesis and conclusion quantities of the quantitative regularity bounds.

Iterated exponentials are carried as :class:`Tower` values
``exp^level(x)`` so that bounds such as ``exp(A exp(exp(M^c)))`` can be
compared with measured sup norms without overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Iterator, Sequence

import numpy as np
from scipy.ndimage import maximum_filter
from scipy.spatial import cKDTree

from .littlewood_paley import DyadicPartition, build_partition
from .norms import (BesovParams, besov_norm, potential_norm, ray_functional,
                    weighted_log_functional)
from .spectral import Field, curl, gradient, pad_coeffs, irfft3, pointwise_magnitude, sup_norm
from .trajectory import Trajectory

LOG_MAX = math.log(np.finfo(np.float64).max)


# ---------------------------------------------------------------------------
# Log-domain arithmetic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Tower:
    """The number ``exp^level(x)`` (``level`` nested exponentials of ``x``).

    Values are normalised so that ``level > 0`` only when ``x > LOG_MAX``,
    i.e. when the next exponential would overflow.  Normalised towers are
    ordered lexicographically by ``(level, x)``.
    """

    level: int
    x: float

    def __post_init__(self):
        level, x = int(self.level), float(self.x)
        if level < 0:
            raise ValueError("tower level must be nonnegative")
        while level > 0 and x <= LOG_MAX:
            x = math.exp(x)
            level -= 1
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "x", x)

    @classmethod
    def of(cls, v) -> "Tower":
        return v if isinstance(v, Tower) else cls(0, float(v))

    # -- elementary functions ----------------------------------------------
    def exp(self) -> "Tower":
        return Tower(self.level + 1, self.x)

    def log(self) -> "Tower":
        if self.level > 0:
            return Tower(self.level - 1, self.x)
        if self.x < 0:
            raise ValueError("log of a negative number")
        return Tower(0, math.log(self.x) if self.x > 0 else -math.inf)

    def logs(self, k: int) -> float:
        """``ln`` applied ``k`` times, as a float (``inf`` if still too large)."""
        t = self
        for _ in range(k):
            if t.level == 0 and t.x <= 0:
                return -math.inf
            t = t.log()
        return t.x if t.level == 0 else math.inf

    @property
    def value(self) -> float:
        return self.x if self.level == 0 else math.inf

    # -- arithmetic (nonnegative operands where logs are involved) ----------
    def __add__(self, other) -> "Tower":
        o = Tower.of(other)
        a, b = (self, o) if (self.level, self.x) >= (o.level, o.x) else (o, self)
        if a.level == 0:
            s = a.x + b.x
            if math.isfinite(s):
                return Tower(0, s)
            la, lb = math.log(a.x), math.log(b.x)
            return Tower(1, la + math.log1p(math.exp(lb - la)))
        if a.level == 1:
            if b.level == 1:
                return Tower(1, a.x + math.log1p(math.exp(b.x - a.x)))
            if b.x > 0:
                return Tower(1, a.x + math.log1p(math.exp(math.log(b.x) - a.x)))
            return a
        # a exceeds exp(exp(LOG_MAX)); any lower tower is negligible
        return a

    __radd__ = __add__

    def __mul__(self, other) -> "Tower":
        o = Tower.of(other)
        if self.level == 0 and o.level == 0:
            p = self.x * o.x
            if math.isfinite(p):
                return Tower(0, p)
        if (self.level == 0 and self.x <= 0) or (o.level == 0 and o.x <= 0):
            if (self.level == 0 and self.x == 0) or (o.level == 0 and o.x == 0):
                return Tower(0, 0.0)
            raise ValueError("tower products need nonnegative operands")
        return (self.log() + o.log()).exp()

    __rmul__ = __mul__

    def _key(self):
        return (self.level, self.x) if self.level > 0 else (0, self.x)

    def __lt__(self, other):
        return self._key() < Tower.of(other)._key()

    def __le__(self, other):
        return self._key() <= Tower.of(other)._key()

    def __gt__(self, other):
        return self._key() > Tower.of(other)._key()

    def __ge__(self, other):
        return self._key() >= Tower.of(other)._key()

    def __repr__(self) -> str:
        return f"Tower(exp^{self.level}({self.x:.6g}))"


# ---------------------------------------------------------------------------
# Constant ladder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantLadder:
    """``M_0 = M`` and ``M_i = M_{i-1}^{c_p}`` for ``i = 1..6``, stored as logarithms."""

    M: float
    c_p: float = 2.0
    d_p: float = 10.0

    def __post_init__(self):
        if not self.M >= 2:
            raise ValueError("ladder needs M >= 2")
        if not self.c_p >= 1:
            raise ValueError("ladder needs c_p >= 1")
        if not self.d_p > 1:
            raise ValueError("ladder needs d_p > 1")

    def log_M(self, i: int) -> float:
        if not 0 <= i <= 6:
            raise ValueError("ladder index runs over 0..6")
        return self.c_p ** i * math.log(self.M)

    def value(self, i: int) -> float:
        lm = self.log_M(i)
        return math.exp(lm) if lm <= LOG_MAX else math.inf

    def power(self, i: int, e: float | None = None) -> Tower:
        """``M_i^e`` (default ``e = c_p``) as a tower."""
        e = self.c_p if e is None else e
        return Tower(1, e * self.log_M(i))

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(self.value(i) for i in range(1, 7))

    def __getattr__(self, name):
        if len(name) == 2 and name[0] == "M" and name[1] in "123456":
            return self.value(int(name[1]))
        raise AttributeError(name)

    def check(self) -> bool:
        """Two-sided ladder condition ``M_i^{c_p} <= M_{i+1} <= M_i^{d_p c_p}``."""
        ok = True
        for i in range(6):
            lo = self.c_p * self.log_M(i)
            hi = self.d_p * self.c_p * self.log_M(i)
            x = self.log_M(i + 1)
            ok &= lo * (1 - 1e-12) <= x <= hi * (1 + 1e-12)
        return bool(ok)


def constant_ladder(M: float, c_p: float = 2.0, d_p: float = 10.0) -> ConstantLadder:
    return ConstantLadder(M, c_p, d_p)


# ---------------------------------------------------------------------------
# Bound evaluators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bound:
    value: Tower

    @property
    def lnln(self) -> float:
        return self.value.logs(2)

    @property
    def lnlnln(self) -> float:
        return self.value.logs(3)

    def dominates(self, lhs: float) -> bool:
        return Tower.of(max(lhs, 0.0)) <= self.value


def _inner_exponent(M: float, c_p: float) -> Tower:
    """``exp(M^{c_p})``."""
    return Tower(2, c_p * math.log(M))


def _double_exp_bound(A: float, a: float, e_inner: Tower, alpha_order: int) -> Tower:
    """``exp(2^{|alpha|} A^{1/(1-a)} exp(E/(1-a)))`` (``a < 1``) or
    ``exp(2^{|alpha|} exp(A exp(E)))`` (``a = 1``), with ``E = e_inner``."""
    if a < 1:
        lnln = Tower.of(alpha_order * math.log(2.0) + math.log(A) / (1 - a)) + e_inner * (1 / (1 - a))
        return lnln.exp().exp()
    lnlnln = Tower.of(math.log(A)) + e_inner
    return (Tower.of(alpha_order * math.log(2.0)) + lnlnln.exp()).exp().exp()


def theorem11_bound(M: float, A: float, a: float, alpha_order: int,
                    ladder: ConstantLadder | None = None, c_p: float | None = None) -> Bound:
    """Right-hand side of the quantitative sup-norm bound for ``t^{(1+|alpha|)/2} ||grad^alpha u||_inf``.

    ``M`` and ``A`` are clamped below at 2 (the bound is stated for
    ``M, A >= 2`` and is monotone in both).  The implicit constant is 1.
    """
    if not 0 <= a <= 1:
        raise ValueError("a must lie in [0, 1]")
    if alpha_order not in (0, 1):
        raise ValueError("alpha_order must be 0 or 1")
    c = (ladder.c_p if ladder is not None else 2.0) if c_p is None else c_p
    M, A = max(M, 2.0), max(A, 2.0)
    return Bound(_double_exp_bound(A, a, _inner_exponent(M, c), alpha_order))


def theorem13_quantity(M: float, A: float, t: float, T_star: float, b: float = 1.0) -> Tower:
    """``exp(exp(M)) A / |ln(T_star - t)|^b``."""
    if not t < T_star:
        raise ValueError("t must precede T_star")
    if not b > 0:
        raise ValueError("b must be positive")
    if A <= 0:
        return Tower(0, 0.0)
    denom = abs(math.log(T_star - t))
    if denom == 0:
        return Tower(0, math.inf)
    ln_q = Tower(1, M) + (math.log(A) - b * math.log(denom))
    return ln_q.exp()


def key_lemma_rhs(A: float, a: float, ladder: ConstantLadder) -> Tower:
    """``exp(A^{1/(1-a)} exp(exp(M_6^{c_p})/(1-a)))`` or ``exp exp(A exp(exp(M_6^{c_p})))``."""
    e_inner = ladder.power(6).exp()
    A = max(A, 2.0)
    return _double_exp_bound(A, a, e_inner, 0) if a < 1 else \
        (Tower.of(math.log(A)) + e_inner).exp().exp().exp()


@dataclass(frozen=True)
class KeyLemmaCheck:
    lhs: Tower
    rhs: Tower
    satisfied: bool


def key_lemma_check(T: float, j0: int, A: float, a: float, ladder: ConstantLadder) -> KeyLemmaCheck:
    """Compare ``T 2^{2 j0}`` with the key-lemma bound."""
    if not 0 <= a <= 1:
        raise ValueError("a must lie in [0, 1]")
    lhs = Tower(1, math.log(T) + 2 * j0 * math.log(2.0))
    rhs = key_lemma_rhs(A, a, ladder)
    return KeyLemmaCheck(lhs, rhs, lhs <= rhs)


def frequency_cutoff(A: float, a: float, ladder: ConstantLadder) -> Tower:
    """``j_*`` defined by ``2^{2 j_*}`` equal to the key-lemma bound."""
    return key_lemma_rhs(A, a, ladder).log() * (1.0 / (2.0 * math.log(2.0)))


# ---------------------------------------------------------------------------
# Monitor
# ---------------------------------------------------------------------------

@dataclass
class MonitorReport:
    times: np.ndarray
    M: np.ndarray
    A: np.ndarray
    A_a: np.ndarray
    lhs: dict[int, np.ndarray]
    rhs: dict[int, Bound]
    theorem13: list[Tower]
    p: float
    a: float
    b: float
    T_star: float
    ladder: ConstantLadder
    ray: np.ndarray | None = None
    events: "ConcentrationEvents | None" = None
    summaries: dict = dc_field(default_factory=dict)

    @property
    def sup_M(self) -> float:
        return float(self.M.max()) if self.M.size else 0.0

    @property
    def sup_A_a(self) -> float:
        return float(self.A_a.max()) if self.A_a.size else 0.0

    def lhs_within_rhs(self) -> dict[int, bool]:
        return {k: bool(all(self.rhs[k].dominates(v) for v in self.lhs[k])) for k in self.lhs}

    def theorem13_ln(self) -> np.ndarray:
        return np.array([q.logs(1) if q.value > 0 else -math.inf for q in self.theorem13])

    def all_finite(self) -> bool:
        arrs = [self.M, self.A, self.A_a, *self.lhs.values()]
        if self.ray is not None:
            arrs.append(self.ray)
        ok = all(np.all(np.isfinite(x)) for x in arrs)
        ok &= all(math.isfinite(b.value.x) for b in self.rhs.values())
        ok &= all(math.isfinite(v) or v == -math.inf for v in self.theorem13_ln())
        return bool(ok)

    def rows(self) -> list[dict]:
        t13 = self.theorem13_ln()
        out = []
        for i, t in enumerate(self.times):
            row = {"time": t, "M": self.M[i], "A": self.A[i], "A_a": self.A_a[i],
                   "lhs_0": self.lhs[0][i], "lhs_1": self.lhs[1][i],
                   "rhs_lnlnln_0": self.rhs[0].lnlnln, "rhs_lnlnln_1": self.rhs[1].lnlnln,
                   "theorem13_ln": t13[i]}
            if self.ray is not None:
                row["ray"] = self.ray[i]
            out.append(row)
        return out

    def summary(self) -> dict:
        d = {"p": self.p, "a": self.a, "b": self.b, "T_star": float(self.T_star),
             "ladder": {"M": self.ladder.M, "c_p": self.ladder.c_p, "d_p": self.ladder.d_p,
                        "log_M": [self.ladder.log_M(i) for i in range(7)]},
             "sup_M": self.sup_M, "sup_A": float(self.A.max()) if self.A.size else 0.0,
             "sup_A_a": self.sup_A_a,
             "rhs_lnlnln": {str(k): b.lnlnln for k, b in self.rhs.items()},
             "lhs_within_rhs": {str(k): v for k, v in self.lhs_within_rhs().items()},
             "n_events": 0 if self.events is None else len(self.events)}
        if self.events is not None:
            d["events"] = [e.as_dict() for e in self.events.top(100)]
        d.update(self.summaries)
        return d


def monitor(traj: Trajectory, p: float, a: float, ladder: ConstantLadder | None = None,
            part: DyadicPartition | None = None, T_star: float | None = None, b: float = 1.0,
            n_dirs: int = 0, scan_events: bool = False) -> MonitorReport:
    """Evaluate the hypothesis functionals and both sides of the sup-norm bound along ``traj``.

    ``M`` and ``A`` fed to the bound are ``sup_t M(t)`` and ``sup_t A_a(t)``.
    ``T_star`` defaults to ``span / e`` past the last sample; the irrational
    offset keeps ``T_star - t`` away from 1, where ``|ln(T_star - t)|`` vanishes.
    ``n_dirs > 0`` adds the ray functional per time.
    """
    if not p > 3:
        raise ValueError("monitor needs p > 3")
    part = build_partition(traj.grid) if part is None else part
    t = traj.times
    crit = BesovParams.critical(p)
    M = np.array([besov_norm(f, crit, part) for f in traj.fields])
    A = np.array([potential_norm(f, p) for f in traj.fields])
    A_a = np.array([weighted_log_functional(f, p, a) for f in traj.fields])
    lhs = {0: np.zeros(len(t)), 1: np.zeros(len(t))}
    for i, (ti, f) in enumerate(traj):
        tp = max(ti, 0.0)
        lhs[0][i] = tp ** 0.5 * sup_norm(f)
        lhs[1][i] = tp * sup_norm(gradient(f))
    ladder = constant_ladder(max(2.0, float(M.max()) if M.size else 2.0)) if ladder is None else ladder
    M_sup = float(M.max()) if M.size else 0.0
    A_sup = float(A_a.max()) if A_a.size else 0.0
    rhs = {k: theorem11_bound(M_sup, A_sup, a, k, ladder) for k in (0, 1)}
    if T_star is None:
        span = t[-1] - t[0] if len(t) > 1 else 1.0
        T_star = t[-1] + (span if span > 0 else 1.0) / math.e
    t13 = [theorem13_quantity(M[i], A[i], t[i], T_star, b) for i in range(len(t))]
    ray = np.array([ray_functional(f, p, n_dirs) for f in traj.fields]) if n_dirs else None
    events = concentration_scan(traj, ladder, part) if scan_events else None
    return MonitorReport(t, M, A, A_a, lhs, rhs, t13, p, a, b, T_star, ladder, ray, events)


# ---------------------------------------------------------------------------
# Concentration events
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConcentrationEvent:
    t: float
    x: tuple[float, float, float]
    j: int
    value: float
    threshold: float

    def as_dict(self) -> dict:
        return {"t": self.t, "x": list(self.x), "j": self.j, "value": self.value,
                "threshold": self.threshold}


@dataclass
class ConcentrationEvents:
    """Column store of events, sorted by ``j`` descending then time and value."""

    t: np.ndarray
    x: np.ndarray
    j: np.ndarray
    value: np.ndarray
    threshold: np.ndarray
    box_length: float

    def __len__(self) -> int:
        return self.t.size

    def __iter__(self) -> Iterator[ConcentrationEvent]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i: int) -> ConcentrationEvent:
        return ConcentrationEvent(float(self.t[i]), tuple(float(c) for c in self.x[i]),
                                  int(self.j[i]), float(self.value[i]), float(self.threshold[i]))

    def top(self, k: int) -> list[ConcentrationEvent]:
        order = np.argsort(-self.value / np.maximum(self.threshold, 1e-300))[:k]
        return [self[i] for i in order]

    def select(self, sel: np.ndarray) -> "ConcentrationEvents":
        return ConcentrationEvents(self.t[sel], self.x[sel], self.j[sel], self.value[sel],
                                   self.threshold[sel], self.box_length)


def _empty_events(L: float) -> ConcentrationEvents:
    z = np.zeros(0)
    return ConcentrationEvents(z, np.zeros((0, 3)), np.zeros(0, int), z, z, L)


def _block_magnitude(f: Field, j: int, part: DyadicPartition, factor: int, shift: float) -> np.ndarray:
    """``|Delta_j f|`` on a ``factor``-refined grid shifted by ``shift`` fine cells."""
    g = f.grid
    c = f.coeffs * part.symbol(j)
    if shift:
        d = shift * g.dx / factor
        c = c * np.exp(1j * d * np.sum(g.wavevector, axis=0))
    return pointwise_magnitude(irfft3(pad_coeffs(c, g.n, factor), g.n * factor))


def _scan(traj: Trajectory, thresholds: dict[int, float], part: DyadicPartition,
          factor: int, shift: float) -> ConcentrationEvents:
    g = traj.grid
    h = g.box_length / (g.n * factor)
    cols = {k: [] for k in ("t", "x", "j", "value", "threshold")}
    for t, f in traj:
        for j, thr in thresholds.items():
            mag = _block_magnitude(f, j, part, factor, shift)
            idx = np.argwhere(mag >= thr)
            if idx.size == 0:
                continue
            cols["t"].append(np.full(len(idx), t))
            cols["x"].append((idx + shift) * h)
            cols["j"].append(np.full(len(idx), j))
            cols["value"].append(mag[tuple(idx.T)])
            cols["threshold"].append(np.full(len(idx), thr))
    if not cols["t"]:
        return _empty_events(g.box_length)
    ev = ConcentrationEvents(*(np.concatenate(cols[k]) for k in ("t", "x", "j", "value", "threshold")),
                             box_length=g.box_length)
    order = np.lexsort((-ev.value, ev.t, -ev.j))
    return ev.select(order)


def event_thresholds(part: DyadicPartition, ladder: ConstantLadder, js=None) -> dict[int, float]:
    js = part.js if js is None else js
    return {j: 2.0 ** j / ladder.M1 for j in js}


def concentration_scan(traj: Trajectory, ladder: ConstantLadder, part: DyadicPartition | None = None,
                       js=None, factor: int = 2) -> ConcentrationEvents:
    """All padded-grid points with ``|Delta_j u(t, x)| >= M_1^{-1} 2^j``."""
    part = build_partition(traj.grid) if part is None else part
    return _scan(traj, event_thresholds(part, ladder, js), part, factor, 0.0)


def periodic_distance(a: np.ndarray, b: np.ndarray, L: float) -> np.ndarray:
    d = np.abs(np.asarray(a) - np.asarray(b))
    d = np.minimum(d, L - d)
    return np.sqrt(np.sum(d ** 2, axis=-1))


def rescan_missed(traj: Trajectory, events: ConcentrationEvents, ladder: ConstantLadder,
                  part: DyadicPartition | None = None, margin: float = 1.05, factor: int = 2,
                  refine: int = 2) -> ConcentrationEvents:
    """Brute-force check of a scan.

    Re-samples every block on a grid ``refine`` times finer than the scan,
    shifted by half a fine cell, and returns the points above ``margin``
    times the threshold whose nearest scan node has no scan event at the same
    ``(t, j)`` in its periodic 3x3x3 neighbourhood.
    """
    part = build_partition(traj.grid) if part is None else part
    g = traj.grid
    nc = g.n * factor
    h = g.box_length / nc
    thr = {j: margin * v for j, v in event_thresholds(part, ladder).items()}
    fine = _scan(traj, thr, part, factor * refine, 0.5)
    if len(fine) == 0:
        return fine
    missed = np.zeros(len(fine), bool)
    for key in {(t, j) for t, j in zip(fine.t, fine.j)}:
        fs = np.nonzero((fine.t == key[0]) & (fine.j == key[1]))[0]
        cs = (events.t == key[0]) & (events.j == key[1])
        hit = np.zeros((nc,) * 3, bool)
        if np.any(cs):
            ci = np.rint(events.x[cs] / h).astype(int) % nc
            hit[tuple(ci.T)] = True
            hit = maximum_filter(hit, size=3, mode="wrap")
        near = np.rint(fine.x[fs] / h).astype(int) % nc
        missed[fs] = ~hit[tuple(near.T)]
    return fine.select(missed)


@dataclass
class BackPropagation:
    found: np.ndarray
    eligible: np.ndarray
    antecedent: np.ndarray


def back_propagation_search(events: ConcentrationEvents, ladder: ConstantLadder,
                            t_first: float | None = None) -> BackPropagation:
    """Exhaustive search for antecedent events.

    For event ``(t1, x1, j1)`` an antecedent is any event with
    ``t2`` in ``[t1 - M_3 2^{-2 j1}, t1 - M_3^{-1} 2^{-2 j1}]``,
    ``|x2 - x1| <= M_4 2^{-j1}`` (periodic distance) and ``2^{j2}`` in
    ``[M_2^{-1} 2^{j1}, M_2 2^{j1}]``.  An event is eligible when some sampled
    time at or after ``t_first`` lies in its window.  ``antecedent[i]`` is
    the index of the nearest antecedent or -1.
    """
    n = len(events)
    found = np.zeros(n, bool)
    eligible = np.zeros(n, bool)
    ante = np.full(n, -1)
    if n == 0:
        return BackPropagation(found, eligible, ante)
    t_first = events.t.min() if t_first is None else t_first
    L = events.box_length
    M2, M3, M4 = ladder.M2, ladder.M3, ladder.M4
    ts = np.unique(events.t)
    for t1 in ts:
        for j1 in np.unique(events.j[events.t == t1]):
            grp = np.nonzero((events.t == t1) & (events.j == j1))[0]
            lo = t1 - M3 * 2.0 ** (-2 * j1)
            hi = t1 - 2.0 ** (-2 * j1) / M3
            if not np.any((ts >= max(lo, t_first)) & (ts <= hi)):
                continue
            eligible[grp] = True
            sel = (events.t >= lo) & (events.t <= hi)
            sel &= (2.0 ** events.j >= 2.0 ** j1 / M2) & (2.0 ** events.j <= M2 * 2.0 ** j1)
            cand = np.nonzero(sel)[0]
            if cand.size == 0:
                continue
            tree = cKDTree(np.mod(events.x[cand], L), boxsize=L)
            d, k = tree.query(np.mod(events.x[grp], L))
            ok = d <= M4 * 2.0 ** (-j1)
            found[grp[ok]] = True
            ante[grp[ok]] = cand[k[ok]]
    return BackPropagation(found, eligible, ante)


# ---------------------------------------------------------------------------
# Speed, epochs and annuli
# ---------------------------------------------------------------------------

def total_speed(traj: Trajectory, t_lo: float, t_hi: float, M: float | None = None,
                c_p: float = 2.0, p: float = 4.0) -> tuple[float, float]:
    """``int_I ||u||_inf dt`` (trapezoid on samples in ``I``) and its ratio to ``M^{c_p} |I|^{1/2}``.

    ``M`` defaults to the sampled sup of the critical Besov norm, clamped at 2.
    """
    w = traj.window(t_lo, t_hi)
    if len(w) == 0 or not t_hi > t_lo:
        raise ValueError("empty time window")
    sups = np.array([sup_norm(f) for f in w.fields])
    integral = float(np.trapezoid(sups, w.times)) if len(w) > 1 else 0.0
    if M is None:
        part = build_partition(traj.grid)
        M = max(besov_norm(f, BesovParams.critical(p), part) for f in w.fields)
    M = max(M, 2.0)
    ratio = integral / (M ** c_p * math.sqrt(t_hi - t_lo))
    return integral, ratio


@dataclass
class EpochResult:
    index: int
    interval: tuple[float, float]
    score: float
    scaled: dict[str, float]
    scores: np.ndarray


def epoch_scan(traj: Trajectory, t_lo: float, t_hi: float, n_sub: int = 8) -> EpochResult:
    """Pick the subinterval ``I'`` minimising ``max_{|alpha|<=1} |I|^{(|alpha|+1)/2} sup_{I'} ||grad^alpha u||_inf``.

    ``scaled`` holds those two quantities for ``u`` and the vorticity
    analogues ``|I| sup ||omega||_inf`` and ``|I|^{3/2} sup ||grad omega||_inf``.
    """
    if n_sub < 4:
        raise ValueError("n_sub must be at least 4")
    length = t_hi - t_lo
    if not length > 0:
        raise ValueError("empty time window")
    edges = np.linspace(t_lo, t_hi, n_sub + 1)
    results = []
    for s in range(n_sub):
        w = traj.window(edges[s], edges[s + 1])
        if len(w) == 0:
            raise ValueError("window too small: a subinterval holds no sample")
        u0 = max(sup_norm(f) for f in w.fields)
        u1 = max(sup_norm(gradient(f)) for f in w.fields)
        om = [curl(f) for f in w.fields]
        w0 = max(sup_norm(o) for o in om)
        w1 = max(sup_norm(gradient(o)) for o in om)
        scaled = {"u": length ** 0.5 * u0, "grad_u": length * u1,
                  "omega": length * w0, "grad_omega": length ** 1.5 * w1}
        results.append(scaled)
    scores = np.array([max(r["u"], r["grad_u"]) for r in results])
    best = int(np.argmin(scores))
    return EpochResult(best, (float(edges[best]), float(edges[best + 1])), float(scores[best]),
                       results[best], scores)


@dataclass
class AnnulusResult:
    R: float
    outer: float
    score: float
    sups: dict[str, float]
    degenerate: bool
    candidates: np.ndarray
    scores: np.ndarray


def annuli_scan(u_t: Field, grad_u: Field, omega: Field, x0: Sequence[float], R0: float,
                ladder: ConstantLadder, t_prime: float | None = None, factor: int = 2) -> AnnulusResult:
    """Sweep shells ``R <= |x - x0| <= min(M_6 R, sqrt(3) L / 2)`` with ``R = R0 2^{i/4}``.

    Distances are periodic.  The selected shell minimises
    ``max((T')^{1/2} sup |u|, T' sup |grad u|)`` over the shell, with
    ``T' = R0^2`` by default.  Candidate radii run up to
    ``min(exp(M_6^{c_p}) R0, sqrt(3) L / 2)``.
    """
    g = u_t.grid
    L = g.box_length
    if not 0 < R0 < L / 4:
        raise ValueError("R0 must lie in (0, L/4)")
    tp = R0 ** 2 if t_prime is None else t_prime
    n = g.n * factor
    x = np.arange(n) * (L / n)
    d = [np.minimum(np.abs(x - c) % L, L - np.abs(x - c) % L) for c in x0]
    r = np.sqrt(d[0][:, None, None] ** 2 + d[1][None, :, None] ** 2 + d[2][None, None, :] ** 2)
    mags = {name: pointwise_magnitude(f.padded_physical(factor))
            for name, f in (("u", u_t), ("grad_u", grad_u), ("omega", omega))}
    r_max = math.sqrt(3.0) * L / 2
    M6 = ladder.M6
    ln_limit = ladder.power(6).value
    cands, scores, sups_all = [], [], []
    i = 0
    while True:
        R = R0 * 2.0 ** (i / 4.0)
        if R > r_max or math.log(R / R0) > ln_limit:
            break
        outer = min(M6 * R, r_max)
        shell = (r >= R) & (r <= outer)
        if np.any(shell):
            sups = {k: float(v[shell].max()) for k, v in mags.items()}
            cands.append(R)
            scores.append(max(tp ** 0.5 * sups["u"], tp * sups["grad_u"]))
            sups_all.append(sups)
        i += 1
    if not cands:
        return AnnulusResult(R0, R0, math.nan, {}, True, np.zeros(0), np.zeros(0))
    scores = np.array(scores)
    best = int(np.argmin(scores))
    R = cands[best]
    return AnnulusResult(R, min(M6 * R, r_max), float(scores[best]), sups_all[best], False,
                         np.array(cands), scores)
