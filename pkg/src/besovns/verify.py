"""Fast invariant suite behind the ``verify`` subcommand."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cascade import duhamel_integral
from .diagnostics import constant_ladder, theorem11_bound
from .io import decode_snapshot, encode_snapshot
from .littlewood_paley import build_partition
from .ns_solver import InitialData, SolverConfig, integrate, make_initial_data, taylor_green_exact
from .rng import make_rng
from .spectral import Field, divergence, heat_semigroup, leray_project, make_grid, riesz_potential
from .trajectory import Trajectory


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _random_field(grid, rng, components=3) -> Field:
    return Field.from_physical(grid, rng.standard_normal((components,) + grid.physical_shape))


def check_partition(seed: int) -> CheckResult:
    g = make_grid(64)
    part = build_partition(g)
    total = sum(part.phi(j) for j in part.js)
    band = (g.kmag >= 2.0 ** (part.j_min + 1)) & (g.kmag <= 2.0 ** (part.j_max - 1))
    dev = float(np.max(np.abs(total[band] - 1.0)))
    return CheckResult("partition of unity", dev <= 1e-10, f"max deviation {dev:.2e}")


def check_quasi_orthogonality(seed: int) -> CheckResult:
    g = make_grid(32)
    part = build_partition(g)
    f = _random_field(g, make_rng(seed))
    worst = 0.0
    for j in part.js:
        for k in part.js:
            if abs(j - k) > 1:
                worst = max(worst, part.block(part.block(f, k), j).l2_norm() / f.l2_norm())
    return CheckResult("quasi-orthogonality", worst <= 1e-12, f"max ratio {worst:.2e}")


def check_leray(seed: int) -> CheckResult:
    g = make_grid(32)
    f = _random_field(g, make_rng(seed))
    pf = leray_project(f)
    div = divergence(pf).l2_norm() / (g.k_cutoff * f.l2_norm())
    idem = (leray_project(pf) - pf).l2_norm() / f.l2_norm()
    ok = div <= 1e-13 and idem <= 1e-13
    return CheckResult("Leray projection", ok, f"divergence {div:.2e}, idempotence {idem:.2e}")


def check_heat_semigroup(seed: int) -> CheckResult:
    g = make_grid(16)
    f = _random_field(g, make_rng(seed))
    a = heat_semigroup(heat_semigroup(f, 0.03), 0.05)
    b = heat_semigroup(f, 0.08)
    err = (a - b).l2_norm() / b.l2_norm()
    return CheckResult("heat semigroup", err <= 1e-13, f"relative error {err:.2e}")


def check_riesz(seed: int) -> CheckResult:
    g = make_grid(16)
    f = _random_field(g, make_rng(seed), 1)
    a = riesz_potential(riesz_potential(f, 0.4), 0.7)
    b = riesz_potential(f, 1.1)
    err = (a - b).l2_norm() / b.l2_norm()
    return CheckResult("Riesz composition", err <= 1e-13, f"relative error {err:.2e}")


def check_snapshot(seed: int) -> CheckResult:
    rng = make_rng(seed)
    x = rng.standard_normal((3, 16, 16, 16))
    y, box, t = decode_snapshot(encode_snapshot(x, 2 * math.pi, 0.25))
    ok = np.array_equal(x, y) and box == 2 * math.pi and t == 0.25
    return CheckResult("snapshot round trip", ok, "bitwise" if ok else "mismatch")


def check_duhamel(seed: int) -> CheckResult:
    g = make_grid(16)
    rng = make_rng(seed)
    c = np.zeros((9,) + g.spectral_shape, complex)
    idx = (2, 1, 3)
    c[(slice(None),) + idx] = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    F = Field(g, c)
    t = 0.3
    out = duhamel_integral(Trajectory([0.0, 0.1, t], [F] * 3), t)
    k = g.wavevector[(slice(None),) + idx]
    k2 = float(k @ k)
    div = 1j * c[(slice(None),) + idx].reshape(3, 3) @ k
    ex = -(np.eye(3) - np.outer(k, k) / k2) @ div * (-math.expm1(-k2 * t)) / k2
    err = float(np.max(np.abs(out.coeffs[(slice(None),) + idx] - ex)) / np.max(np.abs(ex)))
    return CheckResult("Duhamel closed form", err <= 1e-10, f"relative error {err:.2e}")


def check_taylor_green(seed: int) -> CheckResult:
    g = make_grid(16)
    u0 = make_initial_data(InitialData("taylor_green"), g)
    tr = integrate(u0, SolverConfig(g, 1e-2, 0.1, save_every=10))
    ex = taylor_green_exact(g, 0.1)
    err = (tr[-1] - ex).l2_norm() / ex.l2_norm()
    return CheckResult("Taylor-Green decay", err <= 1e-6, f"relative error {err:.2e}")


def check_bound(seed: int) -> CheckResult:
    b = theorem11_bound(2.0, 2.0, 0.0, 0, constant_ladder(2.0, 1.0))
    target = math.log(2.0) + math.e ** 2
    err = abs(b.lnln - target)
    return CheckResult("log-domain bound", err <= 1e-12, f"lnln {b.lnln:.12g}")


CHECKS: list[Callable[[int], CheckResult]] = [
    check_partition, check_quasi_orthogonality, check_leray, check_heat_semigroup, check_riesz,
    check_snapshot, check_duhamel, check_taylor_green, check_bound,
]


def run_all(seed: int = 0) -> list[CheckResult]:
    out = []
    for check in CHECKS:
        try:
            out.append(check(seed))
        except Exception as e:  # a crashing check is a failing check
            out.append(CheckResult(check.__name__.removeprefix("check_"), False, f"{type(e).__name__}: {e}"))
    return out
