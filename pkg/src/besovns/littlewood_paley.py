"""Homogeneous Littlewood-Paley analysis on the retained band of a periodic grid.

The radial profile is built from the C-infinity step

    s(t) = exp(-1/t) / (exp(-1/t) + exp(-1/(1-t)))

via ``psi(r) = 1 - s(3 (r - 1))`` (equal to 1 for ``r <= 1`` and 0 for
``r >= 4/3``) and ``phi(xi) = psi(|xi|/2) - psi(|xi|)``, so that
``supp phi`` lies in ``{1 <= |xi| <= 8/3}`` and the dilates telescope to 1.

On a grid only finitely many dyadic indices see any retained mode.  The lowest
block absorbs every coarser scale and the highest block absorbs every finer
one, which makes ``sum_j Delta_j f = f`` exact for zero-mean fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .spectral import Field, Grid, _same_grid, rfft3


def smooth_step(t):
    """C-infinity step from 0 (``t <= 0``) to 1 (``t >= 1``)."""
    t = np.asarray(t, dtype=np.float64)
    out = np.where(t >= 1.0, 1.0, 0.0)
    inner = (t > 0.0) & (t < 1.0)
    if np.any(inner):
        ti = t[inner]
        with np.errstate(over="ignore"):
            out[inner] = 1.0 / (1.0 + np.exp(1.0 / ti - 1.0 / (1.0 - ti)))
    return out


def psi_profile(r):
    """Radial low-pass profile: 1 on ``[0, 1]``, 0 on ``[4/3, inf)``."""
    r = np.asarray(r, dtype=np.float64)
    return 1.0 - smooth_step(3.0 * (r - 1.0))


def phi_profile(r):
    """Annular profile ``psi(r/2) - psi(r)``, supported in ``[1, 8/3]``."""
    r = np.asarray(r, dtype=np.float64)
    return psi_profile(0.5 * r) - psi_profile(r)


@dataclass
class DyadicPartition:
    """Dyadic blocks ``j_min..j_max`` on a grid.

    ``block_symbols[j]`` is the radial symbol actually applied by
    :meth:`block` (boundary blocks lumped); ``phi(j)`` is the unlumped
    ``phi(2^{-j} xi)`` on the grid.
    """

    grid: Grid
    j_min: int
    j_max: int
    block_symbols: dict[int, np.ndarray] = dc_field(repr=False)

    @property
    def js(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def phi(self, j: int) -> np.ndarray:
        """Unlumped symbol ``phi(2^{-j} |k|)`` on the rfft grid (zero mode excluded)."""
        s = phi_profile(self.grid.kmag * 2.0 ** (-j))
        s[0, 0, 0] = 0.0
        return s

    def resolvable_js(self) -> list[int]:
        """Interior blocks whose whole annulus sits inside the dealiasing radius."""
        kc = self.grid.k_cutoff * (1 + 1e-9)
        return [j for j in self.js
                if self.j_min < j < self.j_max and (8.0 / 3.0) * 2.0 ** j <= kc]

    def _check(self, j: int) -> None:
        if not (self.j_min <= j <= self.j_max):
            raise ValueError(f"dyadic index {j} outside [{self.j_min}, {self.j_max}]")

    def symbol(self, j: int) -> np.ndarray:
        self._check(j)
        return self.block_symbols[j]

    def block(self, f: Field, j: int) -> Field:
        _same_grid(f, self.grid)
        return Field(f.grid, f.coeffs * self.symbol(j))

    def partial_sum_symbol(self, j: int) -> np.ndarray:
        out = np.zeros(self.grid.spectral_shape)
        for l in range(self.j_min, min(j - 1, self.j_max) + 1):
            out = out + self.block_symbols[l]
        return out

    def partial_sum(self, f: Field, j: int) -> Field:
        """``S_j f = sum_{l <= j-1} Delta_l f``."""
        _same_grid(f, self.grid)
        if j > self.j_max + 1:
            raise ValueError(f"partial sum index {j} beyond j_max + 1 = {self.j_max + 1}")
        return Field(f.grid, f.coeffs * self.partial_sum_symbol(j))

    def tilde_block(self, f: Field, j: int) -> Field:
        sym = sum(self.block_symbols[l] for l in (j - 1, j, j + 1) if l in self.block_symbols)
        return Field(f.grid, f.coeffs * sym)

    def blocks(self, f: Field) -> dict[int, Field]:
        return {j: self.block(f, j) for j in self.js}

    def block_support(self, j: int) -> np.ndarray:
        return self.symbol(j) > 0


def build_partition(grid: Grid) -> DyadicPartition:
    """Dyadic partition covering every index whose annulus meets the retained band."""
    k_lo = grid.k0
    k_hi = grid.max_retained_kmag
    # block j touches |xi| in (2^j, 8/3 2^j); edges carry zero weight
    j_min = math.floor(math.log2(3.0 * k_lo / 8.0)) - 1
    while (8.0 / 3.0) * 2.0 ** j_min <= k_lo:
        j_min += 1
    j_max = math.ceil(math.log2(k_hi)) + 1
    while 2.0 ** j_max >= k_hi:
        j_max -= 1
    if j_max - j_min + 1 < 3:
        raise ValueError(
            f"retained band spans only {j_max - j_min + 1} dyadic scales; need at least 3")
    kmag = grid.kmag
    mask = grid.mask
    symbols = {}
    for j in range(j_min, j_max + 1):
        if j == j_min:
            s = psi_profile(kmag * 2.0 ** (-j - 1))
        elif j == j_max:
            s = 1.0 - psi_profile(kmag * 2.0 ** (-j))
        else:
            s = phi_profile(kmag * 2.0 ** (-j))
        s = np.where(mask, s, 0.0)
        s[0, 0, 0] = 0.0
        s.setflags(write=False)
        symbols[j] = s
    return DyadicPartition(grid, j_min, j_max, symbols)


def dyadic_block(f: Field, j: int, part: DyadicPartition) -> Field:
    return part.block(f, j)


def partial_sum(f: Field, j: int, part: DyadicPartition) -> Field:
    return part.partial_sum(f, j)


def bony_decompose(f: Field, g: Field, part: DyadicPartition) -> tuple[Field, Field, Field]:
    """Paraproduct split ``f g = T_f g + T_g f + R(f, g)`` of the dealiased product.

    ``T_f g = sum_j S_{j-1} f Delta_j g`` and ``R(f, g) = sum_j Delta_j f
    tilde-Delta_j g``.  Either factor may be scalar; otherwise the product is
    componentwise.
    """
    _same_grid(f, g)
    _same_grid(f, part.grid)
    grid = f.grid
    js = list(part.js)
    fb = {j: part.block(f, j).physical() for j in js}
    gb = {j: part.block(g, j).physical() for j in js}

    def low(blocks, j):
        # S_{j-1} = sum of blocks l <= j-2
        parts = [blocks[l] for l in js if l <= j - 2]
        return sum(parts) if parts else None

    def para(lowb, highb):
        acc = None
        for j in js:
            lo = low(lowb, j)
            if lo is None:
                continue
            term = lo * highb[j]
            acc = term if acc is None else acc + term
        return acc

    t_fg = para(fb, gb)
    t_gf = para(gb, fb)
    r = None
    for j in js:
        tilde = sum(gb[l] for l in (j - 1, j, j + 1) if l in gb)
        term = fb[j] * tilde
        r = term if r is None else r + term
    ncomp = max(f.components, g.components)
    zero = np.zeros((ncomp,) + grid.physical_shape)

    def to_field(a):
        a = zero if a is None else np.broadcast_to(a, zero.shape)
        return Field(grid, rfft3(a))

    return to_field(t_fg), to_field(t_gf), to_field(r)
