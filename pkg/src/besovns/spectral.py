"""Periodic-box grids, spectral fields and Fourier multipliers.

Fields live on the torus ``[0, L)^3`` and are stored as real-to-complex FFT
coefficients (``scipy.fft.rfftn`` layout, unnormalised), one array per
component.  Every operator in this module is a Fourier multiplier, so all of
them are exact on the retained band.

Conventions
-----------
* Wavenumbers are ``(2*pi/L) * signed_index`` per axis.
* The 2/3 rule is a cube truncation: a mode is retained iff every signed
  index satisfies ``|i| <= dealias_fraction * n / 2``.  The Nyquist index
  ``n/2`` is never retained, because odd multipliers cannot act on it while
  keeping the physical field real.
* Tensor fields carry 9 components in row-major order ``F[i, j] ->
  component 3*i + j``; the divergence of a tensor contracts the *second*
  index, ``(div F)_i = sum_j d_j F_ij``, so ``div(a (x) b) = (b . grad) a``
  for solenoidal ``b``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * np.pi


def fft_workers() -> int:
    """Worker count for transforms, capped by ``NSCB_THREADS`` when set."""
    cap = os.environ.get("NSCB_THREADS")
    ncpu = os.cpu_count() or 1
    if cap:
        try:
            return max(1, min(ncpu, int(cap)))
        except ValueError:
            pass
    return ncpu


def rfft3(values: np.ndarray) -> np.ndarray:
    return sfft.rfftn(values, axes=(-3, -2, -1), workers=fft_workers())


def irfft3(coeffs: np.ndarray, n: int) -> np.ndarray:
    return sfft.irfftn(coeffs, s=(n, n, n), axes=(-3, -2, -1), workers=fft_workers())


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` points per axis on a box of side ``box_length``."""

    n: int
    box_length: float = TWO_PI
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 16 or (n & (n - 1)) != 0:
            raise ValueError(f"n must be a power of two >= 16, got {n!r}")
        if not (self.box_length > 0 and math.isfinite(self.box_length)):
            raise ValueError(f"box_length must be positive, got {self.box_length!r}")
        if not (0.0 < self.dealias_fraction <= 1.0):
            raise ValueError(
                f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction!r}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "box_length", float(self.box_length))
        object.__setattr__(self, "dealias_fraction", float(self.dealias_fraction))

    # -- geometry -----------------------------------------------------------
    @property
    def k0(self) -> float:
        """Smallest nonzero wavenumber, ``2*pi/L``."""
        return TWO_PI / self.box_length

    @property
    def dx(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx ** 3

    @property
    def volume(self) -> float:
        return self.box_length ** 3

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n // 2 + 1)

    @property
    def physical_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def k_cutoff(self) -> float:
        """Dealiasing radius ``dealias_fraction * (n/2) * k0``.

        Every mode with ``|k| <= k_cutoff`` is retained, and no retained mode has
        a per-axis wavenumber above it.
        """
        return self.dealias_fraction * (self.n / 2) * self.k0

    @property
    def max_retained_index(self) -> int:
        return min(int(math.floor(self.dealias_fraction * self.n / 2 + 1e-9)),
                   self.n // 2 - 1)

    @property
    def max_retained_wavenumber(self) -> float:
        """Largest retained per-axis wavenumber."""
        return self.max_retained_index * self.k0

    # -- spectral arrays (cached, read-only) --------------------------------
    @cached_property
    def index_axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        full = np.rint(np.fft.fftfreq(self.n, 1.0 / self.n)).astype(np.int64)
        half = np.arange(self.n // 2 + 1, dtype=np.int64)
        return full, full, half

    @cached_property
    def wavevector(self) -> np.ndarray:
        """Array of shape ``(3, n, n, n//2+1)`` holding ``(kx, ky, kz)``."""
        ix, iy, iz = self.index_axes
        kx, ky, kz = np.meshgrid(ix * self.k0, iy * self.k0, iz * self.k0, indexing="ij")
        out = np.stack([kx, ky, kz])
        out.setflags(write=False)
        return out

    @cached_property
    def k2(self) -> np.ndarray:
        out = np.sum(self.wavevector ** 2, axis=0)
        out.setflags(write=False)
        return out

    @cached_property
    def kmag(self) -> np.ndarray:
        out = np.sqrt(self.k2)
        out.setflags(write=False)
        return out

    @cached_property
    def inv_k2(self) -> np.ndarray:
        """``1/|k|^2`` with the zero mode mapped to 0."""
        with np.errstate(divide="ignore"):
            out = np.where(self.k2 > 0, 1.0 / np.where(self.k2 > 0, self.k2, 1.0), 0.0)
        out.setflags(write=False)
        return out

    @cached_property
    def mask(self) -> np.ndarray:
        ix, iy, iz = self.index_axes
        m = self.max_retained_index
        ax = np.abs(ix) <= m
        az = np.abs(iz) <= m
        out = ax[:, None, None] & ax[None, :, None] & az[None, None, :]
        out.setflags(write=False)
        return out

    @cached_property
    def max_retained_kmag(self) -> float:
        """Largest ``|k|`` among retained modes (a cube corner)."""
        return float(self.kmag[self.mask].max())

    @cached_property
    def hermitian_weight(self) -> np.ndarray:
        """Multiplicity of each rfft coefficient in the full spectrum (1 or 2)."""
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        if self.n % 2 == 0:
            w[..., -1] = 1.0
        w.setflags(write=False)
        return w

    def coordinates(self) -> np.ndarray:
        """Physical collocation points, shape ``(3, n, n, n)``."""
        x = np.arange(self.n) * self.dx
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))

    def padded(self, factor: int = 2) -> "Grid":
        return Grid(self.n * factor, self.box_length, self.dealias_fraction)


def make_grid(n: int, box_length: float = TWO_PI, dealias_fraction: float = 2.0 / 3.0) -> Grid:
    return Grid(n, box_length, dealias_fraction)


class Field:
    """A real scalar, vector or rank-2 tensor field held by its spectral coefficients.

    ``coeffs`` has shape ``(components, n, n, n//2+1)``.  Coefficients outside
    the retained band are zeroed on construction and the array is frozen.
    """

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: Grid, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs)
        if coeffs.ndim == 3:
            coeffs = coeffs[None]
        if coeffs.shape[1:] != grid.spectral_shape:
            raise ValueError(
                f"coefficient shape {coeffs.shape[1:]} does not match grid {grid.spectral_shape}")
        if coeffs.shape[0] not in (1, 3, 9):
            raise ValueError(f"fields have 1, 3 or 9 components, got {coeffs.shape[0]}")
        c = np.where(grid.mask, coeffs, 0).astype(np.complex128, copy=False)
        c.setflags(write=False)
        self.grid = grid
        self.coeffs = c

    # -- construction -------------------------------------------------------
    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray) -> "Field":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 3:
            values = values[None]
        return cls(grid, rfft3(values))

    @classmethod
    def zeros(cls, grid: Grid, components: int = 3) -> "Field":
        return cls(grid, np.zeros((components,) + grid.spectral_shape, dtype=np.complex128))

    @classmethod
    def stack(cls, fields: list["Field"]) -> "Field":
        grid = fields[0].grid
        for f in fields[1:]:
            _same_grid(grid, f)
        return cls(grid, np.concatenate([f.coeffs for f in fields], axis=0))

    # -- views --------------------------------------------------------------
    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    def component(self, i: int) -> "Field":
        return Field(self.grid, self.coeffs[i:i + 1])

    def physical(self) -> np.ndarray:
        """Samples on the collocation grid, shape ``(components, n, n, n)``."""
        return irfft3(self.coeffs, self.grid.n)

    def padded_physical(self, factor: int = 2) -> np.ndarray:
        """Samples on a ``factor``-times finer grid (exact trigonometric interpolation)."""
        return irfft3(pad_coeffs(self.coeffs, self.grid.n, factor), self.grid.n * factor)

    def mean(self) -> np.ndarray:
        return self.coeffs[:, 0, 0, 0].real / self.grid.n ** 3

    def l2_norm(self) -> float:
        """L2 norm over the box via Parseval (exact for band-limited fields)."""
        g = self.grid
        s = np.sum(g.hermitian_weight * np.abs(self.coeffs) ** 2)
        return float(np.sqrt(s * g.volume) / g.n ** 3)

    def copy_with(self, coeffs: np.ndarray) -> "Field":
        return Field(self.grid, coeffs)

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other: "Field") -> "Field":
        _same_grid(self.grid, other.grid)
        return Field(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self.grid, other.grid)
        return Field(self.grid, self.coeffs - other.coeffs)

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.coeffs)

    def __mul__(self, scalar) -> "Field":
        if isinstance(scalar, Field):
            return NotImplemented
        return Field(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "Field":
        return Field(self.grid, self.coeffs / scalar)

    def __repr__(self) -> str:
        return f"Field(n={self.grid.n}, components={self.components})"


def _same_grid(a, b) -> None:
    ga = a.grid if isinstance(a, Field) else a
    gb = b.grid if isinstance(b, Field) else b
    if ga != gb:
        raise ValueError(f"grid mismatch: {ga} vs {gb}")


def pad_coeffs(coeffs: np.ndarray, n: int, factor: int) -> np.ndarray:
    """Embed rfft coefficients of an ``n``-grid into a ``factor*n`` grid.

    The result is scaled so that the finer inverse transform interpolates the
    same trigonometric polynomial.  Relies on the Nyquist planes being zero.
    """
    if factor == 1:
        return coeffs
    N = n * factor
    h = n // 2
    out = np.zeros(coeffs.shape[:-3] + (N, N, N // 2 + 1), dtype=np.complex128)
    pos = slice(0, h)
    neg_src = slice(n - h + 1, n)
    neg_dst = slice(N - h + 1, N)
    zs = slice(0, h + 1)
    for sx, dx_ in ((pos, pos), (neg_src, neg_dst)):
        for sy, dy_ in ((pos, pos), (neg_src, neg_dst)):
            out[..., dx_, dy_, zs] = coeffs[..., sx, sy, zs]
    return out * float(factor) ** 3


def hermitian_defect(f: Field) -> float:
    """Max ``|c(-k) - conj(c(k))|`` over the full spectrum, relative to ``max |c|``.

    The full spectrum is rebuilt from the stored half-spectrum; only the
    ``kz = 0`` plane can be inconsistent in that representation.
    """
    plane = f.coeffs[..., 0]
    n = f.grid.n
    idx = (-np.arange(n)) % n
    mirrored = plane[:, idx][:, :, idx]
    scale = np.max(np.abs(f.coeffs))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(mirrored - np.conj(plane))) / scale)


def pointwise_magnitude(values: np.ndarray) -> np.ndarray:
    """Euclidean (Frobenius for tensors) magnitude over the component axis."""
    if values.shape[0] == 1:
        return np.abs(values[0])
    return np.sqrt(np.sum(values ** 2, axis=0))


def sup_norm(f: Field, factor: int = 2) -> float:
    """L-infinity norm estimated as the max over a zero-padded collocation grid."""
    return float(pointwise_magnitude(f.padded_physical(factor)).max())


# ---------------------------------------------------------------------------
# Multipliers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Multiplier:
    """Fourier multiplier given by a symbol on wavevectors.

    ``symbol`` receives the wavevector array of shape ``(3, ...)`` and returns
    either a scalar array of shape ``(...)`` or a matrix array of shape
    ``(3, 3, ...)`` acting on vector fields.
    """

    symbol: Callable[[np.ndarray], np.ndarray]
    radial: bool = False
    projection: bool = False

    def evaluate(self, grid: Grid) -> np.ndarray:
        if self.radial:
            return np.asarray(self.symbol(grid.kmag))
        return np.asarray(self.symbol(grid.wavevector))


def apply_multiplier(f: Field, m: Multiplier) -> Field:
    sym = m.evaluate(f.grid)
    band = f.grid.mask
    if sym.ndim == 3:
        if not np.all(np.isfinite(sym[band])):
            raise ValueError("multiplier symbol is not finite on the retained band")
        return Field(f.grid, f.coeffs * sym)
    if sym.ndim == 5:
        if f.components != 3:
            raise ValueError("matrix symbols act on vector fields")
        if not np.all(np.isfinite(sym[:, :, band])):
            raise ValueError("multiplier symbol is not finite on the retained band")
        return Field(f.grid, np.einsum("ij...,j...->i...", sym, f.coeffs))
    raise ValueError(f"unsupported symbol shape {sym.shape}")


def leray_symbol(k: np.ndarray) -> np.ndarray:
    """Matrix symbol ``I - k k^T/|k|^2`` with identity at ``k = 0``."""
    k2 = np.sum(k ** 2, axis=0)
    inv = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
    eye = np.eye(3).reshape((3, 3) + (1,) * (k.ndim - 1))
    return eye - k[:, None] * k[None, :] * inv


LERAY = Multiplier(leray_symbol, projection=True)


def _leray_coeffs(grid: Grid, c: np.ndarray) -> np.ndarray:
    k = grid.wavevector
    kdotc = np.sum(k * c, axis=0)
    return c - k * (kdotc * grid.inv_k2)


def leray_project(f: Field) -> Field:
    if f.components != 3:
        raise ValueError("leray_project needs a vector field")
    return Field(f.grid, _leray_coeffs(f.grid, f.coeffs))


def heat_semigroup(f: Field, t: float) -> Field:
    """``exp(t * Laplacian) f``."""
    if not t >= 0:
        raise ValueError(f"heat semigroup needs t >= 0, got {t}")
    return Field(f.grid, f.coeffs * np.exp(-f.grid.k2 * t))


def riesz_potential(g: Field, sigma: float) -> Field:
    """``|D|^{-sigma} g`` with the zero mode annihilated, for ``0 < sigma < 3``."""
    if not (0.0 < sigma < 3.0):
        raise ValueError(f"sigma must lie in (0, 3), got {sigma}")
    grid = g.grid
    with np.errstate(divide="ignore"):
        sym = np.where(grid.k2 > 0, np.where(grid.k2 > 0, grid.kmag, 1.0) ** (-sigma), 0.0)
    return Field(grid, g.coeffs * sym)


def fractional_laplacian(g: Field, sigma: float) -> Field:
    """``|D|^{sigma} g`` for ``sigma >= 0``."""
    return Field(g.grid, g.coeffs * g.grid.kmag ** sigma)


_AXES = {"x": 0, "y": 1, "z": 2, 0: 0, 1: 1, 2: 2}


def derivative(f: Field, op) -> Field:
    """Spectral differentiation.

    ``op`` is an axis (``0/1/2`` or ``'x'/'y'/'z'``) for a componentwise partial
    derivative, or one of ``'grad'``, ``'curl'``, ``'div'``.
    """
    grid = f.grid
    ik = 1j * grid.wavevector
    if op in _AXES:
        return Field(grid, ik[_AXES[op]] * f.coeffs)
    if op in ("grad", "gradient"):
        if f.components == 1:
            return Field(grid, ik * f.coeffs[0])
        if f.components == 3:
            # (grad u)_{ij} = d_j u_i
            return Field(grid, (f.coeffs[:, None] * ik[None, :]).reshape((9,) + grid.spectral_shape))
        raise ValueError("gradient of a tensor field is not supported")
    if op == "curl":
        if f.components != 3:
            raise ValueError("curl needs a vector field")
        c = f.coeffs
        out = np.stack([
            ik[1] * c[2] - ik[2] * c[1],
            ik[2] * c[0] - ik[0] * c[2],
            ik[0] * c[1] - ik[1] * c[0],
        ])
        return Field(grid, out)
    if op in ("div", "divergence"):
        if f.components == 3:
            return Field(grid, np.sum(ik * f.coeffs, axis=0))
        if f.components == 9:
            c = f.coeffs.reshape((3, 3) + grid.spectral_shape)
            return Field(grid, np.einsum("ij...,j...->i...", c, ik))
        raise ValueError("divergence needs a vector or tensor field")
    raise ValueError(f"unknown derivative operator {op!r}")


def gradient(f: Field) -> Field:
    return derivative(f, "grad")


def curl(f: Field) -> Field:
    return derivative(f, "curl")


def divergence(f: Field) -> Field:
    return derivative(f, "div")


def laplacian(f: Field) -> Field:
    return Field(f.grid, -f.grid.k2 * f.coeffs)


# ---------------------------------------------------------------------------
# Products (dealiased by the Field band mask)
# ---------------------------------------------------------------------------

def multiply(f: Field, g: Field) -> Field:
    """Pointwise product; one factor may be scalar, otherwise componentwise."""
    _same_grid(f, g)
    a, b = f.physical(), g.physical()
    return Field.from_physical(f.grid, a * b)


def outer(f: Field, g: Field) -> Field:
    """Tensor product ``(f (x) g)_{ij} = f_i g_j`` as a 9-component field."""
    _same_grid(f, g)
    if f.components != 3 or g.components != 3:
        raise ValueError("outer product needs two vector fields")
    a, b = f.physical(), g.physical()
    prod = (a[:, None] * b[None, :]).reshape((9,) + f.grid.physical_shape)
    return Field.from_physical(f.grid, prod)


def projected_divergence_coeffs(grid: Grid, tensor_coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of ``P div F`` for tensor coefficients of shape ``(3, 3, ...)``."""
    ik = 1j * grid.wavevector
    d = np.einsum("ij...,j...->i...", tensor_coeffs, ik)
    return _leray_coeffs(grid, d)


def symmetric_square_divergence(grid: Grid, u_phys: np.ndarray) -> np.ndarray:
    """Coefficients of ``P div (u (x) u)`` from physical samples of ``u``.

    Uses the six independent products; the result is dealiased.
    """
    pairs = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
    prods = np.stack([u_phys[i] * u_phys[j] for i, j in pairs])
    ph = rfft3(prods) * grid.mask
    t = np.empty((3, 3) + grid.spectral_shape, dtype=np.complex128)
    for c, (i, j) in enumerate(pairs):
        t[i, j] = ph[c]
        t[j, i] = ph[c]
    return projected_divergence_coeffs(grid, t) * grid.mask


def nonlinear_term(u: Field) -> Field:
    """``-P div(u (x) u)``, the projected Navier-Stokes nonlinearity."""
    return Field(u.grid, -symmetric_square_divergence(u.grid, u.physical()))


# ---------------------------------------------------------------------------
# Oseen kernel
# ---------------------------------------------------------------------------

def oseen_kernel(grid: Grid, t: float) -> np.ndarray:
    """Physical-space kernel of ``exp(t Laplacian) P div`` on the grid.

    Obtained by applying the operator to a discrete unit-mass delta at the
    origin in each tensor slot.  Returns shape ``(3, 3, 3, n, n, n)`` indexed
    ``[i, j, l]`` for output component ``i`` and input tensor entry ``(j, l)``.
    Uses the whole spectrum of ``grid`` (pass ``dealias_fraction=1`` to keep
    every non-Nyquist mode).
    """
    if not t > 0:
        raise ValueError("oseen kernel needs t > 0")
    k = grid.wavevector
    heat = np.exp(-grid.k2 * t) * grid.mask
    P = leray_symbol(k)
    # delta of unit mass has constant coefficients 1/dx^3
    amp = heat / grid.cell_volume
    out = np.empty((3, 3, 3) + grid.physical_shape)
    for i in range(3):
        for j in range(3):
            for l in range(3):
                sym = P[i, j] * 1j * k[l] * amp
                out[i, j, l] = irfft3(sym, grid.n)
    return out


def oseen_decay_exponent(n: int = 64, box_length: float = TWO_PI,
                         r_lo: float | None = None, r_hi: float | None = None,
                         nbins: int = 24) -> tuple[float, np.ndarray, np.ndarray]:
    """Fitted radial decay exponent of the Oseen kernel at ``t = (L/n)^2``.

    The kernel magnitude (Frobenius norm over all slots) is reduced to its
    maximum on logarithmic radial shells of periodic distance, and a straight
    line is fitted to ``log(max) vs log(r)`` over ``[r_lo, r_hi]``.  The default
    window is ``[4 sqrt(t), L/4]``.

    Returns ``(slope, radii, profile)``.
    """
    grid = Grid(n, box_length, 1.0)
    t = (box_length / n) ** 2
    kern = oseen_kernel(grid, t)
    mag = np.sqrt(np.sum(kern ** 2, axis=(0, 1, 2)))
    x = np.arange(n) * grid.dx
    x = np.minimum(x, box_length - x)
    r = np.sqrt(x[:, None, None] ** 2 + x[None, :, None] ** 2 + x[None, None, :] ** 2)
    r_lo = 4.0 * math.sqrt(t) if r_lo is None else r_lo
    r_hi = box_length / 4.0 if r_hi is None else r_hi
    edges = np.geomspace(r_lo, r_hi, nbins + 1)
    radii, prof = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (r >= a) & (r < b)
        if np.any(sel):
            radii.append(math.sqrt(a * b))
            prof.append(mag[sel].max())
    radii = np.asarray(radii)
    prof = np.asarray(prof)
    slope = np.polyfit(np.log(radii), np.log(prof), 1)[0]
    return float(slope), radii, prof
