"""Grids, transforms, norms and projectors on the truncated plane-times-circle
domain.

The x-plane is a periodic box [-L/2, L/2)^2 standing in for the whole plane
(valid for fields that decay well inside the box); the y-circle is exact with
circumference 2*pi. Discrete transforms are unitary (1/sqrt(n) per axis per
direction), so Parseval holds between physical and coefficient arrays with the
single quadrature weight h_x^2*h_y entering only physical-space norms.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from .errors import DomainError, ShapeError

__all__ = [
    "Grid3",
    "Field3",
    "Field2",
    "NormKind",
    "to_spectral",
    "from_spectral",
    "norm",
    "lp_project",
    "y_mean_split",
    "gradient_x",
    "gradient_y",
    "inner",
    "random_field3",
    "random_field2",
]


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@lru_cache(maxsize=64)
def _xi1(n_x: int, box_length: float) -> np.ndarray:
    """Angular x-frequencies in FFT order: (2*pi/L)*{0,1,...,-n/2,...,-1}."""
    return 2.0 * np.pi * np.fft.fftfreq(n_x, d=box_length / n_x)


@lru_cache(maxsize=64)
def _xi_sq2(n_x: int, box_length: float) -> np.ndarray:
    xi = _xi1(n_x, box_length)
    return xi[:, None] ** 2 + xi[None, :] ** 2


@lru_cache(maxsize=64)
def _k1(n_y: int) -> np.ndarray:
    """Integer circle frequencies in FFT order."""
    return 2.0 * np.pi * np.fft.fftfreq(n_y, d=2.0 * np.pi / n_y)


@dataclass(frozen=True)
class Grid3:
    """Discretized plane-times-circle domain with spectral metadata.

    Parameters
    ----------
    n_x : points per x-axis (power of two, >= 8)
    box_length : side L of the periodic x-box [-L/2, L/2)^2
    n_y : circle points on [0, 2*pi) (power of two, >= 8)
    """

    n_x: int
    box_length: float
    n_y: int

    def __post_init__(self):
        if not (_is_pow2(self.n_x) and self.n_x >= 8):
            raise DomainError(f"n_x must be a power of two >= 8, got {self.n_x}")
        if not (_is_pow2(self.n_y) and self.n_y >= 8):
            raise DomainError(f"n_y must be a power of two >= 8, got {self.n_y}")
        if not self.box_length > 0:
            raise DomainError(f"box_length must be positive, got {self.box_length}")

    @property
    def h_x(self) -> float:
        return self.box_length / self.n_x

    @property
    def h_y(self) -> float:
        return 2.0 * np.pi / self.n_y

    @property
    def weight(self) -> float:
        """Quadrature weight of the discrete L2 pairing."""
        return self.h_x**2 * self.h_y

    @property
    def x1(self) -> np.ndarray:
        """Coordinates along one x-axis, [-L/2, L/2)."""
        return -0.5 * self.box_length + self.h_x * np.arange(self.n_x)

    @property
    def y(self) -> np.ndarray:
        return self.h_y * np.arange(self.n_y)

    @property
    def xi1(self) -> np.ndarray:
        return _xi1(self.n_x, self.box_length)

    @property
    def k1(self) -> np.ndarray:
        return _k1(self.n_y)

    @property
    def xi_sq(self) -> np.ndarray:
        """|xi|^2 on the x-frequency plane, shape (n_x, n_x)."""
        return _xi_sq2(self.n_x, self.box_length)

    @property
    def lap_symbol(self) -> np.ndarray:
        """|xi|^2 + k^2, shape (n_x, n_x, n_y)."""
        return self.xi_sq[:, :, None] + self.k1[None, None, :] ** 2

    def meshgrid_x(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.x1
        return x[:, None], x[None, :]


@dataclass(frozen=True)
class Field3:
    """Complex scalar field on a Grid3, physical space, shape (n_x, n_x, n_y)."""

    grid: Grid3
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        expected = (self.grid.n_x, self.grid.n_x, self.grid.n_y)
        if v.shape != expected:
            raise ShapeError(f"field shape {v.shape} does not match grid {expected}")
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray) -> "Field3":
        return Field3(self.grid, values)


@dataclass(frozen=True)
class Field2:
    """Complex scalar field on the x-box alone, shape (n_x, n_x)."""

    n_x: int
    box_length: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (self.n_x, self.n_x):
            raise ShapeError(
                f"field shape {v.shape} does not match grid ({self.n_x}, {self.n_x})"
            )
        object.__setattr__(self, "values", v)

    @property
    def h_x(self) -> float:
        return self.box_length / self.n_x

    @property
    def weight(self) -> float:
        return self.h_x**2

    @property
    def x1(self) -> np.ndarray:
        return -0.5 * self.box_length + self.h_x * np.arange(self.n_x)

    @property
    def xi1(self) -> np.ndarray:
        return _xi1(self.n_x, self.box_length)

    @property
    def xi_sq(self) -> np.ndarray:
        return _xi_sq2(self.n_x, self.box_length)

    def with_values(self, values: np.ndarray) -> "Field2":
        return Field2(self.n_x, self.box_length, values)


class NormKind(Enum):
    L2 = "L2"
    L4 = "L4"
    L6 = "L6"
    H1x = "H1x"
    H1y = "H1y"
    H1xy = "H1xy"
    Lx2Hy1 = "Lx2Hy1"
    GradX_L2 = "GradX_L2"
    GradY_L2 = "GradY_L2"


def to_spectral(f: Field3 | Field2) -> np.ndarray:
    """Unitary FFT of the field values (all axes), coefficients in FFT order."""
    return sfft.fftn(f.values, norm="ortho")


def from_spectral(coef: np.ndarray, like: Grid3 | Field3 | Field2) -> Field3 | Field2:
    """Inverse of to_spectral; `like` supplies the grid metadata."""
    if isinstance(like, Grid3):
        grid = like
        expected = (grid.n_x, grid.n_x, grid.n_y)
        if coef.shape != expected:
            raise ShapeError(f"coefficient shape {coef.shape} does not match {expected}")
        return Field3(grid, sfft.ifftn(coef, norm="ortho"))
    if isinstance(like, Field3):
        return from_spectral(coef, like.grid)
    if isinstance(like, Field2):
        if coef.shape != like.values.shape:
            raise ShapeError(
                f"coefficient shape {coef.shape} does not match {like.values.shape}"
            )
        return Field2(like.n_x, like.box_length, sfft.ifftn(coef, norm="ortho"))
    raise TypeError(f"cannot infer grid from {type(like)!r}")


def _weight(f: Field3 | Field2) -> float:
    return f.grid.weight if isinstance(f, Field3) else f.weight


def _grad_sq_norms(f: Field3 | Field2) -> tuple[float, float]:
    """(|grad_x f|_2^2, |grad_y f|_2^2) by Parseval; grad_y is 0.0 for Field2."""
    w = _weight(f)
    coef_sq = np.abs(to_spectral(f)) ** 2
    if isinstance(f, Field3):
        xi_sq = f.grid.xi_sq[:, :, None]
        k_sq = f.grid.k1[None, None, :] ** 2
        gx = w * float(np.sum(xi_sq * coef_sq))
        gy = w * float(np.sum(k_sq * coef_sq))
        return gx, gy
    gx = w * float(np.sum(f.xi_sq * coef_sq))
    return gx, 0.0


def norm(f: Field3 | Field2, kind: NormKind) -> float:
    """Discrete quadrature value of the named norm.

    Lebesgue kinds are computed in physical space; gradient kinds spectrally
    via the multipliers i*xi and i*k. Circle-direction kinds require a Field3.
    """
    kind = NormKind(kind)
    w = _weight(f)
    v = f.values
    if kind is NormKind.L2:
        return float(np.sqrt(w * np.sum(np.abs(v) ** 2)))
    if kind is NormKind.L4:
        return float((w * np.sum(np.abs(v) ** 4)) ** 0.25)
    if kind is NormKind.L6:
        return float((w * np.sum(np.abs(v) ** 6)) ** (1.0 / 6.0))

    if kind in (NormKind.H1y, NormKind.Lx2Hy1, NormKind.GradY_L2) and not isinstance(
        f, Field3
    ):
        raise DomainError(f"{kind.value} norm needs a circle direction (Field3)")

    gx_sq, gy_sq = _grad_sq_norms(f)
    if kind is NormKind.GradX_L2:
        return float(np.sqrt(gx_sq))
    if kind is NormKind.GradY_L2:
        return float(np.sqrt(gy_sq))

    l2_sq = w * float(np.sum(np.abs(v) ** 2))
    if kind is NormKind.H1x:
        return float(np.sqrt(l2_sq + gx_sq))
    if kind in (NormKind.H1y, NormKind.Lx2Hy1):
        return float(np.sqrt(l2_sq + gy_sq))
    if kind is NormKind.H1xy:
        return float(np.sqrt(l2_sq + gx_sq + gy_sq))
    raise DomainError(f"unhandled norm kind {kind!r}")


def inner(f: Field3 | Field2, g: Field3 | Field2) -> complex:
    """Discrete L2 pairing <f, g> with quadrature weight."""
    if f.values.shape != g.values.shape:
        raise ShapeError("fields have different shapes")
    return complex(_weight(f) * np.sum(np.conj(f.values) * g.values))


def gradient_x(f: Field3 | Field2) -> tuple[np.ndarray, np.ndarray]:
    """Physical-space x-gradient components, computed spectrally."""
    coef = to_spectral(f)
    xi = f.grid.xi1 if isinstance(f, Field3) else f.xi1
    if isinstance(f, Field3):
        d1 = sfft.ifftn(1j * xi[:, None, None] * coef, norm="ortho")
        d2 = sfft.ifftn(1j * xi[None, :, None] * coef, norm="ortho")
    else:
        d1 = sfft.ifftn(1j * xi[:, None] * coef, norm="ortho")
        d2 = sfft.ifftn(1j * xi[None, :] * coef, norm="ortho")
    return d1, d2


def gradient_y(f: Field3) -> np.ndarray:
    """Physical-space circle-direction derivative, multiplier i*k."""
    coef = to_spectral(f)
    return sfft.ifftn(1j * f.grid.k1[None, None, :] * coef, norm="ortho")


def _smoothstep5(s: np.ndarray) -> np.ndarray:
    """Quintic 0->1 blend with vanishing first and second derivatives at both ends."""
    return s**3 * (10.0 + s * (-15.0 + 6.0 * s))


def bump(r: np.ndarray) -> np.ndarray:
    """Radial cutoff profile: 1 on [0,1], quintic blend on [1, 11/10], 0 beyond."""
    r = np.asarray(r, dtype=np.float64)
    out = np.ones_like(r)
    out[r >= 1.1] = 0.0
    mid = (r > 1.0) & (r < 1.1)
    out[mid] = 1.0 - _smoothstep5((r[mid] - 1.0) / 0.1)
    return out


def lp_project(f: Field3 | Field2, N: float, mode: str = "leq") -> Field3 | Field2:
    """Smooth frequency projector in the x-variable.

    mode "leq" keeps |xi| <~ N, "gt" its complement (leq + gt = identity
    exactly), "band" the annulus multiplier bump(|xi|/N) - bump(2|xi|/N).
    """
    if not N > 0:
        raise DomainError(f"projector scale must be positive, got {N}")
    if mode not in ("leq", "band", "gt"):
        raise DomainError(f"unknown projector mode {mode!r}")
    xi_sq = f.grid.xi_sq if isinstance(f, Field3) else f.xi_sq
    rho = np.sqrt(xi_sq) / N
    phi = bump(rho)
    if mode == "leq":
        mult = phi
    elif mode == "gt":
        mult = 1.0 - phi
    else:
        mult = phi - bump(2.0 * rho)
    coef = to_spectral(f)
    if isinstance(f, Field3):
        coef = coef * mult[:, :, None]
    else:
        coef = coef * mult
    return from_spectral(coef, f)


def y_mean_split(f: Field3) -> tuple[Field3, Field3]:
    """Split into the circle-average part (constant in y) and the fluctuation.

    mean + fluct = f exactly; the fluctuation has zero circle-average at every
    x; the split is orthogonal in L2.
    """
    mean_vals = np.mean(f.values, axis=2, keepdims=True)
    mean = np.broadcast_to(mean_vals, f.values.shape).copy()
    return f.with_values(mean), f.with_values(f.values - mean)


def random_field3(
    grid: Grid3,
    rng: np.random.Generator,
    band: float = 0.5,
    envelope_sigma: float | None = None,
    drop_y_nyquist: bool = True,
) -> Field3:
    """Random complex field, band-limited in x to |xi| <= band*xi_max.

    With `envelope_sigma` the field is localized by a Gaussian in x, making it
    a faithful stand-in for a decaying whole-plane field (the periodic box
    admits non-decaying fields, e.g. constants, that no whole-plane Sobolev
    inequality controls). The circle Nyquist mode is dropped by default so the
    field sits inside the resolved symmetric frequency range.
    """
    coef = rng.standard_normal((grid.n_x, grid.n_x, grid.n_y)) + 1j * rng.standard_normal(
        (grid.n_x, grid.n_x, grid.n_y)
    )
    xi_max = float(np.max(np.abs(grid.xi1)))
    mask = (np.sqrt(grid.xi_sq) <= band * xi_max)[:, :, None] & np.ones(
        (1, 1, grid.n_y), dtype=bool
    )
    if drop_y_nyquist:
        mask = mask.copy()
        mask[:, :, grid.n_y // 2] = False
    coef = np.where(mask, coef, 0.0)
    vals = sfft.ifftn(coef, norm="ortho")
    if envelope_sigma is not None:
        x1, x2 = grid.meshgrid_x()
        env = np.exp(-(x1**2 + x2**2) / (2.0 * envelope_sigma**2))
        vals = vals * env[:, :, None]
    return Field3(grid, vals)


def random_field2(
    n_x: int,
    box_length: float,
    rng: np.random.Generator,
    band: float = 0.5,
    envelope_sigma: float | None = None,
) -> Field2:
    """Random complex x-plane field, band-limited and optionally localized."""
    coef = rng.standard_normal((n_x, n_x)) + 1j * rng.standard_normal((n_x, n_x))
    xi_sq = _xi_sq2(n_x, box_length)
    xi_max = float(np.max(np.abs(_xi1(n_x, box_length))))
    coef = np.where(np.sqrt(xi_sq) <= band * xi_max, coef, 0.0)
    vals = sfft.ifftn(coef, norm="ortho")
    if envelope_sigma is not None:
        x = -0.5 * box_length + (box_length / n_x) * np.arange(n_x)
        env = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / (2.0 * envelope_sigma**2))
        vals = vals * env
    return Field2(n_x, box_length, vals)
