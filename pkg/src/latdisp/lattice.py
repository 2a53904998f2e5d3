"""Periodic lattice grids, complex fields, Fourier transforms and norms.

The computational domain is a periodic torus with M points per axis and
mesh size h, so the period is L = M*h.  Frequencies live on the symmetric
integer range k in [-M/2, M/2), xi_k = 2*pi*k/L, which sits inside the
fundamental cell [-pi/h, pi/h]^d.

Conventions:
    dft(f)[k]  = h^d * sum_n f(h n) exp(-i h n . xi_k)
    idft(F)(x) = (2 pi)^-d * sum_k F[k] exp(i x . xi_k) * (2 pi / L)^d

With these weights the Plancherel identity reads

    ||f||_{L^2}^2 = L^-d * sum_k |F[k]|^2.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft

SNAPSHOT_MAGIC = b"LDSP"
SNAPSHOT_VERSION = 1


class LatticeError(ValueError):
    pass


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class LatticeGrid:
    """Periodic torus: d dimensions, M points per axis, mesh size h."""

    d: int
    M: int
    h: float

    def __post_init__(self):
        if self.d < 1:
            raise LatticeError(f"dimension must be >= 1, got {self.d}")
        if self.M < 4 or not _is_power_of_two(self.M):
            raise LatticeError(f"M must be a power of two >= 4, got {self.M}")
        if not (self.h > 0):
            raise LatticeError(f"mesh size must be positive, got {self.h}")

    @property
    def L(self) -> float:
        return self.M * self.h

    @property
    def shape(self) -> tuple:
        return (self.M,) * self.d

    @property
    def npoints(self) -> int:
        return self.M**self.d

    def site_coordinates(self) -> np.ndarray:
        """Per-axis site positions x = h*n, n = 0..M-1."""
        return self.h * np.arange(self.M)

    def freq_indices(self) -> np.ndarray:
        """Integer frequency indices k in [-M/2, M/2), ascending."""
        return np.arange(-self.M // 2, self.M // 2)

    def frequencies(self) -> np.ndarray:
        """Per-axis frequencies xi_k = 2 pi k / L, ascending in k."""
        return 2.0 * np.pi * self.freq_indices() / self.L

    def frequency_mesh(self) -> list:
        """Broadcastable per-axis frequency arrays for the full d-dim grid."""
        xi = self.frequencies()
        out = []
        for axis in range(self.d):
            shape = [1] * self.d
            shape[axis] = self.M
            out.append(xi.reshape(shape))
        return out


def _check_values(grid: LatticeGrid, values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.complex128)
    if values.shape != grid.shape:
        raise LatticeError(
            f"{what} shape {values.shape} does not match grid shape {grid.shape}"
        )
    if not np.all(np.isfinite(values.view(np.float64))):
        raise LatticeError(f"{what} contains NaN or Inf")
    return values


@dataclass(frozen=True)
class ComplexField:
    """Complex samples on a lattice grid; values[n] lives at x = h*n (row-major)."""

    grid: LatticeGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values, "field"))


@dataclass(frozen=True)
class SpectrumField:
    """Fourier coefficients indexed by k in [-M/2, M/2)^d (ascending per axis)."""

    grid: LatticeGrid
    coefficients: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "coefficients", _check_values(self.grid, self.coefficients, "spectrum")
        )


def dft(f: ComplexField) -> SpectrumField:
    """Forward lattice Fourier transform with the h^d weight."""
    g = f.grid
    coeff = _fft.fftn(f.values)
    coeff = np.fft.fftshift(coeff)
    coeff *= g.h**g.d
    return SpectrumField(g, coeff)


def idft(F: SpectrumField) -> ComplexField:
    """Inverse lattice Fourier transform; idft(dft(f)) == f."""
    g = F.grid
    values = _fft.ifftn(np.fft.ifftshift(F.coefficients))
    values /= g.h**g.d
    return ComplexField(g, values)


def symbol_sigma(grid: LatticeGrid) -> np.ndarray:
    """Symbol of -Delta_h: sigma(xi) = sum_j (4/h^2) sin^2(h xi_j / 2)."""
    h = grid.h
    out = np.zeros(grid.shape)
    for xi in grid.frequency_mesh():
        out = out + (4.0 / h**2) * np.sin(h * xi / 2.0) ** 2
    return out


def continuum_abs2(grid: LatticeGrid) -> np.ndarray:
    """|xi|^2 on the frequency grid (symbol of -Delta on the torus)."""
    out = np.zeros(grid.shape)
    for xi in grid.frequency_mesh():
        out = out + xi**2
    return out


def discrete_laplacian(f: ComplexField) -> ComplexField:
    """Second-difference Laplacian with periodic wraparound."""
    g = f.grid
    v = f.values
    out = np.zeros_like(v)
    for axis in range(g.d):
        out += np.roll(v, 1, axis=axis) + np.roll(v, -1, axis=axis) - 2.0 * v
    out /= g.h**2
    return ComplexField(g, out)


def apply_multiplier(f: ComplexField, m: np.ndarray) -> ComplexField:
    """idft(m * dft(f)) for a multiplier m on the symmetric frequency grid."""
    m = np.asarray(m)
    if m.shape != f.grid.shape:
        raise LatticeError(
            f"multiplier shape {m.shape} does not match grid shape {f.grid.shape}"
        )
    F = dft(f)
    return idft(SpectrumField(f.grid, m * F.coefficients))


def lp_norm(f: ComplexField, p: float) -> float:
    """h-weighted L^p norm; exact grid maximum for p = inf."""
    if p == math.inf:
        return float(np.abs(f.values).max())
    if p < 1:
        raise LatticeError(f"L^p norm requires p >= 1, got {p}")
    g = f.grid
    return float((g.h**g.d * np.sum(np.abs(f.values) ** p)) ** (1.0 / p))


def _sobolev_weights(
    grid: LatticeGrid, s: float, homogeneous: bool, discrete_op: bool
) -> np.ndarray:
    base = symbol_sigma(grid) if discrete_op else continuum_abs2(grid)
    if homogeneous:
        if s > 0:
            # DC mode carries weight zero so plane-wave identities stay exact.
            w = base ** (s / 2.0)
        else:
            w = np.empty(grid.shape)
            nonzero = base > 0
            w[nonzero] = base[nonzero] ** (s / 2.0)
            w[~nonzero] = np.inf
        return w
    return (1.0 + base) ** (s / 2.0)


def sobolev_norm(
    f: ComplexField, s: float, homogeneous: bool = False, discrete_op: bool = False
) -> float:
    """Sobolev norm via the multiplier (1+|xi|^2)^{s/2}, |xi|^s, or the
    discrete-operator family built from sigma when discrete_op is set."""
    g = f.grid
    F = dft(f)
    w = _sobolev_weights(g, s, homogeneous, discrete_op)
    if homogeneous and s < 0:
        zero = ~(np.isfinite(w))
        scale = np.max(np.abs(F.coefficients))
        if np.any(np.abs(F.coefficients[zero]) > 1e-13 * scale):
            raise LatticeError(
                "homogeneous norm with s < 0 needs a mean-zero field (zero-mode weight diverges)"
            )
        w = np.where(zero, 0.0, w)
    total = np.sum((w * np.abs(F.coefficients)) ** 2)
    return float(np.sqrt(total / g.L**g.d))


def gns_theta(q: float, s: float) -> float:
    """Interpolation exponent from 1/q = 1/2 - theta*s/2 (d = 2)."""
    inv_q = 0.0 if q == math.inf else 1.0 / q
    theta = (1.0 - 2.0 * inv_q) / s
    if not (0.0 < theta < 1.0):
        raise LatticeError(f"incompatible exponents (q={q}, s={s}): theta={theta}")
    return theta


def gns_ratio(f: ComplexField, q: float, s: float) -> float:
    """||f||_q / (||f||_2^(1-theta) ||f||_{H^s homog}^theta); finite and positive."""
    theta = gns_theta(q, s)
    l2 = lp_norm(f, 2)
    if l2 == 0.0:
        raise LatticeError("Gagliardo-Nirenberg ratio is undefined for the zero field")
    lq = lp_norm(f, q)
    hs = sobolev_norm(f, s, homogeneous=True)
    return lq / (l2 ** (1.0 - theta) * hs**theta)


def write_snapshot(path, f: ComplexField, t: float = 0.0) -> None:
    """Binary field snapshot: magic, version, d, M, h, t, interleaved f64 pairs."""
    g = f.grid
    header = SNAPSHOT_MAGIC + struct.pack("<IIIdd", SNAPSHOT_VERSION, g.d, g.M, g.h, t)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<c16").tobytes())


def read_snapshot(path):
    """Read a binary snapshot; returns (ComplexField, t)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SNAPSHOT_MAGIC:
            raise LatticeError(f"bad snapshot magic {magic!r}")
        version, d, M, h, t = struct.unpack("<IIIdd", fh.read(28))
        if version != SNAPSHOT_VERSION:
            raise LatticeError(f"unsupported snapshot version {version}")
        grid = LatticeGrid(d=d, M=M, h=h)
        raw = fh.read(16 * grid.npoints)
        values = np.frombuffer(raw, dtype="<c16").reshape(grid.shape)
    return ComplexField(grid, values.copy()), t
