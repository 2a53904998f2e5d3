"""Dyadic frequency cutoffs and band projections.

The bump is a tensor product of a 1D C-infinity transition

    rho(u) = 1            for |u| <= 1,
    rho(u) = 0            for |u| >= 2,
    rho(u) = s(2-|u|) / (s(2-|u|) + s(|u|-1))   otherwise,

with s(v) = exp(-1/v) for v > 0 and 0 else.  The band symbols are

    psi_N(xi) = phi(h xi / (2 pi N)) - phi(h xi / (pi N)),   N = 2^-k,

supported on the cube annulus pi N <= |h xi|_inf <= 4 pi N, and they
telescope to 1 on every nonzero grid frequency once N reaches 1/M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import ComplexField, LatticeError, LatticeGrid, apply_multiplier, lp_norm


def smooth_step(v: np.ndarray) -> np.ndarray:
    """s(v) = exp(-1/v) for v > 0, else 0."""
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = np.exp(-1.0 / v[pos])
    return out


def bump_1d(u) -> np.ndarray:
    """1D transition: 1 on [-1,1], 0 outside (-2,2), smooth in between."""
    u = np.abs(np.asarray(u, dtype=float))
    a = smooth_step(2.0 - u)
    b = smooth_step(u - 1.0)
    denom = a + b
    out = np.divide(a, denom, out=np.zeros_like(a), where=denom > 0)
    out = np.where(u <= 1.0, 1.0, out)
    return np.where(u >= 2.0, 0.0, out)


def phi(point) -> float:
    """Tensor-product bump on R^d: 1 on [-1,1]^d, 0 off [-2,2]^d."""
    point = np.atleast_1d(np.asarray(point, dtype=float))
    return float(np.prod(bump_1d(point)))


def eta_1d_factors(w: np.ndarray):
    """1D factors of eta(w) = phi(w/(2 pi)) - phi(w/pi): (outer, inner)."""
    return bump_1d(w / (2.0 * np.pi)), bump_1d(w / np.pi)


@dataclass(frozen=True, order=True)
class DyadicScale:
    """Band index: N = 2^-k with k >= 0."""

    k: int

    def __post_init__(self):
        if self.k < 0:
            raise LatticeError(f"dyadic scale needs k >= 0, got {self.k}")

    @property
    def N(self) -> float:
        return 2.0**-self.k

    @classmethod
    def from_value(cls, N: float) -> "DyadicScale":
        if not (0.0 < N <= 1.0):
            raise LatticeError(f"{N} is not a dyadic scale in (0, 1]")
        k = -math.log2(N)
        if abs(k - round(k)) > 1e-12 or k < -1e-12:
            raise LatticeError(f"{N} is not a dyadic scale in (0, 1]")
        return cls(int(round(k)))


def psi_values(grid: LatticeGrid, scale: DyadicScale) -> np.ndarray:
    """psi_N on the grid's frequencies (symmetric k ordering)."""
    N = scale.N
    out = np.ones(grid.shape)
    inner = np.ones(grid.shape)
    for xi in grid.frequency_mesh():
        hxi = grid.h * xi
        out = out * bump_1d(hxi / (2.0 * np.pi * N))
        inner = inner * bump_1d(hxi / (np.pi * N))
    return out - inner


def default_scales(grid: LatticeGrid) -> list:
    """Scales N = 1, 1/2, ..., 1/M; deep enough that the bands telescope
    to one at every nonzero grid frequency."""
    return [DyadicScale(k) for k in range(int(math.log2(grid.M)) + 1)]


def project(f: ComplexField, scale: DyadicScale) -> ComplexField:
    """Band projection P_N: multiply the spectrum by psi_N."""
    return apply_multiplier(f, psi_values(f.grid, scale))


def reconstruct(f: ComplexField, scales=None) -> ComplexField:
    """Sum of band projections; the mean is split off and re-added because
    the band symbols all vanish at xi = 0."""
    if scales is None:
        scales = default_scales(f.grid)
    mean = f.values.mean()
    total = np.full(f.grid.shape, mean, dtype=np.complex128)
    for scale in scales:
        total = total + project(f, scale).values
    return ComplexField(f.grid, total)


def square_function(f: ComplexField, scales) -> ComplexField:
    """(sum_N |P_N f|^2)^(1/2), pointwise on the grid."""
    scales = list(scales)
    if not scales:
        raise LatticeError("square function needs a nonempty scale list")
    acc = np.zeros(f.grid.shape)
    for scale in scales:
        acc += np.abs(project(f, scale).values) ** 2
    return ComplexField(f.grid, np.sqrt(acc))


def square_function_norm(f: ComplexField, p: float, scales) -> float:
    """L^p norm of the square function over the given bands."""
    if not (1.0 < p < math.inf):
        raise LatticeError(f"square-function norm needs p in (1, inf), got {p}")
    return lp_norm(square_function(f, scales), p)


def ensemble_bracket(M: int, h_list, p: float, count: int, seed: int) -> dict:
    """Empirical square-function constants: for each mesh size, the
    (min, max) of ||Sf||_p / ||f||_p over an ensemble of mean-zero
    random fields.  Mesh-stable brackets are the desk-scale signature of
    h-independent constants."""
    from .rng import SplitMix64

    if count < 2:
        raise LatticeError(f"ensemble needs at least 2 fields, got {count}")
    out = {}
    for i, h in enumerate(sorted(h_list, reverse=True)):
        grid = LatticeGrid(d=2, M=M, h=h)
        scales = default_scales(grid)
        gen = SplitMix64(seed + i)
        ratios = []
        for _ in range(count):
            vals = gen.complex_normal(grid.shape)
            vals -= vals.mean()
            f = ComplexField(grid, vals)
            ratios.append(square_function_norm(f, p, scales) / lp_norm(f, p))
        out[h] = (min(ratios), max(ratios))
    return out
