"""Admissible exponent pairs, mixed space-time norms, and the mesh-size
uniformity sweep for the linear flow.

The sweep fixes the physical period L, runs the exact linear propagator
from the same continuum profile discretized at each mesh size, and
records the ratio of the mixed norm to the data norm.  A bounded,
trend-free ratio across the dyadic mesh sweep is the operational content
of an h-independent constant.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import fft as _fft

from .evolve import Trajectory, _base_symbol
from .kernels import fit_loglog_slope
from .lattice import ComplexField, LatticeError, LatticeGrid, dft, lp_norm, sobolev_norm
from .limits import GaussianProfile, discretize
from .rng import SplitMix64


def _as_fraction(x) -> Fraction:
    return Fraction(x).limit_denominator(10**9) if isinstance(x, float) else Fraction(x)


def is_admissible(q, r) -> bool:
    """Exact rational test of 1/q = (1/2)(1/2 - 1/r) with q, r >= 2."""
    for e in (q, r):
        if e != math.inf and (not np.isfinite(e) or e < 2):
            return False
    if q != math.inf and q < 2 or r != math.inf and r < 2:
        return False
    inv_q = Fraction(0) if q == math.inf else 1 / _as_fraction(q)
    inv_r = Fraction(0) if r == math.inf else 1 / _as_fraction(r)
    return inv_q == Fraction(1, 2) * (Fraction(1, 2) - inv_r)


@dataclass(frozen=True)
class AdmissiblePair:
    q: float
    r: float

    def __post_init__(self):
        if not is_admissible(self.q, self.r):
            raise LatticeError(f"({self.q}, {self.r}) is not an admissible pair")

    def label(self):
        fmt = lambda e: "inf" if e == math.inf else repr(float(e))
        return fmt(self.q), fmt(self.r)


def mixed_norm(traj: Trajectory, pair: AdmissiblePair) -> float:
    """L^q in time of the spatial L^r norm over the trajectory window.

    q = inf takes the max over samples; finite q uses the composite
    trapezoid rule on uniform samples and needs at least two of them."""
    series = _norm_series(traj, pair.r)
    if pair.q == math.inf:
        return float(series.max())
    if len(series) < 2:
        raise LatticeError("finite time exponent needs at least two samples")
    dt = np.diff(traj.times)
    if not np.allclose(dt, dt[0], rtol=1e-9):
        raise LatticeError("finite time exponent needs uniform time samples")
    return float(np.trapezoid(series**pair.q, traj.times) ** (1.0 / pair.q))


def _norm_series(traj: Trajectory, r: float) -> np.ndarray:
    if traj.snapshots is not None:
        return np.array([lp_norm(s, r) for s in traj.snapshots])
    if traj.norms is not None and r in traj.norms:
        return np.asarray(traj.norms[r], dtype=float)
    raise LatticeError(f"trajectory carries no spatial norms for r = {r}")


def linear_norm_trajectory(
    f: ComplexField, times, r_values, kind: str = "discrete"
) -> Trajectory:
    """Streaming linear-flow trajectory: only per-time L^r norms are kept,
    so long trajectories on fine grids stay cheap in memory."""
    times = np.asarray(times, dtype=float)
    base2 = np.fft.ifftshift(_base_symbol(f.grid, kind) ** 2)
    V = _fft.fftn(f.values)
    norms = {r: np.empty(times.size) for r in r_values}
    for i, t in enumerate(times):
        u = ComplexField(f.grid, _fft.ifftn(np.exp(1j * t * base2) * V))
        for r in norms:
            norms[r][i] = lp_norm(u, r)
    return Trajectory(times=times, kind=kind, norms=norms)


@dataclass(frozen=True)
class BandLimitedProfile:
    """Random trigonometric polynomial with modes |k|_inf <= band on a
    period-L torus; the same seed gives the same continuum function on
    every grid, which is what makes the mesh sweep compare like with like."""

    L: float
    band: int = 4
    seed: int = 1

    def sample(self, grid: LatticeGrid) -> ComplexField:
        if abs(grid.L - self.L) > 1e-12 * self.L:
            raise LatticeError(f"grid period {grid.L} does not match profile period {self.L}")
        if grid.M // 2 <= self.band:
            raise LatticeError("grid too coarse to carry the profile's modes")
        gen = SplitMix64(self.seed)
        side = 2 * self.band + 1
        coeff = gen.complex_normal((side, side))
        vals = np.zeros(grid.shape, dtype=np.complex128)
        x = grid.site_coordinates()
        for a, k1 in enumerate(range(-self.band, self.band + 1)):
            e1 = np.exp(2j * np.pi * k1 * x / self.L)
            for b, k2 in enumerate(range(-self.band, self.band + 1)):
                e2 = np.exp(2j * np.pi * k2 * x / self.L)
                vals += coeff[a, b] * np.multiply.outer(e1, e2)
        return ComplexField(grid, vals)


@dataclass(frozen=True)
class StrichartzReport:
    pair: AdmissiblePair | None
    profile_name: str
    ratios: tuple  # (h, ratio) pairs
    trend_slope: float
    T: float

    def __post_init__(self):
        if any(not (r > 0 and np.isfinite(r)) for _, r in self.ratios):
            raise LatticeError("ratios must be positive and finite")


def _discretize_profile(profile, grid: LatticeGrid) -> ComplexField:
    if isinstance(profile, GaussianProfile):
        return discretize(profile, grid)
    return profile.sample(grid)


def strichartz_sweep(
    profiles: dict,
    pairs,
    L: float,
    h_list,
    T: float = 10.0,
    n_samples: int = 512,
    sup_ratio: bool = False,
):
    """One report per (pair, profile): per-h ratio of mixed norm to data
    norm, plus the fitted trend of the ratio against 1/h.

    With sup_ratio set, the sup-in-time grid max is measured against the
    inhomogeneous H^2 norm of the data instead (reported with pair None)."""
    pairs = [p if isinstance(p, AdmissiblePair) else AdmissiblePair(*p) for p in pairs]
    times = np.linspace(0.0, T, n_samples)
    r_values = sorted({p.r for p in pairs} | ({math.inf} if sup_ratio else set()))
    reports = []
    per_profile = {}
    for name, profile in profiles.items():
        rows = []  # (h, f, traj)
        for h in sorted(h_list, reverse=True):
            M = round(L / h)
            grid = LatticeGrid(d=2, M=M, h=h)
            f = _discretize_profile(profile, grid)
            traj = linear_norm_trajectory(f, times, r_values, kind="discrete")
            rows.append((h, f, traj))
        per_profile[name] = rows
    for name, rows in per_profile.items():
        for pair in pairs:
            ratios = tuple(
                (h, mixed_norm(traj, pair) / lp_norm(f, 2)) for h, f, traj in rows
            )
            slope, _ = fit_loglog_slope([(1.0 / h, r) for h, r in ratios])
            reports.append(StrichartzReport(pair, name, ratios, slope, T))
        if sup_ratio:
            ratios = tuple(
                (h, float(_norm_series(traj, math.inf).max()) / sobolev_norm(f, 2.0))
                for h, f, traj in rows
            )
            slope, _ = fit_loglog_slope([(1.0 / h, r) for h, r in ratios])
            reports.append(StrichartzReport(None, name, ratios, slope, T))
    return reports


def write_sweep_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair_q", "pair_r", "profile", "h", "ratio"])
        for rep in reports:
            ql, rl = rep.pair.label() if rep.pair else ("sup", "H2")
            for h, ratio in rep.ratios:
                writer.writerow([ql, rl, rep.profile_name, repr(float(h)), repr(float(ratio))])


def write_sweep_json(reports, path) -> None:
    payload = []
    for rep in reports:
        ql, rl = rep.pair.label() if rep.pair else ("sup", "H2")
        payload.append(
            {
                "pair": [ql, rl],
                "profile": rep.profile_name,
                "trend_slope": rep.trend_slope,
                "T": rep.T,
                "max_over_min": max(r for _, r in rep.ratios) / min(r for _, r in rep.ratios),
            }
        )
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
