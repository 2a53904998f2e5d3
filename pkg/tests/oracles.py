"""Independent reference implementations used to cross-check the fast paths.

Everything here deliberately avoids the FFT: transforms are literal double
sums and integrals are Gauss-Legendre panel quadratures, so agreement with
the package is evidence rather than tautology.
"""

import numpy as np
from scipy.special import roots_legendre

from latdisp.bands import bump_1d


def direct_dft(values: np.ndarray, h: float) -> np.ndarray:
    """Literal double-sum transform on a 2D grid, symmetric k ordering."""
    M = values.shape[0]
    ks = np.arange(-M // 2, M // 2)
    x = h * np.arange(M)
    L = M * h
    out = np.zeros((M, M), dtype=np.complex128)
    for a, k1 in enumerate(ks):
        e1 = np.exp(-1j * x * 2 * np.pi * k1 / L)
        for b, k2 in enumerate(ks):
            e2 = np.exp(-1j * x * 2 * np.pi * k2 / L)
            out[a, b] = h * h * np.sum(values * np.outer(e1, e2))
    return out


def direct_idft(coeff: np.ndarray, h: float) -> np.ndarray:
    M = coeff.shape[0]
    ks = np.arange(-M // 2, M // 2)
    x = h * np.arange(M)
    L = M * h
    out = np.zeros((M, M), dtype=np.complex128)
    for i in range(M):
        for j in range(M):
            ph = np.exp(1j * (x[i] * 2 * np.pi * ks / L))
            out[i, j] = (
                np.sum(coeff * np.outer(ph, np.exp(1j * x[j] * 2 * np.pi * ks / L)))
                / L**2
            )
    return out


def gl_axis(lo: float, hi: float, panels: int, order: int):
    """Gauss-Legendre nodes/weights tiled over uniform panels of [lo, hi]."""
    pts, wts = roots_legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(a + (b - a) * (pts + 1) / 2)
        weights.append((b - a) / 2 * wts)
    return np.concatenate(nodes), np.concatenate(weights)


def eta_integral_2d(panels: int = 64, order: int = 20) -> float:
    """Integral of eta(w) = phi(w/2pi) - phi(w/pi) over the plane; the
    integrand is a difference of per-axis products, so the 2D integral
    reduces to two 1D ones."""
    nodes, weights = gl_axis(-4 * np.pi, 4 * np.pi, panels, order)
    ia = float(np.sum(weights * bump_1d(nodes / (2 * np.pi))))
    ib = float(np.sum(weights * bump_1d(nodes / np.pi)))
    return ia * ia - ib * ib


def panel_kernel_lattice(h: float, t: float, N: float, sites, panels: int, order: int):
    """Band-filtered lattice kernel at mesh h by panel quadrature:

        K(x, t) = int_{[-pi/h, pi/h]^2} exp(i x.xi) exp(i t sigma^2)
                  eta(h xi / N) dxi

    evaluated at the lattice sites x = h*y for the requested integer y."""
    lim = np.pi / h
    nodes, weights = gl_axis(-lim, lim, panels, order)
    s1 = (4.0 / h**2) * np.sin(h * nodes / 2.0) ** 2
    ra = bump_1d(h * nodes / (2.0 * np.pi * N))
    rb = bump_1d(h * nodes / (np.pi * N))
    n = nodes.size
    sites = np.asarray(sites)
    out = np.zeros(len(sites), dtype=np.complex128)
    ph2 = {y2: np.exp(1j * h * y2 * nodes) * weights for y2 in set(int(s[1]) for s in sites)}
    chunk = 512
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        sig = s1[lo:hi, None] + s1[None, :]
        W = np.exp(1j * t * sig**2)
        W *= np.multiply.outer(ra[lo:hi], ra) - np.multiply.outer(rb[lo:hi], rb)
        W *= weights[lo:hi, None]
        for idx, (y1, y2) in enumerate(sites):
            u = np.exp(1j * h * y1 * nodes[lo:hi])
            out[idx] += u @ W @ ph2[int(y2)]
    return out
