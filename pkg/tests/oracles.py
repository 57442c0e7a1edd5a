"""Independent numerical oracles used to freeze expected values in tests.

Nothing here calls the closed-form machinery it is used to check.
"""
import numpy as np


def gauss_legendre_box(f, lo, hi, nodes):
    """Tensor-product Gauss-Legendre integral of a vectorized f over [lo, hi].

    ``nodes`` gives the node count per axis; f receives an array (..., d).
    """
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    grids, weights = [], []
    for a, b, m in zip(lo, hi, nodes):
        x, w = np.polynomial.legendre.leggauss(int(m))
        grids.append(0.5 * (b - a) * x + 0.5 * (b + a))
        weights.append(0.5 * (b - a) * w)
    mesh = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1)
    wts = weights[0]
    for w in weights[1:]:
        wts = np.multiply.outer(wts, w)
    return np.sum(f(mesh) * wts)


def refined_integral(f, lo, hi, start, tol=1e-13, max_rounds=6):
    """Double the node count on every axis until two estimates agree."""
    nodes = list(start)
    prev = gauss_legendre_box(f, lo, hi, nodes)
    for _ in range(max_rounds):
        nodes = [2 * m for m in nodes]
        cur = gauss_legendre_box(f, lo, hi, nodes)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise RuntimeError("quadrature did not converge")


def ks_two_sample_statistic(a, b):
    """sup |F_a - F_b| by direct evaluation of both empirical CDFs."""
    a, b = np.sort(a), np.sort(b)
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / len(a)
    fb = np.searchsorted(b, pts, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


def psi_direct(coeffs, momenta, cfg):
    """Literal sum_j c_j prod_a exp(-i (p^0 t - p.x)) with Python loops."""
    total = 0j
    for c, row in zip(coeffs, momenta):
        term = complex(c)
        for p, x in zip(row, cfg):
            term *= np.exp(-1j * (p[0] * x[0] - p[1] * x[1] - p[2] * x[2] - p[3] * x[3]))
        total += term
    return total
