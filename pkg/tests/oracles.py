"""Reference computations that share no code with the package."""
import numpy as np
from scipy import ndimage


def line_oracle(p0, p1, fine=2000):
    """Monotone rearrangement between two piecewise-linear 1D densities,
    integrated on a fine sub-grid; returns (map at nodes, CDF of p0)."""
    n = len(p0)
    xs = np.linspace(0, n - 1, (n - 1) * fine + 1)
    a = np.interp(xs, np.arange(n), p0)
    b = np.interp(xs, np.arange(n), p1)
    F0 = np.concatenate([[0], np.cumsum((a[1:] + a[:-1]) / 2)])
    F1 = np.concatenate([[0], np.cumsum((b[1:] + b[:-1]) / 2)])
    F0 /= F0[-1]
    F1 /= F1[-1]
    nodes = np.arange(n, dtype=float)
    return np.interp(np.interp(nodes, xs, F0), F1, xs), np.interp(nodes, xs, F0)


def independent_residual(f, I0, I1):
    """det(Df) I1(f) - I0 relative L2, via numpy gradients and ndimage."""
    D = np.stack([np.stack(np.gradient(f[i]), axis=0) for i in range(3)])
    det = np.linalg.det(np.moveaxis(D, (0, 1), (-2, -1)))
    w = ndimage.map_coordinates(I1, f, order=1, mode="nearest")
    return np.linalg.norm(det * w - I0) / np.linalg.norm(I0)


def pairwise_auc(scores, labels):
    """Fraction of positive/negative pairs ranked correctly, ties counting
    one half, by explicit enumeration."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))
