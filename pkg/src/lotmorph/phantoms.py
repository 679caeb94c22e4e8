"""
Synthetic densities for tests, demos and the benchmark.

Two families: smooth Gaussian blobs and 1D profiles extruded into slabs,
both with closed-form transport maps, and two-class ellipsoid phantoms
whose classes differ by a volume-preserving stretch along the first axis.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import grid

__all__ = ["gaussian_blob", "slab_profile", "slab_density", "ellipsoid_phantom",
           "phantom_dataset", "write_dataset"]


def gaussian_blob(dims, center, sigma, epsilon=1e-8):
    """Isotropic Gaussian bump normalized to unit mass."""
    x = grid.identity_grid(dims)
    r2 = sum((x[k] - center[k]) ** 2 for k in range(3))
    return grid.normalize_mass(np.exp(-r2 / (2.0 * sigma ** 2)), epsilon)


def slab_profile(rng, n=32, lo=12.5, hi=18.5, width=(1.8, 3.0)):
    """Random 1D mixture of one or two Gaussian bumps on ``0..n-1``.

    Bump centers are drawn from ``[lo, hi]`` so the mass stays clear of
    the two ends of the line.
    """
    x = np.arange(n, dtype=np.float64)
    p = np.zeros(n)
    for _ in range(int(rng.integers(1, 3))):
        c = rng.uniform(lo, hi)
        s = rng.uniform(*width)
        p += rng.uniform(0.5, 1.0) * np.exp(-(x - c) ** 2 / (2 * s * s))
    return p


def slab_density(profile, dims=(32, 4, 4), epsilon=1e-8):
    """Extrude a 1D profile along the last two axes and normalize."""
    v = np.broadcast_to(np.asarray(profile, float)[:, None, None], dims)
    return grid.normalize_mass(v, epsilon)


def ellipsoid_phantom(rng, label, n=32, axes=(7.0, 5.5, 4.5), stretch=1.15,
                      jitter=0.05, tilt=0.15, noise=0.15, smooth=1.5, epsilon=1e-8):
    """One noisy, smoothed solid ellipsoid centered in an ``n**3`` grid.

    Parameters
    ----------
    rng : numpy.random.Generator
    label : {0, 1}
        Class 1 is stretched by ``stretch`` along the first axis and
        shrunk by ``1/sqrt(stretch)`` along the other two.
    axes : tuple of float
        Base semi-axes in voxels, each jittered by up to ``jitter``.
    tilt : float
        Maximal in-plane rotation (radians) about the last axis.
    noise : float
        Relative amplitude of multiplicative Gaussian noise inside the body.
    smooth : float
        Width of the Gaussian filter applied last.
    """
    x = grid.identity_grid((n, n, n)) - (n - 1) / 2.0
    ax = np.asarray(axes, float) * rng.uniform(1 - jitter, 1 + jitter, 3)
    if label == 1:
        ax = ax * np.array([stretch, stretch ** -0.5, stretch ** -0.5])
    th = rng.uniform(-tilt, tilt)
    c, s = np.cos(th), np.sin(th)
    X = c * x[0] - s * x[1]
    Y = s * x[0] + c * x[1]
    body = ((X / ax[0]) ** 2 + (Y / ax[1]) ** 2 + (x[2] / ax[2]) ** 2 <= 1.0).astype(float)
    v = body * (1.0 + noise * rng.standard_normal(body.shape))
    v = ndimage.gaussian_filter(np.clip(v, 0.0, None), smooth)
    return grid.normalize_mass(v, epsilon)


def phantom_dataset(count=160, n=32, seed=0, **kw):
    """Alternating-label list of phantoms; returns ``(volumes, labels)``."""
    rng = np.random.default_rng(seed)
    labels = np.arange(count) % 2
    vols = [ellipsoid_phantom(rng, int(y), n=n, **kw) for y in labels]
    return vols, labels


def write_dataset(volumes, labels, out_dir, manifest="manifest.csv"):
    """Store volumes as ``<i>.npy`` under ``out_dir/data`` plus a manifest
    with ``image_path,label`` rows (paths relative to the manifest)."""
    out_dir = Path(out_dir)
    (out_dir / "data").mkdir(parents=True, exist_ok=True)
    path = out_dir / manifest
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["image_path", "label"])
        for i, (v, y) in enumerate(zip(volumes, labels)):
            grid.write_volume(v, out_dir / "data" / f"{i}.npy", dtype=np.float64)
            w.writerow([f"./data/{i}.npy", y.item() if hasattr(y, "item") else y])
    return path
