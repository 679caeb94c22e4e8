"""
Dense 3D grid arithmetic.

Densities are plain ``(h, w, d)`` float arrays and vector fields are
``(3, h, w, d)`` arrays holding target *coordinates* (not displacements),
in voxel units with unit spacing. Voxel ``(i, j, k)`` sits at coordinate
``(i, j, k)``; interpolation clamps to the grid box and derivatives use
central differences inside and one-sided differences on the faces.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .errors import (FormatError, GridMismatch, NegativeValue, ShapeError,
                     ZeroMass)

__all__ = [
    "GridSpec", "normalize_mass", "is_normalized", "identity_grid",
    "displacement", "trilinear_sample", "sample_with_gradient",
    "cubic_sample", "gradient", "gradient_adjoint", "array_digest",
    "jacobian_matrix", "jacobian_determinant", "cofactor_matrix", "resample",
    "center_of_mass", "second_moment",
    "read_volume", "write_volume", "read_field", "write_field",
]


@dataclass(frozen=True)
class GridSpec:
    """Voxel dimensions of a grid; spacing is fixed to 1 on every axis."""

    dims: tuple

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if len(dims) != 3:
            raise ShapeError(f"grid must be 3D, got dims {dims}")
        if min(dims) < 2:
            raise ShapeError(f"every axis needs at least 2 voxels, got {dims}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def of(cls, arr):
        arr = np.asarray(arr)
        return cls(arr.shape[-3:])

    @property
    def size(self):
        return int(np.prod(self.dims))


def _check_same_grid(*arrays):
    shapes = {tuple(np.shape(a)[-3:]) for a in arrays}
    if len(shapes) != 1:
        raise GridMismatch(f"arrays live on different grids: {sorted(shapes)}")


# ---------------------------------------------------------------------------
# densities

def normalize_mass(v, epsilon=1e-8):
    """Rescale a non-negative volume to unit total mass.

    Parameters
    ----------
    v : array_like, shape (h, w, d)
        Non-negative density.
    epsilon : float
        Floor added to every voxel, as a fraction of the mean strictly
        positive value. ``0`` gives plain normalization; a positive value
        makes the result strictly positive.

    Returns
    -------
    ndarray of float64 summing to 1.
    """
    v = np.asarray(v, dtype=np.float64)
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if np.any(v < 0):
        raise NegativeValue("density has negative voxels")
    total = v.sum()
    if not total > 0:
        raise ZeroMass("density has zero total mass")
    if epsilon > 0:
        v = v + epsilon * v[v > 0].mean()
        total = v.sum()
    return v / total


def array_digest(arr):
    """Short content hash of an array (shape, float64 values)."""
    a = np.ascontiguousarray(arr, dtype=np.float64)
    h = hashlib.sha256(repr(a.shape).encode())
    h.update(a.tobytes())
    return h.hexdigest()[:16]


def is_normalized(v, tol=1e-9):
    v = np.asarray(v)
    return bool(np.all(v >= 0) and abs(v.sum() - 1.0) <= tol)


def center_of_mass(v):
    """Mass-weighted mean coordinate of a density, shape (3,)."""
    v = np.asarray(v, dtype=np.float64)
    grids = np.indices(v.shape, dtype=np.float64)
    return np.array([(g * v).sum() for g in grids]) / v.sum()


def second_moment(v, center=None):
    """Mass-weighted mean squared distance to ``center`` (default: the COM)."""
    v = np.asarray(v, dtype=np.float64)
    c = center_of_mass(v) if center is None else np.asarray(center, float)
    grids = np.indices(v.shape, dtype=np.float64)
    r2 = sum((g - ck) ** 2 for g, ck in zip(grids, c))
    return float((r2 * v).sum() / v.sum())


# ---------------------------------------------------------------------------
# fields

def identity_grid(dims):
    """Identity map on a grid of the given dims, shape (3, h, w, d)."""
    return np.indices(tuple(dims), dtype=np.float64)


def displacement(f):
    """``f - Id`` for a coordinate field."""
    f = np.asarray(f, dtype=np.float64)
    return f - identity_grid(f.shape[1:])


class _Stencil:
    """Corner indices and weights of trilinear interpolation at fixed points.

    Building the stencil once lets a scalar volume and every component of
    a field be sampled at the same points for the cost of the gathers only.
    """

    def __init__(self, shape, coords):
        coords = np.asarray(coords, dtype=np.float64)
        self.out_shape = coords.shape[1:]
        coords = coords.reshape(3, -1)
        strides = (shape[1] * shape[2], shape[2], 1)
        base = np.zeros(coords.shape[1], dtype=np.intp)
        self.t = np.empty_like(coords)
        self.inside = np.empty(coords.shape, dtype=bool)
        self.step = strides
        for ax in range(3):
            n = shape[ax]
            c = coords[ax]
            p = np.clip(c, 0.0, n - 1.0)
            self.inside[ax] = (c >= 0.0) & (c <= n - 1.0)
            i0 = np.minimum(np.floor(p).astype(np.intp), n - 2)
            self.t[ax] = p - i0
            base += i0 * strides[ax]
        self.base = base

    def corners(self, flat):
        s0, s1, s2 = self.step
        b = self.base
        return np.stack([flat[b + di * s0 + dj * s1 + dk * s2]
                         for di in (0, 1) for dj in (0, 1) for dk in (0, 1)])

    def value(self, flat):
        c = self.corners(flat)
        tx, ty, tz = self.t
        # collapse z, then y, then x
        c = c.reshape(2, 2, 2, -1)
        cz = c[:, :, 0] * (1 - tz) + c[:, :, 1] * tz
        cy = cz[:, 0] * (1 - ty) + cz[:, 1] * ty
        return (cy[0] * (1 - tx) + cy[1] * tx).reshape(self.out_shape)

    def value_and_gradient(self, flat):
        c = self.corners(flat).reshape(2, 2, 2, -1)
        tx, ty, tz = self.t
        cz = c[:, :, 0] * (1 - tz) + c[:, :, 1] * tz
        dz = c[:, :, 1] - c[:, :, 0]
        cy = cz[:, 0] * (1 - ty) + cz[:, 1] * ty
        dy = cz[:, 1] - cz[:, 0]
        val = cy[0] * (1 - tx) + cy[1] * tx
        gx = cy[1] - cy[0]
        gy = dy[0] * (1 - tx) + dy[1] * tx
        dzy = dz[:, 0] * (1 - ty) + dz[:, 1] * ty
        gz = dzy[0] * (1 - tx) + dzy[1] * tx
        grad = np.stack([gx, gy, gz]) * self.inside
        return val.reshape(self.out_shape), grad.reshape((3,) + self.out_shape)


def trilinear_sample(v, points):
    """Trilinear interpolation with clamp-to-edge boundary handling.

    Parameters
    ----------
    v : ndarray, shape (h, w, d) or (3, h, w, d)
        Scalar volume or vector field.
    points : array_like, shape (3,) or (3, ...)
        Voxel coordinates, first axis indexing (x, y, z).

    Returns
    -------
    Scalar (or array of shape ``points.shape[1:]``) for a volume; a
    length-3 vector (or ``(3,) + points.shape[1:]``) for a field.
    """
    v = np.asarray(v, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] != 3:
        raise ShapeError("points must have a leading axis of length 3")
    if v.ndim == 3:
        st = _Stencil(v.shape, points)
        out = st.value(v.ravel())
        return float(out) if out.ndim == 0 else out
    if v.ndim == 4 and v.shape[0] == 3:
        st = _Stencil(v.shape[1:], points)
        return np.stack([st.value(comp.ravel()) for comp in v])
    raise ShapeError(f"cannot sample array of shape {v.shape}")


def sample_with_gradient(v, points):
    """Trilinear value of ``v`` at ``points`` together with its exact
    spatial gradient (zero along axes where the point is clamped)."""
    v = np.asarray(v, dtype=np.float64)
    st = _Stencil(v.shape, points)
    return st.value_and_gradient(v.ravel())


@numba.njit(cache=True)
def _cr_weights(t, w, dw):
    t2 = t * t
    t3 = t2 * t
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t)
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0)
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t)
    w[3] = 0.5 * (t3 - t2)
    dw[0] = 0.5 * (-3.0 * t2 + 4.0 * t - 1.0)
    dw[1] = 0.5 * (9.0 * t2 - 10.0 * t)
    dw[2] = 0.5 * (-9.0 * t2 + 8.0 * t + 1.0)
    dw[3] = 0.5 * (3.0 * t2 - 2.0 * t)


@numba.njit(cache=True)
def _cubic_kernel(v, cx, cy, cz, out, grad, want_grad):
    nx, ny, nz = v.shape
    dims = (nx, ny, nz)
    w = np.empty((3, 4))
    dw = np.empty((3, 4))
    idx = np.empty((3, 4), dtype=np.int64)
    inside = np.empty(3)
    for m in range(cx.shape[0]):
        c = (cx[m], cy[m], cz[m])
        for a in range(3):
            n = dims[a]
            p = min(max(c[a], 0.0), n - 1.0)
            inside[a] = 1.0 if (c[a] >= 0.0 and c[a] <= n - 1.0) else 0.0
            i0 = min(int(np.floor(p)), n - 2)
            _cr_weights(p - i0, w[a], dw[a])
            for k in range(4):
                idx[a, k] = min(max(i0 - 1 + k, 0), n - 1)
        val = 0.0
        gx = 0.0
        gy = 0.0
        gz = 0.0
        for i in range(4):
            for j in range(4):
                sv = 0.0
                sd = 0.0
                for k in range(4):
                    x = v[idx[0, i], idx[1, j], idx[2, k]]
                    sv += w[2, k] * x
                    sd += dw[2, k] * x
                val += w[0, i] * w[1, j] * sv
                if want_grad:
                    gx += dw[0, i] * w[1, j] * sv
                    gy += w[0, i] * dw[1, j] * sv
                    gz += w[0, i] * w[1, j] * sd
        out[m] = val
        if want_grad:
            grad[0, m] = gx * inside[0]
            grad[1, m] = gy * inside[1]
            grad[2, m] = gz * inside[2]


def cubic_sample(v, points, with_gradient=False):
    """Catmull-Rom cubic interpolation of a scalar volume (clamp-to-edge).

    Unlike trilinear interpolation it is continuously differentiable, which
    keeps gradient-based optimization over sample positions well behaved.
    """
    v = np.ascontiguousarray(v, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    shape = points.shape[1:]
    c = points.reshape(3, -1)
    out = np.empty(c.shape[1])
    grad = np.empty((3, c.shape[1]))
    _cubic_kernel(v, np.ascontiguousarray(c[0]), np.ascontiguousarray(c[1]),
                  np.ascontiguousarray(c[2]), out, grad, with_gradient)
    if with_gradient:
        return out.reshape(shape), grad.reshape((3,) + shape)
    return out.reshape(shape)


def gradient(u, axis):
    """Central differences inside, one-sided differences on the two faces."""
    return np.gradient(u, axis=axis, edge_order=1)


def gradient_adjoint(g, axis):
    """Exact transpose of :func:`gradient` along ``axis``."""
    g = np.moveaxis(np.asarray(g, dtype=np.float64), axis, 0)
    n = g.shape[0]
    out = np.zeros_like(g)
    if n == 2:
        s = g[0] + g[1]
        out[0] = -s
        out[1] = s
        return np.moveaxis(out, 0, axis)
    # faces: G[0] = u1 - u0, G[n-1] = u[n-1] - u[n-2]
    out[0] -= g[0]
    out[1] += g[0]
    out[n - 1] += g[n - 1]
    out[n - 2] -= g[n - 1]
    # interior rows k = 1..n-2: (u[k+1] - u[k-1]) / 2
    half = 0.5 * g[1:n - 1]
    out[2:n] += half
    out[0:n - 2] -= half
    return np.moveaxis(out, 0, axis)


def jacobian_matrix(f):
    """``Df`` as an array of shape (3, 3, h, w, d), ``J[i, j] = d f_i / d x_j``."""
    f = np.asarray(f, dtype=np.float64)
    return np.stack([np.stack([gradient(f[i], j) for j in range(3)])
                     for i in range(3)])


def _det3(J):
    return (J[0, 0] * (J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
            - J[0, 1] * (J[1, 0] * J[2, 2] - J[1, 2] * J[2, 0])
            + J[0, 2] * (J[1, 0] * J[2, 1] - J[1, 1] * J[2, 0]))


def cofactor_matrix(J):
    """Cofactors of a (3, 3, ...) stack, so that ``d det / d J[i, j] = C[i, j]``."""
    C = np.empty_like(J)
    for i in range(3):
        for j in range(3):
            r = [a for a in range(3) if a != i]
            c = [b for b in range(3) if b != j]
            minor = J[r[0], c[0]] * J[r[1], c[1]] - J[r[0], c[1]] * J[r[1], c[0]]
            C[i, j] = minor if (i + j) % 2 == 0 else -minor
    return C


def jacobian_determinant(f):
    """Voxelwise ``det(Df)``; negative values (folds) are kept as is."""
    return _det3(jacobian_matrix(f))


# ---------------------------------------------------------------------------
# resampling

def _overlap_matrix(n_src, n_dst):
    """Cell-overlap lengths between ``n_dst`` coarse cells and ``n_src`` fine
    cells covering the same extent, in fine-cell units."""
    r = n_src / n_dst
    edges_dst = np.arange(n_dst + 1) * r
    lo = np.maximum(edges_dst[:-1, None], np.arange(n_src)[None, :])
    hi = np.minimum(edges_dst[1:, None], np.arange(n_src)[None, :] + 1)
    return np.clip(hi - lo, 0.0, None)


def _interp_matrix(n_src, n_dst):
    """Linear interpolation (clamped) from ``n_src`` to ``n_dst`` cell centers."""
    x = (np.arange(n_dst) + 0.5) * (n_src / n_dst) - 0.5
    x = np.clip(x, 0.0, n_src - 1.0)
    i0 = np.minimum(np.floor(x).astype(int), n_src - 2)
    t = x - i0
    M = np.zeros((n_dst, n_src))
    M[np.arange(n_dst), i0] += 1 - t
    M[np.arange(n_dst), i0 + 1] += t
    return M


def _apply_axis(M, arr, axis):
    return np.moveaxis(np.tensordot(M, arr, axes=([1], [axis])), 0, axis)


def resample(v, target):
    """Resample a density or a coordinate field onto a grid of other dims.

    Axes that shrink are box-averaged by cell overlap, axes that grow are
    linearly interpolated. Densities come back with unit mass; field
    coordinates are rescaled to the target grid's voxel units.
    """
    dims = target.dims if isinstance(target, GridSpec) else GridSpec(target).dims
    v = np.asarray(v, dtype=np.float64)
    is_field = v.ndim == 4
    if v.ndim not in (3, 4) or (is_field and v.shape[0] != 3):
        raise ShapeError(f"cannot resample array of shape {v.shape}")
    src = v.shape[-3:]
    if tuple(src) == tuple(dims):
        return v.copy()
    out = v
    off = 1 if is_field else 0
    for ax in range(3):
        n_s, n_d = src[ax], dims[ax]
        if n_s == n_d:
            continue
        if n_d < n_s:
            M = _overlap_matrix(n_s, n_d)
            if is_field:
                M = M / M.sum(axis=1, keepdims=True)
        else:
            M = _interp_matrix(n_s, n_d)
        out = _apply_axis(M, out, ax + off)
    if is_field:
        out = out.copy()
        for k in range(3):
            s = dims[k] / src[k]
            out[k] = (out[k] + 0.5) * s - 0.5
        return out
    return out / out.sum()


# ---------------------------------------------------------------------------
# file I/O

_FLOAT_DTYPES = (np.dtype("<f4"), np.dtype("<f8"))


def _read_array(path):
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            version = np.lib.format.read_magic(fh)
            if version == (1, 0):
                shape, fortran, dtype = np.lib.format.read_array_header_1_0(fh)
            else:
                shape, fortran, dtype = np.lib.format.read_array_header_2_0(fh)
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
        if dtype not in _FLOAT_DTYPES:
            raise FormatError(f"{path}: dtype {dtype.str} is not little-endian "
                              "float32/float64")
        if fortran:
            raise FormatError(f"{path}: Fortran-ordered arrays are not supported")
        count = int(np.prod(shape))
        data = np.fromfile(fh, dtype=dtype, count=count)
        if data.size != count:
            raise FormatError(f"{path}: truncated payload")
    return data.reshape(shape)


def _write_array(arr, path, dtype):
    arr = np.ascontiguousarray(arr, dtype=np.dtype(dtype).newbyteorder("<"))
    with open(path, "wb") as fh:
        np.lib.format.write_array(fh, arr, version=(1, 0), allow_pickle=False)


def read_volume(path):
    arr = _read_array(path)
    if arr.ndim != 3:
        raise ShapeError(f"{path}: expected a 3D scalar volume, got shape {arr.shape}")
    return arr


def write_volume(v, path, dtype=np.float32):
    v = np.asarray(v)
    if v.ndim != 3:
        raise ShapeError(f"expected a 3D scalar volume, got shape {v.shape}")
    _write_array(v, path, dtype)


def read_field(path):
    arr = _read_array(path)
    if arr.ndim != 4 or arr.shape[0] != 3:
        raise ShapeError(f"{path}: expected a (3, h, w, d) field, got shape {arr.shape}")
    return arr


def write_field(f, path, dtype=np.float32):
    f = np.asarray(f)
    if f.ndim != 4 or f.shape[0] != 3:
        raise ShapeError(f"expected a (3, h, w, d) field, got shape {f.shape}")
    _write_array(f, path, dtype)
