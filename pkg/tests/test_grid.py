import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from lotmorph import grid
from lotmorph.errors import FormatError, NegativeValue, ShapeError, ZeroMass

volumes = hnp.arrays(np.float64, hnp.array_shapes(min_dims=3, max_dims=3, min_side=2, max_side=5),
                     elements=st.floats(0, 10, allow_nan=False, allow_subnormal=False))


# -- normalize_mass ---------------------------------------------------------

def test_normalize_uniform():
    out = grid.normalize_mass(np.ones((2, 2, 2)), 0.0)
    assert np.allclose(out, 1 / 8)


def test_normalize_keeps_normalized_volume(rng):
    v = rng.random((3, 4, 5))
    v /= v.sum()
    assert np.allclose(grid.normalize_mass(v, 0.0), v, rtol=0, atol=1e-15)


def test_normalize_floor_two_voxels():
    # (2 + 0.01 * 2) / 2.04 and (0.01 * 2) / 2.04, mean positive value is 2
    out = grid.normalize_mass(np.array([2.0, 0.0]).reshape(2, 1, 1), 0.01)
    assert out.ravel() == pytest.approx([0.9901960784313726, 0.00980392156862745], abs=1e-15)


def test_normalize_errors():
    with pytest.raises(ZeroMass):
        grid.normalize_mass(np.zeros((2, 2, 2)))
    with pytest.raises(NegativeValue):
        grid.normalize_mass(-np.ones((2, 2, 2)))


@given(volumes, st.sampled_from([0.0, 1e-8, 1e-3]))
def test_normalize_unit_mass_and_idempotent(v, eps):
    if not v.sum() > 0:
        return
    w = grid.normalize_mass(v, eps)
    assert abs(w.sum() - 1) <= 1e-9
    assert np.all(w >= 0)
    if eps == 0:
        assert np.allclose(grid.normalize_mass(w, 0.0), w, rtol=0, atol=1e-12)
    else:
        assert np.all(w > 0)


# -- sampling ---------------------------------------------------------------

def test_trilinear_lattice_and_ramp(rng):
    v = rng.random((3, 3, 3))
    assert grid.trilinear_sample(v, (1, 1, 1)) == v[1, 1, 1]
    ramp = grid.identity_grid((4, 3, 3))[0]
    assert grid.trilinear_sample(ramp, (0.5, 0, 0)) == pytest.approx(0.5)
    assert grid.trilinear_sample(v, (-3, 0, 0)) == v[0, 0, 0]


def test_trilinear_reproduces_trilinear_polynomials(rng):
    x = grid.identity_grid((5, 6, 4))
    for _ in range(20):
        c = rng.normal(size=8)
        def poly(p):
            a, b, d = p
            return (c[0] + c[1] * a + c[2] * b + c[3] * d + c[4] * a * b
                    + c[5] * a * d + c[6] * b * d + c[7] * a * b * d)
        v = poly(x)
        pts = rng.uniform(0, 1, (3, 50)) * (np.array([4, 5, 3])[:, None])
        assert np.abs(grid.trilinear_sample(v, pts) - poly(pts)).max() < 1e-10


def test_trilinear_on_field():
    f = grid.identity_grid((4, 4, 4))
    out = grid.trilinear_sample(f, np.array([[1.5], [2.25], [0.5]]))
    assert np.allclose(out[:, 0], [1.5, 2.25, 0.5])


def test_cubic_sample_exact_on_quadratics_and_gradient(rng):
    x = grid.identity_grid((8, 8, 8))
    v = 0.3 * x[0] ** 2 - 0.2 * x[1] * x[2] + x[2]
    pts = rng.uniform(1.5, 5.5, (3, 40))
    val, grad = grid.cubic_sample(v, pts, with_gradient=True)
    exact = 0.3 * pts[0] ** 2 - 0.2 * pts[1] * pts[2] + pts[2]
    assert np.abs(val - exact).max() < 1e-10
    assert np.abs(grad[0] - 0.6 * pts[0]).max() < 1e-10
    assert np.abs(grad[2] - (1 - 0.2 * pts[1])).max() < 1e-10


# -- Jacobians ---------------------------------------------------------------

def test_jacobian_identity_translation_scaling():
    x = grid.identity_grid((5, 5, 5))
    assert np.allclose(grid.jacobian_determinant(x), 1.0)
    t = x + np.array([3.0, -1.0, 2.0])[:, None, None, None]
    assert np.allclose(grid.jacobian_determinant(t), 1.0)
    assert np.allclose(grid.jacobian_determinant(2 * x)[1:-1, 1:-1, 1:-1], 8.0)


@given(hnp.arrays(np.float64, (3, 3), elements=st.floats(-2, 2)),
       hnp.arrays(np.float64, (3,), elements=st.floats(-5, 5)))
def test_jacobian_of_affine_maps(A, t):
    x = grid.identity_grid((4, 5, 3))
    f = np.einsum("ij,j...->i...", A, x) + t[:, None, None, None]
    J = grid.jacobian_determinant(f)
    assert np.abs(J - np.linalg.det(A)).max() <= 1e-10 * max(1.0, np.abs(A).max() ** 3)


def test_cofactor_times_matrix_is_det(rng):
    M = rng.normal(size=(3, 3, 2, 2, 2))
    C = grid.cofactor_matrix(M)
    det = grid._det3(M)
    prod = np.einsum("ik...,jk...->ij...", M, C)
    assert np.allclose(prod, det * np.eye(3)[:, :, None, None, None])


def test_gradient_adjoint(rng):
    u = rng.normal(size=(5, 4, 6))
    g = rng.normal(size=(5, 4, 6))
    for ax in range(3):
        assert np.vdot(grid.gradient(u, ax), g) == pytest.approx(
            np.vdot(u, grid.gradient_adjoint(g, ax)), rel=1e-12)


# -- resampling ---------------------------------------------------------------

def test_resample_identity_and_uniform():
    v = grid.normalize_mass(np.ones((4, 4, 4)), 0.0)
    assert np.array_equal(grid.resample(v, grid.GridSpec((4, 4, 4))), v)
    out = grid.resample(v, grid.GridSpec((2, 2, 2)))
    assert np.allclose(out, 1 / 8) and out.sum() == pytest.approx(1.0)


def test_resample_delta_goes_to_containing_voxel():
    v = np.zeros((4, 4, 4))
    v[3, 1, 2] = 1.0
    out = grid.resample(v, grid.GridSpec((2, 2, 2)))
    expect = np.zeros((2, 2, 2))
    expect[1, 0, 1] = 1.0
    assert np.allclose(out, expect, atol=1e-15)


@given(volumes, st.tuples(*[st.integers(2, 7)] * 3))
def test_resample_preserves_mass(v, dims):
    if not v.sum() > 0:
        return
    out = grid.resample(grid.normalize_mass(v, 0.0), grid.GridSpec(dims))
    assert out.shape == dims
    assert abs(out.sum() - 1) <= 1e-9


def test_resample_field_rescales_coordinates():
    f = grid.identity_grid((8, 8, 8))
    g = grid.resample(f, grid.GridSpec((4, 4, 4)))
    assert np.allclose(g, grid.identity_grid((4, 4, 4)))


# -- file I/O -------------------------------------------------------------------

def test_volume_roundtrip(tmp_path, rng):
    v = rng.random((3, 4, 5))
    grid.write_volume(v, tmp_path / "a.npy", dtype=np.float64)
    assert np.array_equal(grid.read_volume(tmp_path / "a.npy"), v)
    grid.write_volume(v, tmp_path / "b.npy")
    back = grid.read_volume(tmp_path / "b.npy")
    assert back.dtype == np.float32
    assert np.array_equal(back, v.astype(np.float32))


def test_field_roundtrip(tmp_path, rng):
    f = rng.random((3, 2, 3, 4))
    grid.write_field(f, tmp_path / "f.npy", dtype=np.float64)
    assert np.array_equal(grid.read_field(tmp_path / "f.npy"), f)


def test_npy_header_is_v1_little_endian(tmp_path):
    grid.write_volume(np.ones((2, 2, 2)), tmp_path / "a.npy")
    raw = (tmp_path / "a.npy").read_bytes()
    assert raw[:8] == b"\x93NUMPY\x01\x00"
    assert b"'<f4'" in raw[:128]


def test_io_errors(tmp_path):
    np.save(tmp_path / "flat.npy", np.ones((3, 3)))
    with pytest.raises(ShapeError):
        grid.read_volume(tmp_path / "flat.npy")
    with pytest.raises(ShapeError):
        grid.read_field(tmp_path / "flat.npy")
    (tmp_path / "junk.npy").write_bytes(b"not an array file at all")
    with pytest.raises(FormatError):
        grid.read_volume(tmp_path / "junk.npy")
    np.save(tmp_path / "ints.npy", np.ones((2, 2, 2), dtype=np.int32))
    with pytest.raises(FormatError):
        grid.read_volume(tmp_path / "ints.npy")


def test_gridspec_contract():
    with pytest.raises(ShapeError):
        grid.GridSpec((1, 4, 4))
    with pytest.raises(ShapeError):
        grid.GridSpec((4, 4))
    assert grid.GridSpec((2, 3, 4)).size == 24
