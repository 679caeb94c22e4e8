"""
Mass-preserving transport maps between 3D densities.

The quadratic-cost optimal map from ``I0`` to ``I1`` is the gradient of a
convex function, so it is parameterized as ``f = x + grad(psi)`` and the
mass-preservation constraint ``det(Df) I1(f) = I0`` becomes a Monge-Ampere
equation for ``psi``. It is solved by damped Newton iterations
(Levenberg-Marquardt style, with a DCT-preconditioned Krylov inner solve) on
a coarse-to-fine pyramid, starting from the separable map that matches the
axis marginals. Every accepted step lowers the weighted residual norm and
keeps ``x^2/2 + psi`` discretely convex, so maps never fold.
"""
from __future__ import annotations

import hashlib
import json
import logging
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import fft
from scipy.sparse.linalg import LinearOperator, gmres

from . import grid
from .errors import (EmptyInput, GridMismatch, NonPositiveDensity,
                     NotNormalized, WriteError, ZeroMass)

log = logging.getLogger(__name__)

__all__ = [
    "SolverConfig", "MongeSolution", "solve_monge", "mp_residual",
    "transport_cost", "invert_field", "InverseResult", "pushforward",
    "pullback", "geodesic_map", "geodesic_density", "intrinsic_mean",
    "save_solution", "load_solution",
]


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of :func:`solve_monge`.

    Attributes
    ----------
    levels : int
        Pyramid depth. Every axis is halved per level; coarsening stops
        early once the smallest axis would drop below ``min_level_size``.
    max_iters : int
        Newton iterations (accepted or not) allowed per level.
    damping0, damping_up, damping_down, damping_max : float
        Levenberg-Marquardt damping of the Newton system: its floor, its
        growth factor when no step length is accepted, its shrink factor
        after a full step, and the cap at which a level gives up.
    min_step : float
        Shortest step length tried by the backtracking line search.
    krylov_iters, krylov_tol : int, float
        GMRES budget and relative tolerance of the inner linear solve.
    tol : float
        Relative residual at which a level stops early.
    tau_mp : float
        Threshold on the reported residual that decides ``converged``.
    weight_delta : float
        The Newton residual is ``(a - b) / sqrt(a b)`` with ``a = det(Df) I1(f) + delta``
        and ``b = I0 + delta``, ``delta = weight_delta * max(I0)``. It treats
        over- and under-compression alike and keeps near-empty voxels from
        dominating.
    init_floors : tuple of float
        Candidate uniform floors (relative to the peak) added to the axis
        marginals when building the separable initial map.
    stall_window, stall_tol : int, float
        A level stops when the weighted residual norm improved by less than
        ``stall_tol`` (relative) over the last ``stall_window`` accepted steps.
    """

    levels: int = 3
    min_level_size: int = 16
    max_iters: int = 40
    damping0: float = 1e-2
    damping_up: float = 10.0
    damping_down: float = 10.0
    damping_max: float = 10.0
    min_step: float = 1.0 / 64
    krylov_iters: int = 10
    krylov_tol: float = 0.1
    tol: float = 1e-3
    tau_mp: float = 5e-2
    weight_delta: float = 1e-3
    init_floors: tuple = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3)
    stall_window: int = 8
    stall_tol: float = 1e-3

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.damping0 > 0:
            raise ValueError("damping must be positive")
        if not self.tau_mp > 0:
            raise ValueError("tau_mp must be positive")
        if not self.weight_delta > 0:
            raise ValueError("weight_delta must be positive")
        if not 0 < self.min_step <= 1:
            raise ValueError("min_step must lie in (0, 1]")
        if not self.init_floors:
            raise ValueError("init_floors must not be empty")
        object.__setattr__(self, "init_floors", tuple(float(x) for x in self.init_floors))

    def digest(self):
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class MongeSolution:
    """Result of :func:`solve_monge`.

    ``merit_history`` holds, per level, the weighted residual norm after
    every accepted step (non-increasing within a level).
    """

    map: np.ndarray
    transport_cost: float
    mp_residual: float
    iterations_per_level: list
    converged: bool
    merit_history: list = field(default_factory=list, repr=False)


def transport_cost(f, reference):
    """``sum_x |x - f(x)|^2 I0(x)``."""
    u = grid.displacement(f)
    return float(((u ** 2).sum(axis=0) * reference).sum())


def mp_residual(f, reference, target):
    """Relative L2 norm of ``det(Df) I1(f) - I0`` (no clipping)."""
    r = grid.jacobian_determinant(f) * grid.trilinear_sample(target, f) - reference
    return float(np.linalg.norm(r) / np.linalg.norm(reference))


def _check_inputs(reference, target):
    if reference.shape != target.shape:
        raise GridMismatch(f"reference {reference.shape} vs target {target.shape}")
    grid.GridSpec.of(reference)
    for name, v in (("reference", reference), ("target", target)):
        if not np.all(v > 0):
            raise NonPositiveDensity(f"{name} must be strictly positive; "
                                     "normalize with epsilon > 0 first")
        if abs(v.sum() - 1.0) > 1e-6:
            raise NotNormalized(f"{name} sums to {v.sum():.8g}, expected 1")


# ---------------------------------------------------------------------------
# potential discretization
#
# psi lives on voxel centers and is extended by even reflection about the
# first and last voxel, so the normal displacement vanishes on the faces and
# the map sends the grid box onto itself.

def _sl(axis, s):
    idx = [slice(None)] * 3
    idx[axis] = s
    return tuple(idx)


def _diff1(a, axis):
    """Central difference; zero on the two faces by reflection."""
    out = np.zeros_like(a)
    out[_sl(axis, slice(1, -1))] = 0.5 * (a[_sl(axis, slice(2, None))]
                                          - a[_sl(axis, slice(None, -2))])
    return out


def _diff2(a, axis):
    """Second difference with even reflection about the end voxels."""
    out = np.empty_like(a)
    out[_sl(axis, slice(1, -1))] = (a[_sl(axis, slice(2, None))]
                                    - 2.0 * a[_sl(axis, slice(1, -1))]
                                    + a[_sl(axis, slice(None, -2))])
    out[_sl(axis, 0)] = 2.0 * (a[_sl(axis, 1)] - a[_sl(axis, 0)])
    out[_sl(axis, -1)] = 2.0 * (a[_sl(axis, -2)] - a[_sl(axis, -1)])
    return out


def _potential_disp(psi):
    return np.stack([_diff1(psi, j) for j in range(3)])


def _potential_hessian(psi, u):
    H = np.empty((3, 3) + psi.shape)
    for i in range(3):
        H[i, i] = _diff2(psi, i)
        for j in range(i + 1, 3):
            H[i, j] = H[j, i] = 0.5 * (_diff1(u[i], j) + _diff1(u[j], i))
    return H


def _min_leading_minor(M):
    """Smallest leading principal minor of a (3, 3, ...) stack; positive
    everywhere iff every matrix is positive definite."""
    m1 = M[0, 0]
    m2 = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return float(min(m1.min(), m2.min(), grid._det3(M).min()))


class _State:
    __slots__ = ("psi", "f", "M", "J", "W", "dW", "C", "r", "slope", "merit")


class _Level:
    """Weighted Monge-Ampere residual on one pyramid level."""

    def __init__(self, I0, I1, cfg):
        self.I0 = I0
        self.I1 = np.ascontiguousarray(I1)
        self.shape = I0.shape
        self.ident = grid.identity_grid(I0.shape)
        self.delta = cfg.weight_delta * I0.max()
        self.norm0 = np.linalg.norm(I0)
        # DCT-I diagonalizes the reflected second difference
        eig = [2.0 - 2.0 * np.cos(np.pi * np.arange(n) / (n - 1)) for n in self.shape]
        lam = eig[0][:, None, None] + eig[1][None, :, None] + eig[2][None, None, :]
        with np.errstate(divide="ignore"):
            inv = 1.0 / lam
        inv[0, 0, 0] = 0.0
        self.lam = lam
        self.lam_inv = inv
        e0 = np.zeros(self.shape)
        e0[0, 0, 0] = 1.0
        self.zero_mode = fft.idctn(e0, type=1)

    def neg_laplacian(self, a):
        return fft.idctn(fft.dctn(a, type=1) * self.lam, type=1)

    def neg_laplacian_inv(self, a):
        return fft.idctn(fft.dctn(a, type=1) * self.lam_inv, type=1)

    def state(self, psi, full=True):
        s = _State()
        s.psi = psi
        u = _potential_disp(psi)
        s.f = self.ident + u
        M = _potential_hessian(psi, u)
        for i in range(3):
            M[i, i] += 1.0
        s.M = M
        s.J = grid._det3(M)
        if full:
            s.W, s.dW = grid.cubic_sample(self.I1, s.f, with_gradient=True)
            s.C = grid.cofactor_matrix(M)
        else:
            s.W = grid.cubic_sample(self.I1, s.f)
        a = s.J * s.W + self.delta
        b = self.I0 + self.delta
        root = np.sqrt(np.maximum(a, self.delta) * b)
        s.r = (a - b) / root
        # d r / d(J W); zero where J W has gone negative
        s.slope = np.where(a > self.delta, (a + b) / (2.0 * a * root), 0.0) if full else None
        s.merit = float(np.vdot(s.r, s.r))
        return s

    def relative_residual(self, s):
        return float(np.linalg.norm(s.J * s.W - self.I0) / self.norm0)

    def jvp(self, s, v):
        du = _potential_disp(v)
        dH = _potential_hessian(v, du)
        dJ = sum(s.C[i, j] * dH[i, j] for i in range(3) for j in range(3))
        return s.slope * (s.J * (s.dW * du).sum(axis=0) + s.W * dJ)


def _newton_step(level, s, damping, cfg):
    shape = level.shape
    n = s.r.size
    coef = s.slope * np.maximum(s.J * s.W, 0.0) + damping

    def precond(z):
        return level.neg_laplacian_inv(z.reshape(shape) / coef)

    def matvec(z):
        a = z.reshape(shape) / coef
        y = fft.dctn(a, type=1)
        d = fft.idctn(y * level.lam_inv, type=1)
        # -lap applied to d is a with its constant mode removed
        return (level.jvp(s, d) + damping * (a - y[0, 0, 0] * level.zero_mode)).ravel()

    op = LinearOperator((n, n), matvec=matvec, dtype=np.float64)
    z, _ = gmres(op, -s.r.ravel(), rtol=cfg.krylov_tol, atol=0.0,
                 restart=cfg.krylov_iters, maxiter=1)
    return precond(z)


def _solve_level(level, psi, cfg, goal, accept=None):
    """Damped Newton iterations on one pyramid level.

    ``accept(psi)`` optionally tests iterates against the reported
    tolerance: the merit weights the low-density tails heavily and on noisy
    targets can keep falling while the bulk residual rises past it, in
    which case the latest iterate that passed is returned instead.
    """
    s = level.state(psi)
    damping = cfg.damping0
    merits = [s.merit]
    keep = (psi, 1) if accept is not None and accept(psi) else None
    it = 0
    while it < cfg.max_iters:
        it += 1
        d = _newton_step(level, s, damping, cfg)
        step = 1.0
        accepted = None
        while step >= cfg.min_step:
            t = level.state(s.psi + step * d, full=False)
            if t.merit < s.merit and _min_leading_minor(t.M) > 0:
                accepted = t
                break
            step *= 0.5
        if accepted is None:
            damping *= cfg.damping_up
            if damping > cfg.damping_max:
                break
            continue
        s = level.state(accepted.psi)
        merits.append(s.merit)
        if accept is not None and accept(s.psi):
            keep = (s.psi, len(merits))
        if step == 1.0:
            damping = max(damping / cfg.damping_down, cfg.damping0)
        if level.relative_residual(s) <= goal:
            break
        w = cfg.stall_window
        if len(merits) > w and merits[-w - 1] - s.merit <= cfg.stall_tol * merits[-w - 1]:
            break
    if keep is not None and keep[1] < len(merits):
        return keep[0], it, merits[:keep[1]]
    return s.psi, it, merits


# ---------------------------------------------------------------------------
# initialization and pyramid

def _marginal_rearrangement(p0, p1):
    """Monotone map between two 1D densities sampled at nodes 0..n-1."""
    n = len(p0)
    x = np.arange(n, dtype=np.float64)
    c0 = np.concatenate([[0.0], np.cumsum(0.5 * (p0[1:] + p0[:-1]))])
    c1 = np.concatenate([[0.0], np.cumsum(0.5 * (p1[1:] + p1[:-1]))])
    return np.interp(c0 / c0[-1], c1 / c1[-1], x)


def _separable_potential(I0, I1, floor):
    """Potential of the product of per-axis monotone rearrangements."""
    psi = np.zeros(I0.shape)
    for ax in range(3):
        other = tuple(a for a in range(3) if a != ax)
        m0 = I0.sum(axis=other)
        m1 = I1.sum(axis=other)
        T = _marginal_rearrangement(m0 + floor * m0.max(), m1 + floor * m1.max())
        u = T - np.arange(len(T))
        phi = np.concatenate([[0.0], np.cumsum(0.5 * (u[1:] + u[:-1]))])
        shape = [1, 1, 1]
        shape[ax] = -1
        psi = psi + phi.reshape(shape)
    return psi


def _initial_potential(level, cfg):
    """Separable start; among near-equal residuals prefer the largest floor,
    which keeps the start farther from degenerate compression."""
    cands = []
    for floor in sorted(cfg.init_floors):
        psi = _separable_potential(level.I0, level.I1, floor)
        cands.append((level.state(psi, full=False).merit, psi))
    best = min(m for m, _ in cands)
    return [psi for m, psi in cands if m <= 1.05 * best][-1]


def _pyramid_dims(dims, levels, min_size):
    out = [tuple(dims)]
    for _ in range(levels - 1):
        prev = out[-1]
        if min(prev) // 2 < min_size:
            break
        out.append(tuple(n // 2 for n in prev))
    return out[::-1]


def _upsample_potential(psi, dims):
    """Carry a potential to a finer grid (same scale factor on every axis)."""
    src = np.array(psi.shape, dtype=np.float64)
    s = src / np.array(dims, dtype=np.float64)
    x = grid.identity_grid(dims)
    pts = np.stack([(x[i] + 0.5) * s[i] - 0.5 for i in range(3)])
    # potentials scale with length squared
    return grid.cubic_sample(np.ascontiguousarray(psi), pts) / float(np.mean(s) ** 2)


def _blend_convex(base, corr):
    """``base + b * corr`` with the largest b in a halving sequence that keeps
    the map convex (``base`` itself is)."""
    b = 1.0
    for _ in range(20):
        psi = base + b * corr
        M = _potential_hessian(psi, _potential_disp(psi))
        for i in range(3):
            M[i, i] += 1.0
        if _min_leading_minor(M) > 0:
            return psi
        b *= 0.5
    return base


def solve_monge(reference, target, cfg=SolverConfig()):
    """Compute the optimal transport map from ``reference`` to ``target``.

    Parameters
    ----------
    reference, target : ndarray, shape (h, w, d)
        Strictly positive densities with unit mass on the same grid.
    cfg : SolverConfig

    Returns
    -------
    MongeSolution
        ``map`` holds target-frame coordinates for every reference voxel.
        ``converged`` is False (not an error) when the final relative
        mass-preservation residual exceeds ``cfg.tau_mp``.
    """
    reference = np.asarray(reference, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    _check_inputs(reference, target)
    dims = reference.shape
    plan = _pyramid_dims(dims, cfg.levels, cfg.min_level_size)
    psi = prev_base = None
    iters, history = [], []
    for lvl, ldims in enumerate(plan):
        level = _Level(grid.resample(reference, ldims), grid.resample(target, ldims), cfg)
        base = _initial_potential(level, cfg)
        if psi is None:
            psi = base
        else:
            psi = _blend_convex(base, _upsample_potential(psi - prev_base, ldims))
        accept = None
        if lvl == len(plan) - 1:
            goal = cfg.tol
            ident = grid.identity_grid(dims)
            accept = lambda p: mp_residual(ident + _potential_disp(p), reference,
                                           target) <= cfg.tau_mp
        else:
            goal = 2 * cfg.tol
        psi, n, merits = _solve_level(level, psi, cfg, goal, accept)
        prev_base = base
        iters.append(n)
        history.append(merits)
        log.debug("level %s dims=%s iters=%d merit=%.3g", lvl, ldims, n, merits[-1])
    f = grid.identity_grid(dims) + _potential_disp(psi)
    res = mp_residual(f, reference, target)
    return MongeSolution(
        map=f,
        transport_cost=transport_cost(f, reference),
        mp_residual=res,
        iterations_per_level=iters,
        converged=res <= cfg.tau_mp,
        merit_history=history,
    )


# ---------------------------------------------------------------------------
# inversion and density transforms

@dataclass
class InverseResult:
    """Inverse field with diagnostics.

    ``residual`` is ``|f(g(x)) - x|`` per voxel, ``converged`` tells whether
    the last update fell below the tolerance.
    """

    field: np.ndarray
    residual: np.ndarray
    iterations: int
    converged: bool


def invert_field(f, tol=1e-3, max_iters=50):
    """Invert a coordinate field by fixed-point iteration on the displacement.

    With ``u = f - Id``, the plain iteration ``v <- -u(x + v)`` is the
    update ``v <- v - r`` with defect ``r = f(x + v) - x``. It contracts
    only where ``Df`` is within a factor of two of the identity, so each
    voxel's defect is preconditioned by the inverse Jacobian of the
    (trilinearly interpolated) map, ``v <- v - b Df(x + v)^-1 r``, with a
    per-voxel step ``b`` that is halved whenever the update fails to shrink
    ``|r|``. Where ``Df`` is the identity this is the plain iteration;
    where it is singular (clamped at the box faces) the plain step is used.
    Stops when the largest update is below ``tol`` voxels.

    Returns
    -------
    InverseResult
        ``field`` is ``g = Id + v`` with ``f(g(x)) ~ x``.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 4 or f.shape[0] != 3:
        raise GridMismatch(f"expected a (3, h, w, d) field, got {f.shape}")
    ident = grid.identity_grid(f.shape[1:])

    def defect(v):
        vals, grads = zip(*(grid.sample_with_gradient(f[i], ident + v) for i in range(3)))
        r = np.stack(vals) - ident
        J = np.moveaxis(np.stack(grads), (0, 1), (-2, -1))
        d = np.moveaxis(r, 0, -1)
        det = np.linalg.det(J)
        good = np.isfinite(det) & (np.abs(det) > 1e-8)
        Js = np.where(good[..., None, None], J, np.eye(3))
        d = np.where(good[..., None], np.linalg.solve(Js, d[..., None])[..., 0], d)
        return r, np.moveaxis(d, -1, 0)

    v = np.zeros_like(f)
    r, d = defect(v)
    err = np.linalg.norm(r, axis=0)
    b = np.ones(f.shape[1:])
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        step = b * d
        if float(np.abs(step).max()) < tol:
            converged = True
            break
        cand = v - step
        rc, dc = defect(cand)
        ec = np.linalg.norm(rc, axis=0)
        ok = ec < err
        v = np.where(ok, cand, v)
        r = np.where(ok, rc, r)
        d = np.where(ok, dc, d)
        err = np.where(ok, ec, err)
        b = np.where(ok, np.minimum(1.0, 2.0 * b), 0.5 * b)
    g = ident + v
    back = grid.trilinear_sample(f, g)
    residual = np.linalg.norm(back - ident, axis=0)
    return InverseResult(field=g, residual=residual, iterations=it, converged=converged)


def _transform(density, f, name):
    density = np.asarray(density, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (3,) + density.shape:
        raise GridMismatch(f"{name}: field {f.shape} does not match volume {density.shape}")
    J = np.maximum(grid.jacobian_determinant(f), 0.0)
    out = J * grid.trilinear_sample(density, f)
    total = out.sum()
    if not total > 0:
        raise ZeroMass(f"{name} produced no mass")
    return out / total


def pushforward(reference, f_inv):
    """``max(0, det(D f_inv)) * I0(f_inv)``, renormalized to unit mass.

    With ``f_inv`` the inverse of a converged map to some target, this
    reconstructs the target from the reference.
    """
    return _transform(reference, f_inv, "pushforward")


def pullback(target, f):
    """``max(0, det(Df)) * I1(f)``, renormalized; reproduces the reference
    for a converged map."""
    return _transform(target, f, "pullback")


def geodesic_map(f, alpha):
    """``(1 - alpha) Id + alpha f``; alpha outside [0, 1] extrapolates
    and triggers a warning."""
    if not 0.0 <= alpha <= 1.0:
        warnings.warn(f"alpha={alpha} outside [0, 1]: extrapolating the geodesic",
                      stacklevel=2)
    f = np.asarray(f, dtype=np.float64)
    ident = grid.identity_grid(f.shape[1:])
    return (1.0 - alpha) * ident + alpha * f


def geodesic_density(target, f, alpha):
    """Density at ``alpha`` on the path from ``target`` (alpha = 0) to the
    reference (alpha = 1), obtained by pulling the target back through
    :func:`geodesic_map`."""
    target = np.asarray(target, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (3,) + target.shape:
        raise GridMismatch(f"field {f.shape} does not match volume {target.shape}")
    if alpha == 0:
        # the identity map leaves the target untouched
        return target.copy()
    return pullback(target, geodesic_map(f, alpha))


def intrinsic_mean(maps, reference, iters=1, targets=None, cfg=SolverConfig()):
    """Barycenter density obtained by pushing the reference through the
    inverse of the mean transport map.

    Parameters
    ----------
    maps : sequence of ndarray, shape (3, h, w, d)
        Maps from ``reference`` to each sample.
    reference : ndarray
    iters : int
        Number of averaging rounds. Rounds after the first re-solve every
        map against the current mean, which needs ``targets``.
    targets : sequence of ndarray, optional
        The sample densities, in the order of ``maps``.
    cfg : SolverConfig
        Used for the re-solves.
    """
    maps = [np.asarray(m, dtype=np.float64) for m in maps]
    if not maps:
        raise EmptyInput("intrinsic_mean needs at least one map")
    reference = np.asarray(reference, dtype=np.float64)
    for m in maps:
        if m.shape != (3,) + reference.shape:
            raise GridMismatch(f"map {m.shape} does not match reference {reference.shape}")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if iters > 1:
        if targets is None or len(targets) != len(maps):
            raise ValueError("iters > 1 needs one target density per map")
    current = reference
    for k in range(iters):
        if k > 0:
            maps = [solve_monge(current, t, cfg).map for t in targets]
        mean_map = np.mean(maps, axis=0)
        current = pushforward(current, invert_field(mean_map).field)
        if k + 1 < iters:
            current = grid.normalize_mass(current)
    return current


# ---------------------------------------------------------------------------
# persistence

def save_solution(solution, path, cfg=None, reference=None):
    """Write the map to ``path`` (NPY) and its metadata to a JSON sidecar
    with the same stem."""
    path = Path(path)
    meta = {
        "transport_cost": solution.transport_cost,
        "mp_residual": solution.mp_residual,
        "iterations_per_level": [int(n) for n in solution.iterations_per_level],
        "converged": bool(solution.converged),
        "config_hash": cfg.digest() if cfg is not None else None,
        "reference_hash": grid.array_digest(reference) if reference is not None else None,
    }
    try:
        grid.write_field(solution.map, path, dtype=np.float64)
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    except OSError as exc:
        raise WriteError(f"cannot write solution to {path}: {exc}") from exc
    return path


def load_solution(path):
    """Inverse of :func:`save_solution`; returns ``(MongeSolution, meta)``."""
    path = Path(path)
    f = grid.read_field(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    sol = MongeSolution(
        map=f,
        transport_cost=float(meta["transport_cost"]),
        mp_residual=float(meta["mp_residual"]),
        iterations_per_level=list(meta["iterations_per_level"]),
        converged=bool(meta["converged"]),
    )
    return sol, meta
