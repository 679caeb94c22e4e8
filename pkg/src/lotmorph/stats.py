"""
Linear statistics on transport features.

PCA (with the Gram trick for wide matrices), penalized LDA with an
automatic penalty, single-pair CCA with a regression step, nearest
subspace classifiers and the usual classification metrics. Everything
runs in float64.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
from scipy import linalg
from scipy.stats import rankdata

from .errors import (ClassTooSmall, DegenerateData, DegenerateTarget,
                     DimMismatch, SingleClass, SingularPencil, WriteError)

__all__ = [
    "PcaModel", "pca_fit", "pca_transform", "pca_inverse",
    "PldaModel", "plda_fit", "plda_transform", "plda_predict", "alpha_grid",
    "calculate_alpha", "CcaModel", "cca_fit", "cca_transform", "cca_predict",
    "NsModel", "ns_fit", "ns_predict", "local_ns_predict", "ns_residuals",
    "auroc", "confusion_matrix", "metrics", "save_model", "load_model",
]

FORMAT_VERSION = 1


def _as2d(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimMismatch(f"expected a 2D matrix, got shape {X.shape}")
    return X


def _fix_sign(v):
    """Flip ``v`` so that its largest-magnitude entry is positive."""
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def _angle(u, v):
    c = abs(float(u @ v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    return float(np.arccos(min(1.0, c)))


# ---------------------------------------------------------------------------
# PCA

@dataclass(frozen=True)
class PcaModel:
    """``components`` are k orthonormal rows; ``variances`` the variance of
    the training scores along each of them."""

    mean: np.ndarray
    components: np.ndarray
    variances: np.ndarray
    explained_ratio: np.ndarray
    threshold: float

    @property
    def k(self):
        return self.components.shape[0]


def _select_k(ratio, threshold):
    cum = np.cumsum(ratio)
    # tolerate rounding in the cumulative sum at threshold 1
    return int(min(np.searchsorted(cum, threshold - 1e-12) + 1, len(ratio)))


def pca_fit(X, variance_threshold=0.96):
    """Principal directions of the rows of ``X``.

    When ``D > N`` the eigenproblem is solved on the ``N x N`` Gram matrix
    of the centered data and the eigenvectors are lifted back to feature
    space.

    Parameters
    ----------
    X : array_like, shape (N, D)
    variance_threshold : float in (0, 1]
        Keep the fewest leading components whose explained variance ratio
        sums to at least this value.

    Returns
    -------
    PcaModel
    """
    X = _as2d(X)
    N, D = X.shape
    if N < 2:
        raise DegenerateData("PCA needs at least two samples")
    if not 0 < variance_threshold <= 1:
        raise ValueError("variance_threshold must lie in (0, 1]")
    mean = X.mean(axis=0)
    Xc = X - mean
    if D > N:
        evals, evecs = linalg.eigh(Xc @ Xc.T)
        evals, evecs = evals[::-1], evecs[:, ::-1]
        scale = np.sqrt(np.clip(evals, 0, None))
        keep = scale > scale[0] * 1e-10 if scale[0] > 0 else np.zeros(N, bool)
        evals, evecs, scale = evals[keep], evecs[:, keep], scale[keep]
        comps = (Xc.T @ evecs / scale).T
    else:
        evals, evecs = linalg.eigh(Xc.T @ Xc)
        evals, evecs = evals[::-1], evecs[:, ::-1]
        keep = evals > max(evals[0], 0) * 1e-20 if evals[0] > 0 else np.zeros(D, bool)
        evals, comps = evals[keep], evecs[:, keep].T
    total = float((Xc ** 2).sum())
    if total <= 0 or comps.shape[0] == 0:
        raise DegenerateData("data has zero total variance")
    ratio = np.clip(evals, 0, None) / total
    k = _select_k(ratio, variance_threshold)
    comps = np.array([_fix_sign(c) for c in comps[:k]])
    return PcaModel(mean, comps, evals[:k] / (N - 1), ratio[:k], float(variance_threshold))


def _check_dim(model_dim, X, what):
    if X.shape[1] != model_dim:
        raise DimMismatch(f"{what}: expected {model_dim} columns, got {X.shape[1]}")


def pca_transform(model, X):
    """Scores ``(X - mean) B^T``."""
    X = _as2d(X)
    _check_dim(model.mean.size, X, "pca_transform")
    return (X - model.mean) @ model.components.T


def pca_inverse(model, Z):
    """Reconstruction ``Z B + mean``."""
    Z = _as2d(Z)
    _check_dim(model.k, Z, "pca_inverse")
    return Z @ model.components + model.mean


# ---------------------------------------------------------------------------
# penalized LDA

@dataclass(frozen=True)
class PldaModel:
    """Binary decision is ``w.x + b > 0`` for the higher class code."""

    w: np.ndarray
    alpha: float
    b: float
    classes: np.ndarray
    score_std: float


def _scatters(Z, labels):
    classes = np.unique(labels)
    mu = Z.mean(axis=0)
    St = (Z - mu).T @ (Z - mu)
    Sw = np.zeros_like(St)
    for c in classes:
        Zc = Z[labels == c]
        d = Zc - Zc.mean(axis=0)
        Sw += d.T @ d
    return St, Sw, classes


def plda_fit(Z, labels, alpha):
    """Direction maximizing ``w' S_T w / w' (S_W + alpha I) w``.

    The sign is chosen so the class with the larger code projects to the
    larger mean, and ``b`` puts the threshold halfway between the two
    extreme class means.

    Raises
    ------
    SingularPencil
        ``alpha == 0`` while ``S_W`` is rank deficient.
    """
    Z = _as2d(Z)
    labels = np.asarray(labels)
    if len(labels) != Z.shape[0]:
        raise DimMismatch("one label per row is required")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    St, Sw, classes = _scatters(Z, labels)
    if len(classes) < 2:
        raise SingleClass("PLDA needs at least two classes")
    k = Z.shape[1]
    A = Sw + alpha * np.eye(k)
    if alpha == 0 and np.linalg.matrix_rank(Sw) < k:
        raise SingularPencil("within-class scatter is singular; use alpha > 0")
    try:
        evals, evecs = linalg.eigh(St, A)
    except np.linalg.LinAlgError as exc:
        raise SingularPencil(str(exc)) from exc
    w = evecs[:, -1]
    w = w / np.linalg.norm(w)
    lo, hi = classes[0], classes[-1]
    m_lo = float((Z[labels == lo] @ w).mean())
    m_hi = float((Z[labels == hi] @ w).mean())
    if m_hi < m_lo:
        w, m_lo, m_hi = -w, -m_lo, -m_hi
    scores = Z @ w
    return PldaModel(w, float(alpha), -0.5 * (m_lo + m_hi), classes,
                     float(scores.std(ddof=1)) if len(scores) > 1 else 0.0)


def plda_transform(model, Z):
    Z = _as2d(Z)
    _check_dim(model.w.size, Z, "plda_transform")
    return Z @ model.w


def plda_predict(model, Z):
    """Higher class code where ``score + b >= 0``, lower code elsewhere."""
    if len(model.classes) != 2:
        raise ValueError("prediction is defined for two classes only")
    s = plda_transform(model, Z) + model.b
    return np.where(s >= 0, model.classes[1], model.classes[0])


def alpha_grid(Z, labels, count=25, lo=1e-4, hi=1e2):
    """Log-spaced candidates from ``lo * tau`` to ``hi * tau`` with
    ``tau = trace(S_W) / k``."""
    Z = _as2d(Z)
    _, Sw, _ = _scatters(Z, np.asarray(labels))
    tau = float(np.trace(Sw)) / Z.shape[1]
    if tau <= 0:
        tau = 1.0
    return np.logspace(np.log10(lo * tau), np.log10(hi * tau), count)


def calculate_alpha(Z, labels, grid=None, max_angle_deg=2.0):
    """Smallest penalty from which the discriminant direction stops moving.

    Returns the first candidate whose direction differs from the next
    candidate's by less than ``max_angle_deg``; the median candidate if no
    such pair exists.
    """
    if grid is None:
        grid = alpha_grid(Z, labels)
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("alpha grid is empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("alpha grid must be sorted ascending")
    if grid.size == 1:
        return float(grid[0])
    ws = [plda_fit(Z, labels, a).w for a in grid]
    limit = np.deg2rad(max_angle_deg)
    for j in range(len(grid) - 1):
        if _angle(ws[j], ws[j + 1]) < limit:
            return float(grid[j])
    return float(grid[len(grid) // 2])


# ---------------------------------------------------------------------------
# CCA

@dataclass(frozen=True)
class CcaModel:
    """First canonical pair; ``slope``/``intercept`` regress the Y
    projection on the X projection."""

    a: np.ndarray
    b: np.ndarray
    rho: float
    ridge_x: float
    ridge_y: float
    mean_x: np.ndarray
    mean_y: np.ndarray
    slope: float
    intercept: float
    x_std: float


def _inv_sqrt(S):
    evals, evecs = linalg.eigh(S)
    if evals.min() <= 0:
        raise DegenerateData("covariance is not positive definite; increase the ridge")
    return (evecs / np.sqrt(evals)) @ evecs.T


def cca_fit(Z, Y, ridge=None):
    """First canonical directions between ``Z`` (N, k) and ``Y`` (N, q).

    Parameters
    ----------
    ridge : float, optional
        Added to both covariance diagonals. By default each block gets
        ``1e-6 * trace / dim`` of its own covariance; pass 0 to disable.
    """
    X = _as2d(Z)
    Y = _as2d(Y)
    N = X.shape[0]
    if Y.shape[0] != N:
        raise DimMismatch("Z and Y need the same number of rows")
    if N <= 2:
        raise DegenerateData("CCA needs more than two samples")
    if np.any(Y.var(axis=0) == 0):
        raise DegenerateTarget("target has zero variance")
    mx, my = X.mean(axis=0), Y.mean(axis=0)
    Xc, Yc = X - mx, Y - my
    Sxx = Xc.T @ Xc / (N - 1)
    Syy = Yc.T @ Yc / (N - 1)
    Sxy = Xc.T @ Yc / (N - 1)
    if ridge is None:
        rx = 1e-6 * np.trace(Sxx) / Sxx.shape[0]
        ry = 1e-6 * np.trace(Syy) / Syy.shape[0]
    else:
        rx = ry = float(ridge)
    Sxx = Sxx + rx * np.eye(Sxx.shape[0])
    Syy = Syy + ry * np.eye(Syy.shape[0])
    Wx, Wy = _inv_sqrt(Sxx), _inv_sqrt(Syy)
    U, s, Vt = np.linalg.svd(Wx @ Sxy @ Wy)
    a = Wx @ U[:, 0]
    b = Wy @ Vt[0]
    # sign: largest-magnitude coefficient of b positive
    if b[np.argmax(np.abs(b))] < 0:
        a, b = -a, -b
    px, py = Xc @ a, Yc @ b
    slope, intercept = np.polyfit(px, py, 1)
    return CcaModel(a, b, float(min(max(s[0], 0.0), 1.0)), float(rx), float(ry),
                    mx, my, float(slope), float(intercept), float(px.std(ddof=1)))


def cca_transform(model, Z):
    """Canonical X projection ``(Z - mean) a``."""
    Z = _as2d(Z)
    _check_dim(model.a.size, Z, "cca_transform")
    return (Z - model.mean_x) @ model.a


def cca_predict(model, Z):
    """Regressed Y projection for new rows."""
    return model.slope * cca_transform(model, Z) + model.intercept


# ---------------------------------------------------------------------------
# nearest subspace

@dataclass(frozen=True)
class NsModel:
    classes: np.ndarray
    means: list
    bases: list
    samples: list
    rank_threshold: float


def _basis(Xc, threshold):
    """Orthonormal columns spanning the leading variance of centered rows."""
    if Xc.shape[0] == 0 or not np.any(Xc):
        return np.zeros((Xc.shape[1], 0))
    # Gram side keeps this cheap for wide data
    evals, evecs = linalg.eigh(Xc @ Xc.T)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    keep = evals > evals[0] * 1e-12
    evals, evecs = evals[keep], evecs[:, keep]
    r = _select_k(evals / evals.sum(), threshold)
    U = Xc.T @ evecs[:, :r] / np.sqrt(evals[:r])
    # one re-orthonormalization pass against rounding
    U, _ = np.linalg.qr(U)
    return U


def ns_fit(X, labels, rank_threshold=0.99):
    """Per-class mean and variance-thresholded orthonormal basis."""
    X = _as2d(X)
    labels = np.asarray(labels)
    if not 0 < rank_threshold <= 1:
        raise ValueError("rank_threshold must lie in (0, 1]")
    classes = np.unique(labels)
    if len(classes) < 2:
        raise SingleClass("nearest subspace needs at least two classes")
    means, bases, samples = [], [], []
    for c in classes:
        Xc = X[labels == c]
        if len(Xc) < 1:
            raise ClassTooSmall(f"class {c} has no samples")
        m = Xc.mean(axis=0)
        means.append(m)
        bases.append(_basis(Xc - m, rank_threshold))
        samples.append(Xc)
    return NsModel(classes, means, bases, samples, float(rank_threshold))


def _residual(d, U):
    return float(np.linalg.norm(d - U @ (U.T @ d)))


def ns_residuals(model, X):
    """``(n, n_classes)`` distances to each class's affine subspace."""
    X = _as2d(X)
    _check_dim(model.means[0].size, X, "ns_predict")
    R = np.empty((X.shape[0], len(model.classes)))
    for j, (m, U) in enumerate(zip(model.means, model.bases)):
        D = X - m
        R[:, j] = np.linalg.norm(D - (D @ U) @ U.T, axis=1)
    return R


def ns_predict(model, X):
    """Class with the smallest residual; ties go to the lower code."""
    return model.classes[np.argmin(ns_residuals(model, X), axis=1)]


def local_ns_predict(model, X, k_nn=10):
    """Nearest subspace built per query from its ``k_nn`` nearest training
    samples of each class."""
    X = _as2d(X)
    _check_dim(model.means[0].size, X, "local_ns_predict")
    if k_nn < 1:
        raise ValueError("k_nn must be >= 1")
    for c, S in zip(model.classes, model.samples):
        if len(S) < k_nn:
            raise ClassTooSmall(f"class {c} has {len(S)} samples, k_nn={k_nn}")
    out = np.empty(X.shape[0], dtype=model.classes.dtype)
    sq = [np.einsum("ij,ij->i", S, S) for S in model.samples]
    for i, x in enumerate(X):
        res = []
        for S, s2 in zip(model.samples, sq):
            d2 = s2 - 2.0 * (S @ x) + x @ x
            idx = np.sort(np.argsort(d2, kind="stable")[:k_nn])
            nb = S[idx]
            m = nb.mean(axis=0)
            res.append(_residual(x - m, _basis(nb - m, model.rank_threshold)))
        out[i] = model.classes[int(np.argmin(res))]
    return out


# ---------------------------------------------------------------------------
# metrics

def auroc(scores, labels):
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    The higher label code is the positive class; tied scores count 1/2.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.size != labels.size:
        raise DimMismatch("scores and labels differ in length")
    classes = np.unique(labels)
    if len(classes) != 2:
        raise SingleClass(f"AUROC needs exactly two classes, got {len(classes)}")
    pos = labels == classes[1]
    n1, n0 = int(pos.sum()), int((~pos).sum())
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def confusion_matrix(y_true, y_pred, classes=None):
    """Rows index the true class, columns the predicted class."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if classes is None:
        classes = np.unique(np.concatenate([y_true, y_pred]))
    pos = {c: i for i, c in enumerate(classes.tolist())}
    C = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true.tolist(), y_pred.tolist()):
        C[pos[t], pos[p]] += 1
    return C


def metrics(y_pred, y_true, scores=None):
    """Accuracy, balanced accuracy, confusion matrix and (with scores) AUROC.

    Returns
    -------
    dict
        JSON-ready: plain floats, nested lists, ``classes`` in sorted order.
    """
    y_pred = np.asarray(y_pred)
    y_true = np.asarray(y_true)
    if y_pred.shape != y_true.shape:
        raise DimMismatch("predictions and labels differ in length")
    classes = np.unique(np.concatenate([y_true, y_pred]))
    C = confusion_matrix(y_true, y_pred, classes)
    support = C.sum(axis=1)
    recall = np.diag(C)[support > 0] / support[support > 0]
    out = {
        "accuracy": float(np.mean(y_pred == y_true)),
        "balanced_accuracy": float(recall.mean()),
        "confusion_matrix": C.tolist(),
        "classes": classes.tolist(),
        "auroc": None,
    }
    if scores is not None:
        out["auroc"] = auroc(scores, y_true)
    return out


# ---------------------------------------------------------------------------
# persistence

_KINDS = {"pca": PcaModel, "plda": PldaModel, "cca": CcaModel, "ns": NsModel}


def save_model(model, directory):
    """Write ``model.json`` plus one ``.npy`` per array attribute."""
    directory = Path(directory)
    kind = next(k for k, cls in _KINDS.items() if isinstance(model, cls))
    meta = {"kind": kind, "version": FORMAT_VERSION, "arrays": {}, "scalars": {},
            "sign_convention": {"pca": "largest-magnitude coordinate positive",
                                "plda": "higher class code has positive mean projection",
                                "cca": "largest-magnitude Y coefficient positive"}[kind]
            if kind != "ns" else None}
    try:
        directory.mkdir(parents=True, exist_ok=True)
        for f in fields(model):
            val = getattr(model, f.name)
            if isinstance(val, list):
                names = []
                for i, a in enumerate(val):
                    name = f"{f.name}_{i}.npy"
                    np.save(directory / name, np.asarray(a), allow_pickle=False)
                    names.append(name)
                meta["arrays"][f.name] = names
            elif isinstance(val, np.ndarray):
                name = f"{f.name}.npy"
                np.save(directory / name, val, allow_pickle=False)
                meta["arrays"][f.name] = name
            else:
                meta["scalars"][f.name] = val
        if kind == "pca":
            meta["scalars"]["k"] = model.k
        (directory / "model.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    except OSError as exc:
        raise WriteError(f"cannot write model to {directory}: {exc}") from exc
    return directory


def load_model(directory):
    directory = Path(directory)
    meta = json.loads((directory / "model.json").read_text())
    cls = _KINDS[meta["kind"]]
    kw = {}
    for f in fields(cls):
        if f.name in meta["arrays"]:
            ref = meta["arrays"][f.name]
            if isinstance(ref, list):
                kw[f.name] = [np.load(directory / r) for r in ref]
            else:
                kw[f.name] = np.load(directory / ref)
        else:
            kw[f.name] = meta["scalars"][f.name]
    return cls(**kw)
