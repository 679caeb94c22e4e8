"""
Volumes along analysis directions and static figures.

Directions found in feature space are turned back into maps, inverted and
applied to the reference, giving densities that show what a component or
discriminant direction does to shape. Figures are plain PNG files written
deterministically (no timestamps or software tags).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from . import embedding, grid, solver, stats
from .errors import DimMismatch, EmptyInput, WriteError

__all__ = ["ModeSpec", "mode_volumes", "pca_mode_spec", "plda_direction_lift",
           "cca_direction_lift", "emit_montage", "emit_projection_plot",
           "emit_roc", "emit_confusion", "roc_curve", "PCA_ALPHAS", "CCA_ALPHAS"]

PCA_ALPHAS = (-2.0, -1.0, 0.0, 1.0, 2.0)
CCA_ALPHAS = (-1.0, -0.5, 0.0, 0.5, 1.0)


@dataclass(frozen=True)
class ModeSpec:
    """Unit feature-space direction, sampling multipliers and scale.

    Samples sit at ``mean + alpha * sigma * direction`` for each alpha.
    """

    direction: np.ndarray
    alphas: tuple
    sigma: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        n = np.linalg.norm(d)
        if n == 0:
            raise ValueError("direction must be non-zero")
        alphas = tuple(float(a) for a in self.alphas)
        if list(alphas) != sorted(alphas) or 0.0 not in alphas:
            raise ValueError("alphas must be sorted ascending and contain 0")
        object.__setattr__(self, "direction", d / n)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "sigma", float(self.sigma))


def mode_volumes(spec, mean_feature, reference, inv_tol=1e-3, inv_iters=50):
    """Densities obtained by pushing the reference through the inverse of
    each sampled map.

    Returns
    -------
    list of ndarray
        One unit-mass volume per entry of ``spec.alphas``.
    """
    reference = np.asarray(reference, dtype=np.float64)
    mean_feature = np.asarray(mean_feature, dtype=np.float64).ravel()
    D = 3 * reference.size
    if mean_feature.size != D or spec.direction.size != D:
        raise DimMismatch(f"features must have length {D}")
    out = []
    for a in spec.alphas:
        f = embedding.defeaturize(mean_feature + a * spec.sigma * spec.direction, reference)
        g = solver.invert_field(f, inv_tol, inv_iters).field
        out.append(solver.pushforward(reference, g))
    return out


def pca_mode_spec(pca, index, alphas=PCA_ALPHAS):
    """Component ``index`` scaled by the std of the training scores."""
    if not 0 <= index < pca.k:
        raise DimMismatch(f"model has {pca.k} components, asked for {index}")
    return ModeSpec(pca.components[index], alphas, float(np.sqrt(pca.variances[index])))


def plda_direction_lift(plda, pca, alphas=PCA_ALPHAS):
    """Discriminant direction ``w B`` in feature space."""
    if plda.w.size != pca.k:
        raise DimMismatch(f"PLDA has {plda.w.size} inputs, PCA has {pca.k} components")
    return ModeSpec(plda.w @ pca.components, alphas, plda.score_std)


def cca_direction_lift(cca, pca, stds=CCA_ALPHAS):
    """Canonical X direction ``a B`` in feature space; ``stds`` become the
    alphas."""
    if cca.a.size != pca.k:
        raise DimMismatch(f"CCA has {cca.a.size} inputs, PCA has {pca.k} components")
    d = cca.a @ pca.components
    # sigma refers to the unit direction, not to the scaled canonical vector
    sigma = cca.x_std / np.linalg.norm(cca.a)
    return ModeSpec(d, stds, sigma)


# ---------------------------------------------------------------------------
# montages

_AXES = {"x": 0, "y": 1, "z": 2}


def _take_slice(v, axis, index):
    return np.take(v, index, axis=axis)


def emit_montage(volumes, captions, out_path, axis="z", slice_index=None, zoom=4):
    """Write an 8-bit grayscale PNG with one panel per volume.

    All panels share one intensity window (min to max over the shown
    slices). The default slice is the center-of-mass slice of the first
    volume along ``axis``.
    """
    if len(volumes) == 0:
        raise EmptyInput("montage needs at least one volume")
    if axis not in _AXES:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    captions = [str(c) for c in captions] if captions is not None else [""] * len(volumes)
    if len(captions) != len(volumes):
        raise DimMismatch("one caption per volume is required")
    ax = _AXES[axis]
    vols = [np.asarray(v, dtype=np.float64) for v in volumes]
    if slice_index is None:
        slice_index = int(round(grid.center_of_mass(vols[0])[ax]))
    slices = [_take_slice(v, ax, slice_index) for v in vols]
    lo = min(float(s.min()) for s in slices)
    hi = max(float(s.max()) for s in slices)
    panels = []
    for s in slices:
        if hi > lo:
            g = np.round(255.0 * (s - lo) / (hi - lo))
        else:
            g = np.full(s.shape, 128.0)
        img = Image.fromarray(g.astype(np.uint8))
        panels.append(img.resize((img.width * zoom, img.height * zoom), Image.NEAREST))
    font = ImageFont.load_default()
    strip = 14
    pad = 2
    pw = max(p.width for p in panels)
    ph = max(p.height for p in panels)
    canvas = Image.new("L", (len(panels) * (pw + pad) + pad, ph + strip + 2 * pad), 0)
    draw = ImageDraw.Draw(canvas)
    for i, (p, cap) in enumerate(zip(panels, captions)):
        x0 = pad + i * (pw + pad)
        canvas.paste(p, (x0, pad))
        draw.text((x0 + 2, pad + ph + 1), cap, fill=255, font=font)
    try:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        canvas.save(out_path, format="PNG", optimize=False)
    except OSError as exc:
        raise WriteError(f"cannot write {out_path}: {exc}") from exc
    return Path(out_path)


# ---------------------------------------------------------------------------
# plots

def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, out_path):
    plt = _pyplot()
    try:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out_path, format="png", dpi=100, metadata={"Software": None})
    except OSError as exc:
        raise WriteError(f"cannot write {out_path}: {exc}") from exc
    finally:
        plt.close(fig)
    return Path(out_path)


def roc_curve(scores, labels):
    """False and true positive rates at every distinct threshold, the
    higher label code being positive."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    pos = labels == classes[-1]
    order = np.argsort(-scores, kind="stable")
    s, p = scores[order], pos[order]
    tp = np.cumsum(p)
    fp = np.cumsum(~p)
    last = np.r_[np.diff(s) != 0, True]
    tpr = np.r_[0.0, tp[last] / max(pos.sum(), 1)]
    fpr = np.r_[0.0, fp[last] / max((~pos).sum(), 1)]
    return fpr, tpr


def emit_projection_plot(scores_train, labels_train, scores_test, labels_test,
                         out_path, fit="gaussian"):
    """Per-class histograms of projections with fitted Gaussian curves,
    training (solid) and testing (dashed)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    colors = ["tab:blue", "tab:red", "tab:green", "tab:orange"]
    allv = np.concatenate([np.ravel(scores_train), np.ravel(scores_test)])
    bins = np.linspace(allv.min(), allv.max(), 25) if allv.max() > allv.min() else 10
    xs = np.linspace(allv.min() - 0.1 * np.ptp(allv), allv.max() + 0.1 * np.ptp(allv), 200)
    for part, (sc, lb, style) in enumerate(((scores_train, labels_train, "-"),
                                            (scores_test, labels_test, "--"))):
        sc, lb = np.asarray(sc, float), np.asarray(lb)
        for j, c in enumerate(np.unique(lb)):
            v = sc[lb == c]
            col = colors[j % len(colors)]
            name = f"{'train' if part == 0 else 'test'} {c}"
            ax.hist(v, bins=bins, density=True, alpha=0.25, color=col,
                    histtype="stepfilled" if part == 0 else "step", label=name)
            if fit == "gaussian" and len(v) > 1 and v.std() > 0:
                m, sd = v.mean(), v.std(ddof=1)
                ax.plot(xs, np.exp(-0.5 * ((xs - m) / sd) ** 2) / (sd * np.sqrt(2 * np.pi)),
                        style, color=col)
    ax.set_xlabel("projection")
    ax.set_ylabel("density")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out_path)


def emit_roc(scores, labels, out_path):
    """ROC curve with the rank-statistic AUC in the legend."""
    plt = _pyplot()
    fpr, tpr = roc_curve(scores, labels)
    auc = stats.auroc(scores, labels)
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.plot(fpr, tpr, drawstyle="steps-post", label=f"AUC = {auc:.3f}")
    ax.plot([0, 1], [0, 1], ":", color="gray")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.legend(loc="lower right")
    fig.tight_layout()
    return _save(fig, out_path)


def emit_confusion(y_pred, y_true, out_path):
    """Confusion grid titled with accuracy and balanced accuracy."""
    plt = _pyplot()
    m = stats.metrics(y_pred, y_true)
    C = np.array(m["confusion_matrix"])
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.imshow(C, cmap="Blues")
    for i in range(C.shape[0]):
        for j in range(C.shape[1]):
            ax.text(j, i, str(C[i, j]), ha="center", va="center",
                    color="white" if C[i, j] > C.max() / 2 else "black")
    ticks = range(len(m["classes"]))
    ax.set_xticks(list(ticks), [str(c) for c in m["classes"]])
    ax.set_yticks(list(ticks), [str(c) for c in m["classes"]])
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(f"Accuracy={m['accuracy']:.2f}  "
                 f"Balanced={m['balanced_accuracy']:.2f}")
    fig.tight_layout()
    return _save(fig, out_path)
