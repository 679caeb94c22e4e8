"""
Classifying stretched ellipsoids
================================

Two classes of noisy ellipsoid phantoms differ by a 15% volume-preserving
stretch. Each phantom is embedded by its transport map from the mean
image, and the features are classified with PLDA and nearest subspace.

A small set (40 phantoms) keeps the run short; the full benchmark uses
``lotmorph evaluate`` on 160.
"""
import sys
from pathlib import Path

import numpy as np

from lotmorph import embedding, grid, phantoms, stats, viz

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out") / "02"
vols, labels = phantoms.phantom_dataset(count=40, n=32, seed=1)
labels = np.asarray(labels)

# the reference is the voxelwise mean of the (unit mass) inputs
reference = grid.normalize_mass(np.mean(vols, axis=0), 0.0)
res = embedding.batch_embed(vols, labels, reference)
print(f"{res.solves} solves, all converged: {res.all_converged}")
X = res.features

# first 24 for training, last 16 for testing (labels alternate, so both
# halves are balanced)
tr, te = np.arange(24), np.arange(24, 40)

pca = stats.pca_fit(X[tr], 0.96)
Ztr, Zte = stats.pca_transform(pca, X[tr]), stats.pca_transform(pca, X[te])
print(f"PCA keeps {pca.k} components")

alpha = stats.calculate_alpha(Ztr, labels[tr], stats.alpha_grid(Ztr, labels[tr]))
plda = stats.plda_fit(Ztr, labels[tr], alpha)
m = stats.metrics(stats.plda_predict(plda, Zte), labels[te],
                  stats.plda_transform(plda, Zte) + plda.b)
print(f"PLDA  alpha={alpha:.3g}  acc={m['accuracy']:.3f}  auroc={m['auroc']:.3f}")

ns = stats.ns_fit(X[tr], labels[tr])
acc = np.mean(stats.ns_predict(ns, X[te]) == labels[te])
print(f"nearest subspace acc={acc:.3f}")

# projections of both sets on the discriminant direction
viz.emit_projection_plot(stats.plda_transform(plda, Ztr) + plda.b, labels[tr],
                         stats.plda_transform(plda, Zte) + plda.b, labels[te],
                         out / "projections.png")

# what the discriminant direction does to shape: the class-1 side should
# look longer along x
spec = viz.plda_direction_lift(plda, pca)
modes = viz.mode_volumes(spec, pca.mean, reference)
for a, v in zip(spec.alphas, modes):
    s = np.sqrt(np.diag(np.cov(grid.identity_grid(v.shape).reshape(3, -1),
                               aweights=v.ravel())))
    print(f"alpha={a:+.0f}  spread x/y/z = {s[0]:.2f} {s[1]:.2f} {s[2]:.2f}")
viz.emit_montage(modes, [f"{a:g}" for a in spec.alphas], out / "plda_mode.png", axis="z")
print("wrote", out)
