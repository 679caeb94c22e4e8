"""
From a table of volume files to a matrix of transport features.

Each sample ``I_i`` is represented by its optimal map ``f_i`` from a common
reference ``I0``; the feature row is ``(f_i - Id) * sqrt(I0)`` flattened,
so Euclidean distances between rows equal ``L2(I0)`` distances between
maps.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import grid, solver
from .errors import (EmptyManifest, GridMismatch, LengthMismatch,
                     LotmorphError, MissingColumn, NotNormalized,
                     UnreadableFile, WriteError)

log = logging.getLogger(__name__)

__all__ = ["Record", "Manifest", "load_manifest", "load_dataset", "batch_embed",
           "EmbeddingResult", "featurize", "defeaturize", "check_centering",
           "resolve_cache_dir", "weight_floor"]

CACHE_ENV = "TBM3D_CACHE"


@dataclass(frozen=True)
class Record:
    image_path: Path
    label: object
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Manifest:
    """Parsed manifest; ``records`` keep file order."""

    records: tuple
    mode: str = "train"
    source: Path = None

    def __len__(self):
        return len(self.records)

    @property
    def paths(self):
        return [r.image_path for r in self.records]

    @property
    def labels(self):
        return np.array([r.label for r in self.records])


def _parse_label(text, line):
    text = text.strip()
    if text == "":
        raise MissingColumn(f"line {line}: empty label")
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise MissingColumn(f"line {line}: label {text!r} is not numeric") from None


def load_manifest(csv_path, mode="train"):
    """Read a CSV manifest with ``image_path`` and ``label`` columns.

    Relative image paths are resolved against the directory holding the
    CSV. Columns other than the two required ones are kept as strings in
    ``Record.extras``.

    Raises
    ------
    UnreadableFile
        The CSV cannot be opened.
    MissingColumn
        The header lacks ``image_path`` or ``label``.
    EmptyManifest
        No data rows.
    """
    if mode not in ("train", "test"):
        raise ValueError(f"mode must be 'train' or 'test', got {mode!r}")
    csv_path = Path(csv_path)
    try:
        with open(csv_path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise UnreadableFile(f"cannot read manifest {csv_path}: {exc}") from exc
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise EmptyManifest(f"{csv_path} is empty")
    header = [h.strip() for h in rows[0]]
    for col in ("image_path", "label"):
        if col not in header:
            raise MissingColumn(f"manifest {csv_path} has no {col!r} column")
    ip, lb = header.index("image_path"), header.index("label")
    base = csv_path.parent
    records = []
    for n, row in enumerate(rows[1:], start=2):
        row = row + [""] * (len(header) - len(row))
        path = Path(row[ip].strip())
        if not path.is_absolute():
            path = (base / path).resolve()
        extras = {h: row[i] for i, h in enumerate(header) if i not in (ip, lb)}
        records.append(Record(path, _parse_label(row[lb], n), extras))
    if not records:
        raise EmptyManifest(f"{csv_path} has a header but no records")
    return Manifest(tuple(records), mode, csv_path)


def check_centering(v, fraction=0.1):
    """Warn when the center of mass sits farther than ``fraction`` of the
    smallest axis from the grid center. Returns the offset in voxels."""
    center = (np.array(v.shape, float) - 1.0) / 2.0
    off = float(np.linalg.norm(grid.center_of_mass(v) - center))
    if off > fraction * min(v.shape):
        warnings.warn(f"density center of mass is {off:.2f} voxels from the grid "
                      "center; volumes should be centered before embedding",
                      stacklevel=2)
    return off


def load_dataset(manifest, reference_path=None, normalized=False, epsilon=1e-8):
    """Load every volume of a manifest.

    Parameters
    ----------
    manifest : Manifest
    reference_path : path, optional
        Explicit reference volume. Without it, train mode uses the
        renormalized voxelwise mean of the loaded volumes.
    normalized : bool
        If True the volumes must already sum to one (within 1e-6) and are
        used as stored; otherwise each is passed through
        :func:`grid.normalize_mass` with ``epsilon``.

    Returns
    -------
    volumes : list of ndarray
    labels : ndarray
    reference : ndarray or None
        None in test mode without ``reference_path``.
    """
    volumes = []
    for rec in manifest.records:
        try:
            v = grid.read_volume(rec.image_path).astype(np.float64)
        except FileNotFoundError as exc:
            raise UnreadableFile(f"cannot read volume {rec.image_path}") from exc
        if normalized:
            if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-6:
                raise NotNormalized(f"{rec.image_path} sums to {v.sum():.8g}, "
                                    "expected 1 (normalized=True)")
        else:
            v = grid.normalize_mass(v, epsilon)
        if volumes and v.shape != volumes[0].shape:
            raise GridMismatch(f"{rec.image_path} has shape {v.shape}, "
                               f"expected {volumes[0].shape}")
        check_centering(v)
        volumes.append(v)
    labels = manifest.labels
    reference = None
    if reference_path is not None:
        reference = grid.read_volume(reference_path).astype(np.float64)
        if volumes and reference.shape != volumes[0].shape:
            raise GridMismatch(f"reference has shape {reference.shape}, "
                               f"volumes {volumes[0].shape}")
        reference = grid.normalize_mass(reference, 0.0)
    elif manifest.mode == "train":
        reference = grid.normalize_mass(np.mean(volumes, axis=0), 0.0)
    return volumes, labels, reference


# ---------------------------------------------------------------------------
# features

def weight_floor(reference):
    """``eps_w = sqrt(1e-8 * mean of the positive reference values)``."""
    r = np.asarray(reference)
    return float(np.sqrt(1e-8 * r[r > 0].mean()))


def featurize(f, reference):
    """``(f - Id) * sqrt(I0)`` flattened in C order, length ``3 h w d``."""
    f = np.asarray(f, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if f.shape != (3,) + reference.shape:
        raise GridMismatch(f"map {f.shape} does not match reference {reference.shape}")
    return (grid.displacement(f) * np.sqrt(reference)).ravel()


def defeaturize(row, reference):
    """Map ``Id + row / max(sqrt(I0), eps_w)`` back from a feature row."""
    reference = np.asarray(reference, dtype=np.float64)
    row = np.asarray(row, dtype=np.float64)
    shape = (3,) + reference.shape
    if row.size != int(np.prod(shape)):
        raise LengthMismatch(f"row has {row.size} entries, expected {np.prod(shape)}")
    w = np.maximum(np.sqrt(reference), weight_floor(reference))
    return grid.identity_grid(reference.shape) + row.reshape(shape) / w


# ---------------------------------------------------------------------------
# batch embedding

@dataclass(frozen=True)
class EmbeddingResult:
    """Features, labels and per-sample solver diagnostics.

    ``features`` is ``(N, 3 h w d)`` float64 with rows in input order;
    ``solves`` counts the solves actually run (cache hits excluded).
    """

    features: np.ndarray
    labels: np.ndarray
    reference: np.ndarray
    diagnostics: list
    solves: int = 0

    @property
    def all_converged(self):
        return all(d["converged"] for d in self.diagnostics)

    def save(self, out_dir):
        """``features.npy`` (float32), ``labels.npy``, ``reference.npy`` and
        ``diagnostics.json`` under ``out_dir``."""
        out_dir = Path(out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            _save_npy(out_dir / "features.npy", self.features.astype(np.float32))
            _save_npy(out_dir / "labels.npy", np.asarray(self.labels))
            grid.write_volume(self.reference, out_dir / "reference.npy", dtype=np.float64)
            (out_dir / "diagnostics.json").write_text(
                json.dumps(self.diagnostics, indent=2, sort_keys=True))
        except OSError as exc:
            raise WriteError(f"cannot write embedding to {out_dir}: {exc}") from exc
        return out_dir


def _save_npy(path, arr):
    with open(path, "wb") as fh:
        np.lib.format.write_array(fh, np.ascontiguousarray(arr), version=(1, 0),
                                  allow_pickle=False)


def resolve_cache_dir(value=None):
    """The ``TBM3D_CACHE`` environment variable wins over ``value``."""
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path(value) if value else None


def _cache_key(volume, ref_hash, cfg_hash):
    h = hashlib.sha256()
    for part in (grid.array_digest(volume), ref_hash, cfg_hash):
        h.update(part.encode())
    return h.hexdigest()[:32]


def _solve_one(args):
    reference, volume, cfg = args
    try:
        sol = solver.solve_monge(reference, volume, cfg)
    except (LotmorphError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return None, f"{type(exc).__name__}: {exc}"
    return sol, None


def _diag(sol, cached, error=None):
    if sol is None:
        return {"transport_cost": None, "mp_residual": None, "converged": False,
                "iterations_per_level": [], "cached": False, "error": error}
    return {"transport_cost": float(sol.transport_cost),
            "mp_residual": float(sol.mp_residual),
            "converged": bool(sol.converged),
            "iterations_per_level": [int(n) for n in sol.iterations_per_level],
            "cached": cached, "error": None}


def batch_embed(volumes, labels, reference, cfg=solver.SolverConfig(), workers=1,
                cache_dir=None):
    """Solve every ``reference -> volume`` map and featurize it.

    Parameters
    ----------
    volumes : sequence of ndarray
        Unit-mass densities on the reference grid.
    labels : array_like
    reference : ndarray
    cfg : SolverConfig
    workers : int
        Number of worker processes; results do not depend on it.
    cache_dir : path, optional
        Maps are stored there keyed by volume, reference and config hashes;
        hits skip the solve.

    Returns
    -------
    EmbeddingResult
        A sample whose solve raised gets a zero feature row and
        ``converged = False`` with the error message in its diagnostics.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    reference = np.asarray(reference, dtype=np.float64)
    volumes = [np.asarray(v, dtype=np.float64) for v in volumes]
    labels = np.asarray(labels)
    if len(labels) != len(volumes):
        raise LengthMismatch(f"{len(volumes)} volumes but {len(labels)} labels")
    for i, v in enumerate(volumes):
        if v.shape != reference.shape:
            raise GridMismatch(f"volume {i} has shape {v.shape}, "
                               f"reference {reference.shape}")
    # the solver needs strictly positive densities
    if reference.min() <= 0:
        reference = grid.normalize_mass(reference, 1e-8)
    volumes = [v if v.min() > 0 else grid.normalize_mass(v, 1e-8) for v in volumes]

    ref_hash = grid.array_digest(reference)
    cfg_hash = cfg.digest()
    cache_dir = Path(cache_dir) if cache_dir else None
    if cache_dir is not None:
        cache_dir.mkdir(parents=True, exist_ok=True)

    sols = [None] * len(volumes)
    diags = [None] * len(volumes)
    todo = []
    for i, v in enumerate(volumes):
        if cache_dir is not None:
            path = cache_dir / f"{_cache_key(v, ref_hash, cfg_hash)}.npy"
            if path.exists() and path.with_suffix(".json").exists():
                sol, _ = solver.load_solution(path)
                sols[i] = sol
                diags[i] = _diag(sol, cached=True)
                continue
        todo.append(i)

    jobs = [(reference, volumes[i], cfg) for i in todo]
    if workers == 1 or len(jobs) <= 1:
        results = [_solve_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_solve_one, jobs))

    for i, (sol, err) in zip(todo, results):
        sols[i] = sol
        diags[i] = _diag(sol, cached=False, error=err)
        if err is not None:
            log.warning("sample %d failed: %s", i, err)
        elif cache_dir is not None:
            path = cache_dir / f"{_cache_key(volumes[i], ref_hash, cfg_hash)}.npy"
            solver.save_solution(sol, path, cfg=cfg, reference=reference)

    D = 3 * reference.size
    feats = np.zeros((len(volumes), D))
    for i, sol in enumerate(sols):
        if sol is not None:
            feats[i] = featurize(sol.map, reference)
    log.info("%d solves performed, %d cache hits", len(todo), len(volumes) - len(todo))
    return EmbeddingResult(feats, labels, reference, diags, solves=len(todo))
