"""Replication scoring from copy-detection features.

Each generated image gets the maximum cosine similarity over the training
set (top-1 match); the replication score R is the 0.95 nearest-rank quantile
of those similarities. Higher R means more of the training data is being
reproduced. A feature-space Fréchet distance between Gaussian fits doubles
as the quality/diversity proxy.

Features may come from the deterministic toy extractor here or be imported
from the ``RLFT`` binary format (magic, version, n, d as little-endian u32,
then n*d float32 row-major).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import FeatureFormatError

FEATURE_MAGIC = b"RLFT"
FEATURE_VERSION = 1

_NORM_KEEP_TOL = 1e-5   # rows this close to unit norm are taken as-is
_NORM_FIX_TOL = 1e-3    # rows this close are re-normalized, beyond is an error


@dataclass(frozen=True)
class FeatureMatrix:
    """n x d single-precision features, every row unit-normalized."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float32)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ValueError(f"rows must be a non-empty 2-D array, got shape {rows.shape}")
        norms = np.linalg.norm(rows.astype(np.float64), axis=1)
        if np.any(np.abs(norms - 1.0) > _NORM_KEEP_TOL):
            worst = float(np.abs(norms - 1.0).max())
            raise ValueError(f"rows must be L2-normalized within {_NORM_KEEP_TOL}, worst |norm-1| = {worst:.3g}")
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def from_raw(cls, array) -> "FeatureMatrix":
        """Normalize arbitrary row vectors; zero rows are rejected."""
        arr = np.asarray(array, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        norms = np.linalg.norm(arr, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise ValueError("cannot normalize zero-norm rows")
        return cls(rows=(arr / norms).astype(np.float32))


def toy_features(image) -> np.ndarray:
    """Deterministic 72-d descriptor of a grayscale image.

    Concatenates an 8x8 grid of block means (64 values) with an 8-bin
    magnitude-weighted gradient-orientation histogram over central
    differences, then mean-centers and L2-normalizes. Zero-energy inputs map
    to a fixed canonical direction so every output is a unit vector.
    """
    pixels = getattr(image, "pixels", image)
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 8 or arr.shape[1] < 8:
        raise ValueError(f"image must be at least 8x8, got shape {arr.shape}")
    h, w = arr.shape

    row_bucket = np.arange(h) * 8 // h
    col_bucket = np.arange(w) * 8 // w
    sums = np.zeros((8, 8))
    counts = np.zeros((8, 8))
    np.add.at(sums, (row_bucket[:, None], col_bucket[None, :]), arr)
    np.add.at(counts, (row_bucket[:, None], col_bucket[None, :]), 1.0)
    blocks = (sums / counts).ravel()

    gx = (arr[1:-1, 2:] - arr[1:-1, :-2]) / 2.0
    gy = (arr[2:, 1:-1] - arr[:-2, 1:-1]) / 2.0
    mag = np.hypot(gx, gy)
    angle = np.arctan2(gy, gx)  # (-pi, pi]
    bins = np.clip(((angle + np.pi) / (2.0 * np.pi / 8.0)).astype(np.int64), 0, 7)
    hist = np.zeros(8)
    np.add.at(hist, bins.ravel(), mag.ravel())
    total = hist.sum()
    if total > 0.0:
        hist /= total  # orientation distribution; block means carry the layout

    feat = np.concatenate([blocks, hist])
    feat -= feat.mean()
    norm = np.linalg.norm(feat)
    if norm < 1e-12:
        feat = np.zeros(72)
        feat[0] = 1.0
        return feat.astype(np.float32)
    return (feat / norm).astype(np.float32)


def toy_feature_matrix(images) -> FeatureMatrix:
    return FeatureMatrix(rows=np.stack([toy_features(img) for img in images]))


@dataclass(frozen=True)
class SimilarityDistribution:
    """Ascending top-1 similarity per generated image."""

    s_values: np.ndarray
    n_train: int = 0

    def __post_init__(self):
        values = np.asarray(self.s_values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("s_values must be a non-empty 1-D array")
        if np.any(np.diff(values) < 0):
            raise ValueError("s_values must be ascending")
        object.__setattr__(self, "s_values", values)

    @property
    def n_gen(self) -> int:
        return self.s_values.size


def similarity_scores(f_x: FeatureMatrix, f_g: FeatureMatrix) -> SimilarityDistribution:
    """Top-1 cosine similarity of each generated row against all of f_x."""
    if f_x.d != f_g.d:
        raise ValueError(f"feature dimensions differ: train d={f_x.d}, generated d={f_g.d}")
    sims = f_g.rows.astype(np.float64) @ f_x.rows.astype(np.float64).T
    best = sims.max(axis=1)
    best.sort()
    return SimilarityDistribution(s_values=best, n_train=f_x.n)


@dataclass(frozen=True)
class ReplicationResult:
    r: float
    quantile: float
    n_gen: int
    n_train: int

    def as_dict(self) -> dict:
        return {"r": self.r, "quantile": self.quantile,
                "n_gen": self.n_gen, "n_train": self.n_train}


def replication_score(s: SimilarityDistribution, quantile: float = 0.95) -> ReplicationResult:
    """Nearest-rank quantile of the similarity distribution.

    The rank is ceil(q * n) in exact rational arithmetic (the float quantile
    is snapped to the simplest fraction within 1/10^6), so q=0.95 over 100
    ascending values selects exactly the 95th.
    """
    if not (0.0 < quantile <= 1.0):
        raise ValueError(f"quantile must be in (0, 1]: {quantile}")
    n = s.n_gen
    q = Fraction(quantile).limit_denominator(10 ** 6)
    rank = int(math.ceil(q * n))
    rank = min(max(rank, 1), n)
    return ReplicationResult(r=float(s.s_values[rank - 1]), quantile=quantile,
                             n_gen=n, n_train=s.n_train)


# --- Gaussian fits and Fréchet distance --------------------------------------

@dataclass(frozen=True)
class GaussianFit:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError(f"shape mismatch: mean {mean.shape}, cov {cov.shape}")
        if not np.allclose(cov, cov.T, atol=1e-9):
            raise ValueError("covariance must be symmetric within 1e-9")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def d(self) -> int:
        return self.mean.size


def fit_gaussian(features: FeatureMatrix) -> GaussianFit:
    """Sample mean and unbiased (n-1) covariance of the feature rows."""
    if features.n < 2:
        raise ValueError(f"need at least 2 rows to fit a covariance, got {features.n}")
    rows = features.rows.astype(np.float64)
    mean = rows.mean(axis=0)
    centered = rows - mean
    cov = centered.T @ centered / (features.n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianFit(mean=mean, cov=cov)


def _psd_eigvals(cov: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(cov)
    tol = 1e-9 * max(1.0, float(np.abs(w).max()) if w.size else 1.0)
    if w.min() < -tol:
        raise ValueError(f"{what} is not PSD within tolerance: min eigenvalue {w.min():.3g}")
    return np.clip(w, 0.0, None), v


def frechet_distance(a: GaussianFit, b: GaussianFit) -> float:
    """||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}).

    The cross term uses the symmetric eigendecomposition of
    S_a^{1/2} S_b S_a^{1/2}; tiny negative eigenvalues are clamped to zero
    and the result clamped to be non-negative.
    """
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    wa, va = _psd_eigvals(a.cov, "covariance a")
    _wb = _psd_eigvals(b.cov, "covariance b")  # validates PSD
    sqrt_a = (va * np.sqrt(wa)) @ va.T
    inner = sqrt_a @ b.cov @ sqrt_a
    inner = (inner + inner.T) / 2.0
    wm, _ = _psd_eigvals(inner, "cross-covariance product")
    tr_sqrt = float(np.sqrt(wm).sum())
    diff = a.mean - b.mean
    fd = float(diff @ diff) + float(np.trace(a.cov)) + float(np.trace(b.cov)) - 2.0 * tr_sqrt
    return max(fd, 0.0)


# --- feature binary format ----------------------------------------------------

def save_features(features: FeatureMatrix, path) -> None:
    path = Path(path)
    header = struct.pack("<4sIII", FEATURE_MAGIC, FEATURE_VERSION, features.n, features.d)
    payload = np.ascontiguousarray(features.rows, dtype="<f4").tobytes()
    path.write_bytes(header + payload)


def load_features(path) -> FeatureMatrix:
    """Read an RLFT file; rows slightly off unit norm are re-normalized.

    Rows within 1e-5 of unit norm are kept bit-for-bit (so save/load round
    trips exactly); rows within 1e-3 are re-normalized; anything further off,
    or a zero row, is an error.
    """
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 16:
        raise FeatureFormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, n, d = struct.unpack("<4sIII", blob[:16])
    if magic != FEATURE_MAGIC:
        raise FeatureFormatError(f"{path}: bad magic {magic!r}")
    if version != FEATURE_VERSION:
        raise FeatureFormatError(f"{path}: unsupported version {version}")
    if n < 1 or d < 1:
        raise FeatureFormatError(f"{path}: invalid dimensions n={n}, d={d}")
    expected = 16 + 4 * n * d
    if len(blob) != expected:
        raise FeatureFormatError(f"{path}: expected {expected} bytes, got {len(blob)}")
    rows = np.frombuffer(blob, dtype="<f4", offset=16).reshape(n, d).copy()
    norms = np.linalg.norm(rows.astype(np.float64), axis=1)
    if np.any(norms == 0.0):
        raise FeatureFormatError(f"{path}: zero-norm feature row")
    err = np.abs(norms - 1.0)
    if np.any(err > _NORM_FIX_TOL):
        raise FeatureFormatError(
            f"{path}: feature row norm off by {float(err.max()):.3g} (limit {_NORM_FIX_TOL})")
    fix = err > _NORM_KEEP_TOL
    if np.any(fix):
        rows[fix] = rows[fix] / norms[fix, None].astype(np.float32)
    return FeatureMatrix(rows=rows)
