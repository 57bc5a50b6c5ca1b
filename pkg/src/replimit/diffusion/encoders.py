"""Visual and text encoders plus the two fusion operations.

The visual encoder is a block-mean pool (its decode is nearest-neighbor
upsampling), the text encoder a hashed signed bag of tokens, and fusion is a
plain convex combination in either space. Everything here is deterministic
and bit-stable.
"""

from __future__ import annotations

import numpy as np

from .._util import fnv1a64
from ..annotate import tokenize
from .data import ToyImage

D_TEXT_DEFAULT = 64
D_TIME_DEFAULT = 32


def visual_encode(image, pool: int = 2) -> np.ndarray:
    """Flattened pool x pool block means; dimensions must divide evenly."""
    pixels = getattr(image, "pixels", image)
    arr = np.asarray(pixels, dtype=np.float64)
    h, w = arr.shape
    if h % pool or w % pool:
        raise ValueError(f"image {h}x{w} not divisible by pool={pool}")
    blocks = arr.reshape(h // pool, pool, w // pool, pool).mean(axis=(1, 3))
    return blocks.ravel()


def visual_decode(latent: np.ndarray, height: int, width: int, pool: int = 2) -> ToyImage:
    """Nearest-neighbor upsample of the latent grid, clamped to [0, 1]."""
    if height % pool or width % pool:
        raise ValueError(f"target {height}x{width} not divisible by pool={pool}")
    gh, gw = height // pool, width // pool
    latent = np.asarray(latent, dtype=np.float64)
    if latent.size != gh * gw:
        raise ValueError(f"latent size {latent.size} != {gh}*{gw}")
    grid = latent.reshape(gh, gw)
    up = np.repeat(np.repeat(grid, pool, axis=0), pool, axis=1)
    return ToyImage(pixels=np.clip(up, 0.0, 1.0).astype(np.float32))


def text_encode(caption: str, dim: int = D_TEXT_DEFAULT) -> np.ndarray:
    """Hashed signed bag-of-tokens embedding, L2-normalized.

    Token index is FNV-1a-64 mod dim; the hash's top bit picks the sign.
    Empty captions give the zero vector.
    """
    vec = np.zeros(dim, dtype=np.float64)
    for token in tokenize(caption):
        h = fnv1a64(token.encode("utf-8"))
        sign = 1.0 if (h >> 63) == 0 else -1.0
        vec[h % dim] += sign
    norm = np.linalg.norm(vec)
    if norm > 0.0:
        vec /= norm
    return vec


class TextEncoder:
    """Memoizing wrapper around text_encode for hot training loops."""

    def __init__(self, dim: int = D_TEXT_DEFAULT):
        self.dim = dim
        self._memo: dict[str, np.ndarray] = {}

    def __call__(self, caption: str) -> np.ndarray:
        hit = self._memo.get(caption)
        if hit is None:
            hit = text_encode(caption, self.dim)
            self._memo[caption] = hit
        return hit

    def encode_uncached(self, caption: str) -> np.ndarray:
        # for one-off randomized captions that would bloat the memo
        return text_encode(caption, self.dim)


def time_embedding(t, dim: int = D_TIME_DEFAULT) -> np.ndarray:
    """Sinusoidal embedding of integer steps; rows for array input."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / max(half - 1, 1))
    args = t_arr[:, None] * freqs[None, :]
    emb = np.concatenate([np.sin(args), np.cos(args)], axis=1)
    if np.ndim(t) == 0:
        return emb[0]
    return emb


def fuse_latents(lat_ft: np.ndarray, lat_fu: np.ndarray, w_lat: float) -> np.ndarray:
    """(1 - w) * fine-tuning latent + w * fusion latent."""
    lat_ft = np.asarray(lat_ft, dtype=np.float64)
    lat_fu = np.asarray(lat_fu, dtype=np.float64)
    if lat_ft.shape != lat_fu.shape:
        raise ValueError(f"latent shapes differ: {lat_ft.shape} vs {lat_fu.shape}")
    if not 0.0 <= w_lat <= 1.0:
        raise ValueError(f"w_lat must be in [0, 1]: {w_lat}")
    if w_lat == 0.0:
        return lat_ft.copy()
    if w_lat == 1.0:
        return lat_fu.copy()
    return (1.0 - w_lat) * lat_ft + w_lat * lat_fu


def fuse_embeddings(e_ft: np.ndarray, e_fu: np.ndarray, w_emb: float) -> np.ndarray:
    """Convex combination of text embeddings; deliberately not re-normalized."""
    e_ft = np.asarray(e_ft, dtype=np.float64)
    e_fu = np.asarray(e_fu, dtype=np.float64)
    if e_ft.shape != e_fu.shape:
        raise ValueError(f"embedding shapes differ: {e_ft.shape} vs {e_fu.shape}")
    if not 0.0 <= w_emb <= 1.0:
        raise ValueError(f"w_emb must be in [0, 1]: {w_emb}")
    if w_emb == 0.0:
        return e_ft.copy()
    if w_emb == 1.0:
        return e_fu.copy()
    return (1.0 - w_emb) * e_ft + w_emb * e_fu


def token_fuse(y_ft: str, y_fu: str) -> str:
    """Append the fusion caption after the original, single space between."""
    return f"{y_ft} {y_fu}".strip()
