"""Toy images, synthetic caption/image datasets, and the tensor file format."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import TensorFormatError

TENSOR_MAGIC = b"RLTN"
TENSOR_VERSION = 1

SPECIFIC = "specific"
GENERAL = "general"

TRAIN_KINDS = ("circle", "rectangle", "stripe")
FUSION_KINDS = ("cross", "ring", "checkerboard")

# color words are intensity labels for the single-channel toy images
_COLORS = (("black", 0.15), ("red", 0.35), ("gray", 0.5),
           ("green", 0.65), ("blue", 0.8), ("white", 0.95))


@dataclass(frozen=True)
class ToyImage:
    pixels: np.ndarray  # (h, w) float32 in [0, 1]

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"pixels must be 2-D, got shape {arr.shape}")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class SynthSpec:
    n_base: int
    dup_factor: int = 1
    dup_fraction: float = 0.0
    caption_style: str = SPECIFIC
    kinds: tuple[str, ...] = TRAIN_KINDS
    height: int = 16
    width: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.n_base < 1:
            raise ValueError(f"n_base must be >= 1: {self.n_base}")
        if self.dup_factor < 1:
            raise ValueError(f"dup_factor must be >= 1: {self.dup_factor}")
        if not 0.0 <= self.dup_fraction <= 1.0:
            raise ValueError(f"dup_fraction must be in [0, 1]: {self.dup_fraction}")
        if self.caption_style not in (SPECIFIC, GENERAL):
            raise ValueError(f"caption_style must be '{SPECIFIC}' or '{GENERAL}'")
        if self.height < 8 or self.width < 8:
            raise ValueError("images must be at least 8x8")
        unknown = set(self.kinds) - set(TRAIN_KINDS) - set(FUSION_KINDS)
        if unknown or not self.kinds:
            raise ValueError(f"unknown shape kinds: {sorted(unknown)}")
        object.__setattr__(self, "kinds", tuple(self.kinds))


@dataclass(frozen=True)
class SynthSample:
    image: ToyImage
    caption: str
    base_id: int


def _render(kind: str, h: int, w: int, rng: np.random.Generator):
    """One parameterized shape image plus its parameter phrase.

    Shapes are drawn large (roughly a third to half of the canvas) so the
    block-mean features of distinct images stay well separated.
    """
    yy, xx = np.mgrid[0:h, 0:w]
    canvas = np.zeros((h, w), dtype=np.float64)
    color_name, intensity = _COLORS[int(rng.integers(0, len(_COLORS)))]
    if kind == "circle":
        r = int(rng.integers(max(2, min(h, w) // 5), max(3, min(h, w) * 2 // 5)))
        cy = int(rng.integers(r - 1, h - r + 1))
        cx = int(rng.integers(r - 1, w - r + 1))
        canvas[(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = intensity
        phrase = f"{color_name} circle at {cx},{cy} radius {r}"
    elif kind == "rectangle":
        rw = int(rng.integers(w * 2 // 5, w * 4 // 5))
        rh = int(rng.integers(h * 2 // 5, h * 4 // 5))
        x0 = int(rng.integers(0, w - rw))
        y0 = int(rng.integers(0, h - rh))
        canvas[y0:y0 + rh, x0:x0 + rw] = intensity
        phrase = f"{color_name} rectangle at {x0},{y0} size {rw} by {rh}"
    elif kind == "stripe":
        thickness = int(rng.integers(max(2, h // 5), max(3, h // 2)))
        if rng.integers(0, 2) == 0:
            pos = int(rng.integers(0, h - thickness))
            canvas[pos:pos + thickness, :] = intensity
            phrase = f"{color_name} horizontal stripe at {pos} thickness {thickness}"
        else:
            pos = int(rng.integers(0, w - thickness))
            canvas[:, pos:pos + thickness] = intensity
            phrase = f"{color_name} vertical stripe at {pos} thickness {thickness}"
    elif kind == "cross":
        cy = int(rng.integers(3, h - 3))
        cx = int(rng.integers(3, w - 3))
        arm = int(rng.integers(1, max(2, min(h, w) // 5)))
        canvas[cy - arm:cy + arm + 1, :] = intensity
        canvas[:, cx - arm:cx + arm + 1] = intensity
        phrase = f"{color_name} cross at {cx},{cy} arm {arm}"
    elif kind == "ring":
        r_out = int(rng.integers(max(3, min(h, w) // 4), max(4, min(h, w) * 2 // 5)))
        cy = int(rng.integers(r_out - 1, h - r_out + 1))
        cx = int(rng.integers(r_out - 1, w - r_out + 1))
        r_in = max(1, r_out - int(rng.integers(2, max(3, r_out // 2 + 1))))
        dist2 = (yy - cy) ** 2 + (xx - cx) ** 2
        canvas[(dist2 <= r_out * r_out) & (dist2 > r_in * r_in)] = intensity
        phrase = f"{color_name} ring at {cx},{cy} radius {r_out}"
    elif kind == "checkerboard":
        cell = int(rng.integers(2, max(3, min(h, w) // 3)))
        phase = int(rng.integers(0, 2))
        mask = ((yy // cell) + (xx // cell) + phase) % 2 == 0
        canvas[mask] = intensity
        phrase = f"{color_name} checkerboard cell {cell}"
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return ToyImage(pixels=canvas.astype(np.float32)), kind, phrase


def gen_synth_dataset(spec: SynthSpec) -> list[SynthSample]:
    """Deterministic shape dataset with controlled duplication.

    The first ceil(dup_fraction * n_base) base images appear dup_factor
    times. Specific captions embed exact shape parameters plus a unique id;
    general captions are bare templates like "a circle".
    """
    from ..replication import toy_features  # local import, no cycle at module load

    rng = np.random.default_rng(spec.seed)
    base: list[SynthSample] = []
    feats: list[np.ndarray] = []
    for i in range(spec.n_base):
        kind = spec.kinds[int(rng.integers(0, len(spec.kinds)))]
        # re-draw parameter collisions: the copy-detection features are
        # affine-intensity invariant, so base images must be separated in
        # feature space, not just pixel space
        best = None
        for _ in range(200):
            image, kind_out, phrase = _render(kind, spec.height, spec.width, rng)
            feat = toy_features(image).astype(np.float64)
            worst = max((float(feat @ f) for f in feats), default=-1.0)
            if best is None or worst < best[0]:
                best = (worst, image, kind_out, phrase, feat)
            if worst < 0.95:
                break
        _, image, kind_out, phrase, feat = best
        feats.append(feat)
        if spec.caption_style == SPECIFIC:
            caption = f"{phrase} id {i:05d}"
        else:
            caption = f"a {kind_out}"
        base.append(SynthSample(image=image, caption=caption, base_id=i))

    n_dup = math.ceil(spec.dup_fraction * spec.n_base - 1e-9)
    samples: list[SynthSample] = []
    for i, sample in enumerate(base):
        copies = spec.dup_factor if i < n_dup else 1
        samples.extend([sample] * copies)
    return samples


def dataset_images(samples) -> np.ndarray:
    """Stack dataset images into an (n, h, w) float32 array."""
    return np.stack([s.image.pixels for s in samples])


# --- tensor file format -------------------------------------------------------

def save_tensor(array, path) -> None:
    """Write float32 array as RLTN: magic, version, rank, dims (u32 LE), payload."""
    arr = np.ascontiguousarray(np.asarray(array, dtype="<f4"))
    path = Path(path)
    header = struct.pack("<4sII", TENSOR_MAGIC, TENSOR_VERSION, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}I", *arr.shape)
    path.write_bytes(header + dims + arr.tobytes())


def load_tensor(path) -> np.ndarray:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 12:
        raise TensorFormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, rank = struct.unpack("<4sII", blob[:12])
    if magic != TENSOR_MAGIC:
        raise TensorFormatError(f"{path}: bad magic {magic!r}")
    if version != TENSOR_VERSION:
        raise TensorFormatError(f"{path}: unsupported version {version}")
    if rank < 1 or rank > 8:
        raise TensorFormatError(f"{path}: implausible rank {rank}")
    dims_end = 12 + 4 * rank
    if len(blob) < dims_end:
        raise TensorFormatError(f"{path}: truncated dims")
    dims = struct.unpack(f"<{rank}I", blob[12:dims_end])
    count = 1
    for d in dims:
        if d < 1:
            raise TensorFormatError(f"{path}: invalid dimension {d}")
        count *= d
    expected = dims_end + 4 * count
    if len(blob) != expected:
        raise TensorFormatError(f"{path}: expected {expected} bytes, got {len(blob)}")
    return np.frombuffer(blob, dtype="<f4", offset=dims_end).reshape(dims).copy()
