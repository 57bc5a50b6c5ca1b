"""Replication mitigation strategies applied during training.

Dual fusion blends a random fusion image into the training latent and a
fusion caption into the conditioning text (by token concatenation or by a
convex combination of embeddings). The remaining strategies are the
caption-side baselines: per-image alternate captions, Gaussian noise on the
text embedding, random caption replacement, and caption word repetition.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from ..annotate import common_noun_lemmas, _verb_set

TOKEN_LEVEL = "token"
EMBEDDING_LEVEL = "embedding"


@lru_cache(maxsize=1)
def rc_vocabulary() -> tuple[str, ...]:
    """Replacement-word pool: the bundled noun and verb lists, sorted."""
    return tuple(sorted(common_noun_lemmas() | _verb_set()))


@dataclass(frozen=True)
class FusionConfig:
    mode: str
    w_lat: float = 0.0
    w_emb: float = 0.0  # ignored in token-level mode

    def __post_init__(self):
        if self.mode not in (TOKEN_LEVEL, EMBEDDING_LEVEL):
            raise ValueError(f"mode must be '{TOKEN_LEVEL}' or '{EMBEDDING_LEVEL}': {self.mode!r}")
        object.__setattr__(self, "w_lat", min(max(float(self.w_lat), 0.0), 1.0))
        object.__setattr__(self, "w_emb", min(max(float(self.w_emb), 0.0), 1.0))


@dataclass(frozen=True)
class PassThrough:
    """No mitigation; latent and caption used as-is."""

    @property
    def label(self) -> str:
        return "none"


@dataclass(frozen=True)
class DualFusion:
    config: FusionConfig

    @property
    def label(self) -> str:
        c = self.config
        if c.mode == TOKEN_LEVEL:
            return f"dual_fusion(mode=token,w_lat={c.w_lat:g})"
        return f"dual_fusion(mode=embedding,w_lat={c.w_lat:g},w_emb={c.w_emb:g})"


@dataclass(frozen=True)
class GaussianNoise:
    sigma: float = 0.1  # relative to the embedding's RMS component size

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0: {self.sigma}")

    @property
    def label(self) -> str:
        return f"gaussian_noise(sigma={self.sigma:g})"


@dataclass(frozen=True)
class RandomCaption:
    @property
    def label(self) -> str:
        return "random_caption"


@dataclass(frozen=True)
class CaptionWordRepeat:
    @property
    def label(self) -> str:
        return "caption_word_repeat"


@dataclass(frozen=True)
class MultipleCaptions:
    n_alternates: int = 20

    def __post_init__(self):
        if self.n_alternates < 1:
            raise ValueError(f"n_alternates must be >= 1: {self.n_alternates}")

    @property
    def label(self) -> str:
        return f"multiple_captions(n={self.n_alternates})"


Strategy = PassThrough | DualFusion | GaussianNoise | RandomCaption | CaptionWordRepeat | MultipleCaptions
