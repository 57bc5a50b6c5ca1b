"""Training loop, strategy application, and ancestral sampling.

Latents live in [0, 1] coming out of the visual encoder and are standardized
to [-1, 1] for the diffusion process (and mapped back before decoding), so an
untrained model's outputs are centered mid-gray rather than black.

Randomness is split into two independent streams: ``noise`` drives batch
selection, time steps, and forward noise; ``strategy`` drives every
mitigation draw (fusion pairs, caption perturbations, embedding noise).
Caption-side strategies therefore feed the denoiser bit-identical latents to
an unmitigated run with the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._util import mix_seed
from ..annotate import tokenize
from ..generalize import mock_generalizer, GENERAL as MOCK_GENERAL
from .data import ToyImage
from .encoders import (
    TextEncoder,
    fuse_embeddings,
    fuse_latents,
    time_embedding,
    token_fuse,
    visual_decode,
    visual_encode,
)
from .net import AdamState, DenoiserNet, mse_loss
from .schedule import DiffusionSchedule
from .strategies import (
    CaptionWordRepeat,
    DualFusion,
    GaussianNoise,
    MultipleCaptions,
    PassThrough,
    RandomCaption,
    TOKEN_LEVEL,
    rc_vocabulary,
)


@dataclass
class StreamRng:
    """Paired generators: forward-process noise vs. strategy randomness."""

    noise: np.random.Generator
    strategy: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "StreamRng":
        return cls(noise=np.random.default_rng(mix_seed("noise", seed)),
                   strategy=np.random.default_rng(mix_seed("strategy", seed)))


@dataclass(frozen=True)
class TrainSample:
    latent: np.ndarray          # visual-encoder output, [0, 1] space
    caption: str
    embedding: np.ndarray       # text embedding of the caption
    alternates: tuple[str, ...] = ()


@dataclass(frozen=True)
class FusionSet:
    latents: np.ndarray         # (J, d_lat)
    captions: tuple[str, ...]
    embeddings: np.ndarray      # (J, d_text)

    @property
    def size(self) -> int:
        return self.latents.shape[0]


def caption_alternates(caption: str, n: int = 20) -> tuple[str, ...]:
    """Deterministic paraphrases: rotations of the mock generalizer's output."""
    kept = mock_generalizer(caption, MOCK_GENERAL).split()
    out = []
    for k in range(n):
        shift = k % len(kept)
        out.append(" ".join(kept[shift:] + kept[:shift]))
    return tuple(out)


def prepare_samples(dataset, pool: int, text_encoder: TextEncoder,
                    strategy=None, alternates=None) -> list[TrainSample]:
    """Encode a (image, caption) dataset for training.

    ``alternates`` may map a sample's base_id to user-supplied alternate
    captions; otherwise MultipleCaptions gets deterministic paraphrases.
    """
    samples = []
    for item in dataset:
        alts: tuple[str, ...] = ()
        if isinstance(strategy, MultipleCaptions):
            supplied = alternates.get(item.base_id) if alternates else None
            if supplied:
                alts = tuple(supplied)
            else:
                alts = caption_alternates(item.caption, strategy.n_alternates)
        samples.append(TrainSample(
            latent=visual_encode(item.image, pool),
            caption=item.caption,
            embedding=text_encoder(item.caption),
            alternates=alts,
        ))
    return samples


def prepare_fusion(dataset, pool: int, text_encoder: TextEncoder) -> FusionSet:
    return FusionSet(
        latents=np.stack([visual_encode(item.image, pool) for item in dataset]),
        captions=tuple(item.caption for item in dataset),
        embeddings=np.stack([text_encoder(item.caption) for item in dataset]),
    )


def _apply_strategy(strategy, batch, lat0, emb, fusion, rng: StreamRng,
                    text_encoder: TextEncoder):
    """Strategy-adjusted (latents, embeddings) for one batch."""
    if isinstance(strategy, PassThrough):
        return lat0, emb
    if isinstance(strategy, DualFusion):
        if fusion is None or fusion.size == 0:
            raise ValueError("dual fusion requires a non-empty fusion dataset")
        cfg = strategy.config
        j = rng.strategy.integers(0, fusion.size, size=lat0.shape[0])
        lat = fuse_latents(lat0, fusion.latents[j], cfg.w_lat)
        if cfg.mode == TOKEN_LEVEL:
            new_emb = np.stack([
                text_encoder(token_fuse(s.caption, fusion.captions[jj]))
                for s, jj in zip(batch, j)
            ])
        else:
            new_emb = fuse_embeddings(emb, fusion.embeddings[j], cfg.w_emb)
        return lat, new_emb
    if isinstance(strategy, GaussianNoise):
        rms = np.linalg.norm(emb, axis=1, keepdims=True) / np.sqrt(emb.shape[1])
        noise = rng.strategy.standard_normal(emb.shape)
        return lat0, emb + noise * (strategy.sigma * rms)
    if isinstance(strategy, RandomCaption):
        vocab = rc_vocabulary()
        rows = []
        for s in batch:
            length = len(tokenize(s.caption))
            idx = rng.strategy.integers(0, len(vocab), size=length)
            caption = " ".join(vocab[i] for i in idx)
            rows.append(text_encoder.encode_uncached(caption))
        return lat0, np.stack(rows)
    if isinstance(strategy, CaptionWordRepeat):
        rows = []
        for s in batch:
            words = tokenize(s.caption)
            if words:
                pick = int(rng.strategy.integers(0, len(words)))
                pos = int(rng.strategy.integers(0, len(words) + 1))
                repeated = words[pick]
                words.insert(pos, repeated)
                rows.append(text_encoder.encode_uncached(" ".join(words)))
            else:
                rows.append(s.embedding)
        return lat0, np.stack(rows)
    if isinstance(strategy, MultipleCaptions):
        rows = []
        for s in batch:
            if s.alternates:
                k = int(rng.strategy.integers(0, len(s.alternates)))
                rows.append(text_encoder(s.alternates[k]))
            else:
                rows.append(s.embedding)
        return lat0, np.stack(rows)
    raise TypeError(f"unknown strategy {strategy!r}")


def train_step(net: DenoiserNet, batch: list[TrainSample], strategy, fusion,
               opt: AdamState, rng: StreamRng, schedule: DiffusionSchedule,
               text_encoder: TextEncoder) -> float:
    """One Adam update on the batch-mean noise-prediction loss.

    Per sample: a uniform step t, standard-normal noise, then the strategy's
    latent/conditioning adjustments. Returns the batch loss.
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    B = len(batch)
    t = rng.noise.integers(1, schedule.t_max + 1, size=B)
    eps = rng.noise.standard_normal((B, net.d_lat))

    lat0 = np.stack([s.latent for s in batch])
    emb = np.stack([s.embedding for s in batch])
    lat0, emb = _apply_strategy(strategy, batch, lat0, emb, fusion, rng, text_encoder)

    z0 = 2.0 * lat0 - 1.0  # standardize to [-1, 1]
    abar = schedule.alpha_bars[t - 1][:, None]
    x_t = np.sqrt(abar) * z0 + np.sqrt(1.0 - abar) * eps
    temb = time_embedding(t, net.d_time)

    out, cache = net.forward_batch(x_t, temb, emb)
    d_out = 2.0 * (out - eps) / out.size
    grads = net.backward_batch(cache, d_out)
    opt.step(net.params(), grads)
    return mse_loss(eps, out)


def train(dataset, strategy, fusion_dataset, *, schedule: DiffusionSchedule,
          steps: int, batch_size: int, lr: float, seed: int,
          hidden: int = 256, d_text: int = 64, pool: int = 2,
          alternates=None, loss_log=None) -> DenoiserNet:
    """Train a denoiser from scratch on an (image, caption) dataset."""
    text_encoder = TextEncoder(d_text)
    samples = prepare_samples(dataset, pool, text_encoder, strategy, alternates)
    fusion = prepare_fusion(fusion_dataset, pool, text_encoder) if fusion_dataset else None
    d_lat = samples[0].latent.size

    rng = StreamRng.from_seed(seed)
    net = DenoiserNet.create(rng.noise, d_lat=d_lat, d_text=d_text, hidden=hidden)
    opt = AdamState.create(net.params(), lr=lr)
    n = len(samples)
    for _ in range(steps):
        idx = rng.noise.integers(0, n, size=batch_size)
        batch = [samples[i] for i in idx]
        loss = train_step(net, batch, strategy, fusion, opt, rng, schedule, text_encoder)
        if loss_log is not None:
            loss_log.append(loss)
    return net


_Z_CLIP = 5.0  # training-time latents stay within ~4; clipping stops rare
               # feedback blow-ups when the net extrapolates outside them


def _reverse_chain(net: DenoiserNet, z: np.ndarray, emb: np.ndarray,
                   schedule: DiffusionSchedule, rng: np.random.Generator) -> np.ndarray:
    """Ancestral reverse loop from t=T to 1 on a batch of latents."""
    for t in range(schedule.t_max, 0, -1):
        beta = schedule.betas[t - 1]
        alpha = schedule.alphas[t - 1]
        abar = schedule.alpha_bars[t - 1]
        temb = np.broadcast_to(time_embedding(t, net.d_time), (z.shape[0], net.d_time))
        eps_hat, _ = net.forward_batch(z, temb, emb)
        z = (z - beta / np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(alpha)
        if t > 1:
            z = z + np.sqrt(beta) * rng.standard_normal(z.shape)
        np.clip(z, -_Z_CLIP, _Z_CLIP, out=z)
    return z


def sample(net: DenoiserNet, caption: str, schedule: DiffusionSchedule, r_seed: int,
           *, height: int, width: int, pool: int = 2,
           text_encoder: TextEncoder | None = None) -> ToyImage:
    """Generate one image for a caption; deterministic in (net, caption, seed)."""
    enc = text_encoder if text_encoder is not None else TextEncoder(net.d_text)
    emb = enc(caption)[None, :]
    rng = np.random.default_rng(r_seed)
    z = rng.standard_normal((1, net.d_lat))
    z = _reverse_chain(net, z, emb, schedule, rng)
    lat = (z[0] + 1.0) / 2.0  # back to [0, 1] space
    return visual_decode(lat, height, width, pool)


def sample_batch(net: DenoiserNet, captions, schedule: DiffusionSchedule,
                 rng: np.random.Generator, *, height: int, width: int,
                 pool: int = 2, text_encoder: TextEncoder | None = None) -> np.ndarray:
    """Generate an (n, h, w) stack, one image per caption, in caption order."""
    enc = text_encoder if text_encoder is not None else TextEncoder(net.d_text)
    emb = np.stack([enc(c) for c in captions])
    z = rng.standard_normal((len(captions), net.d_lat))
    z = _reverse_chain(net, z, emb, schedule, rng)
    images = [visual_decode((row + 1.0) / 2.0, height, width, pool).pixels for row in z]
    return np.stack(images)
