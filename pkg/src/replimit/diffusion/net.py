"""Noise-prediction MLP with hand-written backprop and an Adam optimizer.

Two hidden layers with the smooth gate x*sigmoid(x); input is the noisy
latent concatenated with a sinusoidal time embedding and the caption
embedding, output the predicted noise. The smooth activation keeps
finite-difference gradient checks clean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoders import D_TEXT_DEFAULT, D_TIME_DEFAULT, time_embedding

HIDDEN_DEFAULT = 256


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _silu(x):
    return x * _sigmoid(x)


def _silu_grad(x):
    s = _sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


@dataclass
class DenoiserNet:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    d_lat: int
    d_time: int = D_TIME_DEFAULT
    d_text: int = D_TEXT_DEFAULT

    @classmethod
    def create(cls, rng: np.random.Generator, d_lat: int, d_text: int = D_TEXT_DEFAULT,
               hidden: int = HIDDEN_DEFAULT, d_time: int = D_TIME_DEFAULT,
               dtype=np.float64) -> "DenoiserNet":
        d_in = d_lat + d_time + d_text
        def init(n_out, n_in):
            return (rng.standard_normal((n_out, n_in)) * np.sqrt(2.0 / n_in)).astype(dtype)
        return cls(
            w1=init(hidden, d_in), b1=np.zeros(hidden, dtype=dtype),
            w2=init(hidden, hidden), b2=np.zeros(hidden, dtype=dtype),
            w3=init(d_lat, hidden), b3=np.zeros(d_lat, dtype=dtype),
            d_lat=d_lat, d_time=d_time, d_text=d_text,
        )

    @property
    def hidden(self) -> int:
        return self.b1.size

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]

    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params()])

    def set_flat(self, flat: np.ndarray) -> None:
        offset = 0
        for p in self.params():
            p[...] = flat[offset:offset + p.size].reshape(p.shape)
            offset += p.size

    def forward_batch(self, lat_t: np.ndarray, temb: np.ndarray, cemb: np.ndarray):
        """Predicted noise for a batch, plus the cache backward needs."""
        v = np.concatenate([lat_t, temb, cemb], axis=1)
        h1 = v @ self.w1.T + self.b1
        a1 = _silu(h1)
        h2 = a1 @ self.w2.T + self.b2
        a2 = _silu(h2)
        out = a2 @ self.w3.T + self.b3
        return out, (v, h1, a1, h2, a2)

    def backward_batch(self, cache, d_out: np.ndarray) -> list[np.ndarray]:
        """Gradients w.r.t. all parameters given dLoss/dOut."""
        v, h1, a1, h2, a2 = cache
        d_w3 = d_out.T @ a2
        d_b3 = d_out.sum(axis=0)
        d_a2 = d_out @ self.w3
        d_h2 = d_a2 * _silu_grad(h2)
        d_w2 = d_h2.T @ a1
        d_b2 = d_h2.sum(axis=0)
        d_a1 = d_h2 @ self.w2
        d_h1 = d_a1 * _silu_grad(h1)
        d_w1 = d_h1.T @ v
        d_b1 = d_h1.sum(axis=0)
        return [d_w1, d_b1, d_w2, d_b2, d_w3, d_b3]

    def predict(self, lat_t: np.ndarray, t: int, cemb: np.ndarray) -> np.ndarray:
        temb = time_embedding(t, self.d_time)
        out, _ = self.forward_batch(lat_t[None, :], temb[None, :], cemb[None, :])
        return out[0]


def denoise(net: DenoiserNet, lat_t: np.ndarray, t: int, text_emb: np.ndarray) -> np.ndarray:
    """Single-sample noise prediction."""
    lat_t = np.asarray(lat_t, dtype=np.float64)
    if lat_t.shape != (net.d_lat,):
        raise ValueError(f"latent shape {lat_t.shape} != ({net.d_lat},)")
    text_emb = np.asarray(text_emb, dtype=np.float64)
    if text_emb.shape != (net.d_text,):
        raise ValueError(f"text embedding shape {text_emb.shape} != ({net.d_text},)")
    return net.predict(lat_t, t, text_emb)


def mse_loss(eps: np.ndarray, eps_hat: np.ndarray) -> float:
    """Mean squared error over latent components (and batch rows, if 2-D)."""
    eps = np.asarray(eps, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    if eps.shape != eps_hat.shape:
        raise ValueError(f"shape mismatch: {eps.shape} vs {eps_hat.shape}")
    diff = eps - eps_hat
    return float(np.mean(diff * diff))


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def create(cls, params: list[np.ndarray], lr: float = 1e-3,
               betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8) -> "AdamState":
        return cls(lr=lr, beta1=betas[0], beta2=betas[1], eps=eps,
                   m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.step_count += 1
        bias1 = 1.0 - self.beta1 ** self.step_count
        bias2 = 1.0 - self.beta2 ** self.step_count
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
