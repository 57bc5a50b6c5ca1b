"""DDPM noise schedule and the closed-form forward marginal."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

T_MAX_DEFAULT = 100
BETA_START_DEFAULT = 1e-4
BETA_END_DEFAULT = 0.02


@dataclass(frozen=True)
class DiffusionSchedule:
    betas: np.ndarray        # beta_1 .. beta_T
    alphas: np.ndarray       # 1 - beta_t
    alpha_bars: np.ndarray   # cumulative product of alphas

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        alphas = np.asarray(self.alphas, dtype=np.float64)
        alpha_bars = np.asarray(self.alpha_bars, dtype=np.float64)
        if betas.ndim != 1 or betas.size < 1:
            raise ValueError("betas must be a non-empty 1-D array")
        if not (0.0 < betas[0] and betas[-1] < 1.0 and np.all(np.diff(betas) >= 0)):
            raise ValueError("betas must be nondecreasing within (0, 1)")
        if np.any(np.diff(alpha_bars) >= 0):
            if betas.size > 1:
                raise ValueError("alpha_bars must be strictly decreasing")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "alpha_bars", alpha_bars)

    @property
    def t_max(self) -> int:
        return self.betas.size

    def alpha_bar(self, t: int) -> float:
        """alpha-bar at step t, 1-indexed."""
        if not 1 <= t <= self.t_max:
            raise ValueError(f"t must be in [1, {self.t_max}]: {t}")
        return float(self.alpha_bars[t - 1])


def make_schedule(t_max: int = T_MAX_DEFAULT, beta_start: float = BETA_START_DEFAULT,
                  beta_end: float = BETA_END_DEFAULT) -> DiffusionSchedule:
    """Linear beta schedule; alpha-bar products computed in double precision."""
    if t_max < 1:
        raise ValueError(f"t_max must be >= 1: {t_max}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError(f"need 0 < beta_start <= beta_end < 1: ({beta_start}, {beta_end})")
    betas = np.linspace(beta_start, beta_end, t_max, dtype=np.float64)
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    return DiffusionSchedule(betas=betas, alphas=alphas, alpha_bars=alpha_bars)


def forward_sample(x0: np.ndarray, t, eps: np.ndarray, schedule: DiffusionSchedule) -> np.ndarray:
    """sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps.

    ``t`` may be a scalar step or a per-row integer array for batched x0.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ValueError(f"shape mismatch: x0 {x0.shape}, eps {eps.shape}")
    t_arr = np.asarray(t)
    if np.any(t_arr < 1) or np.any(t_arr > schedule.t_max):
        raise ValueError(f"t out of range [1, {schedule.t_max}]: {t}")
    abar = schedule.alpha_bars[t_arr - 1]
    if t_arr.ndim == 1 and x0.ndim == 2:
        abar = abar[:, None]
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps
