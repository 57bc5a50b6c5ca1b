"""End-to-end replication experiments: train per strategy, generate, score.

For every (strategy, seed) pair a fresh model is trained on the synthetic
fine-tuning set, images are generated from the training captions, and two
numbers come out: the replication score R against the training features and
the Fréchet distance between the generated and held-out feature fits.

Reports serialize deterministically: reruns of the same config produce
byte-identical JSON. Wall-clock times are kept on the in-memory results
only and go to the log stream, never into the report file.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .._util import mix_seed
from ..replication import fit_gaussian, frechet_distance, replication_score, similarity_scores, toy_feature_matrix
from .data import FUSION_KINDS, GENERAL, SynthSpec, dataset_images, gen_synth_dataset
from .schedule import make_schedule
from .strategies import (
    CaptionWordRepeat,
    DualFusion,
    EMBEDDING_LEVEL,
    FusionConfig,
    GaussianNoise,
    MultipleCaptions,
    PassThrough,
    RandomCaption,
    TOKEN_LEVEL,
)
from .training import sample_batch, train

_STRATEGY_NAMES = ("none", "dual_fusion", "gaussian_noise", "random_caption",
                   "caption_word_repeat", "multiple_captions")


def parse_strategy(entry, where: str):
    """One strategy from its JSON form (a bare name or an object with one)."""
    if isinstance(entry, str):
        name, params = entry, {}
    elif isinstance(entry, dict):
        params = dict(entry)
        name = params.pop("name", None)
        if not isinstance(name, str):
            raise ValueError(f"{where}: strategy object needs a string 'name'")
    else:
        raise ValueError(f"{where}: strategy must be a name or an object")
    if name not in _STRATEGY_NAMES:
        raise ValueError(f"{where}: unknown strategy name {name!r} "
                         f"(expected one of {', '.join(_STRATEGY_NAMES)})")
    try:
        if name == "none":
            strategy = PassThrough(**params)
        elif name == "dual_fusion":
            mode = params.pop("mode", EMBEDDING_LEVEL)
            strategy = DualFusion(FusionConfig(mode=mode,
                                               w_lat=params.pop("w_lat", 0.0),
                                               w_emb=params.pop("w_emb", 0.0)))
            if params:
                raise TypeError(f"unexpected keys {sorted(params)}")
        elif name == "gaussian_noise":
            strategy = GaussianNoise(**params)
        elif name == "random_caption":
            strategy = RandomCaption(**params)
        elif name == "caption_word_repeat":
            strategy = CaptionWordRepeat(**params)
        else:
            strategy = MultipleCaptions(**{"n_alternates": params.pop("alternates", 20), **params})
    except TypeError as exc:
        raise ValueError(f"{where}: bad parameters for {name!r}: {exc}") from None
    return strategy


def _synth_spec(obj: dict, where: str, **defaults) -> SynthSpec:
    known = {"n_base", "dup_factor", "dup_fraction", "caption_style", "kinds",
             "height", "width", "seed"}
    unknown = set(obj) - known
    if unknown:
        raise ValueError(f"{where}: unknown keys {sorted(unknown)}")
    merged = {**defaults, **obj}
    if "kinds" in merged:
        merged["kinds"] = tuple(merged["kinds"])
    return SynthSpec(**merged)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: SynthSpec
    fusion: SynthSpec
    holdout: SynthSpec
    strategies: tuple = ()
    strategy_specs: tuple = ()  # JSON forms, echoed into the report
    seeds: tuple[int, ...] = (0,)
    t_max: int = 100
    steps: int = 2000
    lr: float = 1e-3
    batch: int = 32
    n_gen: int = 128
    hidden: int = 256
    d_text: int = 64
    pool: int = 2
    beta_start: float = 1e-4
    beta_end: float = 0.02

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {"dataset", "fusion", "holdout", "strategies", "fusion_weights",
                 "fusion_mode", "seeds", "t_max", "steps", "lr", "batch",
                 "n_gen", "hidden", "d_text", "pool", "beta_start", "beta_end"}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"config: unknown keys {sorted(unknown)}")
        if "dataset" not in obj:
            raise ValueError("config: missing 'dataset'")
        dataset = _synth_spec(obj["dataset"], "config.dataset")
        fusion = _synth_spec(obj.get("fusion", {}), "config.fusion",
                             n_base=64, kinds=FUSION_KINDS, caption_style=GENERAL,
                             height=dataset.height, width=dataset.width,
                             seed=dataset.seed + 7919)
        holdout = _synth_spec(obj.get("holdout", {}), "config.holdout",
                              n_base=dataset.n_base, kinds=dataset.kinds,
                              caption_style=dataset.caption_style,
                              height=dataset.height, width=dataset.width,
                              seed=dataset.seed + 104729)

        strategy_specs = list(obj.get("strategies", []))
        strategies = [parse_strategy(s, f"config.strategies[{i}]")
                      for i, s in enumerate(strategy_specs)]
        mode = obj.get("fusion_mode", EMBEDDING_LEVEL)
        for i, pair in enumerate(obj.get("fusion_weights", [])):
            if isinstance(pair, (int, float)):
                w_lat, w_emb = float(pair), 0.0
            else:
                w_lat = float(pair[0])
                w_emb = float(pair[1]) if len(pair) > 1 and pair[1] is not None else 0.0
            cfg = FusionConfig(mode=mode, w_lat=w_lat, w_emb=w_emb)
            strategies.append(DualFusion(cfg))
            strategy_specs.append({"name": "dual_fusion", "mode": mode,
                                   "w_lat": w_lat, "w_emb": w_emb})
        if not strategies:
            raise ValueError("config: at least one strategy is required")
        seeds = tuple(int(s) for s in obj.get("seeds", [0]))
        if not seeds:
            raise ValueError("config: 'seeds' must not be empty")
        return cls(
            dataset=dataset, fusion=fusion, holdout=holdout,
            strategies=tuple(strategies), strategy_specs=tuple(strategy_specs),
            seeds=seeds,
            t_max=int(obj.get("t_max", 100)),
            steps=int(obj.get("steps", 2000)),
            lr=float(obj.get("lr", 1e-3)),
            batch=int(obj.get("batch", 32)),
            n_gen=int(obj.get("n_gen", 128)),
            hidden=int(obj.get("hidden", 256)),
            d_text=int(obj.get("d_text", 64)),
            pool=int(obj.get("pool", 2)),
            beta_start=float(obj.get("beta_start", 1e-4)),
            beta_end=float(obj.get("beta_end", 0.02)),
        )

    def resolved_dict(self) -> dict:
        return {
            "dataset": asdict(self.dataset),
            "fusion": asdict(self.fusion),
            "holdout": asdict(self.holdout),
            "strategies": list(self.strategy_specs),
            "seeds": list(self.seeds),
            "t_max": self.t_max, "steps": self.steps, "lr": self.lr,
            "batch": self.batch, "n_gen": self.n_gen, "hidden": self.hidden,
            "d_text": self.d_text, "pool": self.pool,
            "beta_start": self.beta_start, "beta_end": self.beta_end,
        }


@dataclass(frozen=True)
class StrategyResult:
    strategy: str
    seed: int
    r: float
    fd: float
    n_gen: int
    n_train: int
    wall_time_s: float  # informational; kept out of the serialized report

    def as_report_dict(self) -> dict:
        return {"strategy": self.strategy, "seed": self.seed, "r": self.r,
                "fd": self.fd, "n_gen": self.n_gen, "n_train": self.n_train}


@dataclass
class ExperimentReport:
    config: dict
    results: list[StrategyResult] = field(default_factory=list)
    samples: dict = field(default_factory=dict)  # label/seed -> generated stack

    def to_json(self) -> str:
        payload = {"config": self.config,
                   "results": [r.as_report_dict() for r in self.results]}
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def run_experiment(config: ExperimentConfig, log=None, keep_samples: bool = False) -> ExperimentReport:
    """Train/generate/score every (strategy, seed) pair in the config."""
    log = log if log is not None else sys.stderr
    dataset = gen_synth_dataset(config.dataset)
    fusion_ds = gen_synth_dataset(config.fusion)
    holdout = gen_synth_dataset(config.holdout)
    schedule = make_schedule(config.t_max, config.beta_start, config.beta_end)

    f_train = toy_feature_matrix(dataset_images(dataset))
    f_holdout = toy_feature_matrix(dataset_images(holdout))
    holdout_fit = fit_gaussian(f_holdout)

    captions = [dataset[i % len(dataset)].caption for i in range(config.n_gen)]
    report = ExperimentReport(config=config.resolved_dict())
    for strategy in config.strategies:
        for seed in config.seeds:
            started = time.monotonic()
            run_seed = mix_seed(strategy.label, seed)
            net = train(dataset, strategy, fusion_ds, schedule=schedule,
                        steps=config.steps, batch_size=config.batch, lr=config.lr,
                        seed=run_seed, hidden=config.hidden, d_text=config.d_text,
                        pool=config.pool)
            gen_rng = np.random.default_rng(mix_seed("sample", run_seed))
            images = sample_batch(net, captions, schedule, gen_rng,
                                  height=config.dataset.height,
                                  width=config.dataset.width, pool=config.pool)
            f_gen = toy_feature_matrix(images)
            rep = replication_score(similarity_scores(f_train, f_gen))
            fd = frechet_distance(fit_gaussian(f_gen), holdout_fit)
            elapsed = time.monotonic() - started
            result = StrategyResult(strategy=strategy.label, seed=seed,
                                    r=rep.r, fd=fd, n_gen=rep.n_gen,
                                    n_train=rep.n_train, wall_time_s=elapsed)
            report.results.append(result)
            if keep_samples:
                report.samples[(strategy.label, seed)] = images
            print(f"[experiment] {strategy.label} seed={seed} "
                  f"R={rep.r:.4f} FD={fd:.4f} ({elapsed:.1f}s)", file=log)
    return report
