"""Toy conditional DDPM: schedule, encoders, denoiser, mitigation strategies,
synthetic data, training/sampling, and the experiment harness."""

from .data import (
    FUSION_KINDS,
    GENERAL,
    SPECIFIC,
    TRAIN_KINDS,
    SynthSample,
    SynthSpec,
    ToyImage,
    dataset_images,
    gen_synth_dataset,
    load_tensor,
    save_tensor,
)
from .encoders import (
    TextEncoder,
    fuse_embeddings,
    fuse_latents,
    text_encode,
    time_embedding,
    token_fuse,
    visual_decode,
    visual_encode,
)
from .experiment import ExperimentConfig, ExperimentReport, StrategyResult, parse_strategy, run_experiment
from .modelio import load_model, save_model
from .net import AdamState, DenoiserNet, denoise, mse_loss
from .schedule import DiffusionSchedule, forward_sample, make_schedule
from .strategies import (
    EMBEDDING_LEVEL,
    TOKEN_LEVEL,
    CaptionWordRepeat,
    DualFusion,
    FusionConfig,
    GaussianNoise,
    MultipleCaptions,
    PassThrough,
    RandomCaption,
    rc_vocabulary,
)
from .training import (
    FusionSet,
    StreamRng,
    TrainSample,
    caption_alternates,
    prepare_fusion,
    prepare_samples,
    sample,
    sample_batch,
    train,
    train_step,
)

__all__ = [
    "FUSION_KINDS", "GENERAL", "SPECIFIC", "TRAIN_KINDS",
    "SynthSample", "SynthSpec", "ToyImage", "dataset_images", "gen_synth_dataset",
    "load_tensor", "save_tensor",
    "TextEncoder", "fuse_embeddings", "fuse_latents", "text_encode",
    "time_embedding", "token_fuse", "visual_decode", "visual_encode",
    "ExperimentConfig", "ExperimentReport", "StrategyResult", "parse_strategy", "run_experiment",
    "load_model", "save_model",
    "AdamState", "DenoiserNet", "denoise", "mse_loss",
    "DiffusionSchedule", "forward_sample", "make_schedule",
    "EMBEDDING_LEVEL", "TOKEN_LEVEL",
    "CaptionWordRepeat", "DualFusion", "FusionConfig", "GaussianNoise",
    "MultipleCaptions", "PassThrough", "RandomCaption", "rc_vocabulary",
    "FusionSet", "StreamRng", "TrainSample", "caption_alternates",
    "prepare_fusion", "prepare_samples", "sample", "sample_batch", "train", "train_step",
]
