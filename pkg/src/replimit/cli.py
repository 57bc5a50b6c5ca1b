"""Command-line front end for the whole pipeline.

Every subcommand exits 0 on success and nonzero on any error; diagnostics go
to stderr while data goes to the --output file (or stdout). JSON outputs
carry the fully resolved configuration, including seeds, so any run can be
reproduced from its own output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import genmetrics, generalize, lexicon, replication
from ._util import round_half_up
from .diffusion import data as dd
from .diffusion import experiment as dexp
from .diffusion import modelio
from .diffusion.schedule import make_schedule
from .diffusion.training import sample as sample_one
from .diffusion.training import train as train_net
from .errors import ReplimitError


def _emit(payload: dict, output: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _config_echo(args: argparse.Namespace, keys: list[str]) -> dict:
    return {k: getattr(args, k.replace("-", "_")) for k in keys}


def cmd_import_lexicon(args) -> int:
    lx = lexicon.import_wordnet(args.wordnet, top_k=args.top_k)
    lexicon.save_lexicon(lx, args.output)
    print(f"wrote {len(lx)} lemmas to {args.output} "
          f"(avg_global_hypo={lx.avg_global_hypo:.6g}, da_global={lx.da_global:.6g})",
          file=sys.stderr)
    return 0


def cmd_score(args) -> int:
    lx = lexicon.load_lexicon(args.lexicon)
    report = genmetrics.score_corpus(args.captions, lx)
    payload = {
        "config": _config_echo(args, ["captions", "lexicon", "per_caption"]),
        "summary": report.summary.as_dict(),
    }
    if args.per_caption:
        payload["captions"] = [{"id": rid, **rep.as_dict()} for rid, rep in report.reports]
    _emit(payload, args.output)
    print(f"mean GS {round_half_up(report.summary.mean_gs):.2f} over "
          f"{report.summary.count} captions ({report.summary.skipped} skipped)",
          file=sys.stderr)
    return 0


def cmd_generalize(args) -> int:
    if args.mock:
        client = generalize.MockChatClient()
    else:
        client = generalize.HttpChatClient()
    cache = generalize.ResponseCache(args.cache) if args.cache else None
    n = generalize.batch_generalize(args.captions, args.level, client, args.output,
                                    model_name=args.model, cache=cache,
                                    max_retries=args.max_retries)
    print(f"generalized {n} captions to {args.output}", file=sys.stderr)
    return 0


def cmd_features(args) -> int:
    stack = dd.load_tensor(args.images)
    if stack.ndim == 2:
        stack = stack[None, :, :]
    if stack.ndim != 3:
        raise ReplimitError(f"expected rank-2 or rank-3 image tensor, got rank {stack.ndim}")
    feats = replication.toy_feature_matrix(stack)
    replication.save_features(feats, args.output)
    print(f"wrote {feats.n}x{feats.d} features to {args.output}", file=sys.stderr)
    return 0


def _features_from_args(feature_path, image_path, toy: bool, what: str):
    if feature_path:
        return replication.load_features(feature_path)
    if image_path:
        if not toy:
            raise ReplimitError(f"--{what}-images requires --toy-features")
        stack = dd.load_tensor(image_path)
        if stack.ndim == 2:
            stack = stack[None, :, :]
        return replication.toy_feature_matrix(stack)
    raise ReplimitError(f"one of --{what}-features or --{what}-images is required")


def cmd_repscore(args) -> int:
    f_train = _features_from_args(args.train_features, args.train_images, args.toy_features, "train")
    f_gen = _features_from_args(args.gen_features, args.gen_images, args.toy_features, "gen")
    result = replication.replication_score(
        replication.similarity_scores(f_train, f_gen), quantile=args.quantile)
    payload = {
        "config": _config_echo(args, ["train_features", "gen_features", "train_images",
                                      "gen_images", "toy_features", "quantile"]),
        **result.as_dict(),
    }
    _emit(payload, args.output)
    return 0


def cmd_fd(args) -> int:
    fit_a = replication.fit_gaussian(replication.load_features(args.features_a))
    fit_b = replication.fit_gaussian(replication.load_features(args.features_b))
    payload = {
        "config": _config_echo(args, ["features_a", "features_b"]),
        "fd": replication.frechet_distance(fit_a, fit_b),
    }
    _emit(payload, args.output)
    return 0


def _synth_spec_from_args(args) -> dd.SynthSpec:
    return dd.SynthSpec(
        n_base=args.n_base, dup_factor=args.dup_factor, dup_fraction=args.dup_fraction,
        caption_style=args.caption_style, kinds=tuple(args.kinds.split(",")),
        height=args.height, width=args.width, seed=args.seed,
    )


def cmd_synth(args) -> int:
    spec = _synth_spec_from_args(args)
    samples = dd.gen_synth_dataset(spec)
    dd.save_tensor(dd.dataset_images(samples), args.output_images)
    with open(args.output_captions, "w", encoding="utf-8", newline="\n") as fh:
        for i, s in enumerate(samples):
            fh.write(json.dumps({"id": f"{i:05d}", "caption": s.caption,
                                 "base_id": s.base_id}, sort_keys=True) + "\n")
    print(f"wrote {len(samples)} samples ({spec.n_base} base images) to "
          f"{args.output_images} / {args.output_captions}", file=sys.stderr)
    return 0


def _read_caption_list(path) -> list[str]:
    captions = []
    for record in genmetrics.iter_caption_records(path):
        captions.append(record.caption)
    return captions


def cmd_train(args) -> int:
    images = dd.load_tensor(args.images)
    captions = _read_caption_list(args.captions)
    if images.shape[0] != len(captions):
        raise ReplimitError(f"{images.shape[0]} images but {len(captions)} captions")
    images = np.clip(images, 0.0, 1.0)
    dataset = [dd.SynthSample(image=dd.ToyImage(pixels=img), caption=cap, base_id=i)
               for i, (img, cap) in enumerate(zip(images, captions))]

    strategy = dexp.parse_strategy(json.loads(args.strategy), "--strategy")
    fusion_ds = []
    if args.fusion_images and args.fusion_captions:
        fusion_images = np.clip(dd.load_tensor(args.fusion_images), 0.0, 1.0)
        fusion_captions = _read_caption_list(args.fusion_captions)
        if fusion_images.shape[0] != len(fusion_captions):
            raise ReplimitError("fusion image/caption counts differ")
        fusion_ds = [dd.SynthSample(image=dd.ToyImage(pixels=img), caption=cap, base_id=i)
                     for i, (img, cap) in enumerate(zip(fusion_images, fusion_captions))]

    schedule = make_schedule(args.t_max, args.beta_start, args.beta_end)
    net = train_net(dataset, strategy, fusion_ds, schedule=schedule, steps=args.steps,
                    batch_size=args.batch, lr=args.lr, seed=args.seed,
                    hidden=args.hidden, d_text=args.d_text, pool=args.pool)
    modelio.save_model(net, args.output, height=images.shape[1], width=images.shape[2],
                       pool=args.pool, t_max=args.t_max, beta_start=args.beta_start,
                       beta_end=args.beta_end)
    print(f"trained {net.n_params()} parameters over {args.steps} steps -> {args.output}",
          file=sys.stderr)
    return 0


def cmd_sample(args) -> int:
    net, schedule, meta = modelio.load_model(args.model)
    if args.count == 1:
        image = sample_one(net, args.caption, schedule, args.seed,
                           height=meta["height"], width=meta["width"], pool=meta["pool"])
        dd.save_tensor(image.pixels, args.output)
    else:
        stack = np.stack([
            sample_one(net, args.caption, schedule, args.seed + i,
                       height=meta["height"], width=meta["width"], pool=meta["pool"]).pixels
            for i in range(args.count)
        ])
        dd.save_tensor(stack, args.output)
    print(f"sampled {args.count} image(s) for {args.caption!r} -> {args.output}",
          file=sys.stderr)
    return 0


def cmd_experiment(args) -> int:
    config_obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if args.seed is not None:
        config_obj["seeds"] = [args.seed]
    config = dexp.ExperimentConfig.from_dict(config_obj)
    report = dexp.run_experiment(config, keep_samples=bool(args.save_samples))
    text = report.to_json()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.save_samples:
        out_dir = Path(args.save_samples)
        out_dir.mkdir(parents=True, exist_ok=True)
        for (label, seed), stack in report.samples.items():
            safe = "".join(c if c.isalnum() or c in "._-" else "_" for c in label)
            dd.save_tensor(stack, out_dir / f"{safe}_seed{seed}.rltn")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="replimit",
        description="Caption generality scoring, caption generalization, replication "
                    "measurement, and dual-fusion training on a toy diffusion model.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import-lexicon", help="build a lexicon TSV from WordNet noun files")
    p.add_argument("--wordnet", required=True, help="directory with data.noun and index.noun")
    p.add_argument("--output", required=True, help="lexicon TSV path")
    p.add_argument("--top-k", type=int, default=lexicon.TOP_K_DEFAULT,
                   help="lemmas used for the global normalizers")
    p.set_defaults(func=cmd_import_lexicon)

    p = sub.add_parser("score", help="score caption generality over a JSONL corpus")
    p.add_argument("--captions", required=True, help="corpus JSONL ({id, caption})")
    p.add_argument("--lexicon", required=True, help="lexicon TSV")
    p.add_argument("--per-caption", action="store_true", help="include per-caption reports")
    p.add_argument("--output", help="report JSON path (default stdout)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("generalize", help="generalize captions at a generality level")
    p.add_argument("--captions", required=True, help="corpus JSONL")
    p.add_argument("--level", required=True, choices=[generalize.GENERAL, generalize.FIVE_WORD])
    p.add_argument("--output", required=True, help="output JSONL path")
    p.add_argument("--mock", action="store_true", help="use the offline deterministic mock")
    p.add_argument("--model", default="default", help="model name sent to the endpoint")
    p.add_argument("--cache", help="append-only response cache JSONL")
    p.add_argument("--max-retries", type=int, default=2)
    p.set_defaults(func=cmd_generalize)

    p = sub.add_parser("features", help="toy copy-detection features from an image tensor")
    p.add_argument("--images", required=True, help="RLTN tensor of images (n,h,w)")
    p.add_argument("--output", required=True, help="RLFT feature file")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("repscore", help="replication score R from feature files")
    p.add_argument("--train-features", help="RLFT features of the training set")
    p.add_argument("--gen-features", help="RLFT features of the generated set")
    p.add_argument("--train-images", help="RLTN image tensor (with --toy-features)")
    p.add_argument("--gen-images", help="RLTN image tensor (with --toy-features)")
    p.add_argument("--toy-features", action="store_true",
                   help="extract toy features from --*-images tensors")
    p.add_argument("--quantile", type=float, default=0.95)
    p.add_argument("--output", help="result JSON path (default stdout)")
    p.set_defaults(func=cmd_repscore)

    p = sub.add_parser("fd", help="feature-space Fréchet distance between two feature files")
    p.add_argument("--features-a", required=True)
    p.add_argument("--features-b", required=True)
    p.add_argument("--output", help="result JSON path (default stdout)")
    p.set_defaults(func=cmd_fd)

    p = sub.add_parser("synth", help="generate a synthetic shape dataset")
    p.add_argument("--n-base", type=int, required=True)
    p.add_argument("--dup-factor", type=int, default=1)
    p.add_argument("--dup-fraction", type=float, default=0.0)
    p.add_argument("--caption-style", choices=[dd.SPECIFIC, dd.GENERAL], default=dd.SPECIFIC)
    p.add_argument("--kinds", default=",".join(dd.TRAIN_KINDS),
                   help="comma-separated shape kinds")
    p.add_argument("--height", type=int, default=16)
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-images", required=True, help="RLTN tensor path")
    p.add_argument("--output-captions", required=True, help="captions JSONL path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a denoiser on an image/caption dataset")
    p.add_argument("--images", required=True, help="RLTN tensor (n,h,w)")
    p.add_argument("--captions", required=True, help="captions JSONL, one per image")
    p.add_argument("--strategy", default='"none"',
                   help="strategy JSON (e.g. '\"none\"' or "
                        "'{\"name\":\"dual_fusion\",\"w_lat\":0.1,\"w_emb\":0.5}')")
    p.add_argument("--fusion-images", help="RLTN tensor for the fusion set")
    p.add_argument("--fusion-captions", help="captions JSONL for the fusion set")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--d-text", type=int, default=64)
    p.add_argument("--pool", type=int, default=2)
    p.add_argument("--t-max", type=int, default=100)
    p.add_argument("--beta-start", type=float, default=1e-4)
    p.add_argument("--beta-end", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="model JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="sample images from a trained model")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--caption", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--output", required=True, help="RLTN tensor path")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("experiment", help="run a full replication experiment from a config")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--output", help="report JSON path (default stdout)")
    p.add_argument("--seed", type=int, help="override the config's seed list with one seed")
    p.add_argument("--save-samples", help="directory for per-strategy sample tensors")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ReplimitError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
