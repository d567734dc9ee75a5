"""Command-line entry points: synth, train, evaluate, score, serve."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

from . import pipeline, signals
from .config import RunConfig, load_config


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="JSON run config")
    p.add_argument("--seed", type=int, default=None, help="override config seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stampmon",
        description="Stamping-stroke anomaly monitor: synthesize, train, evaluate, score, serve.",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("synth", help="write a synthetic stroke dataset file")
    _add_common(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--normal", type=int, default=1408)
    p.add_argument("--anomaly", type=int, default=40)
    p.add_argument("--format", choices=("csv", "binary"), default=None)

    p = sub.add_parser("train", help="train the golden baseline and write a model file")
    _add_common(p)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)

    p = sub.add_parser("evaluate", help="feature-set comparison + one-class test summary")
    _add_common(p)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--report", type=Path, default=None, help="write comparison CSV here")

    p = sub.add_parser("score", help="score a dataset offline to CSV")
    _add_common(p)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("serve", help="start the scoring service")
    _add_common(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--replay", type=Path, default=None, help="dataset file to replay")
    p.add_argument("--rate", type=float, default=None, help="replay strokes per minute")

    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def cmd_synth(args) -> int:
    cfg = _config(args)
    dataset = signals.synthesize_dataset(cfg.generator, args.normal, args.anomaly, cfg.seed)
    signals.write_dataset(dataset, args.out, format=args.format)
    print(f"wrote {len(dataset)} strokes ({dataset.count(signals.ANOMALY)} anomalies) to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    dataset = signals.load_dataset(args.data)
    model, report = pipeline.train_monitor(
        dataset,
        cfg.filter_spec,
        filter_mode=cfg.filter_mode,
        segmentation_config=cfg.segmentation,
        feature_set_kind=cfg.feature_set_kind,
        split_spec=_seeded(cfg.one_class_split, cfg.seed),
        nu_grid=cfg.nu_grid,
        gamma_grid=cfg.gamma_grid,
        seed=cfg.seed,
    )
    pipeline.save_model(model, args.model)
    t = report.tune
    print(
        f"trained on {report.n_train} normals: nu={t.nu} gamma={t.gamma} "
        f"threshold={t.threshold:.4f} validation FNR={100 * t.validation_fnr:.2f}% "
        f"FPR={100 * t.validation_fpr:.2f}%"
    )
    print(f"model written to {args.model}")
    return 0


def _seeded(split: signals.SplitSpec, seed: int) -> signals.SplitSpec:
    return signals.SplitSpec(
        train_fraction=split.train_fraction,
        test_fraction=split.test_fraction,
        subsample_target_ratio=split.subsample_target_ratio,
        seed=seed,
    )


def cmd_evaluate(args) -> int:
    from . import evaluation

    cfg = _config(args)
    dataset = signals.load_dataset(args.data)

    matrices = pipeline.build_comparison_matrices(
        dataset,
        cfg.filter_spec,
        filter_mode=cfg.filter_mode,
        segmentation_config=cfg.segmentation,
        split_spec=_seeded(cfg.supervised_split, cfg.seed),
    )
    report = evaluation.run_feature_comparison(matrices, seed=cfg.seed)
    print(report.to_table())
    if args.report:
        report.to_csv(args.report)
        print(f"comparison written to {args.report}")

    split_spec = _seeded(cfg.one_class_split, cfg.seed)
    model, _ = pipeline.train_monitor(
        dataset,
        cfg.filter_spec,
        filter_mode=cfg.filter_mode,
        segmentation_config=cfg.segmentation,
        feature_set_kind=cfg.feature_set_kind,
        split_spec=split_spec,
        nu_grid=cfg.nu_grid,
        gamma_grid=cfg.gamma_grid,
        seed=cfg.seed,
    )
    split = signals.split_dataset(dataset, split_spec, mode="one_class")
    counts, _ = pipeline.evaluate_monitor(model, split.test.strokes)
    print(f"one-class baseline on held-out test: {counts.formatted()}")
    return 0


def cmd_score(args) -> int:
    model = pipeline.load_model(args.model)
    dataset = signals.load_dataset(args.data)
    with args.out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["stroke_id", "label", "raw_distance", "score", "is_anomaly",
             "threshold", "A", "B", "C", "D", "E", "F"]
        )
        for stroke in dataset:
            decision, seg = pipeline.score_stroke(model, stroke)
            writer.writerow(
                [stroke.stroke_id, stroke.label, repr(decision.raw_distance),
                 repr(decision.score), int(decision.is_anomaly),
                 repr(decision.threshold_used)]
                + [seg.points[p] for p in "ABCDEF"]
            )
    print(f"scored {len(dataset)} strokes to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = _config(args)
    port = args.port if args.port is not None else cfg.port
    rate = args.rate if args.rate is not None else cfg.replay_rate_per_min
    app = create_app(
        model_path=args.model,
        replay_path=args.replay,
        replay_rate_per_min=rate,
        stroke_cache=cfg.stroke_cache,
    )
    uvicorn.run(app, host="0.0.0.0", port=port)
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "score": cmd_score,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command not in COMMANDS:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
