"""Command-line entry point: build graphs, synthesize data, train, sweep,
evaluate, describe, and serve the riddle game."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__


def _train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=512)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)


def _train_config(args):
    from .training import TrainConfig

    return TrainConfig(lr=args.lr, weight_decay=args.weight_decay,
                       batch_size=args.batch_size, epochs=args.epochs,
                       patience=args.patience, seed=args.seed,
                       val_fraction=args.val_fraction)


def _effective_config(args) -> dict:
    skip = {"func", "command"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gscg",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="bundle directory -> graph JSON")
    p.add_argument("bundle_dir")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--method", choices=("brute", "grid"), default="brute")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("synth", help="generate synthetic bundles or datasets")
    kind = p.add_subparsers(dest="kind", required=True)
    pb = kind.add_parser("bundles", help="raster bundles with ground-truth graphs")
    pb.add_argument("spec", help="JSON spec file (seed, n_scenes, ...)")
    pb.add_argument("-o", "--output", required=True, help="output directory")
    pb.set_defaults(func=cmd_synth_bundles)
    pd = kind.add_parser("dataset", help="labeled graph classification dataset")
    pd.add_argument("spec", help="JSON spec file (seed, n_scenes, ...)")
    pd.add_argument("-o", "--output", required=True, help="output JSONL file")
    pd.add_argument("--n", type=int, default=None, help="override sample count")
    pd.set_defaults(func=cmd_synth_dataset)

    p = sub.add_parser("train", help="train one configuration")
    p.add_argument("dataset")
    p.add_argument("--config", default="full_model")
    p.add_argument("-o", "--output", default="checkpoint.npz")
    _train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="train + evaluate all ablation configurations")
    p.add_argument("dataset")
    p.add_argument("-o", "--output", default=None, help="JSON report file")
    p.add_argument("--configs", default=None,
                   help="comma-separated subset (default: all 12)")
    _train_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("dataset")
    p.add_argument("checkpoint")
    p.add_argument("-o", "--output", default=None, help="JSON report file")
    p.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("describe", help="render a context description")
    p.add_argument("graph", help="graph JSON document")
    p.add_argument("target", type=int)
    p.add_argument("--config", default="full_model")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("serve", help="run the riddle game server")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--pool", required=True, help="dataset JSONL used as round pool")
    p.add_argument("--log", default=None, help="append-only JSONL event log")
    p.add_argument("--static-dir", default=None, help="UI assets directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_serve)
    return parser


def cmd_build_graph(args) -> int:
    from .graph import build_graph, save_graph
    from .scene_io import load_bundle

    bundle = load_bundle(args.bundle_dir)
    graph = build_graph(bundle, method=args.method)
    save_graph(graph, args.output)
    print(f"wrote {args.output}: {len(graph.nodes)} nodes, {len(graph.edges)} edges")
    return 0


def cmd_synth_bundles(args) -> int:
    from .graph import save_graph
    from .scene_io import write_bundle
    from .synth import gen_bundle, load_spec

    spec = load_spec(args.spec)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(spec.n_scenes):
        bundle, truth = gen_bundle(spec, i)
        scene_dir = out / f"scene_{i:04d}"
        write_bundle(bundle, scene_dir)
        save_graph(truth, scene_dir / "truth.json")
    (out / "spec_used.json").write_text(json.dumps(_effective_config(args), indent=2))
    print(f"wrote {spec.n_scenes} bundles under {out}")
    return 0


def cmd_synth_dataset(args) -> int:
    from .dataset import save_dataset
    from .synth import gen_graph_dataset, load_spec

    spec = load_spec(args.spec)
    samples = gen_graph_dataset(spec, args.n)
    save_dataset(samples, args.output)
    print(f"wrote {len(samples)} samples to {args.output}")
    return 0


def cmd_train(args) -> int:
    from .classifier import ABLATION_CONFIGS
    from .dataset import load_dataset
    from .training import evaluate, save_model, train

    if args.config not in ABLATION_CONFIGS:
        raise SystemExit(f"unknown ablation config {args.config!r}; valid: "
                         f"{', '.join(ABLATION_CONFIGS)}")
    samples = load_dataset(args.dataset)
    result = train(samples, args.config, _train_config(args))
    save_model(args.output, result.model, extra={
        "cli_config": _effective_config(args),
        "best_epoch": result.best_epoch,
        "best_val_macro_f1": result.best_val_f1,
        "history": result.history,
    })
    print(f"trained {args.config}: best epoch {result.best_epoch}, "
          f"val macro-F1 {result.best_val_f1:.4f} -> {args.output}")
    return 0


def cmd_sweep(args) -> int:
    from .classifier import ABLATION_CONFIGS
    from .dataset import load_dataset
    from .training import ablation_sweep

    names = args.configs.split(",") if args.configs else list(ABLATION_CONFIGS)
    samples = load_dataset(args.dataset)
    reports = ablation_sweep(samples, names, _train_config(args))
    width = max(len(n) for n in reports)
    print(f"{'configuration':<{width}}  accuracy (%)    macro-F1")
    for name, rep in reports.items():
        print(f"{name:<{width}}  {rep.formatted():>14}  {rep.macro_f1:.4f}")
    if args.output:
        doc = {"effective_config": _effective_config(args),
               "reports": {n: r.to_dict() for n, r in reports.items()}}
        Path(args.output).write_text(json.dumps(doc, indent=2))
        print(f"wrote {args.output}")
    return 0


def cmd_eval(args) -> int:
    from .dataset import load_dataset
    from .training import evaluate, load_model

    samples = load_dataset(args.dataset)
    model = load_model(args.checkpoint)
    report = evaluate(samples, model, bootstrap_seed=args.seed)
    print(f"accuracy {report.formatted()}  macro-F1 {report.macro_f1:.4f} "
          f"on {report.n_samples} samples")
    if args.output:
        doc = {"effective_config": _effective_config(args), **report.to_dict()}
        Path(args.output).write_text(json.dumps(doc, indent=2))
    return 0


def cmd_describe(args) -> int:
    from .classifier import ABLATION_CONFIGS
    from .describe import describe_object
    from .graph import load_graph

    if args.config not in ABLATION_CONFIGS:
        raise SystemExit(f"unknown ablation config {args.config!r}; valid: "
                         f"{', '.join(ABLATION_CONFIGS)}")
    graph = load_graph(args.graph)
    desc = describe_object(graph, args.target, ABLATION_CONFIGS[args.config])
    print(desc.text)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .dataset import load_dataset
    from .server import create_app
    from .training import load_model

    model = load_model(args.checkpoint)
    pool = load_dataset(args.pool)
    app = create_app(pool, model, seed=args.seed, log_path=args.log,
                     static_dir=args.static_dir)
    print(f"serving {len(pool)} rounds on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # malformed inputs from our own loaders
        from .graph import GraphFormatError
        from .scene_io import BundleError

        if isinstance(exc, (GraphFormatError, BundleError)):
            print(f"error: {exc}", file=sys.stderr)
            return 1
        raise


if __name__ == "__main__":
    sys.exit(main())
