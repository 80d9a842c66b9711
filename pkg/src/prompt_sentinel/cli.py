"""Command-line front door.

Four subcommands: ``scan`` text from a file or stdin, ``bench`` a labeled
dataset through the four-configuration ablation, ``gen-benchmark`` to
write the deterministic synthetic set, and ``train-ngram`` to fit the
reference surprisal model. Scan exit codes encode the action (0 allow,
1 flag, 2 block) so shell pipelines can gate on detection without parsing
output; usage errors exit 64.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import benchmark
from .align import tokenize
from .core import Action, load_config
from .presets import ABLATION_CONFIGS, build_engine
from .spectral import train_ngram

EX_USAGE = 64

_ACTION_EXIT_CODES = {Action.ALLOW: 0, Action.FLAG: 1, Action.BLOCK: 2}


def _read_input(path: Optional[str]) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def cmd_scan(args: argparse.Namespace) -> int:
    try:
        text = _read_input(args.input)
    except OSError as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return EX_USAGE
    try:
        config = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"error: cannot load configuration: {exc}", file=sys.stderr)
        return EX_USAGE

    engine = build_engine("full", config)
    result = engine.scan(text, source_id=args.source)

    if args.json:
        print(json.dumps(result.to_dict(), sort_keys=True))
    else:
        print(f"action: {result.action.value}")
        print(f"overall_risk: {result.overall_risk:.3f}")
        print(f"effective_threshold: {result.effective_threshold:.3f}")
        for sig in result.signals:
            span = f" span={sig.span}" if sig.span else ""
            print(f"  {sig.detector_id} confidence={sig.confidence:.3f} category={sig.category}{span}")
    return _ACTION_EXIT_CODES[result.action]


def cmd_bench(args: argparse.Namespace) -> int:
    if args.synthetic:
        samples = benchmark.generate_synthetic(args.seed)
        dataset = "synthetic"
    else:
        try:
            samples = benchmark.load_jsonl(args.dataset)
        except (OSError, benchmark.DatasetFormatError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        dataset = args.dataset
    configs = args.configs.split(",") if args.configs else list(ABLATION_CONFIGS)
    rows = benchmark.run_ablation(samples, configs=configs, dataset=dataset)
    if args.out_json:
        benchmark.emit_report(rows, "json", args.out_json)
    if args.out_md:
        benchmark.emit_report(rows, "markdown", args.out_md)
    if not args.out_json and not args.out_md:
        print(benchmark.rows_to_markdown(rows))
    return 0


def cmd_gen_benchmark(args: argparse.Namespace) -> int:
    samples = benchmark.generate_synthetic(args.seed)
    try:
        benchmark.save_jsonl(samples, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(samples)} samples to {args.out}", file=sys.stderr)
    return 0


def cmd_train_ngram(args: argparse.Namespace) -> int:
    try:
        text = _read_input(args.corpus)
    except OSError as exc:
        print(f"error: cannot read corpus: {exc}", file=sys.stderr)
        return EX_USAGE
    documents = [tokenize(line) for line in text.splitlines() if line.strip()]
    documents = [doc for doc in documents if doc]
    if not documents:
        print("error: corpus contains no usable text", file=sys.stderr)
        return 1
    model = train_ngram(documents, order=args.order, smoothing=args.smoothing)
    try:
        model.save(args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return 1
    print(f"trained order-{args.order} model over {len(documents)} documents -> {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sentinel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_scan = sub.add_parser("scan", help="scan text and print the verdict")
    p_scan.add_argument("input", nargs="?", default=None, help="input file (default: stdin)")
    p_scan.add_argument("--source", default="cli", help="source identifier for the scan")
    p_scan.add_argument("--config", default=None, help="engine configuration JSON path")
    p_scan.add_argument("--json", action="store_true", help="emit the result as JSON")
    p_scan.set_defaults(func=cmd_scan)

    p_bench = sub.add_parser("bench", help="run the four-configuration ablation")
    source = p_bench.add_mutually_exclusive_group(required=True)
    source.add_argument("--dataset", help="JSONL dataset path")
    source.add_argument("--synthetic", action="store_true", help="use the generated synthetic set")
    p_bench.add_argument("--seed", type=int, default=benchmark.GENERATOR_SEED)
    p_bench.add_argument("--configs", default=None, help="comma-separated configuration names")
    p_bench.add_argument("--out-json", default=None, help="write the JSON report here")
    p_bench.add_argument("--out-md", default=None, help="write the markdown report here")
    p_bench.set_defaults(func=cmd_bench)

    p_gen = sub.add_parser("gen-benchmark", help="write the synthetic benchmark JSONL")
    p_gen.add_argument("--seed", type=int, default=benchmark.GENERATOR_SEED)
    p_gen.add_argument("--out", required=True, help="output JSONL path")
    p_gen.set_defaults(func=cmd_gen_benchmark)

    p_train = sub.add_parser("train-ngram", help="train the reference surprisal model")
    p_train.add_argument("corpus", nargs="?", default=None, help="corpus file, one document per line (default: stdin)")
    p_train.add_argument("--order", type=int, default=3)
    p_train.add_argument("--smoothing", type=float, default=1.0)
    p_train.add_argument("--out", required=True, help="output model JSON path")
    p_train.set_defaults(func=cmd_train_ngram)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
