"""Command-line entry point.

Subcommands operate on a single JSON run config plus sparse ``--set``
overrides, so every run stays archivable and diffable. Exit codes:
0 success, 1 input/validation error, 2 internal error. Diagnostics go
to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import keys
from .dataset import parse_tsv, SchemaConfig
from .errors import IdiorankError
from .evaluation import (
    AblationAxes,
    RelevanceProfile,
    ablate,
    ablation_table,
    evaluate,
)
from .pipeline import (
    PipelineConfig,
    config_from_dict,
    load_resources,
    read_predictions,
    run_dataset,
    validate_embeddings,
    write_predictions,
)
from .sentence_typer import train_lr

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


def _parse_override(raw: str) -> tuple[list[str], object]:
    if "=" not in raw:
        raise IdiorankError(f"override {raw!r} is not of the form key=value")
    key, _, value = raw.partition("=")
    path = key.strip().split(".")
    if not all(path):
        raise IdiorankError(f"override {raw!r} has an empty key segment")
    try:
        parsed: object = json.loads(value)
    except json.JSONDecodeError:
        parsed = value  # bare strings need no quoting
    return path, parsed


def _apply_overrides(raw_config: dict, overrides: list[str]) -> dict:
    for item in overrides:
        path, value = _parse_override(item)
        node = raw_config
        for segment in path[:-1]:
            nxt = node.get(segment)
            if not isinstance(nxt, dict):
                nxt = {}
                node[segment] = nxt
            node = nxt
        node[path[-1]] = value
    return raw_config


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    import os

    with open(args.config, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    raw = _apply_overrides(raw, args.set or [])
    return config_from_dict(raw, base_dir=os.path.dirname(os.path.abspath(args.config)))


def _require(value, message: str):
    if value is None:
        raise IdiorankError(message)
    return value


def _cmd_ingest(args: argparse.Namespace) -> int:
    schema = SchemaConfig.from_file(args.schema)
    dataset = parse_tsv(args.dataset, schema)
    out = sys.stdout
    out.write("language\tcount\n")
    for language in sorted(dataset.language_counts):
        out.write(f"{language}\t{dataset.language_counts[language]}\n")
    out.write(f"TOTAL\t{len(dataset)}\n")
    if dataset.rejected:
        print(f"{len(dataset.rejected)} rows rejected:", file=sys.stderr)
        for reject in dataset.rejected:
            print(f"  row {reject.row_number}: {reject.reason}", file=sys.stderr)
    return EXIT_OK


def _cmd_train_typer(args: argparse.Namespace) -> int:
    config = _load_config(args)
    dataset = parse_tsv(
        _require(config.dataset, "config must set 'dataset'"),
        _require(config.schema, "config must set 'schema'"),
    )
    resources = load_resources(config)
    store = resources.stores.get("text_m3")
    if store is None:
        raise IdiorankError("training features require an embeddings.text_m3 store")
    examples = []
    for instance in dataset.instances:
        if instance.gold_sentence_type is None:
            continue
        feature = store.get(keys.feature_key(instance.sentence, instance.compound))
        if feature is None:
            raise IdiorankError(
                f"no feature embedding for instance {instance.id}; run the exporter first"
            )
        examples.append((feature, instance.gold_sentence_type))
    if not examples:
        raise IdiorankError("no instance carries a gold sentence type")
    model = train_lr(examples, trained_on=str(config.dataset))
    model.save(args.out)
    correct = 0
    from .sentence_typer import predict_lr

    for feature, label in examples:
        correct += predict_lr(model, feature).label == label
    print(
        f"trained on {len(examples)} examples, training accuracy "
        f"{correct / len(examples):.4f}, model -> {args.out}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_rank(args: argparse.Namespace) -> int:
    config = _load_config(args)
    if args.workers is not None:
        import dataclasses

        config = dataclasses.replace(config, workers=args.workers)
    dataset = parse_tsv(
        _require(config.dataset, "config must set 'dataset'"),
        _require(config.schema, "config must set 'schema'"),
    )
    resources = load_resources(config)
    records, coverage = run_dataset(dataset, config, resources)
    write_predictions(records, args.out, timestamp=not args.no_timestamp)
    print(
        f"ranked {coverage.processed} instances"
        f" ({coverage.failed} failed) -> {args.out}",
        file=sys.stderr,
    )
    for instance_id, language, error in coverage.failures:
        print(f"  FAILED {instance_id} [{language}]: {error}", file=sys.stderr)
    if args.coverage:
        with open(args.coverage, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(coverage.to_tsv())
    return EXIT_OK


def _profile_from_args(args: argparse.Namespace) -> RelevanceProfile:
    gains = RelevanceProfile().gains
    if args.gains:
        gains = tuple(float(g) for g in args.gains.split(","))
    return RelevanceProfile(gains=gains, gain_mode=args.gain_mode)


def _cmd_evaluate(args: argparse.Namespace) -> int:
    predictions = read_predictions(args.pred)
    schema = SchemaConfig.from_file(args.schema)
    gold = parse_tsv(args.gold, schema)
    report = evaluate(predictions, gold, _profile_from_args(args))
    text = report.to_tsv()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_ablate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    dataset = parse_tsv(
        _require(config.dataset, "config must set 'dataset'"),
        _require(config.schema, "config must set 'schema'"),
    )
    resources = load_resources(config)
    with open(args.axes, "r", encoding="utf-8") as fh:
        raw_axes = json.load(fh)
    axes = AblationAxes(
        taus=tuple(raw_axes.get("taus", [])),
        weight_sets=tuple(raw_axes.get("weight_sets", [])),
        aggregators=tuple(raw_axes.get("aggregators", [])),
        rewrite_toggles=tuple(raw_axes.get("rewrite_toggles", [])),
        typer_toggles=tuple(raw_axes.get("typer_toggles", [])),
    )
    cells = ablate(dataset, config, axes, resources)
    table = ablation_table(cells)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(table)
    else:
        sys.stdout.write(table)
    return EXIT_OK


def _cmd_validate_embeddings(args: argparse.Namespace) -> int:
    config = _load_config(args)
    dataset = parse_tsv(
        _require(config.dataset, "config must set 'dataset'"),
        _require(config.schema, "config must set 'schema'"),
    )
    resources = load_resources(config)
    report = validate_embeddings(dataset, config, resources)
    for stream in sorted(report.requested):
        print(f"stream {stream}: {report.requested[stream]} requested, "
              f"{len(report.missing[stream])} missing")
        for key, description in report.missing[stream]:
            print(f"  MISSING {key}  # {description}")
    print(f"TOTAL: {report.total_requested} requested, {report.total_missing} missing")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idiorank",
        description="Idiom-aware candidate ranking: typing, rewriting, "
        "similarity streams, Borda fusion.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("ingest", help="parse a task TSV and report coverage")
    p.add_argument("--dataset", required=True)
    p.add_argument("--schema", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("train-typer", help="train the logistic-regression sentence typer")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=_cmd_train_typer)

    p = sub.add_parser("rank", help="run the ranking pipeline over a dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--coverage", help="also write the coverage report TSV here")
    p.add_argument("--workers", type=int)
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the timestamp header for byte-reproducible output")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("evaluate", help="score a prediction TSV against gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--gains", help="comma-separated relevance gains (default 4,3,2,1,0)")
    p.add_argument("--gain-mode", choices=["exponential", "linear"], default="exponential")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("ablate", help="Cartesian sweep over taus/weights/aggregators/toggles")
    p.add_argument("--config", required=True)
    p.add_argument("--axes", required=True, help="JSON file with sweep axes")
    p.add_argument("--out")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser(
        "validate-embeddings",
        help="check that the stores cover every key the pipeline will request",
    )
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=_cmd_validate_embeddings)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map those to the input-error
        # code and keep 0 for --help.
        return EXIT_OK if not exc.code else EXIT_INPUT
    try:
        return args.func(args)
    except (IdiorankError, FileNotFoundError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as err:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
