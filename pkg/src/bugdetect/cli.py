"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error. Errors
are reported as one JSON object on a single stderr line.
"""
from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Sequence

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(f"{self.prog}: {message}")


# -- helpers ----------------------------------------------------------------

def _python_files(paths: Sequence[str]) -> list[str]:
    out = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            out += sorted(str(f) for f in path.rglob("*.py"))
        elif path.exists():
            out.append(str(path))
        else:
            raise FileNotFoundError(f"no such file or directory: {p}")
    return out


def _load_units(paths: Sequence[str]):
    from .lang.parser import ParseError, parse

    units = []
    for f in _python_files(paths):
        text = Path(f).read_text(encoding="utf-8")
        try:
            units.append(parse(text))
        except ParseError as exc:
            raise DataError(f"{f}: {exc}") from exc
    return units


def _corpus_units(args):
    from .train.desk import idiom_units

    if args.synthetic:
        return idiom_units(args.synthetic, args.seed)
    if not args.sources:
        raise UsageError("give source files or --synthetic N")
    return _load_units(args.sources)


def _open_out(path: str | None, binary: bool = False):
    if path in (None, "-"):
        return sys.stdout.buffer if binary else sys.stdout
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "wb" if binary else "w", encoding=None if binary else "utf-8")


def _load_detector(args):
    from .model.ops import load_checkpoint
    from .model.vocab import Vocabulary

    models, _ = load_checkpoint(args.checkpoint)
    if args.model not in models:
        raise DataError(f"checkpoint has no model named {args.model!r}; found {sorted(models)}")
    vocab_path = args.vocab or os.path.join(os.path.dirname(args.checkpoint), "vocab.txt")
    return models[args.model], Vocabulary.load(vocab_path)


def _variants_job(job):
    from .eval.evaluate import function_rng, random_bug_graphs
    from .graph.samples import CorpusFunction
    from .graph.serialize import serialize_graph

    unit, index, n, seed, position = job
    cf = CorpusFunction(unit, index)
    return [serialize_graph(g) for g in random_bug_graphs(cf, n, function_rng(seed, position))]


# -- commands ---------------------------------------------------------------

def cmd_gen_corpus(args) -> int:
    units = _corpus_units(args)
    jobs = []
    for u in units:
        for i in range(len(u.functions)):
            jobs.append((u, i, args.variants, args.seed, len(jobs)))
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as ex:
            chunks = list(ex.map(_variants_job, jobs, chunksize=8))
    else:
        chunks = [_variants_job(j) for j in jobs]
    out = _open_out(args.out, binary=True)
    n = 0
    try:
        for lines in chunks:
            for line in lines:
                out.write(line)
                n += 1
    finally:
        if out is not sys.stdout.buffer:
            out.close()
    print(json.dumps({"graphs": n, "functions": len(jobs)}), file=sys.stderr)
    return EXIT_OK


def cmd_augment(args) -> int:
    from .lang.parser import ParseError, parse
    from .lang.printer import to_source
    from .rewrite.augment import AUGMENTATIONS, AugmentationConfig, augment
    from .rewrite.rules import RuleKind

    probs = {
        RuleKind.VARIABLE_RENAMING: args.rename,
        RuleKind.COMMENT_DELETION: args.delete_comments,
        RuleKind.COMPARISON_MIRRORING: args.mirror,
        RuleKind.IF_ELSE_BRANCH_SWAP: args.swap_branches,
    }
    cfg = AugmentationConfig({k: probs[k] > 0 for k in AUGMENTATIONS}, probs, args.seed)
    root = Path(args.input)
    files = _python_files([args.input])
    out_root = Path(args.out)
    if out_root.resolve() == (root if root.is_dir() else root.parent).resolve():
        raise UsageError("output directory must differ from the input")
    written = skipped = 0
    for i, f in enumerate(files):
        rel = Path(f).relative_to(root) if root.is_dir() else Path(Path(f).name)
        try:
            unit = parse(Path(f).read_text(encoding="utf-8"))
        except ParseError as exc:
            print(json.dumps({"skipped": f, "reason": str(exc)}), file=sys.stderr)
            skipped += 1
            continue
        new = augment(unit, replace(cfg, seed=args.seed * 1_000_003 + i))
        dest = out_root / rel
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(to_source(new), encoding="utf-8")
        written += 1
    print(json.dumps({"written": written, "skipped": skipped}), file=sys.stderr)
    return EXIT_OK


def cmd_train(args) -> int:
    import torch

    from .graph.serialize import read_graphs
    from .train.desk import split_units
    from .train.loop import run

    if args.threads:
        torch.set_num_threads(args.threads)
    try:
        cfg = _train_config(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    units = _corpus_units(args)
    split = split_units(units, args.seed, 0.0 if args.holdout else args.holdout_fraction, args.holdout_variants)
    holdout = read_graphs(args.holdout) if args.holdout else split.holdout_graphs
    log = (lambda s: print(s, file=sys.stderr, flush=True)) if not args.quiet else None
    run(split.train, cfg, holdout, out_dir=args.out, log=log)
    print(json.dumps({"out": args.out, "train_functions": len(split.train), "holdout_graphs": len(holdout)}))
    return EXIT_OK


def _train_config(args):
    from .model.network import ModelConfig
    from .model.ops import OptimizerConfig
    from .train.loop import MetaEpochConfig, TrainConfig

    return TrainConfig(
        schedule=MetaEpochConfig(
            meta_epochs=args.meta_epochs, k=args.k, nu=args.nu, epsilon=args.epsilon,
            batch_graphs=args.batch_graphs, batch_nodes=args.batch_nodes,
            snapshot_every=args.snapshot_every, mode=args.mode,
        ),
        model=ModelConfig(hidden=args.hidden, layers=args.layers, dropout=args.dropout),
        optimizer=OptimizerConfig(lr=args.lr, warmup=args.warmup, clip=args.clip),
        seed=args.seed,
        vocab_size=args.vocab_size,
    )


def cmd_eval(args) -> int:
    from .eval.evaluate import evaluate
    from .graph.serialize import read_graphs

    model, vocab = _load_detector(args)
    graphs = read_graphs(args.graphs)
    rep = evaluate(model, vocab, graphs, args.batch_nodes)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", encoding="utf-8") as fp:
            json.dump(rep.to_json(), fp, indent=2)
    print(rep.table())
    return EXIT_OK


def cmd_scan(args) -> int:
    from .eval.scan import scan_files

    if not 0.0 <= args.threshold <= 1.0:
        raise UsageError("threshold must lie in [0, 1]")
    model, vocab = _load_detector(args)
    warnings, skipped = scan_files(model, vocab, _python_files(args.paths), args.top_n, args.threshold)
    for s in skipped:
        print(json.dumps({"skipped": s.file, "line": s.line, "reason": s.reason}), file=sys.stderr)
    out = _open_out(args.out)
    try:
        for w in warnings:
            out.write(w.to_json() + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_graph_dump(args) -> int:
    from .graph.extract import extract_graph
    from .graph.serialize import graph_to_json

    units = _load_units([args.file])
    unit = units[0]
    names = unit.function_names()
    if not names:
        raise DataError(f"{args.file} defines no functions")
    if args.function and args.function not in names:
        raise DataError(f"no function {args.function!r} in {args.file}; found {names}")
    index = names.index(args.function) if args.function else 0
    g = extract_graph(unit.functions[index], unit=unit)
    if args.format == "json":
        print(json.dumps(graph_to_json(g), indent=1))
    else:
        for n in g.nodes:
            print(f"{n.id}\t{n.kind.value}\t{n.label}")
        for s, r, d in g.edges:
            print(f"{s}\t{r.value}\t{d}")
        for c in g.candidates:
            print(f"candidate\t{list(c.location)}\t{c.kind}\t{c.payload}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_all

    results = run_all()
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'} {r.name}: {r.detail}")
    if not all(r.ok for r in results):
        failed = [r.name for r in results if not r.ok]
        raise AssertionError(f"self-test failed: {', '.join(failed)}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def _add_corpus_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("sources", nargs="*", help="source files or directories")
    p.add_argument("--synthetic", type=int, default=0, metavar="N",
                   help="use a generated idiom corpus of at least N functions instead of sources")
    p.add_argument("--seed", type=int, default=0)


def _add_model_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", help="vocabulary file (default: vocab.txt next to the checkpoint)")
    p.add_argument("--model", default="detector", help="model name inside the checkpoint")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bugdetect", description="Learned bug detection and repair for a Python subset.")
    ap.add_argument("--config", help="key = value settings file; command-line options take precedence")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("gen-corpus", help="write random-bug graph files")
    _add_corpus_options(p)
    p.add_argument("--variants", type=int, default=9, help="buggy variants per function (0 writes originals only)")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("augment", help="write semantics-preserving rewrites of a source tree")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    for flag in ("rename", "delete-comments", "mirror", "swap-branches"):
        p.add_argument(f"--{flag}", type=float, default=0.5, metavar="P", help="application probability, 0 disables")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="co-train detector and selector")
    _add_corpus_options(p)
    p.add_argument("--out", required=True)
    p.add_argument("--holdout", help="held-out graph file (default: split the corpus)")
    p.add_argument("--holdout-fraction", type=float, default=0.2)
    p.add_argument("--holdout-variants", type=int, default=9)
    p.add_argument("--meta-epochs", type=int, default=10)
    p.add_argument("--k", type=int, default=5, help="selector draws per function")
    p.add_argument("--nu", type=int, default=4, help="draws before a pool entry is evicted")
    p.add_argument("--epsilon", type=float, default=0.02)
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--layers", type=int, default=8)
    p.add_argument("--dropout", type=float, default=0.2)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--warmup", type=int, default=800)
    p.add_argument("--clip", type=float, default=0.5)
    p.add_argument("--batch-graphs", type=int, default=300)
    p.add_argument("--batch-nodes", type=int, default=10000)
    p.add_argument("--vocab-size", type=int, default=15000)
    p.add_argument("--snapshot-every", type=int, default=1)
    p.add_argument("--mode", choices=("sequential", "async"), default="sequential")
    p.add_argument("--threads", type=int, default=0, help="torch intra-op threads (0 keeps the default)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a graph file")
    _add_model_options(p)
    p.add_argument("--graphs", required=True)
    p.add_argument("--out", help="JSON report path")
    p.add_argument("--batch-nodes", type=int, default=10000)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scan", help="report likely bugs in source files")
    _add_model_options(p)
    p.add_argument("paths", nargs="+")
    p.add_argument("--top-n", type=int, default=3)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", help="JSON-lines output (default stdout)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("graph-dump", help="print the graph of one function")
    p.add_argument("file")
    p.add_argument("--function")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=cmd_graph_dump)

    p = sub.add_parser("selftest", help="run built-in consistency checks")
    p.set_defaults(func=cmd_selftest)
    return ap


def _config_defaults(path: str) -> dict[str, str]:
    cp = configparser.ConfigParser()
    text = Path(path).read_text(encoding="utf-8")
    cp.read_string("[run]\n" + text)
    return {k.replace("-", "_"): v for k, v in cp["run"].items()}


def _apply_config(ap: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return ap.parse_args(argv)
    settings = _config_defaults(known.config)
    subs = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction)).choices
    command = next((t for t in rest if t in subs), None)
    if command is None:
        return ap.parse_args(argv)  # reports the missing command
    sub = subs[command]
    dests = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in settings.items():
        if key not in dests:
            continue  # settings for other commands
        action = dests[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.strip().lower() in ("1", "true", "yes", "on")
        else:
            try:
                defaults[key] = action.type(raw) if action.type else raw
            except ValueError as exc:
                raise UsageError(f"config key {key}: {exc}") from exc
            if action.choices and defaults[key] not in action.choices:
                raise UsageError(f"config key {key}: {raw!r} is not one of {list(action.choices)}")
    sub.set_defaults(**defaults)
    # required options may come from the config file
    for a in sub._actions:
        if a.dest in defaults:
            a.required = False
    return ap.parse_args(argv)


def _data_errors() -> tuple[type[BaseException], ...]:
    from .eval.evaluate import CandidateMismatchError
    from .graph.serialize import MalformedGraphError
    from .lang.parser import ParseError
    from .model.ops import CheckpointError

    return (DataError, ParseError, MalformedGraphError, CandidateMismatchError, CheckpointError,
            OSError, UnicodeDecodeError, configparser.Error, json.JSONDecodeError)


def _fail(exc: BaseException, code: int) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = _apply_config(ap, argv)
        return args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        return _fail(exc, EXIT_USAGE)
    except Exception as exc:
        if isinstance(exc, _data_errors()):
            return _fail(exc, EXIT_DATA)
        return _fail(exc, EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
