"""Command-line entry point: ``nucparse {nuclei,transform,train,parse,eval,trace}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, replace
from multiprocessing import get_context
from pathlib import Path
from statistics import fmean
from typing import Optional, Sequence

from . import __version__
from .composition import CompositionConfig
from .evaluation import AlignmentError, evaluate, significance, weighted_deltas
from .nucleus import extract_nuclei, functional_set, nucleus_statistics, oracle_transform
from .substrate import file_digest
from .transitions import IllegalTransition, format_trace, static_oracle
from .treebank import ConllError, load, save, validate_tree

logger = logging.getLogger("nucparse")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
MODE_FLAGS = {"none": "none", "hard": "hard", "soft": "soft", "gen": "generalized",
              "generalized": "generalized", "oracle": "none"}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _functional(args) -> frozenset[str]:
    return functional_set(args.functional_set.split(",") if args.functional_set else None)


def _read(path) -> list:
    try:
        return load(path)
    except FileNotFoundError as err:
        raise DataError(f"{path}: no such file") from err
    except ConllError as err:
        raise DataError(f"{path}: {err}") from err


def _out(path: Optional[str]):
    return open(path, "w", encoding="utf-8", newline="\n") if path and path != "-" else sys.stdout


def _write_tsv(rows, path: Optional[str] = None, header: Optional[Sequence[str]] = None) -> None:
    f = _out(path)
    try:
        if header:
            f.write("\t".join(header) + "\n")
        for row in rows:
            f.write("\t".join(map(str, row)) + "\n")
    finally:
        if f is not sys.stdout:
            f.close()


# nuclei / transform / trace ---------------------------------------------------

def cmd_nuclei(args) -> int:
    functional = _functional(args)
    treebank = _read(args.input)
    stats = nucleus_statistics(treebank, functional)
    _write_tsv(stats.rows() if treebank else [], args.out, header=("statistic", "value"))
    if args.list:
        f = _out(args.list)
        try:
            f.write("sentence\tcore\tmembers\tforms\tcontiguous\n")
            for k, sent in enumerate(treebank, start=1):
                sid = sent.sent_id or str(k)
                for nuc in extract_nuclei(sent.tree, functional):
                    forms = " ".join(sent.tokens[m - 1].form for m in nuc.members)
                    f.write(f"{sid}\t{nuc.core}\t{','.join(map(str, nuc.members))}\t{forms}\t"
                            f"{'yes' if nuc.contiguous else 'no'}\n")
        finally:
            if f is not sys.stdout:
                f.close()
    return EXIT_OK


def cmd_transform(args) -> int:
    functional = _functional(args)
    treebank = _read(args.input)
    save([oracle_transform(s, functional) for s in treebank], args.output)
    return EXIT_OK


def cmd_trace(args) -> int:
    treebank = _read(args.input)
    f = _out(args.out)
    try:
        for k, sent in enumerate(treebank, start=1):
            f.write(f"# sentence {sent.sent_id or k}\n")
            for line in format_trace(len(sent), static_oracle(sent.tree)):
                f.write(line + "\n")
            f.write("\n")
    finally:
        if f is not sys.stdout:
            f.close()
    return EXIT_OK


# train -------------------------------------------------------------------------

def _model_config(args, functional):
    from .parser import ModelConfig

    mode = MODE_FLAGS[args.mode]
    comp = CompositionConfig(mode, args.operator, args.relation_dim, functional)
    return ModelConfig(args.word_dim, args.char_dim, args.char_hidden, args.token_hidden,
                       args.token_layers, args.mlp_hidden, comp, oracle=args.mode == "oracle")


def _train_one(job: dict) -> dict:
    """Train a single seed; ``job`` is the run manifest (JSON-able) plus an output dir."""
    import torch

    from .parser import ModelConfig, TrainConfig, build_model, save_model, train

    torch.set_num_threads(1)
    out = Path(job["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    manifest = job["manifest"]
    model_cfg = ModelConfig.from_dict(manifest["model_config"])
    train_cfg = TrainConfig(**manifest["train_config"])
    functional = model_cfg.composition.functional_set
    train_set = load(manifest["inputs"]["train"]["path"])
    dev_path = manifest["inputs"].get("dev")
    dev_set = load(dev_path["path"]) if dev_path else None
    model = build_model(train_set, model_cfg, seed=train_cfg.seed)
    log_path = out / "train_log.tsv"
    with open(log_path, "w", encoding="utf-8") as log:
        log.write("epoch\tloss\tdev_las\tdev_clas\n")

        def write(entry):
            fmt = lambda v: "" if v is None else f"{v:.4f}"
            log.write(f"{entry.epoch}\t{entry.loss:.6f}\t{fmt(entry.dev_las)}\t{fmt(entry.dev_clas)}\n")
            log.flush()

        train(model, train_set, train_cfg, dev=dev_set, functional=functional, on_epoch=write)
    digest = save_model(model, out / "model.ckpt", extra={"mode": manifest["mode"]})
    manifest = dict(manifest, checkpoint_sha256=digest)
    with open(out / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest


def _input_record(path) -> dict:
    return {"path": str(Path(path).resolve()), "sha256": file_digest(path)}


def _check_inputs(inputs: dict) -> None:
    for name, rec in inputs.items():
        if rec is None:
            continue
        if not Path(rec["path"]).exists():
            raise DataError(f"{name} input {rec['path']} is missing")
        if file_digest(rec["path"]) != rec["sha256"]:
            raise DataError(f"{name} input {rec['path']} changed since the manifest was written")


def _run_jobs(jobs: list[dict], n_jobs: int) -> list[dict]:
    if n_jobs <= 1 or len(jobs) == 1:
        return [_train_one(j) for j in jobs]
    with get_context("spawn").Pool(min(n_jobs, len(jobs))) as pool:
        return pool.map(_train_one, jobs)


def cmd_train(args) -> int:
    from .parser import TrainConfig

    out = Path(args.out)
    if args.from_manifest:
        with open(args.from_manifest, encoding="utf-8") as f:
            manifest = json.load(f)
        manifest.pop("checkpoint_sha256", None)
        _check_inputs(manifest["inputs"])
        jobs = [{"out_dir": str(out), "manifest": manifest}]
    else:
        if args.train is None:
            raise UsageError("a training file is required unless --from-manifest is given")
        functional = _functional(args)
        for path in (args.train, args.dev):
            if path:
                _read(path)  # fail early, with exit code 2, on unreadable data
        model_cfg = _model_config(args, functional)
        inputs = {"train": _input_record(args.train), "dev": _input_record(args.dev) if args.dev else None}
        jobs = []
        for k in range(args.seeds):
            seed = args.seed_base + k
            cfg = TrainConfig(args.epochs, args.seeds, seed, args.lr, args.unk_alpha)
            manifest = {"toolkit": "nucparse", "version": __version__, "command": "train", "mode": args.mode,
                        "model_config": model_cfg.to_dict(), "train_config": asdict(cfg), "inputs": inputs}
            jobs.append({"out_dir": str(out / f"seed-{seed}"), "manifest": manifest})
    for manifest in _run_jobs(jobs, args.jobs):
        print(f"seed {manifest['train_config']['seed']}\t{manifest['checkpoint_sha256']}")
    return EXIT_OK


# parse -------------------------------------------------------------------------

_worker_model = None


def _init_worker(path):
    global _worker_model
    import torch

    from .parser import load_model

    torch.set_num_threads(1)
    _worker_model = load_model(path)


def _parse_one(sentence):
    from .parser import parse

    trace = []
    tree = parse(_worker_model, sentence, trace)
    return tree, trace


def cmd_parse(args) -> int:
    from .parser import load_model

    sentences = _read(args.input)
    try:
        model = load_model(args.model)
    except (OSError, ValueError, KeyError) as err:
        raise DataError(f"{args.model}: cannot load model: {err}") from err
    if model.config.oracle and not all(s.has_tree for s in sentences):
        raise DataError("an oracle-mode model needs gold trees in the input to mark nuclei")
    if args.jobs > 1 and len(sentences) > 1:
        with get_context("spawn").Pool(args.jobs, initializer=_init_worker, initargs=(args.model,)) as pool:
            results = pool.map(_parse_one, sentences, chunksize=16)
    else:
        global _worker_model
        _worker_model = model
        results = [_parse_one(s) for s in sentences]
    parsed = []
    for sent, (tree, _) in zip(sentences, results):
        problems = validate_tree(tree)
        if problems:
            raise RuntimeError(f"parser produced an invalid tree: {problems}")
        parsed.append(sent.with_tree(tree))
    save(parsed, args.output)
    if args.trace:
        f = _out(args.trace)
        try:
            for k, (sent, (_, trace)) in enumerate(zip(sentences, results), start=1):
                f.write(f"# sentence {sent.sent_id or k}\n")
                f.writelines(line + "\n" for line in format_trace(len(sent), trace))
                f.write("\n")
        finally:
            if f is not sys.stdout:
                f.close()
    return EXIT_OK


# eval --------------------------------------------------------------------------

def _conllu_files(paths: Sequence[str]) -> list[Path]:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            found = sorted(p.rglob("*.conllu"))
            if not found:
                raise DataError(f"{p}: no .conllu files")
            files += found
        else:
            files.append(p)
    return files


def _report(path, gold_sents, functional):
    system = _read(path)
    if len(system) != len(gold_sents):
        raise DataError(f"{path}: {len(system)} sentences, gold has {len(gold_sents)}")
    try:
        return evaluate([s.tree for s in system], [g.tree for g in gold_sents], functional)
    except (AlignmentError, ValueError) as err:
        raise DataError(f"{path}: {err}") from err


def _reports(paths: list[Path], gold, functional, jobs: int):
    if jobs > 1 and len(paths) > 1:
        with get_context("spawn").Pool(min(jobs, len(paths))) as pool:
            return pool.starmap(_report, [(p, gold, functional) for p in paths])
    return [_report(p, gold, functional) for p in paths]


def cmd_eval(args) -> int:
    functional = _functional(args)
    gold = _read(args.gold)
    sys_files = _conllu_files(args.system)
    base_files = _conllu_files(args.baseline) if args.baseline else []
    systems = _reports(sys_files, gold, functional, args.jobs)
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest = {"toolkit": "nucparse", "version": __version__, "command": "eval",
                    "functional_set": sorted(functional),
                    "inputs": {"gold": _input_record(args.gold),
                               "system": [_input_record(p) for p in sys_files],
                               "baseline": [_input_record(p) for p in base_files]}}
        with open(out_dir / "manifest.json", "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")

    def dest(name):
        return str(out_dir / name) if out_dir else None

    rows = [(f"run{k}", f"{r.las:.2f}", f"{r.clas:.2f}", r.tokens) for k, r in enumerate(systems, start=1)]
    if len(systems) > 1:
        rows.append(("mean", f"{fmean(r.las for r in systems):.2f}", f"{fmean(r.clas for r in systems):.2f}",
                     systems[0].tokens))
    _write_tsv(rows, dest("scores.tsv"), header=("run", "LAS", "CLAS", "tokens"))
    if len(systems) == 1:
        _write_tsv(systems[0].relation_rows(), dest("relations.tsv"),
                   header=("relation", "precision", "recall", "f1", "gold", "system", "flag"))
    if not args.baseline:
        return EXIT_OK

    bases = _reports(base_files, gold, functional, args.jobs)
    pairs = [weighted_deltas(b, s) for b in bases for s in systems]
    rels = sorted(pairs[0].weighted_f1)
    deltas = [(rel, f"{fmean(c.weighted_f1[rel] for c in pairs):.6f}") for rel in rels]
    deltas.sort(key=lambda kv: -float(kv[1]))
    summary = [("all_relations", f"{fmean(c.all_relations for c in pairs):.4f}"),
               ("nucleus_external", f"{fmean(c.nucleus_external for c in pairs):.4f}"),
               ("nucleus_internal", f"{fmean(c.nucleus_internal for c in pairs):.4f}"),
               ("las_delta", f"{fmean(c.las_delta for c in pairs):.4f}"),
               ("clas_delta", f"{fmean(c.clas_delta for c in pairs):.4f}")]
    _write_tsv(summary, dest("comparison.tsv"), header=("set", "delta"))
    _write_tsv(deltas, dest("weighted_deltas.tsv"), header=("relation", "weighted_f1_delta"))
    if len(bases) >= 2 and len(systems) >= 2:
        sig_rows = []
        for metric in ("las", "clas"):
            sig = significance([getattr(r, metric) for r in bases], [getattr(r, metric) for r in systems])
            sig_rows.append((metric.upper(), f"{sig.t:.4f}", f"{sig.df:.2f}", f"{sig.p:.6g}",
                             "yes" if sig.significant else "no"))
        _write_tsv(sig_rows, dest("significance.tsv"), header=("metric", "t", "df", "p", "significant"))
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["relation", "weighted_f1_delta"])
            w.writerows(deltas)
    return EXIT_OK


# entry point -------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--functional-set", help="comma-separated relations overriding the default seven")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nucparse", description="Nucleus-aware transition-based dependency parsing.")
    ap.add_argument("--version", action="version", version=f"nucparse {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("nuclei", help="nucleus statistics (TSV) and optional per-sentence listing")
    p.add_argument("input")
    p.add_argument("--out", help="statistics TSV (default stdout)")
    p.add_argument("--list", metavar="PATH", help="write one line per nucleus ('-' for stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_nuclei)

    p = sub.add_parser("transform", help="oracle transform: concatenate nucleus forms onto cores")
    p.add_argument("input")
    p.add_argument("output")
    _add_common(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("trace", help="dump static-oracle derivations of gold trees")
    p.add_argument("input")
    p.add_argument("--out")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("train", help="train one parser per seed")
    p.add_argument("train", nargs="?")
    p.add_argument("--dev")
    p.add_argument("--out", required=True, help="output directory (one seed-N subdirectory per seed)")
    p.add_argument("--mode", choices=sorted(MODE_FLAGS), default="none")
    p.add_argument("--operator", choices=("add", "concat"), default="add")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--unk-alpha", type=float, default=0.25)
    p.add_argument("--word-dim", type=int, default=100)
    p.add_argument("--char-dim", type=int, default=32)
    p.add_argument("--char-hidden", type=int, default=50)
    p.add_argument("--token-hidden", type=int, default=256)
    p.add_argument("--token-layers", type=int, default=2)
    p.add_argument("--mlp-hidden", type=int, default=256)
    p.add_argument("--relation-dim", type=int, default=10)
    p.add_argument("--from-manifest", help="re-run exactly the run recorded in a manifest.json")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("parse", help="parse a CoNLL-U file with a trained model")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--trace", help="write the derivation of every sentence here")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", help="LAS/CLAS, per-relation scores, comparisons and t-tests")
    p.add_argument("gold")
    p.add_argument("system", nargs="+", help="system files or directories of runs")
    p.add_argument("--baseline", nargs="+", help="baseline files or directories of runs")
    p.add_argument("--out-dir", help="write TSV reports here instead of stdout")
    p.add_argument("--csv", help="per-relation weighted deltas as CSV (needs --baseline)")
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_eval)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1 or getattr(args, "epochs", 1) < 1 or getattr(args, "seeds", 1) < 1:
        print("nucparse: error: --jobs, --epochs and --seeds must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as err:
        print(f"nucparse: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as err:
        print(f"nucparse: data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as err:
        if isinstance(err, IllegalTransition):
            print(f"nucparse: internal error: {err}", file=sys.stderr)
            return EXIT_INTERNAL
        print(f"nucparse: data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except (RuntimeError, AssertionError) as err:
        print(f"nucparse: internal error: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
