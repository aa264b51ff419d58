"""Command-line entry point wiring the whole pipeline.

Subcommands: train-toy-model, build-mlm, extract, train, predict,
evaluate, ensemble, upsample, mix, sim. All outputs are written
atomically (temp file + rename); every subcommand is reproducible from
its inputs and seeds.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

from . import data as dt
from . import ensemble as ens
from . import features as ft
from . import glassbox as gb
from . import head as hd
from .data import MixStrategy, Task
from .evalmetrics import evaluate
from .similarity import sim


def atomic_write(path: str | Path, content: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_parallel_corpus(path: str) -> list[tuple[dt.TokenSeq, dt.TokenSeq]]:
    """Parallel corpus: one ``src<TAB>tgt`` pair per line, no header."""
    corpus = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ValueError(f"{path} line {lineno}: expected 2 tab-separated fields")
        corpus.append((dt.tokenize(fields[0]), dt.tokenize(fields[1])))
    if not corpus:
        raise ValueError(f"{path}: empty corpus")
    return corpus


def _read_mono_corpus(path: str) -> list[dt.TokenSeq]:
    """Monolingual corpus: one sentence per line."""
    sents = [dt.tokenize(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not sents:
        raise ValueError(f"{path}: empty corpus")
    return sents


# -- subcommand implementations ---------------------------------------


def cmd_train_toy_model(args) -> int:
    model = gb.train_toy_model(_read_parallel_corpus(args.corpus), alpha=args.alpha, lam=getattr(args, "lambda"))
    atomic_write(args.output, json.dumps(model.to_json()))
    print(f"toy model: {len(model.src_vocab)} source / {len(model.tgt_vocab)} target tokens -> {args.output}")
    return 0


def cmd_build_mlm(args) -> int:
    mlm = gb.UnigramMLM.from_corpus(_read_mono_corpus(args.corpus))
    atomic_write(args.output, json.dumps(mlm.to_json()))
    print(f"unigram mlm: {len(mlm.vocab)} tokens -> {args.output}")
    return 0


def _extract_one(sample, model, mlm, cfg):
    return sample.id, ft.extract_features(sample, model, mlm, cfg)


def cmd_extract(args) -> int:
    dataset = dt.load_dataset(args.data, Task(args.task))
    model = gb.ToyLexicalModel.load(args.model)
    mlm = gb.UnigramMLM.load(args.mlm)
    cfg = ft.FeatureConfig.load(args.config)
    if args.seed is not None:
        cfg = ft.FeatureConfig.from_json({**cfg.to_json(), "base_seed": args.seed})
    worker = partial(_extract_one, model=model, mlm=mlm, cfg=cfg)
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(worker, dataset.samples, chunksize=8))
    else:
        results = [worker(s) for s in dataset.samples]
    atomic_write(args.output, ft.features_to_tsv(dict(results)))
    print(f"extracted {len(results)} feature rows (base_seed={cfg.base_seed}) -> {args.output}")
    return 0


def _load_train_config(path: str | None) -> tuple[hd.TrainConfig, int]:
    if path is None:
        return hd.TrainConfig(), hd.DEFAULT_DIM
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    hyper = hd.TrainConfig(
        lr=doc.get("lr", 0.1), epochs=doc.get("epochs", 500), l2=doc.get("l2", 1e-4)
    )
    return hyper, doc.get("dim", hd.DEFAULT_DIM)


def cmd_train(args) -> int:
    task = Task(args.task)
    dataset = dt.load_dataset(args.data, task)
    feats = ft.load_features(args.features)
    hyper, dim = _load_train_config(args.config)
    embeddings = hd.load_embeddings(args.embeddings) if args.embeddings else None
    if embeddings is not None:
        dim = len(next(iter(embeddings.values())))
        encoder = hd.EncoderConfig(kind="external", dim=dim)
    else:
        encoder = hd.EncoderConfig(kind="toy", dim=dim)
    model = hd.train_head(dataset, feats, task, hyper=hyper, encoder=encoder, embeddings=embeddings)
    atomic_write(args.output, json.dumps(model.to_json()))
    print(f"trained {task.value} head on {len(dataset)} samples -> {args.output}")
    return 0


def cmd_predict(args) -> int:
    model = hd.HeadModel.load(args.model)
    dataset = dt.load_dataset(args.data, model.task)
    feats = ft.load_features(args.features)
    embeddings = hd.load_embeddings(args.embeddings) if args.embeddings else None
    scores = {}
    for s in dataset:
        if s.id not in feats:
            raise ValueError(f"features missing for id {s.id!r}")
        scores[s.id] = hd.predict(model, s, feats[s.id], embeddings)
    atomic_write(args.output, ens.predictions_to_tsv(ens.PredictionSet("head", scores)))
    print(f"wrote {len(scores)} predictions -> {args.output}")
    return 0


def cmd_evaluate(args) -> int:
    task = Task(args.task)
    gold = dt.load_dataset(args.gold, task)
    preds = ens.load_predictions(args.preds)
    report = evaluate(preds.scores, gold, task)
    if args.json:
        print(json.dumps({
            "metric": report.metric,
            "value": report.value,
            "count": report.count,
            "per_pair": report.per_pair,
        }))
    else:
        print(f"{report.metric}: {report.value:.6f} (n={report.count})")
        if args.by_pair:
            for pair in sorted(report.per_pair):
                print(f"  {pair}: {report.per_pair[pair]:.6f}")
    return 0


def cmd_ensemble(args) -> int:
    task = Task(args.task)
    dev = dt.load_dataset(args.dev, task)
    candidates = [ens.load_predictions(p) for p in args.preds]
    selection = ens.greedy_select(candidates, dev, task, args.max_steps)
    by_id = {c.model_id: c for c in candidates}
    averaged = ens.average_predictions([by_id[m] for m in selection.members])
    atomic_write(args.output, ens.predictions_to_tsv(averaged))
    report_path = args.report or (args.output + ".selection.json")
    atomic_write(report_path, json.dumps({
        "task": task.value,
        "max_steps": args.max_steps,
        "members": list(selection.members),
        "trajectory": list(selection.trajectory),
    }))
    print(f"ensemble of {len(selection.members)} models (dev {selection.trajectory[-1]:.6f}) -> {args.output}")
    return 0


def cmd_upsample(args) -> int:
    dataset = dt.load_dataset(args.input, Task.CED)
    balanced = dt.upsample_minority(dataset, seed=args.seed)
    atomic_write(args.output, dt.dataset_to_tsv(balanced))
    print(f"upsampled {len(dataset)} -> {len(balanced)} samples (seed={args.seed}) -> {args.output}")
    return 0


def cmd_mix(args) -> int:
    task = Task(args.task)
    datasets = [dt.load_dataset(p, task) for p in args.inputs]
    mixed = dt.mix_multilingual(datasets, MixStrategy(args.strategy))
    atomic_write(args.output, dt.dataset_to_tsv(mixed))
    print(f"mixed {len(datasets)} datasets into {len(mixed)} samples -> {args.output}")
    return 0


def cmd_sim(args) -> int:
    print(f"{sim(dt.tokenize(args.ref), dt.tokenize(args.hyp)):.6f}")
    return 0


# -- argument parsing --------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uqe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-toy-model", help="estimate the toy translation model from a parallel corpus")
    p.add_argument("--corpus", required=True, help="TSV corpus: src<TAB>tgt per line")
    p.add_argument("--alpha", type=float, required=True, help="add-alpha smoothing constant (> 0)")
    p.add_argument("--lambda", type=float, required=True, help="lexical/bigram interpolation weight in [0,1]")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_train_toy_model)

    p = sub.add_parser("build-mlm", help="build the unigram masked-LM stub from a text corpus")
    p.add_argument("--corpus", required=True, help="one sentence per line")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_build_mlm)

    p = sub.add_parser("extract", help="extract the 21 uncertainty features for a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--task", choices=["da", "ced"], default="da")
    p.add_argument("--model", required=True, help="toy model JSON")
    p.add_argument("--mlm", required=True, help="unigram MLM JSON")
    p.add_argument("--config", required=True, help="feature config JSON")
    p.add_argument("--seed", type=int, default=None, help="override the config base_seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train the linear prediction head")
    p.add_argument("--task", choices=["da", "ced"], required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--embeddings", default=None, help="external embedding TSV (id + floats)")
    p.add_argument("--config", default=None, help="JSON with lr, epochs, l2, dim")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a dataset with a trained head")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="Pearson (da) or MCC (ced) of predictions against gold")
    p.add_argument("--task", choices=["da", "ced"], required=True)
    p.add_argument("--preds", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--by-pair", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ensemble", help="greedy forward ensembling of prediction files")
    p.add_argument("--task", choices=["da", "ced"], required=True)
    p.add_argument("--preds", nargs="+", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--max-steps", type=int, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--report", default=None, help="selection report path (default: OUTPUT.selection.json)")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("upsample", help="balance CED classes per language pair by duplication")
    p.add_argument("--input", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_upsample)

    p = sub.add_parser("mix", help="concatenate datasets, optionally English side first")
    p.add_argument("--strategy", choices=["as-is", "english-first"], required=True)
    p.add_argument("--task", choices=["da", "ced"], default="da")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("sim", help="similarity of two whitespace-tokenized sentences")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.set_defaults(func=cmd_sim)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
