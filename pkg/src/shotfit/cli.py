"""Command line interface.

    shotfit normalize     --in reviews.csv --out clean.csv
    shotfit split         --in reviews.csv --out train.csv --test-out test.csv --ratio 0.8
    shotfit sample-shots  --in train.csv --out shots.csv --per-class 64
    shotfit synth         --out synthetic.csv --per-class 100
    shotfit train         --in train.csv --out model.sfcm [--embeddings table.jsonl]
    shotfit predict       --model model.sfcm --in eval.csv --out predictions.csv
    shotfit evaluate      --model model.sfcm --in test.csv --out report.json
    shotfit sweep         --in train.csv --test test.csv --out sweep.json
    shotfit embed         --model model.sfcm --in reviews.csv --out vectors.jsonl

``--seed`` and ``--config`` (a JSON file mirroring RunConfig) are global.
Log verbosity comes from the SFCM_LOG environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from contextlib import contextmanager
from dataclasses import replace

from . import corpus as C
from .contrastive import ContrastiveConfig
from .encoder import dump_embeddings_jsonl, load_precomputed_provider
from .errors import ShotfitError
from .metrics import format_dialect_table
from .normalize import normalize_text
from .pipeline import (
    RunConfig, derive_seed, dumps_report, embedder_for, evaluate_pipeline, load_model,
    predict_file, save_model, sweep, train_pipeline, write_training_log,
)

log = logging.getLogger("shotfit")


@contextmanager
def _text_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _read_corpus(path):
    if path in (None, "-"):
        return C.load_corpus(sys.stdin)
    return C.read_corpus(path)


def _run_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = RunConfig.from_dict(json.load(fh))
    if args.seed is not None:
        cfg = replace(cfg, global_seed=args.seed)
    if getattr(args, "per_class", None) is not None:
        cfg = replace(cfg, shots_per_class=args.per_class)
    overrides = {k: getattr(args, a) for k, a in (
        ("epochs", "epochs"), ("batch_size", "batch_size"),
        ("pair_iterations", "pair_iterations"), ("learning_rate", "lr"),
    ) if getattr(args, a, None) is not None}
    if overrides:
        cfg = replace(cfg, contrastive=replace(cfg.contrastive, **overrides))
    return cfg


def _provider(args):
    path = getattr(args, "embeddings", None)
    if not path:
        return None
    with open(path, encoding="utf-8") as fh:
        return load_precomputed_provider(fh)


# ---------------------------------------------------------------------------

def cmd_normalize(args):
    corpus = _read_corpus(args.in_path)
    opts = _run_config(args).normalization
    reviews = [C.Review(r.id, normalize_text(r.text, opts), r.dialect, r.sentiment) for r in corpus]
    with _text_out(args.out) as fh:
        C.dump_corpus(reviews, fh)


def cmd_split(args):
    corpus = _read_corpus(args.in_path)
    seed = derive_seed(_run_config(args).global_seed, "split")
    train, test = C.stratified_split(corpus, args.ratio, seed)
    C.write_corpus(train, args.out)
    C.write_corpus(test, args.test_out)
    print(f"train={len(train)} test={len(test)}", file=sys.stderr)


def cmd_sample_shots(args):
    corpus = _read_corpus(args.in_path)
    cfg = _run_config(args)
    shots = C.sample_shots(corpus, cfg.shots_per_class, derive_seed(cfg.global_seed, "shots"),
                           per_dialect=args.per_dialect)
    with _text_out(args.out) as fh:
        C.dump_corpus(shots.reviews, fh)


def cmd_synth(args):
    spec = C.SyntheticSpec(
        classes=args.classes, per_class=args.per_class or 100,
        indicative_tokens_per_class=args.indicative_tokens,
        noise_tokens=args.noise_tokens, tokens_per_text=args.tokens_per_text,
    )
    corpus = C.generate_synthetic_corpus(spec, args.seed or 0)
    with _text_out(args.out) as fh:
        C.dump_corpus(corpus, fh)


def cmd_train(args):
    corpus = _read_corpus(args.in_path)
    artifact = train_pipeline(corpus, _run_config(args), _provider(args))
    save_model(artifact, args.out, timings=args.with_timings)
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            write_training_log(artifact.training_log, fh)
    t = artifact.timings
    print(f"trained on {artifact.metadata['n_shots']} shots: stage1 {t['stage1_seconds']:.2f}s, "
          f"stage2 {t['stage2_seconds']:.2f}s", file=sys.stderr)


def cmd_predict(args):
    artifact = load_model(args.model)
    with open(args.in_path, newline="", encoding="utf-8-sig") as src, _text_out(args.out) as dst:
        predict_file(artifact, src, dst, _provider(args))


def cmd_evaluate(args):
    artifact = load_model(args.model)
    report = evaluate_pipeline(artifact, _read_corpus(args.in_path), _provider(args))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dumps_report(report) + "\n")
    print(format_dialect_table(report))


def cmd_sweep(args):
    train, test = _read_corpus(args.in_path), _read_corpus(args.test)
    result = sweep(train, test, args.shots, args.epochs_grid, args.seeds,
                   _run_config(args), _provider(args), workers=args.workers)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(result.to_dict(), fh, indent=2)
            fh.write("\n")
    print(result.table())


def cmd_embed(args):
    artifact = load_model(args.model)
    corpus = _read_corpus(args.in_path).normalized(artifact.normalization)
    vectors = embedder_for(artifact).embed(corpus.reviews)
    with _text_out(args.out) as fh:
        dump_embeddings_jsonl(corpus.ids, vectors, fh)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="global seed (default 0)")
    common.add_argument("--config", help="RunConfig JSON file")

    ap = argparse.ArgumentParser(prog="shotfit", description=__doc__.split("\n\n")[0], parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.set_defaults(func=fn)
        return p

    def training_flags(p):
        d = ContrastiveConfig()
        p.add_argument("--per-class", type=int, help="shots per class (default 64)")
        p.add_argument("--batch-size", type=int, help=f"contrastive batch size (default {d.batch_size})")
        p.add_argument("--pair-iterations", type=int, help=f"pair generation rounds (default {d.pair_iterations})")
        p.add_argument("--lr", type=float, help=f"contrastive learning rate (default {d.learning_rate})")
        p.add_argument("--embeddings", help="precomputed embedding table (CSV or JSONL); skips stage 1")

    p = add("normalize", cmd_normalize, "normalize review texts")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", default="-")

    p = add("split", cmd_split, "stratified train/test split")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True, help="train CSV")
    p.add_argument("--test-out", required=True, help="test CSV")
    p.add_argument("--ratio", type=float, default=0.8)

    p = add("sample-shots", cmd_sample_shots, "sample n reviews per class")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", default="-")
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--per-dialect", action="store_true", help="balance each class across dialects")

    p = add("synth", cmd_synth, "generate a synthetic separable corpus")
    p.add_argument("--out", default="-")
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--indicative-tokens", type=int, default=C.SyntheticSpec.indicative_tokens_per_class)
    p.add_argument("--noise-tokens", type=int, default=C.SyntheticSpec.noise_tokens)
    p.add_argument("--tokens-per-text", type=int, default=C.SyntheticSpec.tokens_per_text)

    p = add("train", cmd_train, "train the two-stage model")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True, help="model container path")
    p.add_argument("--epochs", type=int, help="contrastive epochs (default 3)")
    p.add_argument("--log", help="write the per-epoch training log (JSON lines)")
    p.add_argument("--with-timings", action="store_true", help="store wall-clock timings in the container")
    training_flags(p)

    p = add("predict", cmd_predict, "write ID,Sentiment predictions")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", default="-")
    p.add_argument("--embeddings")

    p = add("evaluate", cmd_evaluate, "per-dialect / per-class F1 report")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--embeddings")

    p = add("sweep", cmd_sweep, "shots x epochs grid")
    p.add_argument("--in", dest="in_path", required=True, help="train CSV")
    p.add_argument("--test", required=True, help="test CSV")
    p.add_argument("--out", help="sweep JSON path")
    p.add_argument("--shots", type=int, nargs="+", default=[8, 16, 32, 64])
    p.add_argument("--epochs-grid", type=int, nargs="+", default=[1, 3, 5])
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    training_flags(p)

    p = add("embed", cmd_embed, "export sentence embeddings as JSON lines")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", default="-")
    return ap


def main(argv=None):
    level = os.environ.get("SFCM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ShotfitError, OSError) as exc:
        print(f"shotfit {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
