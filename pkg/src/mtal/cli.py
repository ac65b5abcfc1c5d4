"""Command-line entry point.

Subcommands: datagen, train, al, eval, serve, replay. Every computing
command validates its inputs, then creates a run directory with a manifest
(written before any work) that records the fully resolved configuration —
`replay <run-dir>` re-executes from that manifest alone, and deterministic
artifacts (rounds.csv, checkpoints, queried-id lists) come out
byte-identical. Omitting --seed draws one and records it.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys

import numpy as np

from . import alloop, checkpoint, evaluation, query, rundir, synth
from .corpus import (SplitSpec, Splits, build_vocab, parse_corpus,
                     serialize_corpus, split_corpus)
from .service import (AnnotationService, ServiceConfig, create_app,
                      latest_checkpoint_path, restore_labels)
from .tagger import ModelConfig, TaggerModel
from .train import TrainConfig
from .word2vec import pretrain_word_embeddings


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--encoder-layers", type=int, default=2)
    p.add_argument("--hidden-units", type=int, default=300)
    p.add_argument("--word-dim", type=int, default=50)
    p.add_argument("--char-dim", type=int, default=50)
    p.add_argument("--predicate-dim", type=int, default=100)
    p.add_argument("--char-emb-dim", type=int, default=16)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--single-task", action="store_true",
                   help="role head only (no entity head)")
    p.add_argument("--no-pretrain-embeddings", action="store_true",
                   help="use the scaled-uniform fallback initialization")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--train-batch-size", type=int, default=32)


def _model_cfg_dict(args) -> dict:
    return {
        "word_dim": args.word_dim, "char_dim": args.char_dim,
        "predicate_dim": args.predicate_dim, "char_emb_dim": args.char_emb_dim,
        "hidden_units": args.hidden_units, "encoder_layers": args.encoder_layers,
        "dropout": args.dropout, "multi_task": not args.single_task,
        "pretrain_embeddings": not args.no_pretrain_embeddings,
    }


def _train_cfg_dict(args) -> dict:
    return {"max_epochs": args.epochs, "patience": args.patience,
            "batch_size": args.train_batch_size}


def _resolve_seed(args) -> int:
    return args.seed if args.seed is not None else secrets.randbits(32)


def _load_corpus(path: str):
    if not os.path.isfile(path):
        raise FileNotFoundError(f"corpus file not found: {path}")
    with open(path) as fh:
        return parse_corpus(fh)


def _prepare(cfg: dict):
    """corpus + splits + vocab + model factory from a resolved config dict."""
    corpus = _load_corpus(cfg["data"])
    spec = SplitSpec(seed_labeled_fraction=cfg.get("seed_fraction", 0.5),
                     rng_seed=cfg["seed"])
    splits = split_corpus(corpus, spec)
    corpus = build_vocab(corpus, splits.train)
    mc = cfg["model"]
    model_cfg = ModelConfig(
        word_dim=mc["word_dim"], char_dim=mc["char_dim"],
        predicate_dim=mc["predicate_dim"], char_emb_dim=mc["char_emb_dim"],
        hidden_units=mc["hidden_units"], encoder_layers=mc["encoder_layers"],
        dropout=mc["dropout"], multi_task=mc["multi_task"],
        rng_seed=cfg["seed"])
    emb = pretrain_word_embeddings(corpus, splits.train, dim=mc["word_dim"],
                                   rng_seed=cfg["seed"],
                                   enabled=mc["pretrain_embeddings"])

    def factory():
        return TaggerModel(model_cfg, corpus.word_vocab, corpus.char_vocab,
                           corpus.srl_tag_set, corpus.er_tag_set,
                           word_embeddings=emb)

    return corpus, splits, factory


def _train_config(cfg: dict) -> TrainConfig:
    tc = cfg["train"]
    return TrainConfig(max_epochs=tc["max_epochs"], patience=tc["patience"],
                       batch_size=tc["batch_size"], rng_seed=cfg["seed"])


# ----------------------------------------------------------------- datagen

def cmd_datagen(args) -> int:
    seed = _resolve_seed(args)
    config = synth.GeneratorConfig(count=args.count, noise_rate=args.noise)
    corpus = synth.generate_synthetic(config, rng_seed=seed)
    text = serialize_corpus(corpus)
    out = args.out or "synthetic.tsv"
    with open(out, "w") as fh:
        fh.write(text)
    print(f"wrote {len(corpus)} sentences to {out} (seed {seed})")
    return 0


# ------------------------------------------------------------------- train

def _epochs_csv(log) -> str:
    lines = ["epoch,train_loss,srl_loss,er_loss,dev_srl_f1,dev_er_f1"]
    for e in log:
        lines.append(f"{e.epoch},{e.train_loss:.6f},{e.srl_loss:.6f},"
                     f"{e.er_loss:.6f},{e.dev_srl_f1:.6f},{e.dev_er_f1:.6f}")
    return "\n".join(lines) + "\n"


def _write_fold_metrics(run, corpus, cfg, k: int, scenario_fn) -> None:
    folds = evaluation.run_cross_validation(corpus, scenario_fn, k=k,
                                            rng_seed=cfg["seed"])
    lines = ["fold,f1"] + [f"{i},{f1:.6f}" for i, f1 in enumerate(folds)]
    run.write_text("fold_metrics.csv", "\n".join(lines) + "\n")


def execute_train(cfg: dict, run: rundir.RunDir) -> int:
    corpus, splits, factory = _prepare(cfg)
    result = alloop.run_passive(corpus, splits, factory, _train_config(cfg))
    run.write_text("epochs.csv", _epochs_csv(result.log))
    checkpoint.save_model(result.model, run.file("checkpoints/final.ckpt"))
    test = [corpus[i] for i in splits.test]
    rep = evaluation.evaluate_model(result.model, test, "srl")
    run.write_text("test_report.txt", rep.format_table())
    run.write_text("confusion.csv", rep.confusion_csv())

    if cfg.get("cv"):
        from .train import train as _train

        def fold_scenario(train_sents, eval_sents, fold_i):
            res = _train(factory(), train_sents, eval_sents, _train_config(cfg))
            return evaluation.evaluate_model(res.model, eval_sents, "srl").overall.f1

        _write_fold_metrics(run, corpus, cfg, cfg["cv"], fold_scenario)
    print(f"train: best epoch {result.best_epoch}, "
          f"dev SRL F1 {result.best_dev_srl_f1:.4f} -> {run.path}")
    return 0


def cmd_train(args) -> int:
    seed = _resolve_seed(args)
    corpus_path = os.path.abspath(args.data)
    _load_corpus(corpus_path)  # validate before creating the run directory
    cfg = {"data": corpus_path, "seed": seed, "seed_fraction": 1.0,
           "model": _model_cfg_dict(args), "train": _train_cfg_dict(args),
           "cv": args.cv}
    run = rundir.create_run_dir("train", cfg, seed,
                                inputs={"data": corpus_path}, out=args.out)
    return execute_train(cfg, run)


# ---------------------------------------------------------------------- al

def _write_al_artifacts(run, name: str, result) -> None:
    prefix = f"{name}/" if name else ""
    run.write_text(prefix + "rounds.csv", alloop.rounds_csv(result.rounds))
    run.write_text(prefix + "timing.csv", alloop.timing_csv(result.rounds))
    for lg in result.rounds:
        run.write_text(prefix + f"queried/round-{lg.round:03d}.txt",
                       "".join(i + "\n" for i in lg.queried_ids))
    checkpoint.save_model(result.model,
                          run.file(prefix + "checkpoints/final.ckpt"))


def execute_al_single(cfg: dict, run: rundir.RunDir, name: str = "") -> "alloop.ALResult":
    corpus, splits, factory = _prepare(cfg)
    al_cfg = alloop.ALConfig(
        scenario=cfg["scenario"], strategy=cfg["strategy"],
        seed_fraction=cfg.get("seed_fraction_custom"),
        batch_size=cfg.get("batch"), rounds=cfg["rounds"],
        train=_train_config(cfg), rng_seed=cfg["seed"],
        early_stopping=not cfg.get("no_early_stopping", False),
        retrain_from_scratch=cfg.get("retrain_from_scratch", False),
        reset_optimizer=cfg.get("reset_optimizer", False))
    result = alloop.run_al(corpus, splits, factory, al_cfg)
    _write_al_artifacts(run, name, result)
    return result


def execute_al(cfg: dict, run: rundir.RunDir) -> int:
    if cfg.get("grid"):
        named = {}
        summary = ["scenario,strategy,final_dev_f1,final_test_f1,labeled"]
        for scenario in ("50:50", "85:15"):
            for strategy in query.STRATEGIES:
                name = f"{scenario.replace(':', '-')}-{strategy}"
                sub = dict(cfg, scenario=scenario, strategy=strategy, grid=None)
                sub["seed_fraction"] = alloop.SCENARIOS[scenario][0]
                result = execute_al_single(sub, run, name=name)
                named[name] = result.rounds
                test_f1 = (result.final_test.overall.f1
                           if result.final_test else float("nan"))
                summary.append(f"{scenario},{strategy},"
                               f"{result.final_dev.overall.f1:.6f},"
                               f"{test_f1:.6f},{len(result.labeled_ids)}")
        run.write_text("curve.csv", alloop.emit_learning_curve(named))
        run.write_text("summary.csv", "\n".join(summary) + "\n")
        print(f"grid complete -> {run.path}")
        return 0

    result = execute_al_single(cfg, run)
    if cfg.get("cv"):
        corpus, _, factory = _prepare(cfg)

        def fold_scenario(train_sents, eval_sents, fold_i):
            from dataclasses import replace as _rep
            ids = tuple(s.id for s in train_sents)
            fold_corpus = _rep(corpus, sentences=tuple(train_sents) + tuple(eval_sents))
            n_seed = max(1, round(len(ids) * (cfg.get("seed_fraction") or 0.5)))
            fold_splits = Splits(train=ids, dev=tuple(s.id for s in eval_sents),
                                 test=(), seed_labeled=ids[:n_seed],
                                 pool_unlabeled=ids[n_seed:])
            al_cfg = alloop.ALConfig(
                scenario=cfg["scenario"], strategy=cfg["strategy"],
                seed_fraction=cfg.get("seed_fraction_custom"),
                batch_size=cfg.get("batch"), rounds=cfg["rounds"],
                train=_train_config(cfg), rng_seed=cfg["seed"] + fold_i,
                early_stopping=not cfg.get("no_early_stopping", False),
                log_test=False)
            res = alloop.run_al(fold_corpus, fold_splits, factory, al_cfg)
            return res.final_dev.overall.f1

        _write_fold_metrics(run, corpus, cfg, cfg["cv"], fold_scenario)
    final = result.final_test or result.final_dev
    print(f"al: {cfg['strategy']} {cfg['scenario']} rounds={len(result.rounds)} "
          f"labeled={len(result.labeled_ids)} F1={final.overall.f1:.4f} "
          f"-> {run.path}")
    return 0


def cmd_al(args) -> int:
    seed = _resolve_seed(args)
    corpus_path = os.path.abspath(args.data)
    _load_corpus(corpus_path)
    scenario = args.scenario
    seed_fraction_custom = None
    if args.seed_fraction is not None:
        scenario = "custom"
        seed_fraction_custom = args.seed_fraction
    if scenario in alloop.SCENARIOS:
        seed_fraction = alloop.SCENARIOS[scenario][0]
    else:
        seed_fraction = seed_fraction_custom
    cfg = {"data": corpus_path, "seed": seed, "scenario": scenario,
           "strategy": args.strategy, "rounds": args.rounds,
           "batch": args.batch, "seed_fraction": seed_fraction,
           "seed_fraction_custom": seed_fraction_custom,
           "model": _model_cfg_dict(args), "train": _train_cfg_dict(args),
           "cv": args.cv, "grid": args.grid,
           "no_early_stopping": args.no_early_stopping,
           "retrain_from_scratch": args.retrain_from_scratch,
           "reset_optimizer": args.reset_optimizer}
    if not cfg["grid"]:
        # surface bad scenario/strategy/batch combinations before the run
        # directory exists
        alloop.ALConfig(scenario=scenario, strategy=args.strategy,
                        seed_fraction=seed_fraction_custom,
                        batch_size=args.batch, rounds=args.rounds,
                        train=_train_config(cfg), rng_seed=seed)
    run = rundir.create_run_dir("al", cfg, seed,
                                inputs={"data": corpus_path}, out=args.out)
    return execute_al(cfg, run)


# -------------------------------------------------------------------- eval

def _fold_f1s(run_path: str) -> list[float] | None:
    path = os.path.join(run_path, "fold_metrics.csv")
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        lines = fh.read().strip().splitlines()[1:]
    return [float(line.split(",")[1]) for line in lines]


def _round_dev_f1s(run_path: str) -> list[float] | None:
    for candidate in ("rounds.csv", "epochs.csv"):
        path = os.path.join(run_path, candidate)
        if os.path.exists(path):
            with open(path) as fh:
                header, *rows = fh.read().strip().splitlines()
            col = header.split(",").index(
                "dev_f1" if candidate == "rounds.csv" else "dev_srl_f1")
            return [float(r.split(",")[col]) for r in rows]
    return None


def execute_eval(cfg: dict, run: rundir.RunDir) -> int:
    corpus = _load_corpus(cfg["data"])
    spec = SplitSpec(rng_seed=cfg["seed"])
    splits = split_corpus(corpus, spec)
    test = [corpus[i] for i in splits.test]

    lines_out = []
    for tag in ("a", "b"):
        run_path = cfg[tag]
        ckpt = os.path.join(run_path, "checkpoints", "final.ckpt")
        if not os.path.exists(ckpt):
            print(f"error: no final checkpoint under {run_path}", file=sys.stderr)
            return 2
        model = checkpoint.load_model(ckpt)
        rep = evaluation.evaluate_model(model, test, "srl")
        run.write_text(f"report_{tag}.txt", rep.format_table())
        run.write_text(f"confusion_{tag}.csv", rep.confusion_csv())
        run.write_text(f"confusion_{tag}_rownorm.csv",
                       rep.confusion_csv(normalize=True))
        run.write_text(f"taxonomy_{tag}.json",
                       json.dumps(rep.taxonomy, sort_keys=True, indent=2) + "\n")
        lines_out.append(f"run {tag} = {run_path}: test SRL F1 "
                         f"{rep.overall.f1:.4f} {rep.taxonomy}")

    a_f1s = _fold_f1s(cfg["a"])
    b_f1s = _fold_f1s(cfg["b"])
    source = "fold_metrics.csv"
    if a_f1s is None or b_f1s is None:
        a_f1s, b_f1s = _round_dev_f1s(cfg["a"]), _round_dev_f1s(cfg["b"])
        source = "per-round dev F1"
    verdict = "t-test unavailable (no paired metric series of equal length)"
    if a_f1s and b_f1s and len(a_f1s) == len(b_f1s) and len(a_f1s) >= 2:
        t = evaluation.paired_t_test(a_f1s, b_f1s)
        verdict = (f"paired t-test on {source} (n={len(a_f1s)}): "
                   f"t={t.t:.4f} p={t.p:.6f} significant={t.significant}"
                   + (" degenerate" if t.degenerate else ""))
    lines_out.append(verdict)
    report = "\n".join(lines_out) + "\n"
    run.write_text("ttest.txt", report)
    print(report, end="")
    return 0


def cmd_eval(args) -> int:
    seed = _resolve_seed(args)
    for path in (args.a, args.b):
        if not os.path.isdir(path):
            print(f"error: run directory not found: {path}", file=sys.stderr)
            return 2
    corpus_path = os.path.abspath(args.data)
    _load_corpus(corpus_path)
    cfg = {"data": corpus_path, "seed": seed,
           "a": os.path.abspath(args.a), "b": os.path.abspath(args.b)}
    run = rundir.create_run_dir("eval", cfg, seed,
                                inputs={"data": corpus_path}, out=args.out)
    return execute_eval(cfg, run)


# ------------------------------------------------------------------- serve

def build_service(cfg: dict, run: rundir.RunDir) -> AnnotationService:
    corpus, splits, factory = _prepare(cfg)
    svc_cfg = ServiceConfig(strategy=cfg["strategy"], batch_size=cfg["batch"],
                            train=_train_config(cfg), rng_seed=cfg["seed"],
                            auto_retrain_every=cfg.get("auto_retrain_every", 0))
    ckpt_path = latest_checkpoint_path(run)
    model = checkpoint.load_model(ckpt_path) if ckpt_path else None
    service = AnnotationService(
        corpus, splits.train, splits.dev, splits.test, splits.seed_labeled,
        model, factory, svc_cfg, run)
    restored = restore_labels(service)
    if restored:
        print(f"restored {restored} labels from labels.jsonl")
    if service.model is None and not cfg.get("skip_initial_train"):
        print("training initial snapshot on the seed labeled set...")
        service.trigger_retrain()
    return service


def cmd_serve(args) -> int:
    seed = _resolve_seed(args)
    corpus_path = os.path.abspath(args.data)
    _load_corpus(corpus_path)
    cfg = {"data": corpus_path, "seed": seed, "strategy": args.strategy,
           "batch": args.batch, "seed_fraction": args.seed_fraction,
           "model": _model_cfg_dict(args), "train": _train_cfg_dict(args),
           "auto_retrain_every": args.auto_retrain_every,
           "port": args.port, "static": args.static}
    run = rundir.create_run_dir("serve", cfg, seed,
                                inputs={"data": corpus_path}, out=args.out)
    service = build_service(cfg, run)
    static = args.static
    if static is None:
        bundled = os.path.join(os.path.dirname(os.path.dirname(
            os.path.dirname(os.path.abspath(__file__)))), "frontend", "dist")
        static = bundled if os.path.isdir(bundled) else None
    app = create_app(service, static_dir=static)
    import uvicorn
    print(f"serving on port {args.port} (run dir {run.path})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ------------------------------------------------------------------ replay

def cmd_replay(args) -> int:
    manifest = rundir.load_manifest(args.run_dir)
    cfg = manifest.config
    run = rundir.create_run_dir(manifest.subcommand, cfg, manifest.seed,
                                inputs={"data": cfg.get("data", "")},
                                out=args.out)
    if manifest.subcommand == "train":
        return execute_train(cfg, run)
    if manifest.subcommand == "al":
        return execute_al(cfg, run)
    if manifest.subcommand == "eval":
        return execute_eval(cfg, run)
    print(f"error: cannot replay a {manifest.subcommand!r} run", file=sys.stderr)
    return 2


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtal",
        description="multi-task active learning for conversational role labeling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="generate a synthetic corpus file")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("train", help="passive supervised training")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--cv", type=int, default=None,
                   help="also run k-fold cross validation")
    _add_model_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("al", help="active-learning protocol run")
    p.add_argument("--data", required=True)
    p.add_argument("--scenario", choices=sorted(alloop.SCENARIOS), default="50:50")
    p.add_argument("--strategy", choices=query.STRATEGIES,
                   default=query.RANK_COMBINATION)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--batch", type=int, default=None,
                   help="per-round query size (scenario default if omitted)")
    p.add_argument("--seed-fraction", type=float, default=None,
                   help="custom initial labeled fraction (overrides --scenario)")
    p.add_argument("--out", default=None)
    p.add_argument("--cv", type=int, default=None)
    p.add_argument("--grid", choices=("table2",), default=None,
                   help="run the full scenario x strategy grid")
    p.add_argument("--no-early-stopping", action="store_true")
    p.add_argument("--retrain-from-scratch", action="store_true")
    p.add_argument("--reset-optimizer", action="store_true")
    _add_model_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_al)

    p = sub.add_parser("eval", help="compare two run directories")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--data", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--strategy", choices=query.STRATEGIES,
                   default=query.RANK_COMBINATION)
    p.add_argument("--batch", type=int, default=10)
    p.add_argument("--seed-fraction", type=float, default=0.5)
    p.add_argument("--auto-retrain-every", type=int, default=0)
    p.add_argument("--static", default=None,
                   help="directory with the UI bundle (default: frontend/dist)")
    _add_model_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="re-execute a run from its manifest")
    p.add_argument("run_dir")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
