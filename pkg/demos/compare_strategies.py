#!/usr/bin/env python3
"""Compare query strategies on a synthetic conversational corpus.

Runs the same pool-based labeling loop once per strategy (random, te, ve,
rank) over a few seeds, at desk-scale model dimensions so the whole thing
finishes in a couple of minutes. Prints a per-seed table and writes the
merged learning curve to strategy_curves.csv next to this script.

Usage: python demos/compare_strategies.py [--count 3000] [--seeds 3]
"""

import argparse
import os

import numpy as np

from mtal import query
from mtal.alloop import ALConfig, emit_learning_curve, run_al
from mtal.corpus import SplitSpec, build_vocab, split_corpus
from mtal.synth import GeneratorConfig, generate_synthetic
from mtal.tagger import ModelConfig, TaggerModel
from mtal.train import TrainConfig

STRATEGIES = (query.RANDOM, query.TE, query.VE, query.RANK_COMBINATION)


def run_one(corpus, seed, strategy, rounds, batch):
    spec = SplitSpec(seed_labeled_fraction=0.05, rng_seed=seed)
    splits = split_corpus(corpus, spec)
    built = build_vocab(corpus, splits.train)
    cfg = ModelConfig(word_dim=16, char_dim=16, predicate_dim=8,
                      char_emb_dim=8, hidden_units=24, encoder_layers=1,
                      dropout=0.0, multi_task=True, rng_seed=seed)

    def factory():
        return TaggerModel(cfg, built.word_vocab, built.char_vocab,
                           built.srl_tag_set, built.er_tag_set)

    al_cfg = ALConfig(scenario="custom", strategy=strategy,
                      seed_fraction=0.05, batch_size=batch, rounds=rounds,
                      train=TrainConfig(max_epochs=2, patience=1,
                                        batch_size=32, rng_seed=seed),
                      rng_seed=seed, early_stopping=False, log_test=True)
    return run_al(built, splits, factory, al_cfg)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=3000)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--rounds", type=int, default=4)
    ap.add_argument("--batch", type=int, default=200)
    args = ap.parse_args()

    corpus = generate_synthetic(GeneratorConfig(count=args.count), rng_seed=11)
    print(f"synthetic corpus: {len(corpus)} sentences\n")
    print(f"{'strategy':>8} {'seed':>4} {'labeled':>8} {'dev F1':>8} {'test F1':>8}")

    finals = {s: [] for s in STRATEGIES}
    curves = {}
    for seed in range(1, args.seeds + 1):
        for strategy in STRATEGIES:
            res = run_one(corpus, seed, strategy, args.rounds, args.batch)
            test_f1 = res.final_test.overall.f1 if res.final_test else float("nan")
            finals[strategy].append(res.final_dev.overall.f1)
            if seed == 1:
                curves[strategy] = res.rounds
            print(f"{strategy:>8} {seed:>4} {len(res.labeled_ids):>8} "
                  f"{res.final_dev.overall.f1:>8.4f} {test_f1:>8.4f}")

    print("\nmean final dev F1 over seeds:")
    for strategy in STRATEGIES:
        print(f"  {strategy:>8}: {np.mean(finals[strategy]):.4f}")

    out = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                       "strategy_curves.csv")
    with open(out, "w") as fh:
        fh.write(emit_learning_curve(curves))
    print(f"\nper-round curves (seed 1) -> {out}")


if __name__ == "__main__":
    main()
