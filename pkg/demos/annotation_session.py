#!/usr/bin/env python3
"""Walk through an annotation session against the in-process service.

Simulates what the web client does over HTTP, but by direct calls: lease
a batch of the most informative unlabeled sentences, "annotate" them by
copying the held-out gold tags (a stand-in for a human), submit, and
periodically retrain so later batches come from a fresher model. Prints
the snapshot version and dev F1 as labels accumulate.

Usage: python demos/annotation_session.py [--rounds 5] [--batch 20]
"""

import argparse
import tempfile

from mtal import rundir
from mtal.corpus import SplitSpec, build_vocab, split_corpus
from mtal.service import AnnotationService, ServiceConfig
from mtal.synth import GeneratorConfig, generate_synthetic
from mtal.tagger import ModelConfig, TaggerModel
from mtal.train import TrainConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=800)
    ap.add_argument("--rounds", type=int, default=5)
    ap.add_argument("--batch", type=int, default=20)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    corpus = generate_synthetic(GeneratorConfig(count=args.count),
                                rng_seed=args.seed)
    splits = split_corpus(corpus, SplitSpec(seed_labeled_fraction=0.1,
                                            rng_seed=args.seed))
    corpus = build_vocab(corpus, splits.train)
    cfg = ModelConfig(word_dim=16, char_dim=16, predicate_dim=8,
                      char_emb_dim=8, hidden_units=24, encoder_layers=1,
                      dropout=0.0, multi_task=True, rng_seed=args.seed)

    def factory():
        return TaggerModel(cfg, corpus.word_vocab, corpus.char_vocab,
                           corpus.srl_tag_set, corpus.er_tag_set)

    workdir = tempfile.mkdtemp(prefix="annotation-demo-")
    run = rundir.create_run_dir("serve", {"demo": True}, args.seed,
                                out=workdir)
    # retrain from scratch each snapshot: at this corpus size a full
    # early-stopped fit shows progress much sooner than one warm epoch
    svc_cfg = ServiceConfig(strategy="rank", batch_size=args.batch,
                            train=TrainConfig(max_epochs=20, patience=6,
                                              batch_size=16,
                                              rng_seed=args.seed),
                            rng_seed=args.seed, retrain_from_scratch=True)
    service = AnnotationService(corpus, splits.train, splits.dev,
                                splits.test, splits.seed_labeled,
                                None, factory, svc_cfg, run)
    print(f"run directory: {run.path}")
    print("training the initial snapshot on the seed labels...")
    service.trigger_retrain()

    for r in range(1, args.rounds + 1):
        batch = service.next_batch()
        if not batch:
            print("pool exhausted")
            break
        for task in batch:
            gold = corpus[task["sentence_id"]]
            # a human would edit the pre-annotation; the oracle just knows
            service.submit_labels(task["sentence_id"],
                                  list(gold.srl_tags), list(gold.er_tags),
                                  annotator="oracle-demo")
        service.trigger_retrain()
        m = service.metrics()
        print(f"round {r}: labeled={m['labeled_size']} "
              f"pool={m['pool_size']} snapshot=v{m['snapshot_version']} "
              f"dev F1={m['dev']['f1']:.4f}")

    print(f"\nwrite-ahead label log: {run.file('labels.jsonl')}")
    print("restart the process with the same run directory and the labels,")
    print("snapshot version, and served model all come back as left.")


if __name__ == "__main__":
    main()
