"""Labeling-loop protocol: budget arithmetic, set invariants, determinism."""

import numpy as np
import pytest

from mtal import alloop, query
from mtal.alloop import (ALConfig, SCENARIOS, protocol_budget, rounds_csv,
                         run_al, run_passive, timing_csv, emit_learning_curve)
from mtal.corpus import SplitSpec, UNK, Vocab, build_vocab, split_corpus
from mtal.synth import GeneratorConfig, generate_synthetic
from mtal.tagger import ModelConfig, TaggerModel
from mtal.train import TrainConfig


def setup(count=120, seed=0, seed_fraction=0.3):
    corpus = generate_synthetic(GeneratorConfig(count=count), rng_seed=seed)
    spec = SplitSpec(seed_labeled_fraction=seed_fraction, rng_seed=seed)
    splits = split_corpus(corpus, spec)
    corpus = build_vocab(corpus, splits.train)

    def factory():
        cfg = ModelConfig(word_dim=8, char_dim=8, predicate_dim=8,
                          char_emb_dim=6, hidden_units=12, encoder_layers=1,
                          dropout=0.0, rng_seed=seed)
        return TaggerModel(cfg, corpus.word_vocab, corpus.char_vocab,
                           corpus.srl_tag_set, corpus.er_tag_set)

    return corpus, splits, factory


def quick(rounds=3, strategy=query.RANK_COMBINATION, **kw):
    base = dict(scenario="custom", strategy=strategy, seed_fraction=0.3,
                batch_size=15, rounds=rounds,
                train=TrainConfig(max_epochs=2, patience=1, batch_size=16),
                rng_seed=0, early_stopping=False)
    base.update(kw)
    return ALConfig(**base)


# --------------------------------------------------------- budget arithmetic

def test_budget_simple_progression():
    assert protocol_budget(1000, 100, 50, 4) == [100, 150, 200, 250, 300]


def test_budget_85_15_published_setup():
    # 4845 train sentences, 85% seed, B = 10, ten rounds
    sizes = protocol_budget(4845, 4118, 10, 10)
    assert sizes[0] == 4118
    assert sizes[-1] == 4218
    assert len(sizes) == 11


def test_budget_50_50_setup():
    # 50% of 4845 rounds (half-up) to 2423; ten rounds of 100
    sizes = protocol_budget(4845, 2423, 100, 10)
    assert sizes[-1] == 3423


def test_budget_clamps_at_train_size():
    sizes = protocol_budget(120, 100, 15, 4)
    assert sizes == [100, 115, 120, 120, 120]


# ------------------------------------------------------------ configuration

def test_scenario_table():
    assert SCENARIOS["50:50"] == (0.50, 100)
    assert SCENARIOS["85:15"] == (0.85, 10)


def test_scenario_defaults_resolve():
    cfg = ALConfig(scenario="85:15", train=TrainConfig(max_epochs=2, patience=1))
    assert cfg.resolved_seed_fraction == 0.85
    assert cfg.resolved_batch_size == 10


def test_custom_scenario_requires_fraction_and_batch():
    with pytest.raises(ValueError):
        ALConfig(scenario="custom", seed_fraction=None)
    with pytest.raises(ValueError):
        ALConfig(scenario="custom", seed_fraction=0.3, batch_size=None)
    with pytest.raises(ValueError):
        ALConfig(scenario="nope")


def test_batch_override_wins():
    cfg = ALConfig(scenario="50:50", batch_size=7,
                   train=TrainConfig(max_epochs=2, patience=1))
    assert cfg.resolved_batch_size == 7


# ------------------------------------------------------------ the main loop

def test_partition_invariant_every_round():
    corpus, splits, factory = setup()
    result = run_al(corpus, splits, factory, quick())
    train_ids = set(splits.train)
    labeled = set(splits.seed_labeled)
    for lg in result.rounds:
        labeled |= set(lg.queried_ids)
        assert lg.labeled_size == len(labeled)
        assert labeled <= train_ids
    assert set(result.labeled_ids) == labeled
    # no id queried twice
    all_queried = [i for lg in result.rounds for i in lg.queried_ids]
    assert len(all_queried) == len(set(all_queried))
    # dev/test never queried
    assert not (labeled & set(splits.dev))
    assert not (labeled & set(splits.test))


def test_budget_matches_protocol_arithmetic():
    corpus, splits, factory = setup()
    cfg = quick(rounds=4)
    result = run_al(corpus, splits, factory, cfg)
    expected = protocol_budget(len(splits.train), len(splits.seed_labeled),
                               cfg.resolved_batch_size, cfg.rounds)
    assert [lg.labeled_size for lg in result.rounds] == expected[1:]


def test_rerun_is_byte_identical():
    corpus, splits, factory = setup()
    a = run_al(corpus, splits, factory, quick())
    b = run_al(corpus, splits, factory, quick())
    assert rounds_csv(a.rounds) == rounds_csv(b.rounds)
    for ka, kb in zip(sorted(a.model.params), sorted(b.model.params)):
        np.testing.assert_array_equal(a.model.params[ka], b.model.params[kb])


def test_seed_changes_queries():
    corpus, splits, factory = setup()
    a = run_al(corpus, splits, factory, quick(strategy=query.RANDOM, rng_seed=1))
    b = run_al(corpus, splits, factory, quick(strategy=query.RANDOM, rng_seed=2))
    assert a.rounds[0].queried_ids != b.rounds[0].queried_ids


def test_pool_exhaustion_flag_and_training_continues():
    corpus, splits, factory = setup(count=60, seed_fraction=0.8)
    # pool is tiny: exhaust it, then keep training
    cfg = quick(rounds=4, batch_size=30)
    result = run_al(corpus, splits, factory, cfg)
    flags = [lg.pool_exhausted for lg in result.rounds]
    assert flags[0] is False
    assert flags[-1] is True
    assert len(result.rounds) == 4          # loop did not stop at exhaustion
    assert result.rounds[-1].queried_ids == ()
    assert set(result.labeled_ids) == set(splits.train)


def test_random_task_draw_is_logged():
    corpus, splits, factory = setup()
    result = run_al(corpus, splits, factory,
                    quick(strategy=query.RANDOM_TASK, rounds=6))
    tasks = {lg.task for lg in result.rounds if lg.queried_ids}
    assert tasks <= {query.TE, query.VE}
    assert None not in tasks  # every querying round drew a task
    other = run_al(corpus, splits, factory, quick(rounds=2))
    assert all(lg.task is None for lg in other.rounds)


def test_early_stopping_stops_querying():
    corpus, splits, factory = setup()
    cfg = quick(rounds=8, early_stopping=True, patience=2)
    result = run_al(corpus, splits, factory, cfg)
    if result.stopped_early:
        assert len(result.rounds) < 8
        assert result.best_round <= len(result.rounds)
    # the restored model is the best round's
    assert result.final_dev.overall.f1 >= max(
        lg.dev_f1 for lg in result.rounds) - 1e-9


def test_retrain_from_scratch_runs():
    corpus, splits, factory = setup(count=60)
    cfg = quick(rounds=2, retrain_from_scratch=True,
                train=TrainConfig(max_epochs=2, patience=1, batch_size=16))
    result = run_al(corpus, splits, factory, cfg)
    assert len(result.rounds) == 2


def test_empty_seed_set_rejected():
    corpus, splits, factory = setup(count=60, seed_fraction=0.0)
    with pytest.raises(ValueError):
        run_al(corpus, splits, factory, quick())


def test_run_passive_uses_whole_train_split():
    corpus, splits, factory = setup(count=60)
    result = run_passive(corpus, splits, factory,
                         TrainConfig(max_epochs=2, patience=1, batch_size=16))
    assert len(result.log) >= 1


# ------------------------------------------------------------------ the CSVs

def test_rounds_csv_layout():
    corpus, splits, factory = setup(count=60)
    result = run_al(corpus, splits, factory, quick(rounds=2))
    text = rounds_csv(result.rounds)
    lines = text.strip().splitlines()
    assert lines[0] == alloop.ROUNDS_CSV_HEADER
    assert len(lines) == 3
    assert "wall" not in lines[0]
    # timing lives in the sidecar
    timing = timing_csv(result.rounds)
    assert timing.splitlines()[0] == "round,wall_clock_s"


def test_rounds_csv_na_for_missing_test_split():
    corpus, splits, factory = setup(count=60)
    result = run_al(corpus, splits, factory, quick(rounds=2, log_test=False))
    row = rounds_csv(result.rounds).strip().splitlines()[1].split(",")
    header = alloop.ROUNDS_CSV_HEADER.split(",")
    assert row[header.index("test_f1")] == "NA"
    assert row[header.index("task")] == "NA"


def test_learning_curve_merges_named_runs():
    corpus, splits, factory = setup(count=60)
    a = run_al(corpus, splits, factory, quick(rounds=3))
    b = run_al(corpus, splits, factory, quick(rounds=2))
    text = emit_learning_curve({"rank": a.rounds, "rand": b.rounds})
    lines = text.strip().splitlines()
    assert lines[0] == "round,rand_labeled,rand_dev_f1,rank_labeled,rank_dev_f1"
    assert len(lines) == 4                     # max(rounds) data lines
    assert lines[3].split(",")[1] == "NA"      # shorter run padded
