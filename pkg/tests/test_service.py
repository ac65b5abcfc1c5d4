"""Annotation backend: leases, validation, durability, snapshot versions."""

import json
import os

import numpy as np
import pytest

import mtal.service as service_mod
from mtal import rundir
from mtal.corpus import (InvalidBioError, SplitSpec, build_vocab,
                         split_corpus, validate_bio)
from mtal.checkpoint import load_model
from mtal.service import (AnnotationService, ServiceConfig, ServiceError,
                          create_app, latest_checkpoint_path, restore_labels)
from mtal.synth import GeneratorConfig, generate_synthetic
from mtal.tagger import ModelConfig, TaggerModel
from mtal.train import TrainConfig


def build(tmp_path, count=80, batch=4, train_first=True, seed=0):
    corpus = generate_synthetic(GeneratorConfig(count=count), rng_seed=seed)
    splits = split_corpus(corpus, SplitSpec(seed_labeled_fraction=0.4,
                                            rng_seed=seed))
    corpus = build_vocab(corpus, splits.train)

    def factory():
        cfg = ModelConfig(word_dim=8, char_dim=8, predicate_dim=8,
                          char_emb_dim=6, hidden_units=12, encoder_layers=1,
                          dropout=0.0, rng_seed=seed)
        return TaggerModel(cfg, corpus.word_vocab, corpus.char_vocab,
                           corpus.srl_tag_set, corpus.er_tag_set)

    run = rundir.create_run_dir("serve", {"seed": seed}, seed,
                                out=str(tmp_path / "run"))
    svc_cfg = ServiceConfig(batch_size=batch,
                            train=TrainConfig(max_epochs=2, patience=1,
                                              batch_size=16),
                            rng_seed=seed)
    ckpt = latest_checkpoint_path(run)
    model = load_model(ckpt) if ckpt else None
    svc = AnnotationService(corpus, splits.train, splits.dev, splits.test,
                            splits.seed_labeled, model, factory, svc_cfg, run)
    restore_labels(svc)
    if train_first and svc.model is None:
        svc.trigger_retrain()
    return svc, run


def o_tags(svc, sid):
    n = len(svc.corpus[sid].tokens)
    return ["O"] * n, ["O"] * n


# ------------------------------------------------------------------- leases

def test_batch_moves_to_inflight_and_is_idempotent(tmp_path):
    svc, _ = build(tmp_path)
    before_pool = len(svc.pool)
    batch = svc.next_batch()
    assert len(batch) == 4
    assert len(svc.inflight) == 4
    assert len(svc.pool) == before_pool - 4
    again = svc.next_batch()
    assert [t["sentence_id"] for t in again] == \
        [t["sentence_id"] for t in batch]
    assert len(svc.pool) == before_pool - 4  # nothing newly consumed


def test_batch_clamps_to_remaining_pool(tmp_path):
    svc, _ = build(tmp_path, count=40)
    got = svc.next_batch(size=10_000)
    assert len(got) == len(got) and len(svc.pool) == 0
    assert all(t["status"] == "assigned" for t in got)


def test_no_model_is_409(tmp_path):
    svc, _ = build(tmp_path, train_first=False)
    with pytest.raises(ServiceError) as e:
        svc.next_batch()
    assert e.value.status == 409


def test_pool_exhaustion_is_409(tmp_path):
    svc, _ = build(tmp_path, count=40)
    batch = svc.next_batch(size=10_000)
    for t in batch:
        srl, er = o_tags(svc, t["sentence_id"])
        svc.submit_labels(t["sentence_id"], srl, er, "a")
    with pytest.raises(ServiceError) as e:
        svc.next_batch()
    assert e.value.status == 409


def test_release_returns_leases_to_pool(tmp_path):
    svc, _ = build(tmp_path)
    pool0 = set(svc.pool)
    svc.next_batch()
    assert svc.release() == 4
    assert set(svc.pool) == pool0
    assert not svc.inflight


def test_pre_annotations_come_from_current_snapshot(tmp_path):
    svc, _ = build(tmp_path)
    batch = svc.next_batch()
    pre = batch[0]["pre"]
    assert set(pre) >= {"srl_tags", "srl_path_prob", "er_tags",
                        "er_confidence", "snapshot_version"}
    assert pre["snapshot_version"] == svc.version
    assert 0.0 <= pre["srl_path_prob"] <= 1.0
    assert len(pre["srl_tags"]) == len(batch[0]["tokens"])
    assert all(0.0 <= c <= 1.0 for c in pre["er_confidence"])


def test_pre_annotations_always_pass_own_validation(tmp_path):
    # A barely-fit model decodes plenty of orphan I-x tags; suggestions must
    # be repaired before they go out, or an annotator who accepts one
    # unchanged gets their submission rejected.
    svc, _ = build(tmp_path, train_first=False)
    svc.model = svc.model_factory()      # random init, worst case
    batch = svc.next_batch(size=16)

    raw_violations = 0
    for task in batch:
        sent = svc.corpus[task["sentence_id"]]
        raw = svc.model.srl_tag_set.decode(svc.model.decode_srl(sent).tags)
        try:
            validate_bio(list(raw), svc.model.srl_tag_set)
        except InvalidBioError:
            raw_violations += 1
    assert raw_violations > 0            # the scenario actually bites

    for task in batch:
        pre = task["pre"]
        validate_bio(pre["srl_tags"], svc.model.srl_tag_set)
        validate_bio(pre["er_tags"], svc.model.er_tag_set)
        out = svc.submit_labels(task["sentence_id"], pre["srl_tags"],
                                pre["er_tags"], "a")
        assert out["status"] == "accepted"


# --------------------------------------------------------------- validation

def test_submit_validations(tmp_path):
    svc, _ = build(tmp_path)
    batch = svc.next_batch()
    sid = batch[0]["sentence_id"]
    srl, er = o_tags(svc, sid)

    with pytest.raises(ServiceError) as e:
        svc.submit_labels("missing-id", srl, er, "a")
    assert e.value.status == 404

    pool_id = svc.pool[0]
    p_srl, p_er = o_tags(svc, pool_id)
    with pytest.raises(ServiceError) as e:
        svc.submit_labels(pool_id, p_srl, p_er, "a")
    assert e.value.status == 409          # not in flight

    with pytest.raises(ServiceError) as e:
        svc.submit_labels(sid, srl[:-1], er, "a")
    assert e.value.status == 400          # length mismatch

    bad = list(srl)
    bad[0] = "I-A"                        # orphan continuation
    with pytest.raises(ServiceError) as e:
        svc.submit_labels(sid, bad, er, "a")
    assert e.value.status == 400

    unknown = list(srl)
    unknown[0] = "B-XYZ"
    with pytest.raises(ServiceError) as e:
        svc.submit_labels(sid, unknown, er, "a")
    assert e.value.status == 400

    # the sentence survived every rejection and still accepts a valid submit
    out = svc.submit_labels(sid, srl, er, "a")
    assert out["status"] == "accepted"
    with pytest.raises(ServiceError) as e:
        svc.submit_labels(sid, srl, er, "a")
    assert e.value.status == 409          # duplicate


def test_partition_invariant_after_every_call(tmp_path):
    svc, _ = build(tmp_path)
    total = len(svc.labeled) + len(svc.pool) + len(svc.inflight)

    def check():
        ids = svc.labeled + svc.pool + list(svc.inflight)
        assert len(ids) == len(set(ids)) == total

    check()
    batch = svc.next_batch()
    check()
    for bad_call in (lambda: svc.submit_labels("nope", [], [], "a"),
                     lambda: svc.next_batch(strategy="bogus")):
        with pytest.raises(ServiceError):
            bad_call()
        check()
    sid = batch[0]["sentence_id"]
    srl, er = o_tags(svc, sid)
    svc.submit_labels(sid, srl, er, "a")
    check()
    svc.release()
    check()
    svc.trigger_retrain()
    check()


# --------------------------------------------------------------- durability

def test_labels_survive_restart(tmp_path):
    svc, run = build(tmp_path)
    batch = svc.next_batch()
    submitted = {}
    for t in batch[:3]:
        sid = t["sentence_id"]
        srl, er = o_tags(svc, sid)
        srl[0] = "B-G"                   # distinguishable from gold
        svc.submit_labels(sid, srl, er, "ann-1")
        submitted[sid] = tuple(srl)
    labeled_after = len(svc.labeled)

    # the write-ahead log is already on disk
    log_path = os.path.join(run.path, "labels.jsonl")
    records = [json.loads(line) for line in open(log_path)]
    assert [r["sentence_id"] for r in records] == list(submitted)
    assert all(r["annotator"] == "ann-1" and "pre" in r and "ts" in r
               for r in records)

    svc2, _ = build(tmp_path, train_first=False)
    assert svc2.model is not None         # restored from the snapshot pointer
    assert len(svc2.labeled) == labeled_after
    for sid, srl in submitted.items():
        sent = svc2._labeled_sentence(sid)
        assert sent.srl_tags == srl       # overlay beats hidden gold


def test_version_numbering_resumes_after_restart(tmp_path):
    svc, run = build(tmp_path)
    batch = svc.next_batch()
    sid = batch[0]["sentence_id"]
    srl, er = o_tags(svc, sid)
    svc.submit_labels(sid, srl, er, "a")
    svc.release()
    assert svc.trigger_retrain() == 2

    svc2, _ = build(tmp_path, train_first=False)
    assert svc2.version == 2
    ckpt_v1 = os.path.join(run.path, "checkpoints", "model-v0001.ckpt")
    ckpt_v2 = os.path.join(run.path, "checkpoints", "model-v0002.ckpt")
    assert os.path.exists(ckpt_v1) and os.path.exists(ckpt_v2)
    assert latest_checkpoint_path(run).endswith("model-v0002.ckpt")


def test_crash_between_training_and_publish_serves_old_snapshot(
        tmp_path, monkeypatch):
    svc, run = build(tmp_path)
    pointer_before = latest_checkpoint_path(run)
    batch = svc.next_batch()
    sid = batch[0]["sentence_id"]
    srl, er = o_tags(svc, sid)
    svc.submit_labels(sid, srl, er, "a")

    def boom(model, path):
        raise OSError("disk gone")

    monkeypatch.setattr(service_mod, "save_model", boom)
    with pytest.raises(OSError):
        svc.trigger_retrain()
    monkeypatch.undo()

    # restart: the pointer still names the last fully published snapshot
    assert latest_checkpoint_path(run) == pointer_before
    svc2, _ = build(tmp_path, train_first=False)
    assert svc2.version == 1
    assert svc2.model is not None
    svc2.next_batch()                     # and it serves


# ----------------------------------------------------------------- retrain

def test_retrain_noop_without_new_labels(tmp_path):
    svc, _ = build(tmp_path)
    v = svc.version
    assert svc.trigger_retrain() == v
    batch = svc.next_batch()
    sid = batch[0]["sentence_id"]
    srl, er = o_tags(svc, sid)
    svc.submit_labels(sid, srl, er, "a")
    svc.release()
    assert svc.trigger_retrain() == v + 1
    assert len(svc.history) == v + 1      # one point per published snapshot


def test_new_batch_ranked_by_new_snapshot(tmp_path):
    svc, _ = build(tmp_path)
    batch = svc.next_batch()
    for t in batch:
        srl, er = o_tags(svc, t["sentence_id"])
        svc.submit_labels(t["sentence_id"], srl, er, "a")
    v2 = svc.trigger_retrain()
    fresh = svc.next_batch()
    assert all(t["pre"]["snapshot_version"] == v2 for t in fresh)


def test_auto_retrain_cadence(tmp_path):
    svc, _ = build(tmp_path)
    svc.config = ServiceConfig(batch_size=4,
                               train=TrainConfig(max_epochs=2, patience=1,
                                                 batch_size=16),
                               auto_retrain_every=2, rng_seed=0)
    v0 = svc.version
    batch = svc.next_batch()
    ids = [t["sentence_id"] for t in batch]
    for i, sid in enumerate(ids):
        srl, er = o_tags(svc, sid)
        svc.submit_labels(sid, srl, er, "a")
    # 4 submits with cadence 2 -> two automatic retrains
    assert svc.version == v0 + 2


def test_simulated_oracle_submits_gold(tmp_path):
    svc, _ = build(tmp_path)
    batch = svc.next_batch()
    n = svc.auto_submit_gold(batch)
    assert n == len(batch)
    assert not svc.inflight
    for t in batch:
        sent = svc._labeled_sentence(t["sentence_id"])
        gold = svc.corpus[t["sentence_id"]]
        assert sent.srl_tags == gold.srl_tags


# -------------------------------------------------------------- HTTP layer

def test_http_surface(tmp_path):
    from starlette.testclient import TestClient

    svc, _ = build(tmp_path)
    client = TestClient(create_app(svc))

    m = client.get("/api/metrics").json()
    assert m["model_available"] and m["snapshot_version"] == 1
    assert "dev" in m and 0.0 <= m["dev"]["f1"] <= 1.0

    batch = client.get("/api/batch?size=3").json()
    assert len(batch) == 3
    sid = batch[0]["sentence_id"]

    r = client.get(f"/api/sentence/{sid}")
    assert r.status_code == 200 and r.json()["status"] == "assigned"
    assert client.get("/api/sentence/zzz").status_code == 404

    n = len(batch[0]["tokens"])
    ok = {"sentence_id": sid, "srl_tags": ["O"] * n, "er_tags": ["O"] * n,
          "annotator": "ui"}
    assert client.post("/api/labels", json=ok).status_code == 200
    assert client.post("/api/labels", json=ok).status_code == 409
    bad = dict(ok, sentence_id=batch[1]["sentence_id"],
               srl_tags=["I-A"] + ["O"] * (len(batch[1]["tokens"]) - 1))
    if len(batch[1]["tokens"]) >= 1:
        assert client.post("/api/labels", json=bad).status_code == 400

    assert client.get("/api/batch?strategy=bogus").status_code == 400
    r = client.post("/api/retrain")
    assert r.status_code == 200
    assert r.json()["snapshot_version"] == 2
