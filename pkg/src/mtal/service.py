"""Annotation backend: the live counterpart of the simulated oracle.

State model: train-split sentence ids are partitioned into labeled,
unlabeled pool, and in-flight (leased to an annotator, not yet submitted).
One batch is in flight at a time; re-fetching returns the same tasks until
they are submitted or released, so a crashed annotator UI can simply ask
again. Submitted labels are appended to ``labels.jsonl`` and fsynced before
the request is acknowledged; the model snapshot is republished atomically
(checkpoint write + pointer rename), so a crash between training and
publication leaves the previous snapshot in service.

The HTTP layer is a thin FastAPI wrapper (``create_app``); all behavior
lives in ``AnnotationService`` so tests can drive it directly.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field

import numpy as np
import pydantic

from . import query
from .corpus import (Corpus, InvalidBioError, Sentence, UnknownLabelError,
                     repair_bio, validate_bio)
from .checkpoint import load_model, save_model
from .evaluation import evaluate_model
from .nn import AdaDelta
from .rundir import RunDir
from .train import TrainConfig, run_epoch, train


class ServiceError(Exception):
    def __init__(self, status: int, reason: str):
        super().__init__(reason)
        self.status = status
        self.reason = reason


@dataclass(frozen=True)
class ServiceConfig:
    strategy: str = query.RANK_COMBINATION
    batch_size: int = 10
    train: TrainConfig = field(default_factory=TrainConfig)
    retrain_from_scratch: bool = False
    auto_retrain_every: int = 0     # 0 = explicit trigger only
    snapshot_every: int = 20        # pool-state snapshot cadence (submits)
    rng_seed: int = 0


class AnnotationService:
    """Single-writer annotation state machine over one run directory."""

    def __init__(self, corpus: Corpus, train_ids, dev_ids, test_ids,
                 seed_labeled_ids, model, model_factory,
                 config: ServiceConfig, run: RunDir):
        self.corpus = corpus
        self.config = config
        self.run = run
        self.dev = [corpus[i] for i in dev_ids]
        self.test = [corpus[i] for i in test_ids]
        self.labeled: list[str] = list(seed_labeled_ids)
        labeled_set = set(self.labeled)
        self.pool: list[str] = [i for i in train_ids if i not in labeled_set]
        self.inflight: dict[str, dict] = {}
        self.submitted_tags: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {}
        self.model = model
        self.model_factory = model_factory
        self.optimizer = None
        self.round_counter = 0
        self.history: list[dict] = []
        self.labels_since_snapshot = 0
        self._rng = np.random.default_rng(config.rng_seed)
        self._lock = threading.RLock()
        self._submits_since_state_write = 0
        os.makedirs(run.file("checkpoints"), exist_ok=True)
        # Version bookkeeping must survive restarts: when a snapshot pointer
        # already exists in this run directory, resume its numbering instead
        # of restarting at 1 (which would silently overwrite old checkpoints).
        published = _published_version(run)
        if model is None:
            self.version = published
        elif published > 0:
            self.version = published
        else:
            self.version = 1
            self._publish(model)
        state_path = run.file("pool_state.json")
        if os.path.exists(state_path):
            with open(state_path) as fh:
                state = json.load(fh)
            self.round_counter = int(state.get("round_counter", 0))
            self.history = list(state.get("history", []))

    # ------------------------------------------------------------ plumbing

    def _labeled_sentence(self, sid: str) -> Sentence:
        s = self.corpus[sid]
        if sid in self.submitted_tags:
            srl, er = self.submitted_tags[sid]
            return Sentence(id=s.id, tokens=s.tokens,
                            predicate_index=s.predicate_index,
                            srl_tags=srl, er_tags=er)
        return s

    def _publish(self, model) -> None:
        path = self.run.file(f"checkpoints/model-v{self.version:04d}.ckpt")
        save_model(model, path)
        self.run.write_text("current_model.txt",
                            os.path.basename(path) + "\n")

    def _write_pool_state(self) -> None:
        state = {
            "version": self.version,
            "round_counter": self.round_counter,
            "labeled": self.labeled,
            "pool": self.pool,
            "history": self.history,
        }
        self.run.write_text("pool_state.json",
                            json.dumps(state, sort_keys=True, indent=2) + "\n")

    def _pre_annotation(self, sentence: Sentence) -> dict:
        # repaired like predict(), so a suggestion resubmitted untouched
        # always passes this service's own validation
        decode = self.model.decode_srl(sentence)
        srl = repair_bio(self.model.srl_tag_set.decode(decode.tags))
        er_lp = self.model.er_log_probs(sentence)
        er_idx = np.argmax(er_lp, axis=1)
        er = repair_bio(self.model.er_tag_set.decode(er_idx))
        conf = np.exp(np.max(er_lp, axis=1))
        return {
            "srl_tags": list(srl),
            "srl_path_prob": float(np.exp(decode.log_prob)),
            "er_tags": list(er),
            "er_confidence": [float(c) for c in conf],
            "snapshot_version": self.version,
        }

    # ---------------------------------------------------------- operations

    def next_batch(self, strategy: str | None = None,
                   size: int | None = None) -> list[dict]:
        with self._lock:
            strategy = strategy or self.config.strategy
            if strategy not in query.STRATEGIES:
                raise ServiceError(400, f"unknown strategy {strategy!r}")
            size = self.config.batch_size if size is None else size
            if size < 1:
                raise ServiceError(400, "size must be >= 1")
            if self.inflight:
                return [t for t in self.inflight.values()]
            if self.model is None:
                raise ServiceError(409, "no model snapshot; trigger a retrain first")
            if not self.pool:
                raise ServiceError(409, "pool exhausted")
            pool_sents = [self.corpus[i] for i in self.pool]
            scores = query.score_pool(self.model, pool_sents)
            picked = query.select(scores, strategy, size, self._rng)
            for sid in picked:
                s = self.corpus[sid]
                self.inflight[sid] = {
                    "sentence_id": sid,
                    "tokens": list(s.tokens),
                    "predicate_index": s.predicate_index,
                    "pre": self._pre_annotation(s),
                    "status": "assigned",
                }
            picked_set = set(picked)
            self.pool = [i for i in self.pool if i not in picked_set]
            return [self.inflight[sid] for sid in picked]

    def release(self) -> int:
        """Return all in-flight sentences to the pool (manual lease release)."""
        with self._lock:
            n = len(self.inflight)
            self.pool.extend(self.inflight)
            self.inflight.clear()
            return n

    def submit_labels(self, sentence_id: str, srl_tags, er_tags,
                      annotator: str) -> dict:
        with self._lock:
            if sentence_id not in self.corpus:
                raise ServiceError(404, f"unknown sentence {sentence_id!r}")
            task = self.inflight.get(sentence_id)
            if task is None:
                raise ServiceError(409, f"sentence {sentence_id!r} is not in flight")
            s = self.corpus[sentence_id]
            srl = tuple(srl_tags)
            er = tuple(er_tags)
            if len(srl) != len(s) or len(er) != len(s):
                raise ServiceError(400, f"tag length must be {len(s)}")
            try:
                validate_bio(srl, self.corpus.srl_tag_set)
                validate_bio(er, self.corpus.er_tag_set)
            except (InvalidBioError, UnknownLabelError) as exc:
                raise ServiceError(400, str(exc)) from None

            record = {
                "sentence_id": sentence_id,
                "srl_tags": list(srl),
                "er_tags": list(er),
                "annotator": annotator,
                "ts": time.time(),
                "pre": task["pre"],
            }
            self.run.append_line("labels.jsonl",
                                 json.dumps(record, sort_keys=True), fsync=True)
            del self.inflight[sentence_id]
            self.submitted_tags[sentence_id] = (srl, er)
            self.labeled.append(sentence_id)
            self.labels_since_snapshot += 1
            self._submits_since_state_write += 1
            if self._submits_since_state_write >= self.config.snapshot_every:
                self._write_pool_state()
                self._submits_since_state_write = 0
            if (self.config.auto_retrain_every
                    and self.labels_since_snapshot >= self.config.auto_retrain_every):
                self.trigger_retrain()
            return {"status": "accepted", "labeled_size": len(self.labeled)}

    def trigger_retrain(self) -> int:
        """Train on the current labeled set and publish a new snapshot.

        Serialized: a concurrent second trigger waits for the first (queued,
        never concurrent). No new labels since the last snapshot -> no-op.
        """
        with self._lock:
            if self.labels_since_snapshot == 0 and self.model is not None:
                return self.version
            labeled_sents = [self._labeled_sentence(i) for i in self.labeled]
            if self.config.retrain_from_scratch or self.model is None:
                model = self.model_factory()
                result = train(model, labeled_sents, self.dev, self.config.train)
                model = result.model
                self.optimizer = result.optimizer
            else:
                model = self.model
                if self.optimizer is None:
                    self.optimizer = AdaDelta(model.params,
                                              rho=self.config.train.rho,
                                              eps=self.config.train.eps)
                run_epoch(model, labeled_sents, self.optimizer, self._rng,
                          self.config.train.batch_size)
            self.version += 1
            self.round_counter += 1
            self.model = model
            self._publish(model)
            self.labels_since_snapshot = 0
            point = {
                "version": self.version,
                "labeled_size": len(self.labeled),
                "dev_f1": evaluate_model(model, self.dev, "srl").overall.f1
                if self.dev else None,
                "test_f1": evaluate_model(model, self.test, "srl").overall.f1
                if self.test else None,
            }
            self.history.append(point)
            self._write_pool_state()
            return self.version

    def metrics(self) -> dict:
        with self._lock:
            out = {
                "labeled_size": len(self.labeled),
                "pool_size": len(self.pool),
                "inflight_size": len(self.inflight),
                "snapshot_version": self.version,
                "model_available": self.model is not None,
                "history": list(self.history),
            }
            if self.model is not None and self.dev:
                rep = evaluate_model(self.model, self.dev, "srl")
                out["dev"] = {"precision": rep.overall.precision,
                              "recall": rep.overall.recall,
                              "f1": rep.overall.f1}
            if self.model is not None and self.test:
                rep = evaluate_model(self.model, self.test, "srl")
                out["test"] = {"precision": rep.overall.precision,
                               "recall": rep.overall.recall,
                               "f1": rep.overall.f1}
            return out

    def sentence(self, sentence_id: str) -> dict:
        with self._lock:
            if sentence_id not in self.corpus:
                raise ServiceError(404, f"unknown sentence {sentence_id!r}")
            s = self.corpus[sentence_id]
            if sentence_id in self.inflight:
                status = "assigned"
            elif sentence_id in set(self.labeled):
                status = "submitted"
            else:
                status = "pending"
            out = {
                "sentence_id": sentence_id,
                "tokens": list(s.tokens),
                "predicate_index": s.predicate_index,
                "status": status,
            }
            if status == "submitted":
                labeled = self._labeled_sentence(sentence_id)
                out["srl_tags"] = list(labeled.srl_tags or ())
                out["er_tags"] = list(labeled.er_tags or ())
            if sentence_id in self.inflight:
                out["pre"] = self.inflight[sentence_id]["pre"]
            return out

    def auto_submit_gold(self, tasks: list[dict], annotator: str = "oracle") -> int:
        """Simulated-oracle mode: submit the hidden gold labels for a batch."""
        n = 0
        for task in list(tasks):
            s = self.corpus[task["sentence_id"]]
            if s.srl_tags is None or s.er_tags is None:
                raise ServiceError(400, f"no gold labels for {s.id!r}")
            self.submit_labels(s.id, s.srl_tags, s.er_tags, annotator)
            n += 1
        return n


def restore_labels(service: AnnotationService) -> int:
    """Replay labels.jsonl into a freshly constructed service (restart path)."""
    path = service.run.file("labels.jsonl")
    if not os.path.exists(path):
        return 0
    n = 0
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            sid = rec["sentence_id"]
            if sid in service.submitted_tags:
                continue
            service.submitted_tags[sid] = (tuple(rec["srl_tags"]),
                                           tuple(rec["er_tags"]))
            if sid in service.pool:
                service.pool.remove(sid)
            if sid not in set(service.labeled):
                service.labeled.append(sid)
            n += 1
    return n


def latest_checkpoint_path(run: RunDir) -> str | None:
    pointer = run.file("current_model.txt")
    if not os.path.exists(pointer):
        return None
    with open(pointer) as fh:
        name = fh.read().strip()
    path = run.file(os.path.join("checkpoints", name))
    return path if os.path.exists(path) else None


def _published_version(run: RunDir) -> int:
    """Snapshot number recorded by the pointer file, 0 when none exists."""
    path = latest_checkpoint_path(run)
    if path is None:
        return 0
    m = re.match(r"model-v(\d+)\.ckpt$", os.path.basename(path))
    return int(m.group(1)) if m else 0


class LabelPayload(pydantic.BaseModel):
    sentence_id: str
    srl_tags: list[str]
    er_tags: list[str]
    annotator: str = "anonymous"


def create_app(service: AnnotationService, static_dir: str | None = None):
    """FastAPI wrapper exposing the fixed HTTP+JSON surface."""
    from fastapi import FastAPI, Request
    from fastapi.responses import FileResponse, JSONResponse

    app = FastAPI(title="annotation service")

    @app.exception_handler(ServiceError)
    async def _service_error(_req: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status,
                            content={"detail": exc.reason})

    @app.get("/api/batch")
    def get_batch(strategy: str | None = None, size: int | None = None):
        return service.next_batch(strategy=strategy, size=size)

    @app.post("/api/labels")
    def post_labels(payload: LabelPayload):
        return service.submit_labels(payload.sentence_id, payload.srl_tags,
                                     payload.er_tags, payload.annotator)

    @app.post("/api/retrain")
    def post_retrain():
        return {"snapshot_version": service.trigger_retrain()}

    @app.get("/api/metrics")
    def get_metrics():
        return service.metrics()

    @app.get("/api/sentence/{sentence_id}")
    def get_sentence(sentence_id: str):
        return service.sentence(sentence_id)

    if static_dir and os.path.isdir(static_dir):
        @app.get("/")
        def index():
            return FileResponse(os.path.join(static_dir, "index.html"))

        @app.get("/{asset_path:path}")
        def assets(asset_path: str):
            full = os.path.realpath(os.path.join(static_dir, asset_path))
            if os.path.isfile(full) and full.startswith(
                    os.path.realpath(static_dir) + os.sep):
                return FileResponse(full)
            raise ServiceError(404, "not found")

    return app
