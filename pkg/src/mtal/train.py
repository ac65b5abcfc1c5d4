"""Joint-loss training loop: AdaDelta, dev-F1 early stopping, epoch logs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluation import evaluate_model
from .nn import AdaDelta
from .tagger import TaggerModel


@dataclass(frozen=True)
class TrainConfig:
    rho: float = 0.95
    eps: float = 1e-6
    max_epochs: int = 10
    patience: int = 3
    batch_size: int = 32
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("max_epochs and batch_size must be positive")
        if not 0 < self.patience < self.max_epochs:
            raise ValueError("patience must lie in (0, max_epochs)")


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    srl_loss: float
    er_loss: float
    dev_srl_f1: float
    dev_er_f1: float


@dataclass
class TrainResult:
    model: TaggerModel
    log: list[EpochLog]
    best_epoch: int
    best_dev_srl_f1: float
    optimizer: AdaDelta
    stopped_early: bool


def run_epoch(model: TaggerModel, sentences, optimizer: AdaDelta,
              rng: np.random.Generator, batch_size: int) -> tuple[float, float]:
    """One shuffled pass visible to the labeling loop; returns the epoch's
    mean per-sentence (SRL loss, ER loss)."""
    sentences = list(sentences)
    if not sentences:
        raise ValueError("training set is empty")
    order = rng.permutation(len(sentences))
    sum_srl = sum_er = 0.0
    for lo in range(0, len(order), batch_size):
        batch = [sentences[i] for i in order[lo:lo + batch_size]]
        loss, grads = model.batch_loss_and_grads(batch, train_rng=rng)
        optimizer.update(model.params, grads)
        sum_srl += loss.srl * len(batch)
        sum_er += loss.er * len(batch)
    return sum_srl / len(sentences), sum_er / len(sentences)


def train(model: TaggerModel, train_sentences, dev_sentences,
          config: TrainConfig, optimizer: AdaDelta | None = None) -> TrainResult:
    """Train up to max_epochs, stop after `patience` consecutive epochs
    without a dev SRL F1 improvement, restore the best epoch's parameters.

    Passing `optimizer` carries AdaDelta accumulators across calls (the
    between-rounds behavior of the labeling loop); by default a fresh
    optimizer is created. Deterministic given config.rng_seed.
    """
    train_sentences = list(train_sentences)
    if not train_sentences:
        raise ValueError("training set is empty")
    if optimizer is None:
        optimizer = AdaDelta(model.params, rho=config.rho, eps=config.eps)
    else:
        optimizer.ensure(model.params)

    rng = np.random.default_rng(config.rng_seed)
    has_dev = len(list(dev_sentences)) > 0
    log: list[EpochLog] = []
    best_f1 = -np.inf
    best_epoch = 0
    best_params = model.clone_params()
    since_improve = 0
    stopped_early = False

    for epoch in range(1, config.max_epochs + 1):
        srl_loss, er_loss = run_epoch(model, train_sentences, optimizer, rng,
                                      config.batch_size)

        if has_dev:
            dev_srl = evaluate_model(model, dev_sentences, task="srl").overall.f1
            dev_er = (evaluate_model(model, dev_sentences, task="er").overall.f1
                      if model.config.multi_task else 0.0)
        else:
            dev_srl = dev_er = float("nan")
        log.append(EpochLog(epoch=epoch, train_loss=srl_loss + er_loss,
                            srl_loss=srl_loss, er_loss=er_loss,
                            dev_srl_f1=dev_srl, dev_er_f1=dev_er))

        current = dev_srl if has_dev else -srl_loss - er_loss
        if current > best_f1:
            best_f1 = current
            best_epoch = epoch
            best_params = model.clone_params()
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= config.patience:
                stopped_early = True
                break

    model.load_params(best_params)
    return TrainResult(model=model, log=log, best_epoch=best_epoch,
                       best_dev_srl_f1=(best_f1 if has_dev else float("nan")),
                       optimizer=optimizer, stopped_early=stopped_early)
