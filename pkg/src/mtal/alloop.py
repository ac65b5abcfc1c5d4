"""Pool-based active-learning protocol with a simulated oracle.

One protocol run interleaves training and querying: each round trains one
epoch on the current labeled set (a single continuing optimizer run unless
retrain-from-scratch is requested), snapshots the model, scores the
unlabeled pool, selects a batch, and reveals BOTH gold tag sequences of the
selected sentences. Early stopping on dev role F1 ends both the training
and the querying. Everything is deterministic given the config seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import query
from .corpus import Corpus, Splits
from .evaluation import SpanMatchReport, evaluate_model
from .nn import AdaDelta
from .train import TrainConfig, TrainResult, run_epoch, train

# scenario name -> (seed-labeled fraction of train, per-round query size B)
SCENARIOS: dict[str, tuple[float, int]] = {
    "50:50": (0.50, 100),
    "85:15": (0.85, 10),
}


@dataclass(frozen=True)
class ALConfig:
    scenario: str = "custom"          # "50:50" | "85:15" | "custom"
    strategy: str = query.RANK_COMBINATION
    seed_fraction: float | None = None  # required when scenario == "custom"
    batch_size: int | None = None       # per-round B; scenario default if None
    rounds: int = 10
    train: TrainConfig = field(default_factory=TrainConfig)
    rng_seed: int = 0
    patience: int = 3                  # rounds without dev improvement
    early_stopping: bool = True
    retrain_from_scratch: bool = False
    reset_optimizer: bool = False      # fresh AdaDelta accumulators per round
    log_test: bool = True

    def __post_init__(self):
        if self.scenario not in SCENARIOS and self.scenario != "custom":
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.scenario == "custom" and self.seed_fraction is None:
            raise ValueError("custom scenario needs an explicit seed_fraction")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.resolved_batch_size < 1:
            raise ValueError("query batch size must be >= 1")
        if self.strategy not in query.STRATEGIES:
            raise query.UnknownStrategyError(f"unknown strategy {self.strategy!r}")

    @property
    def resolved_seed_fraction(self) -> float:
        if self.scenario in SCENARIOS:
            return SCENARIOS[self.scenario][0]
        return self.seed_fraction

    @property
    def resolved_batch_size(self) -> int:
        if self.batch_size is not None:
            return self.batch_size
        if self.scenario in SCENARIOS:
            return SCENARIOS[self.scenario][1]
        raise ValueError("custom scenario needs an explicit batch_size")


def protocol_budget(train_size: int, seed_size: int, batch_size: int,
                    rounds: int) -> list[int]:
    """Labeled-set size after each round (index 0 = the seed size)."""
    sizes = [seed_size]
    for _ in range(rounds):
        sizes.append(min(sizes[-1] + batch_size, train_size))
    return sizes


@dataclass
class RoundLog:
    round: int
    labeled_size: int              # after this round's reveal
    queried_ids: tuple[str, ...]
    srl_loss: float
    er_loss: float
    dev_p: float
    dev_r: float
    dev_f1: float
    dev_er_f1: float
    test_p: float | None
    test_r: float | None
    test_f1: float | None
    task: str | None               # drawn task under random-task
    pool_exhausted: bool
    wall_clock: float              # seconds; excluded from deterministic CSVs


@dataclass
class ALResult:
    model: object
    rounds: list[RoundLog]
    labeled_ids: tuple[str, ...]
    best_round: int
    stopped_early: bool
    final_dev: SpanMatchReport
    final_test: SpanMatchReport | None


def run_al(corpus: Corpus, splits: Splits, model_factory, config: ALConfig) -> ALResult:
    if not splits.seed_labeled:
        raise ValueError("seed labeled set is empty")
    b = config.resolved_batch_size
    rng = np.random.default_rng(config.rng_seed)
    labeled = list(splits.seed_labeled)
    pool = list(splits.pool_unlabeled)
    dev = [corpus[i] for i in splits.dev]
    test = [corpus[i] for i in splits.test] if config.log_test else []

    model = model_factory()
    optimizer = AdaDelta(model.params, rho=config.train.rho, eps=config.train.eps)
    logs: list[RoundLog] = []
    best_f1 = -np.inf
    best_round = 0
    best_params = model.clone_params()
    since_improve = 0
    stopped_early = False

    for r in range(1, config.rounds + 1):
        t0 = time.perf_counter()
        labeled_sents = [corpus[i] for i in labeled]
        if config.retrain_from_scratch:
            model = model_factory()
            optimizer = AdaDelta(model.params, rho=config.train.rho,
                                 eps=config.train.eps)
            res: TrainResult = train(model, labeled_sents, dev, config.train,
                                     optimizer=optimizer)
            srl_loss = res.log[-1].srl_loss
            er_loss = res.log[-1].er_loss
        else:
            if config.reset_optimizer:
                optimizer = AdaDelta(model.params, rho=config.train.rho,
                                     eps=config.train.eps)
            srl_loss, er_loss = run_epoch(model, labeled_sents, optimizer, rng,
                                          config.train.batch_size)

        dev_rep = evaluate_model(model, dev, task="srl")
        dev_er = (evaluate_model(model, dev, task="er").overall.f1
                  if model.config.multi_task else 0.0)
        test_rep = evaluate_model(model, test, task="srl") if test else None

        task = None
        queried: list[str] = []
        exhausted = not pool
        if pool:
            pool_sents = [corpus[i] for i in pool]
            scores = query.score_pool(model, pool_sents)
            strategy = config.strategy
            if strategy == query.RANDOM_TASK:
                task = query.draw_task(rng)
                strategy = task
            queried = query.select(scores, strategy, b, rng)
            picked = set(queried)
            labeled.extend(queried)
            pool = [i for i in pool if i not in picked]

        logs.append(RoundLog(
            round=r, labeled_size=len(labeled), queried_ids=tuple(queried),
            srl_loss=srl_loss, er_loss=er_loss,
            dev_p=dev_rep.overall.precision, dev_r=dev_rep.overall.recall,
            dev_f1=dev_rep.overall.f1, dev_er_f1=dev_er,
            test_p=test_rep.overall.precision if test_rep else None,
            test_r=test_rep.overall.recall if test_rep else None,
            test_f1=test_rep.overall.f1 if test_rep else None,
            task=task, pool_exhausted=exhausted,
            wall_clock=time.perf_counter() - t0,
        ))

        if dev_rep.overall.f1 > best_f1:
            best_f1 = dev_rep.overall.f1
            best_round = r
            best_params = model.clone_params()
            since_improve = 0
        else:
            since_improve += 1
            if config.early_stopping and since_improve >= config.patience:
                stopped_early = True
                break

    model.load_params(best_params)
    final_dev = evaluate_model(model, dev, task="srl")
    final_test = evaluate_model(model, test, task="srl") if test else None
    return ALResult(model=model, rounds=logs, labeled_ids=tuple(labeled),
                    best_round=best_round, stopped_early=stopped_early,
                    final_dev=final_dev, final_test=final_test)


def run_passive(corpus: Corpus, splits: Splits, model_factory,
                train_config: TrainConfig) -> TrainResult:
    """Supervised training on the whole train split (the budget-matched
    upper reference for the labeling runs)."""
    model = model_factory()
    train_sents = [corpus[i] for i in splits.train]
    dev = [corpus[i] for i in splits.dev]
    return train(model, train_sents, dev, train_config)


def _csv_cell(value, fmt="{:.6f}") -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return fmt.format(value)
    return str(value)


ROUNDS_CSV_HEADER = ("round,labeled_size,queried,task,srl_loss,er_loss,"
                     "dev_p,dev_r,dev_f1,dev_er_f1,test_p,test_r,test_f1,"
                     "pool_exhausted")


def rounds_csv(logs: list[RoundLog]) -> str:
    """Deterministic per-round log (wall-clock deliberately not included)."""
    lines = [ROUNDS_CSV_HEADER]
    for lg in logs:
        cells = [str(lg.round), str(lg.labeled_size), str(len(lg.queried_ids)),
                 lg.task or "NA"]
        cells += [_csv_cell(v) for v in (
            lg.srl_loss, lg.er_loss, lg.dev_p, lg.dev_r, lg.dev_f1,
            lg.dev_er_f1, lg.test_p, lg.test_r, lg.test_f1)]
        cells.append(_csv_cell(lg.pool_exhausted))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def timing_csv(logs: list[RoundLog]) -> str:
    lines = ["round,wall_clock_s"]
    for lg in logs:
        lines.append(f"{lg.round},{lg.wall_clock:.3f}")
    return "\n".join(lines) + "\n"


def emit_learning_curve(named_logs: dict[str, list[RoundLog]]) -> str:
    """Aligned labeled-size/dev-F1 curves, two columns per run, NA-padded.

    The labeled-size column is the conventional x-axis when runs use
    different per-round budgets, so it is kept next to each F1 column.
    """
    names = sorted(named_logs)
    depth = max((len(v) for v in named_logs.values()), default=0)
    lines = ["round," + ",".join(f"{n}_labeled,{n}_dev_f1" for n in names)]
    for r in range(depth):
        cells = [str(r + 1)]
        for n in names:
            logs = named_logs[n]
            if r < len(logs):
                cells.append(str(logs[r].labeled_size))
                cells.append(_csv_cell(logs[r].dev_f1))
            else:
                cells.extend(["NA", "NA"])
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
