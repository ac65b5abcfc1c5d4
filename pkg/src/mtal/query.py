"""Pool scoring and instance selection for the labeling loop.

Two informativeness signals, one per task head:

* token entropy (TE) over the entity head's per-token softmax, summed over
  the sentence (unnormalized, so longer sentences can score higher);
* Viterbi confidence (VE) from the role head: log-probability of the best
  CRF path, lower = less confident.

TE selects the highest totals, VE the lowest path log-probs. Rank
combination turns both into ranks (1 = most informative) and takes the
smallest rank sums. All ties break toward the ascending sentence id, so
every strategy is a deterministic function of (scores, rng state).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import crf, nn

RANDOM = "random"
TE = "te"
VE = "ve"
RANK_COMBINATION = "rank"
RANDOM_TASK = "random-task"
STRATEGIES = (RANDOM, TE, VE, RANK_COMBINATION, RANDOM_TASK)


class UnknownStrategyError(ValueError):
    pass


@dataclass(frozen=True)
class QueryScore:
    sentence_id: str
    te_total: float     # sum over tokens of ER-head entropy, in nats
    ve_log_prob: float  # log p(best SRL path | x), <= 0


@dataclass(frozen=True)
class RankedEntry:
    sentence_id: str
    te_rank: int
    ve_rank: int

    @property
    def combined_rank(self) -> int:
        return self.te_rank + self.ve_rank


def token_entropy(log_probs) -> float:
    """Entropy in nats of one token's log-distribution; 0*ln 0 = 0."""
    log_probs = np.asarray(log_probs, dtype=np.float64)
    p = np.exp(log_probs)
    total = float(p.sum())
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"log-probs exponentiate to {total}, not 1")
    finite = p > 0
    return float(-(p[finite] * log_probs[finite]).sum())


def score_pool(model, pool, chunk_size: int = 64,
               normalize_te_by_length: bool = False) -> list[QueryScore]:
    """TE and VE scores for every pool sentence from one encoder pass each.

    Pure function of (model parameters, pool); an empty pool gives [].
    The default TE is the plain sum, which biases selection toward longer
    sentences; `normalize_te_by_length` divides it by the token count for
    a per-token average instead.
    """
    pool = list(pool)
    scores: list[QueryScore] = []
    if not pool:
        return scores
    crf_params = model.crf_params()
    for lo in range(0, len(pool), chunk_size):
        batch = pool[lo:lo + chunk_size]
        h, _, _ = model.encode_batch(batch)
        srl_out, _ = nn.dense_forward(model.params, "srl", h)
        if model.config.multi_task:
            er_out, _ = nn.dense_forward(model.params, "er", h)
            m = np.max(er_out, axis=2, keepdims=True)
            log_probs = er_out - (m + np.log(
                np.sum(np.exp(er_out - m), axis=2, keepdims=True)))
        for b, s in enumerate(batch):
            t_len = len(s)
            ve = crf.viterbi(srl_out[b, :t_len], crf_params).log_prob
            te = 0.0
            if model.config.multi_task:
                lp = log_probs[b, :t_len]
                te = float(-(np.exp(lp) * lp).sum())
                if normalize_te_by_length:
                    te /= t_len
            scores.append(QueryScore(sentence_id=s.id, te_total=te,
                                     ve_log_prob=ve))
    return scores


def rank(values, ids, descending: bool) -> list[int]:
    """1-based ranks, 1 = most informative; ties resolved by ascending id."""
    if len(values) != len(ids):
        raise ValueError("values and ids must be parallel")
    if not values:
        raise ValueError("cannot rank an empty list")
    key = (lambda i: (-values[i], ids[i])) if descending else \
        (lambda i: (values[i], ids[i]))
    order = sorted(range(len(values)), key=key)
    ranks = [0] * len(values)
    for pos, i in enumerate(order, start=1):
        ranks[i] = pos
    return ranks


def rank_pool(scores: list[QueryScore]) -> list[RankedEntry]:
    ids = [s.sentence_id for s in scores]
    te_ranks = rank([s.te_total for s in scores], ids, descending=True)
    ve_ranks = rank([s.ve_log_prob for s in scores], ids, descending=False)
    return [RankedEntry(sentence_id=i, te_rank=t, ve_rank=v)
            for i, t, v in zip(ids, te_ranks, ve_ranks)]


def draw_task(rng: np.random.Generator) -> str:
    """Fair multinomial draw of which task drives this round's query."""
    return TE if rng.integers(0, 2) == 0 else VE


def select(scores: list[QueryScore], strategy: str, batch_size: int,
           rng: np.random.Generator) -> list[str]:
    """Pick min(batch_size, |pool|) sentence ids under `strategy`."""
    if strategy not in STRATEGIES:
        raise UnknownStrategyError(f"unknown strategy {strategy!r}")
    if batch_size < 0:
        raise ValueError("batch size must be >= 0")
    if batch_size == 0:
        return []
    if not scores:
        raise ValueError("cannot select from an empty pool")
    b = min(batch_size, len(scores))

    if strategy == RANDOM:
        ids = sorted(s.sentence_id for s in scores)
        picked = rng.choice(len(ids), size=b, replace=False)
        return [ids[i] for i in picked]
    if strategy == RANDOM_TASK:
        return select(scores, draw_task(rng), batch_size, rng)
    if strategy == TE:
        ordered = sorted(scores, key=lambda s: (-s.te_total, s.sentence_id))
    elif strategy == VE:
        ordered = sorted(scores, key=lambda s: (s.ve_log_prob, s.sentence_id))
    else:  # RANK_COMBINATION
        entries = rank_pool(scores)
        ordered = sorted(entries,
                         key=lambda e: (e.combined_rank, e.sentence_id))
    return [e.sentence_id for e in ordered[:b]]


def scores_csv(scores: list[QueryScore]) -> str:
    """Audit export: per-sentence raw scores and all three rank columns."""
    entries = {e.sentence_id: e for e in rank_pool(scores)} if scores else {}
    lines = ["sentence_id,te_total,ve_log_prob,te_rank,ve_rank,combined_rank"]
    for s in scores:
        e = entries[s.sentence_id]
        lines.append(f"{s.sentence_id},{s.te_total:.10g},{s.ve_log_prob:.10g},"
                     f"{e.te_rank},{e.ve_rank},{e.combined_rank}")
    return "\n".join(lines) + "\n"
