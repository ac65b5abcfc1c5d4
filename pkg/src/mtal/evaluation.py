"""Span-level scoring: exact-match P/R/F1, confusion matrix, error taxonomy.

Scores are micro-averaged over the whole evaluation set (pooled counts, not
per-sentence averages). A predicted span counts as correct only when label,
start and end all match a gold span exactly. The error taxonomy assigns
every gold span to exactly one of {exact, role-confusion, boundary,
false-negative} with that precedence; role confusion requires identical
boundaries, boundary errors require the same label and at least one shared
token.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .corpus import TagSet

NONE_LABEL = "NONE"


class Span(NamedTuple):
    label: str
    start: int
    end: int  # inclusive


@dataclass(frozen=True)
class Prf:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class SpanMatchReport:
    overall: Prf
    per_label: dict[str, Prf]
    labels: tuple[str, ...]                    # fixed ordering for the matrix
    confusion: np.ndarray                      # (labels+NONE) x (labels+NONE)
    taxonomy: dict[str, int] = field(default_factory=dict)

    def confusion_csv(self, normalize: bool = False) -> str:
        names = (*self.labels, NONE_LABEL)
        mat = self.confusion.astype(float)
        if normalize:
            sums = mat.sum(axis=1, keepdims=True)
            mat = np.divide(mat, sums, out=np.zeros_like(mat), where=sums > 0) * 100.0
        lines = ["gold\\pred," + ",".join(names)]
        for i, name in enumerate(names):
            cells = (f"{v:.1f}" if normalize else f"{int(v)}" for v in mat[i])
            lines.append(name + "," + ",".join(cells))
        return "\n".join(lines) + "\n"

    def to_kv(self) -> dict[str, float]:
        out = {
            "precision": self.overall.precision,
            "recall": self.overall.recall,
            "f1": self.overall.f1,
            "tp": self.overall.tp, "fp": self.overall.fp, "fn": self.overall.fn,
        }
        for label, prf in sorted(self.per_label.items()):
            out[f"{label}.precision"] = prf.precision
            out[f"{label}.recall"] = prf.recall
            out[f"{label}.f1"] = prf.f1
        for k, v in sorted(self.taxonomy.items()):
            out[f"errors.{k}"] = v
        return out

    def format_table(self) -> str:
        rows = [f"{'label':14s} {'P':>7s} {'R':>7s} {'F1':>7s}"]
        for label in self.labels:
            prf = self.per_label.get(label, Prf(0, 0, 0))
            rows.append(f"{label:14s} {prf.precision:7.4f} {prf.recall:7.4f} "
                        f"{prf.f1:7.4f}")
        o = self.overall
        rows.append(f"{'OVERALL':14s} {o.precision:7.4f} {o.recall:7.4f} {o.f1:7.4f}")
        return "\n".join(rows) + "\n"


def extract_spans(tags: Sequence[str], tag_set: TagSet | None = None) -> tuple[Span, ...]:
    """Maximal B-x (I-x)* runs as (label, start, end-inclusive) spans.

    Expects repaired BIO; an orphan I-x is treated as if repaired to B-x.
    With a tag_set given, unknown tags raise.
    """
    spans: list[Span] = []
    start = None
    code = None
    for i, tag in enumerate(tags):
        if tag_set is not None and tag not in tag_set.bio_tags:
            tag_set.tag_index(tag)  # raises UnknownLabelError
        cont = tag.startswith("I-") and tag[2:] == code and start is not None
        if cont:
            continue
        if start is not None:
            spans.append(Span(code, start, i - 1))
            start, code = None, None
        if tag.startswith(("B-", "I-")):
            start, code = i, tag[2:]
    if start is not None:
        spans.append(Span(code, start, len(tags) - 1))
    return tuple(spans)


def span_prf(gold: Sequence[Sequence[Span]], pred: Sequence[Sequence[Span]],
             labels: Sequence[str]) -> tuple[Prf, dict[str, Prf]]:
    """Pooled exact-match counts, overall and per label."""
    if len(gold) != len(pred):
        raise ValueError(f"gold has {len(gold)} sentences, pred {len(pred)}")
    tp = Counter()
    n_gold = Counter()
    n_pred = Counter()
    for g_spans, p_spans in zip(gold, pred):
        g_count = Counter(g_spans)
        p_count = Counter(p_spans)
        for span, c in (g_count & p_count).items():
            tp[span.label] += c
        for span, c in g_count.items():
            n_gold[span.label] += c
        for span, c in p_count.items():
            n_pred[span.label] += c
    per_label = {
        lab: Prf(tp=tp[lab], fp=n_pred[lab] - tp[lab], fn=n_gold[lab] - tp[lab])
        for lab in labels
    }
    overall = Prf(tp=sum(tp.values()),
                  fp=sum(n_pred.values()) - sum(tp.values()),
                  fn=sum(n_gold.values()) - sum(tp.values()))
    return overall, per_label


def _overlaps(a: Span, b: Span) -> bool:
    return a.start <= b.end and b.start <= a.end


def classify_errors(gold: Sequence[Sequence[Span]], pred: Sequence[Sequence[Span]],
                    labels: Sequence[str]) -> tuple[dict[str, int], np.ndarray]:
    """Taxonomy counts and confusion matrix over (labels+NONE)^2.

    Matrix bookkeeping follows exact matching: diagonal = exact matches,
    confusion[g][p] = same-boundary label swaps, confusion[g][NONE] = gold
    spans with no exact/same-boundary counterpart (boundary errors land
    here too), confusion[NONE][p] = leftover predicted spans. The taxonomy
    additionally splits gold misses into boundary vs. pure false negatives.
    """
    if len(gold) != len(pred):
        raise ValueError(f"gold has {len(gold)} sentences, pred {len(pred)}")
    index = {lab: i for i, lab in enumerate(labels)}
    none_i = len(labels)
    mat = np.zeros((none_i + 1, none_i + 1), dtype=np.int64)
    tax = {"exact": 0, "role-confusion": 0, "boundary-error": 0,
           "false-negative-span": 0, "false-positive-span": 0}

    for g_spans, p_spans in zip(gold, pred):
        g_spans = sorted(g_spans)
        free = sorted(p_spans)

        def consume(span):
            free.remove(span)

        for g in g_spans:
            exact = next((p for p in free if p == g), None)
            if exact is not None:
                consume(exact)
                tax["exact"] += 1
                mat[index[g.label], index[g.label]] += 1
                continue
            swap = next((p for p in free
                         if (p.start, p.end) == (g.start, g.end)
                         and p.label != g.label), None)
            if swap is not None:
                consume(swap)
                tax["role-confusion"] += 1
                mat[index[g.label], index[swap.label]] += 1
                continue
            near = next((p for p in free
                       if p.label == g.label and _overlaps(p, g)), None)
            if near is not None:
                consume(near)
                tax["boundary-error"] += 1
                mat[index[g.label], none_i] += 1
                mat[none_i, index[near.label]] += 1
                continue
            tax["false-negative-span"] += 1
            mat[index[g.label], none_i] += 1
        for p in free:
            tax["false-positive-span"] += 1
            mat[none_i, index[p.label]] += 1
    return tax, mat


def evaluate_spans(gold_tags: Sequence[Sequence[str]],
                   pred_tags: Sequence[Sequence[str]],
                   tag_set: TagSet) -> SpanMatchReport:
    """Full report from parallel BIO tag sequences."""
    code_to_label = dict(zip(tag_set.codes, tag_set.labels))

    def relabel(spans):
        return [Span(code_to_label[s.label], s.start, s.end) for s in spans]

    gold = [relabel(extract_spans(t, tag_set)) for t in gold_tags]
    pred = [relabel(extract_spans(t, tag_set)) for t in pred_tags]
    overall, per_label = span_prf(gold, pred, tag_set.labels)
    tax, mat = classify_errors(gold, pred, tag_set.labels)
    return SpanMatchReport(overall=overall, per_label=per_label,
                           labels=tag_set.labels, confusion=mat, taxonomy=tax)


def evaluate_model(model, sentences, task: str = "srl") -> SpanMatchReport:
    """Decode `sentences` with `model` and score the requested task head."""
    gold, pred = [], []
    for s in sentences:
        srl, er = model.predict(s)
        if task == "srl":
            gold.append(s.srl_tags)
            pred.append(srl)
        elif task == "er":
            gold.append(s.er_tags)
            pred.append(er)
        else:
            raise ValueError(f"unknown task {task!r}")
    tag_set = model.srl_tag_set if task == "srl" else model.er_tag_set
    return evaluate_spans(gold, pred, tag_set)


# ------------------------------------------------------------ significance

@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    significant: bool          # at alpha = 0.05
    degenerate: bool = False   # zero-variance, nonzero-mean differences


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Two-tailed paired t-test on per-fold differences a - b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    n = a.size
    if n < 2:
        raise ValueError("need at least two paired samples")
    d = a - b
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        if np.all(d == 0.0):
            return TTestResult(t=0.0, p=1.0, significant=False)
        return TTestResult(t=np.inf if d[0] > 0 else -np.inf, p=0.0,
                           significant=True, degenerate=True)
    t = float(np.mean(d) / (sd / np.sqrt(n)))
    p = float(2.0 * stats.t.sf(abs(t), df=n - 1))
    return TTestResult(t=t, p=p, significant=p < 0.05)


def run_cross_validation(corpus, scenario, k: int = 5, rng_seed: int = 0):
    """Deterministic k-fold split; trains `scenario` per fold.

    `scenario` is a callable (train_sentences, eval_sentences, fold_index)
    -> metric float, so the same folds serve passive and active setups.
    Returns the per-fold metric list, ready for paired_t_test.
    """
    if k < 2:
        raise ValueError("need at least 2 folds")
    ids = list(corpus.ids)
    if len(ids) < k:
        raise ValueError("corpus smaller than fold count")
    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(len(ids))
    folds = [sorted(perm[i::k]) for i in range(k)]
    metrics = []
    for i, fold in enumerate(folds):
        held = {ids[j] for j in fold}
        train_sents = [s for s in corpus.sentences if s.id not in held]
        eval_sents = [s for s in corpus.sentences if s.id in held]
        metrics.append(scenario(train_sents, eval_sents, i))
    return metrics
