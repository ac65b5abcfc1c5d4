"""Skip-gram word embeddings with negative sampling, trained on the
(lowercased) training-split sentences. Fallback when pretraining is
disabled: i.i.d. uniform in [-0.5/dim, +0.5/dim]."""

from __future__ import annotations

import numpy as np

from .corpus import Corpus


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -30, 30)))


def pretrain_word_embeddings(corpus: Corpus, train_ids, dim: int = 50,
                             window: int = 2, negatives: int = 5,
                             epochs: int = 3, lr: float = 0.05,
                             rng_seed: int = 0, enabled: bool = True) -> np.ndarray:
    """Embedding table of shape (|word vocab|, dim), deterministic given seed."""
    if corpus.word_vocab is None:
        raise ValueError("corpus has no word vocabulary; build it first")
    vocab = corpus.word_vocab
    rng = np.random.default_rng(rng_seed)
    if not enabled:
        return rng.uniform(-0.5 / dim, 0.5 / dim, size=(len(vocab), dim))

    train_ids = set(train_ids)
    seqs = [np.array([vocab.index(t.lower()) for t in s.tokens], dtype=np.intp)
            for s in corpus.sentences if s.id in train_ids]

    counts = np.zeros(len(vocab))
    for seq in seqs:
        np.add.at(counts, seq, 1.0)
    noise = counts ** 0.75
    noise_p = noise / noise.sum() if noise.sum() > 0 else None

    w_in = rng.uniform(-0.5 / dim, 0.5 / dim, size=(len(vocab), dim))
    w_out = np.zeros((len(vocab), dim))
    if noise_p is None:
        return w_in

    for _ in range(epochs):
        for seq in seqs:
            for pos, center in enumerate(seq):
                lo = max(0, pos - window)
                hi = min(len(seq), pos + window + 1)
                for ctx_pos in range(lo, hi):
                    if ctx_pos == pos:
                        continue
                    ctx = seq[ctx_pos]
                    targets = np.concatenate((
                        [ctx], rng.choice(len(vocab), size=negatives, p=noise_p)))
                    labels = np.zeros(negatives + 1)
                    labels[0] = 1.0
                    v = w_in[center]
                    u = w_out[targets]
                    g = (_sigmoid(u @ v) - labels) * lr
                    w_in[center] -= g @ u
                    w_out[targets] -= np.outer(g, v)
    return w_in
