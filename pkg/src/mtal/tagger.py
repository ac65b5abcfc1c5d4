"""Shared-encoder multi-task tagger.

Per-token input = concat(word embedding of the lowercased token,
max-pooled char CNN over the raw-cased characters, predicate-indicator
embedding). The concatenation feeds a stack of bidirectional LSTM layers
with sigmoid-gated highway connections between stacked layers; the top
states feed a CRF head (role labeling) and a softmax head (entity
recognition). Joint loss is the plain sum of the two heads' losses.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import crf, nn
from .corpus import Sentence, TagSet, Vocab, repair_bio


class MissingLabelsError(ValueError):
    """A loss was requested for a sentence lacking the needed gold tags."""


@dataclass(frozen=True)
class ModelConfig:
    word_dim: int = 50
    char_dim: int = 50            # number of CNN filters = per-token char features
    predicate_dim: int = 100
    char_emb_dim: int = 16
    char_window: int = 5
    hidden_units: int = 300
    encoder_layers: int = 2
    dropout: float = 0.1
    multi_task: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        dims = (self.word_dim, self.char_dim, self.predicate_dim,
                self.char_emb_dim, self.char_window, self.hidden_units,
                self.encoder_layers)
        if any(d < 1 for d in dims):
            raise ValueError("all model dimensions must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")

    @property
    def input_dim(self) -> int:
        return self.word_dim + self.char_dim + self.predicate_dim


@dataclass
class LossParts:
    srl: float
    er: float

    @property
    def joint(self) -> float:
        return self.srl + self.er


class TaggerModel:
    """Parameter container plus forward/backward passes.

    All parameters live in ``self.params`` (flat name -> float64 array), so
    optimizers, checkpoints and finite-difference probes can treat the model
    as a single dictionary.
    """

    def __init__(self, config: ModelConfig, word_vocab: Vocab, char_vocab: Vocab,
                 srl_tag_set: TagSet, er_tag_set: TagSet,
                 word_embeddings: np.ndarray | None = None):
        self.config = config
        self.word_vocab = word_vocab
        self.char_vocab = char_vocab
        self.srl_tag_set = srl_tag_set
        self.er_tag_set = er_tag_set
        rng = np.random.default_rng(config.rng_seed)
        p: nn.Params = {}

        nn.embedding_init(p, rng, "word", len(word_vocab), config.word_dim)
        if word_embeddings is not None:
            if word_embeddings.shape != p["word.E"].shape:
                raise ValueError(
                    f"pretrained embeddings shape {word_embeddings.shape} != "
                    f"{p['word.E'].shape}")
            p["word.E"] = np.array(word_embeddings, dtype=np.float64)
        nn.char_cnn_init(p, rng, "chars", len(char_vocab), config.char_emb_dim,
                         config.char_window, config.char_dim)
        nn.embedding_init(p, rng, "pred", 2, config.predicate_dim)

        d_in = config.input_dim
        for layer in range(config.encoder_layers):
            nn.lstm_init(p, rng, f"enc{layer}.fwd", d_in, config.hidden_units)
            nn.lstm_init(p, rng, f"enc{layer}.bwd", d_in, config.hidden_units)
            if layer > 0:
                nn.highway_init(p, rng, f"enc{layer}.hw", 2 * config.hidden_units)
            d_in = 2 * config.hidden_units

        nn.dense_init(p, rng, "srl", d_in, srl_tag_set.num_tags)
        k_srl = srl_tag_set.num_tags
        p["crf.trans"] = np.zeros((k_srl, k_srl))
        p["crf.start"] = np.zeros(k_srl)
        p["crf.end"] = np.zeros(k_srl)
        if config.multi_task:
            nn.dense_init(p, rng, "er", d_in, er_tag_set.num_tags)
        self.params = p

    # ------------------------------------------------------------- forward

    def _batch_inputs(self, sentences):
        bsz = len(sentences)
        t_max = max(len(s) for s in sentences)
        word_idx = np.zeros((bsz, t_max), dtype=np.intp)
        pred_idx = np.zeros((bsz, t_max), dtype=np.intp)
        mask = np.zeros((bsz, t_max))
        flat_tokens: list[str] = []
        slots = []  # (b, t) per flat token
        for b, s in enumerate(sentences):
            for t, token in enumerate(s.tokens):
                word_idx[b, t] = self.word_vocab.index(token.lower())
                flat_tokens.append(token)
                slots.append((b, t))
            pred_idx[b, s.predicate_index] = 1
            mask[b, :len(s)] = 1.0
        l_max = max(len(tok) for tok in flat_tokens)
        char_idx = np.zeros((len(flat_tokens), l_max), dtype=np.intp)
        char_len = np.zeros(len(flat_tokens), dtype=np.intp)
        for n, tok in enumerate(flat_tokens):
            char_len[n] = len(tok)
            for j, ch in enumerate(tok):
                char_idx[n, j] = self.char_vocab.index(ch)
        return word_idx, pred_idx, mask, char_idx, char_len, slots, t_max

    def encode_batch(self, sentences, train_rng: np.random.Generator | None = None):
        """Encoder forward over a batch. Returns (H, mask, cache); H has
        shape (B, T_max, 2*hidden). train_rng=None runs inference mode."""
        if any(len(s) < 1 for s in sentences):
            raise ValueError("cannot encode an empty sentence")
        cfg = self.config
        p = self.params
        word_idx, pred_idx, mask, char_idx, char_len, slots, t_max = \
            self._batch_inputs(sentences)

        w_emb, w_cache = nn.embedding_forward(p, "word", word_idx)
        p_emb, p_cache = nn.embedding_forward(p, "pred", pred_idx)
        pooled, c_cache = nn.char_cnn_forward(p, "chars", char_idx, char_len,
                                              cfg.char_window)
        c_emb = np.zeros((len(sentences), t_max, cfg.char_dim))
        rows = np.array([b for b, _ in slots])
        cols = np.array([t for _, t in slots])
        c_emb[rows, cols] = pooled

        x = np.concatenate([w_emb, c_emb, p_emb], axis=2) * mask[:, :, None]
        layer_caches = []
        for layer in range(cfg.encoder_layers):
            y, lstm_cache = nn.bilstm_forward(p, f"enc{layer}", x, mask)
            hw_cache = None
            if layer > 0:
                y, hw_cache = nn.highway_forward(p, f"enc{layer}.hw", x, y)
            y, drop_cache = nn.dropout_forward(y, cfg.dropout, train_rng)
            y = y * mask[:, :, None]
            layer_caches.append((lstm_cache, hw_cache, drop_cache))
            x = y
        cache = (w_cache, p_cache, c_cache, rows, cols, mask, layer_caches)
        return x, mask, cache

    def backward_encoder(self, cache, d_h, grads: nn.Grads) -> None:
        cfg = self.config
        p = self.params
        w_cache, p_cache, c_cache, rows, cols, mask, layer_caches = cache
        d_x = d_h
        for layer in range(cfg.encoder_layers - 1, -1, -1):
            lstm_cache, hw_cache, drop_cache = layer_caches[layer]
            d_x = d_x * mask[:, :, None]
            d_x = nn.dropout_backward(drop_cache, d_x)
            if hw_cache is not None:
                d_in_hw, d_x = nn.highway_backward(p, grads, f"enc{layer}.hw",
                                                   hw_cache, d_x)
            d_x = nn.bilstm_backward(p, grads, f"enc{layer}", lstm_cache, d_x)
            if hw_cache is not None:
                d_x += d_in_hw
        d_x = d_x * mask[:, :, None]
        d_word = d_x[:, :, :cfg.word_dim]
        d_char = d_x[:, :, cfg.word_dim:cfg.word_dim + cfg.char_dim]
        d_pred = d_x[:, :, cfg.word_dim + cfg.char_dim:]
        nn.embedding_backward(p, grads, "word", w_cache, d_word)
        nn.embedding_backward(p, grads, "pred", p_cache, d_pred)
        nn.char_cnn_backward(p, grads, "chars", c_cache, d_char[rows, cols])

    def encode(self, sentence: Sentence) -> np.ndarray:
        """Contextual states for one sentence, shape (T, 2*hidden)."""
        h, _, _ = self.encode_batch([sentence])
        return h[0, :len(sentence)]

    # ---------------------------------------------------------------- heads

    def srl_emissions(self, sentence: Sentence) -> np.ndarray:
        h = self.encode(sentence)
        out, _ = nn.dense_forward(self.params, "srl", h)
        return out

    def crf_params(self) -> crf.CrfParams:
        p = self.params
        return crf.CrfParams(p["crf.trans"], p["crf.start"], p["crf.end"])

    def er_log_probs(self, sentence: Sentence) -> np.ndarray:
        if not self.config.multi_task:
            raise MissingLabelsError("model was built without the ER head")
        h = self.encode(sentence)
        logits, _ = nn.dense_forward(self.params, "er", h)
        return logits - _logsumexp_rows(logits)

    # ------------------------------------------------------------ decoding

    def decode_srl(self, sentence: Sentence) -> crf.DecodeResult:
        return crf.viterbi(self.srl_emissions(sentence), self.crf_params())

    def predict(self, sentence: Sentence) -> tuple[tuple[str, ...], tuple[str, ...]]:
        """(SRL tags, ER tags) as BIO strings, both repaired to well-formed
        sequences (neither head has a hard structural constraint)."""
        srl = repair_bio(self.srl_tag_set.decode(self.decode_srl(sentence).tags))
        if not self.config.multi_task:
            return srl, tuple(["O"] * len(sentence))
        er_idx = np.argmax(self.er_log_probs(sentence), axis=1)
        er = repair_bio(self.er_tag_set.decode(er_idx))
        return srl, er

    # -------------------------------------------------------------- losses

    def joint_loss(self, sentence: Sentence) -> float:
        return self.loss_parts(sentence).joint

    def loss_parts(self, sentence: Sentence) -> LossParts:
        """SRL NLL + ER cross-entropy for one sentence (inference mode)."""
        loss, _ = self.batch_loss_and_grads([sentence], compute_grads=False)
        return loss

    def batch_loss_and_grads(self, sentences, train_rng=None, compute_grads=True):
        """Mean per-sentence joint loss over the batch and its gradients.

        In multi-task mode every sentence must carry both tag sequences;
        in single-task mode only the role tags are required and the ER term
        is identically zero.
        """
        cfg = self.config
        p = self.params
        for s in sentences:
            if s.srl_tags is None:
                raise MissingLabelsError(f"sentence {s.id!r} lacks SRL tags")
            if cfg.multi_task and s.er_tags is None:
                raise MissingLabelsError(f"sentence {s.id!r} lacks ER tags")

        h, mask, cache = self.encode_batch(sentences, train_rng=train_rng)
        bsz = len(sentences)
        grads: nn.Grads = {}
        d_h = np.zeros_like(h)
        crf_p = self.crf_params()

        srl_out, srl_cache = nn.dense_forward(p, "srl", h)
        total_srl = 0.0
        d_srl_out = np.zeros_like(srl_out)
        for b, s in enumerate(sentences):
            t_len = len(s)
            emis = srl_out[b, :t_len]
            gold = self.srl_tag_set.encode(s.srl_tags)
            nll, d_emis, d_trans, d_start, d_end = crf.nll_and_gradients(
                emis, gold, crf_p)
            total_srl += nll
            if compute_grads:
                d_srl_out[b, :t_len] = d_emis / bsz
                nn.accumulate(grads, "crf.trans", d_trans / bsz)
                nn.accumulate(grads, "crf.start", d_start / bsz)
                nn.accumulate(grads, "crf.end", d_end / bsz)

        total_er = 0.0
        if cfg.multi_task:
            er_out, er_cache = nn.dense_forward(p, "er", h)
            log_probs = er_out - _logsumexp_rows(er_out)
            d_er_out = np.zeros_like(er_out)
            for b, s in enumerate(sentences):
                t_len = len(s)
                gold = self.er_tag_set.encode(s.er_tags)
                rows = np.arange(t_len)
                total_er += -float(log_probs[b, rows, gold].sum())
                if compute_grads:
                    soft = np.exp(log_probs[b, :t_len])
                    soft[rows, gold] -= 1.0
                    d_er_out[b, :t_len] = soft / bsz
            if compute_grads:
                d_h += nn.dense_backward(p, grads, "er", er_cache, d_er_out)

        loss = LossParts(srl=total_srl / bsz, er=total_er / bsz)
        if not compute_grads:
            return loss, None
        d_h += nn.dense_backward(p, grads, "srl", srl_cache, d_srl_out)
        self.backward_encoder(cache, d_h, grads)
        return loss, grads

    # ---------------------------------------------------------------- misc

    def clone_params(self) -> nn.Params:
        return {k: v.copy() for k, v in self.params.items()}

    def load_params(self, params: nn.Params) -> None:
        for k in self.params:
            self.params[k] = params[k].copy()

    def num_parameters(self) -> int:
        return sum(v.size for v in self.params.values())


def _logsumexp_rows(x: np.ndarray) -> np.ndarray:
    m = np.max(x, axis=-1, keepdims=True)
    return m + np.log(np.sum(np.exp(x - m), axis=-1, keepdims=True))
