"""Minimal batched neural-net layer zoo with hand-written backprop.

Everything is float64 numpy. Parameters live in plain dicts mapping a
flat name (e.g. ``"enc0.fwd.Wx"``) to an ndarray; gradients are a parallel
dict built by the backward passes. That layout keeps the optimizer, the
checkpoint writer and finite-difference probes trivial.

Batches are (B, T, D) arrays plus a (B, T) 0/1 mask; masked timesteps
carry the recurrent state through unchanged and contribute no gradient.
"""

from __future__ import annotations

import numpy as np

Params = dict[str, np.ndarray]
Grads = dict[str, np.ndarray]


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


def accumulate(grads: Grads, name: str, value: np.ndarray) -> None:
    if name in grads:
        grads[name] += value
    else:
        grads[name] = np.array(value, dtype=np.float64)


# ------------------------------------------------------------------ dense

def dense_init(params: Params, rng, name: str, d_in: int, d_out: int) -> None:
    params[f"{name}.W"] = glorot(rng, d_in, d_out)
    params[f"{name}.b"] = np.zeros(d_out)


def dense_forward(params: Params, name: str, x: np.ndarray):
    out = x @ params[f"{name}.W"] + params[f"{name}.b"]
    return out, x


def dense_backward(params: Params, grads: Grads, name: str, cache, d_out):
    x = cache
    flat_x = x.reshape(-1, x.shape[-1])
    flat_d = d_out.reshape(-1, d_out.shape[-1])
    accumulate(grads, f"{name}.W", flat_x.T @ flat_d)
    accumulate(grads, f"{name}.b", flat_d.sum(axis=0))
    return d_out @ params[f"{name}.W"].T


# -------------------------------------------------------------- embeddings

def embedding_init(params: Params, rng, name: str, rows: int, dim: int,
                   scale: float | None = None) -> None:
    s = (0.5 / dim) if scale is None else scale
    params[f"{name}.E"] = rng.uniform(-s, s, size=(rows, dim))


def embedding_forward(params: Params, name: str, idx: np.ndarray):
    return params[f"{name}.E"][idx], idx


def embedding_backward(params: Params, grads: Grads, name: str, cache, d_out):
    idx = cache
    table = params[f"{name}.E"]
    if f"{name}.E" not in grads:
        grads[f"{name}.E"] = np.zeros_like(table)
    np.add.at(grads[f"{name}.E"], idx.reshape(-1),
              d_out.reshape(-1, table.shape[1]))


# ---------------------------------------------------------------- char CNN

def char_cnn_init(params: Params, rng, name: str, vocab_size: int,
                  emb_dim: int, window: int, filters: int) -> None:
    embedding_init(params, rng, f"{name}.emb", vocab_size, emb_dim)
    params[f"{name}.W"] = glorot(rng, window * emb_dim, filters)
    params[f"{name}.b"] = np.zeros(filters)


def char_cnn_forward(params: Params, name: str, char_idx: np.ndarray,
                     char_len: np.ndarray, window: int):
    """char_idx: (N, L) padded char index matrix, char_len: (N,) true lengths.

    Positions beyond a token's length embed to zero vectors (zero padding,
    not UNK), the convolution is centered, and max-pooling runs over the
    true length only. Returns (N, filters).
    """
    table = params[f"{name}.emb.E"]
    w_conv = params[f"{name}.W"]
    n, l_max = char_idx.shape
    emb_dim = table.shape[1]
    pad_l = (window - 1) // 2
    pad_r = window - 1 - pad_l

    emb = np.zeros((n, l_max + pad_l + pad_r, emb_dim))
    valid = np.arange(l_max)[None, :] < char_len[:, None]  # (N, L)
    emb[:, pad_l:pad_l + l_max][valid] = table[char_idx[valid]]

    win = np.arange(l_max)[:, None] + np.arange(window)[None, :]  # (L, window)
    cols = emb[:, win, :].reshape(n, l_max, window * emb_dim)
    scores = cols @ w_conv + params[f"{name}.b"]  # (N, L, F)
    scores[~valid] = -np.inf
    best = np.argmax(scores, axis=1)  # (N, F)
    pooled = np.take_along_axis(scores, best[:, None, :], axis=1)[:, 0, :]
    cache = (char_idx, char_len, valid, cols, best, l_max, window, pad_l)
    return pooled, cache


def char_cnn_backward(params: Params, grads: Grads, name: str, cache, d_pooled):
    char_idx, char_len, valid, cols, best, l_max, window, pad_l = cache
    table = params[f"{name}.emb.E"]
    w_conv = params[f"{name}.W"]
    n = char_idx.shape[0]
    emb_dim = table.shape[1]
    filters = w_conv.shape[1]

    d_scores = np.zeros((n, l_max, filters))
    np.put_along_axis(d_scores, best[:, None, :], d_pooled[:, None, :], axis=1)

    flat_cols = cols.reshape(-1, window * emb_dim)
    flat_d = d_scores.reshape(-1, filters)
    accumulate(grads, f"{name}.W", flat_cols.T @ flat_d)
    accumulate(grads, f"{name}.b", flat_d.sum(axis=0))

    d_cols = (flat_d @ w_conv.T).reshape(n, l_max, window, emb_dim)
    d_emb = np.zeros((n, l_max + window - 1, emb_dim))
    for w in range(window):
        d_emb[:, w:w + l_max] += d_cols[:, :, w, :]
    d_emb = d_emb[:, pad_l:pad_l + l_max]

    if f"{name}.emb.E" not in grads:
        grads[f"{name}.emb.E"] = np.zeros_like(table)
    np.add.at(grads[f"{name}.emb.E"], char_idx[valid], d_emb[valid])


# -------------------------------------------------------------------- LSTM

def lstm_init(params: Params, rng, name: str, d_in: int, hidden: int) -> None:
    params[f"{name}.Wx"] = glorot(rng, d_in, 4 * hidden, (d_in, 4 * hidden))
    params[f"{name}.Wh"] = glorot(rng, hidden, 4 * hidden, (hidden, 4 * hidden))
    b = np.zeros(4 * hidden)
    b[hidden:2 * hidden] = 1.0  # forget gate bias
    params[f"{name}.b"] = b


def lstm_forward(params: Params, name: str, x: np.ndarray, mask: np.ndarray,
                 reverse: bool = False):
    """One direction over (B, T, D) with (B, T) mask -> (B, T, H)."""
    w_x, w_h, b = params[f"{name}.Wx"], params[f"{name}.Wh"], params[f"{name}.b"]
    bsz, t_len, _ = x.shape
    hidden = w_h.shape[0]
    h = np.zeros((bsz, hidden))
    c = np.zeros((bsz, hidden))
    out = np.zeros((bsz, t_len, hidden))
    steps = range(t_len - 1, -1, -1) if reverse else range(t_len)
    cache = []
    for t in steps:
        m = mask[:, t][:, None]
        z = x[:, t] @ w_x + h @ w_h + b
        i = _sigmoid(z[:, :hidden])
        f = _sigmoid(z[:, hidden:2 * hidden])
        g = np.tanh(z[:, 2 * hidden:3 * hidden])
        o = _sigmoid(z[:, 3 * hidden:])
        c_raw = f * c + i * g
        tanh_c = np.tanh(c_raw)
        h_raw = o * tanh_c
        c_new = m * c_raw + (1 - m) * c
        h_new = m * h_raw + (1 - m) * h
        cache.append((t, x[:, t], h, c, i, f, g, o, tanh_c, m))
        h, c = h_new, c_new
        out[:, t] = h
    return out, cache


def lstm_backward(params: Params, grads: Grads, name: str, cache, d_out):
    w_x, w_h = params[f"{name}.Wx"], params[f"{name}.Wh"]
    hidden = w_h.shape[0]
    d_x = np.zeros((d_out.shape[0], d_out.shape[1], w_x.shape[0]))
    d_wx = np.zeros_like(w_x)
    d_wh = np.zeros_like(w_h)
    d_b = np.zeros(4 * hidden)
    dh_next = np.zeros((d_out.shape[0], hidden))
    dc_next = np.zeros_like(dh_next)
    for (t, x_t, h_prev, c_prev, i, f, g, o, tanh_c, m) in reversed(cache):
        dh = d_out[:, t] + dh_next
        dh_raw = m * dh
        dh_carry = (1 - m) * dh
        dc_raw = m * dc_next
        dc_carry = (1 - m) * dc_next
        do = dh_raw * tanh_c
        dc_total = dc_raw + dh_raw * o * (1 - tanh_c ** 2)
        df = dc_total * c_prev
        di = dc_total * g
        dg = dc_total * i
        dz = np.concatenate([
            di * i * (1 - i),
            df * f * (1 - f),
            dg * (1 - g ** 2),
            do * o * (1 - o),
        ], axis=1)
        d_wx += x_t.T @ dz
        d_wh += h_prev.T @ dz
        d_b += dz.sum(axis=0)
        d_x[:, t] = dz @ w_x.T
        dh_next = dz @ w_h.T + dh_carry
        dc_next = dc_total * f + dc_carry
    accumulate(grads, f"{name}.Wx", d_wx)
    accumulate(grads, f"{name}.Wh", d_wh)
    accumulate(grads, f"{name}.b", d_b)
    return d_x


def bilstm_forward(params: Params, name: str, x, mask):
    fwd, cache_f = lstm_forward(params, f"{name}.fwd", x, mask, reverse=False)
    bwd, cache_b = lstm_forward(params, f"{name}.bwd", x, mask, reverse=True)
    return np.concatenate([fwd, bwd], axis=2), (cache_f, cache_b)


def bilstm_backward(params: Params, grads: Grads, name: str, cache, d_out):
    cache_f, cache_b = cache
    hidden = d_out.shape[2] // 2
    d_x = lstm_backward(params, grads, f"{name}.fwd", cache_f, d_out[:, :, :hidden])
    d_x += lstm_backward(params, grads, f"{name}.bwd", cache_b, d_out[:, :, hidden:])
    return d_x


# ----------------------------------------------------------------- highway

def highway_init(params: Params, rng, name: str, dim: int) -> None:
    params[f"{name}.Wg"] = glorot(rng, dim, dim)
    params[f"{name}.bg"] = np.zeros(dim)


def highway_forward(params: Params, name: str, x, y):
    """Gated mix of a layer's input x and its output y (same width)."""
    gate = _sigmoid(x @ params[f"{name}.Wg"] + params[f"{name}.bg"])
    return gate * y + (1 - gate) * x, (x, y, gate)


def highway_backward(params: Params, grads: Grads, name: str, cache, d_out):
    x, y, gate = cache
    d_gate = d_out * (y - x) * gate * (1 - gate)
    flat_x = x.reshape(-1, x.shape[-1])
    flat_dg = d_gate.reshape(-1, d_gate.shape[-1])
    accumulate(grads, f"{name}.Wg", flat_x.T @ flat_dg)
    accumulate(grads, f"{name}.bg", flat_dg.sum(axis=0))
    d_y = d_out * gate
    d_x = d_out * (1 - gate) + d_gate @ params[f"{name}.Wg"].T
    return d_x, d_y


# ----------------------------------------------------------------- dropout

def dropout_forward(x, rate: float, rng: np.random.Generator | None):
    """Inverted dropout; rng=None or rate=0 means inference (identity)."""
    if rng is None or rate <= 0.0:
        return x, None
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * keep, keep


def dropout_backward(cache, d_out):
    return d_out if cache is None else d_out * cache


# ---------------------------------------------------------------- AdaDelta

class AdaDelta:
    """AdaDelta with decay rho and stabilizer eps, one accumulator pair per
    parameter. State persists across update calls (and across AL rounds
    unless explicitly reset)."""

    def __init__(self, params: Params, rho: float = 0.95, eps: float = 1e-6):
        self.rho = rho
        self.eps = eps
        self.sq_grad = {k: np.zeros_like(v) for k, v in params.items()}
        self.sq_delta = {k: np.zeros_like(v) for k, v in params.items()}

    def ensure(self, params: Params) -> None:
        """Register any parameters added after construction."""
        for k, v in params.items():
            if k not in self.sq_grad:
                self.sq_grad[k] = np.zeros_like(v)
                self.sq_delta[k] = np.zeros_like(v)

    def update(self, params: Params, grads: Grads) -> None:
        for k, g in grads.items():
            eg = self.sq_grad[k]
            ed = self.sq_delta[k]
            eg *= self.rho
            eg += (1 - self.rho) * g * g
            step = -np.sqrt(ed + self.eps) / np.sqrt(eg + self.eps) * g
            ed *= self.rho
            ed += (1 - self.rho) * step * step
            params[k] += step
