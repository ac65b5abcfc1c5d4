"""Linear-chain CRF in log space.

Everything here works on a single sequence of per-position tag scores
(emissions, shape T x K) plus shared transition / boundary potentials.
All recursions subtract the running max before exponentiating, so long
sequences and large score magnitudes stay finite in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class CrfParams:
    """Log-potentials shared across positions.

    transitions[i, j] scores tag i -> tag j, start[k] scores tag k at
    position 0, end[k] scores tag k at position T-1.
    """
    transitions: np.ndarray
    start: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        self.start = np.asarray(self.start, dtype=np.float64)
        self.end = np.asarray(self.end, dtype=np.float64)
        k = self.start.shape[0]
        if self.transitions.shape != (k, k) or self.end.shape != (k,):
            raise ValueError(
                f"inconsistent CRF shapes: transitions {self.transitions.shape}, "
                f"start {self.start.shape}, end {self.end.shape}")

    @property
    def num_tags(self) -> int:
        return self.start.shape[0]

    @staticmethod
    def zeros(num_tags: int) -> "CrfParams":
        return CrfParams(np.zeros((num_tags, num_tags)), np.zeros(num_tags),
                         np.zeros(num_tags))


@dataclass(frozen=True)
class DecodeResult:
    tags: tuple[int, ...]
    log_prob: float  # log p(best path | x), i.e. path score minus log Z


def _logsumexp(a: np.ndarray, axis=None):
    if axis is None:
        m = float(np.max(a))
        return m + float(np.log(np.sum(np.exp(a - m))))
    m = np.max(a, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def _check(emissions: np.ndarray, params: CrfParams) -> np.ndarray:
    emissions = np.asarray(emissions, dtype=np.float64)
    if emissions.ndim != 2:
        raise ValueError(f"emissions must be T x K, got shape {emissions.shape}")
    t, k = emissions.shape
    if t < 1:
        raise ValueError("emissions must cover at least one position")
    if k != params.num_tags:
        raise ValueError(
            f"emissions have {k} tags but params have {params.num_tags}")
    return emissions


def _forward(emissions: np.ndarray, params: CrfParams) -> np.ndarray:
    """alpha[t, k] = log sum of scores of prefixes ending in tag k at t."""
    t_len = emissions.shape[0]
    alpha = np.empty_like(emissions)
    alpha[0] = params.start + emissions[0]
    for t in range(1, t_len):
        # alpha[t, j] = LSE_i(alpha[t-1, i] + trans[i, j]) + emis[t, j]
        alpha[t] = _logsumexp(alpha[t - 1][:, None] + params.transitions,
                              axis=0) + emissions[t]
    return alpha


def _backward(emissions: np.ndarray, params: CrfParams) -> np.ndarray:
    """beta[t, k] = log sum of scores of suffixes given tag k at t
    (including the end potential, excluding emissions[t])."""
    t_len = emissions.shape[0]
    beta = np.empty_like(emissions)
    beta[-1] = params.end
    for t in range(t_len - 2, -1, -1):
        beta[t] = _logsumexp(
            params.transitions + (emissions[t + 1] + beta[t + 1])[None, :],
            axis=1)
    return beta


def log_partition(emissions: np.ndarray, params: CrfParams) -> float:
    emissions = _check(emissions, params)
    alpha = _forward(emissions, params)
    return float(_logsumexp(alpha[-1] + params.end))


def _path_score(emissions: np.ndarray, tags, params: CrfParams) -> float:
    tags = np.asarray(tags, dtype=np.intp)
    t_len = emissions.shape[0]
    if tags.shape != (t_len,):
        raise ValueError(f"tags shape {tags.shape} does not match T={t_len}")
    if np.any(tags < 0) or np.any(tags >= params.num_tags):
        raise ValueError("tag index out of range")
    score = params.start[tags[0]] + emissions[0, tags[0]] + params.end[tags[-1]]
    for t in range(1, t_len):
        score += params.transitions[tags[t - 1], tags[t]] + emissions[t, tags[t]]
    return float(score)


def sequence_log_prob(emissions: np.ndarray, tags, params: CrfParams) -> float:
    """log p(tags | x) = path score - log Z."""
    emissions = _check(emissions, params)
    return _path_score(emissions, tags, params) - log_partition(emissions, params)


def viterbi(emissions: np.ndarray, params: CrfParams) -> DecodeResult:
    """Best path and its exact log-probability.

    Score ties are broken toward the lowest tag index at every step, so
    decoding is deterministic for degenerate potentials.
    """
    emissions = _check(emissions, params)
    t_len, k = emissions.shape
    delta = params.start + emissions[0]
    back = np.zeros((t_len, k), dtype=np.intp)
    for t in range(1, t_len):
        cand = delta[:, None] + params.transitions  # cand[i, j]
        back[t] = np.argmax(cand, axis=0)  # argmax returns the lowest index on ties
        delta = cand[back[t], np.arange(k)] + emissions[t]
    delta = delta + params.end
    last = int(np.argmax(delta))
    best_score = float(delta[last])
    path = [last]
    for t in range(t_len - 1, 0, -1):
        last = int(back[t, last])
        path.append(last)
    path.reverse()
    log_z = log_partition(emissions, params)
    return DecodeResult(tags=tuple(path), log_prob=best_score - log_z)


def marginals(emissions: np.ndarray, params: CrfParams) -> np.ndarray:
    """Posterior tag marginals, shape T x K, rows summing to one."""
    emissions = _check(emissions, params)
    alpha = _forward(emissions, params)
    beta = _backward(emissions, params)
    log_z = float(_logsumexp(alpha[-1] + params.end))
    return np.exp(alpha + beta - log_z)


def nll_and_gradients(emissions: np.ndarray, tags, params: CrfParams):
    """Negative log-likelihood of `tags` and its exact gradients.

    Returns (nll, d_emissions, d_transitions, d_start, d_end). Gradients
    are expectation-minus-observation: posterior marginal counts minus the
    counts of the gold path.
    """
    emissions = _check(emissions, params)
    tags = np.asarray(tags, dtype=np.intp)
    t_len, k = emissions.shape

    alpha = _forward(emissions, params)
    beta = _backward(emissions, params)
    log_z = float(_logsumexp(alpha[-1] + params.end))
    gamma = np.exp(alpha + beta - log_z)  # T x K posterior marginals

    score = _path_score(emissions, tags, params)
    nll = log_z - score

    d_emissions = gamma.copy()
    d_emissions[np.arange(t_len), tags] -= 1.0

    d_transitions = np.zeros((k, k))
    for t in range(t_len - 1):
        # xi[i, j] = p(y_t = i, y_{t+1} = j | x)
        log_xi = (alpha[t][:, None] + params.transitions
                  + (emissions[t + 1] + beta[t + 1])[None, :] - log_z)
        d_transitions += np.exp(log_xi)
        d_transitions[tags[t], tags[t + 1]] -= 1.0

    d_start = gamma[0].copy()
    d_start[tags[0]] -= 1.0
    d_end = gamma[-1].copy()
    d_end[tags[-1]] -= 1.0
    return nll, d_emissions, d_transitions, d_start, d_end
