"""Prediction head: per-code attention over word positions, decoder fusion
with the behavior vector, sigmoid output, and binary cross-entropy loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError
from .layers import Mlp2
from .tensor import (
    Tensor,
    clip,
    log,
    matmul,
    reshape,
    sigmoid,
    softmax_rows,
    tsum,
    transpose,
)

PROB_CLAMP = 1e-7


@dataclass
class DecoderParams:
    """The two prediction decoders: per-code text head and behavior head."""

    text: Mlp2      # (4F -> 2F -> 1), applied per code row
    behavior: Mlp2  # (2F -> 2F -> n_codes)

    def named(self, prefix: str = "dec") -> dict[str, Tensor]:
        return {**self.text.named(f"{prefix}.text"), **self.behavior.named(f"{prefix}.behavior")}


def label_attention(h_codes: Tensor, v: Tensor, valid_len: int) -> Tensor:
    """Per-code softmax attention over word positions.

    Each code row distributes attention across the first ``valid_len``
    words of ``v`` and pools their vectors; positions past the valid
    length get zero weight.
    """
    if h_codes.shape[1] != v.shape[1]:
        raise DimensionError(
            f"label_attention: code width {h_codes.shape[1]} != word width {v.shape[1]}"
        )
    if valid_len < 1:
        raise ContractError("label_attention needs at least one valid word")
    n = v.shape[0]
    logits = matmul(h_codes, transpose(v))
    if valid_len < n:
        mask = np.zeros((1, n))
        mask[0, :valid_len] = 1.0
        weights = softmax_rows(logits, mask=mask)
    else:
        weights = softmax_rows(logits)
    return matmul(weights, v)


def predict(m_text: Tensor, m_behavior: Tensor, dec: DecoderParams,
            drop_p: float = 0.0, train: bool = False, rng=None) -> Tensor:
    """Code probabilities: sigmoid of summed decoder logits.

    ``m_text`` is the (n_codes, 4F) attention summary; ``m_behavior`` is the
    width-2F behavior vector (all zeros for an assignee's first patent).
    """
    logits = predict_logits(m_text, m_behavior, dec, drop_p=drop_p, train=train, rng=rng)
    return reshape(sigmoid(logits), (logits.shape[1],))


def predict_logits(m_text: Tensor, m_behavior: Tensor, dec: DecoderParams,
                   drop_p: float = 0.0, train: bool = False, rng=None) -> Tensor:
    """Pre-sigmoid logits as a (1, n_codes) row."""
    if m_behavior.ndim == 1:
        m_behavior = reshape(m_behavior, (1, m_behavior.shape[0]))
    text_logits = transpose(dec.text(m_text, drop_p=drop_p, train=train, rng=rng))
    behavior_logits = dec.behavior(m_behavior, drop_p=drop_p, train=train, rng=rng)
    if text_logits.shape != behavior_logits.shape:
        raise DimensionError(
            f"decoder outputs disagree: {text_logits.shape} vs {behavior_logits.shape}"
        )
    return text_logits + behavior_logits


def bce_loss(y_hat: Tensor, y, reduction: str = "sum") -> Tensor:
    """Binary cross-entropy over codes, summed over the batch by default.

    Probabilities are clamped to [1e-7, 1-1e-7] before the logs.  The
    ``mean`` reduction divides by the element count, which makes the
    learning rate independent of batch size.
    """
    target = y.data if isinstance(y, Tensor) else np.asarray(y, dtype=y_hat.data.dtype)
    if target.shape != y_hat.shape:
        raise DimensionError(f"bce_loss: shapes differ, {y_hat.shape} vs {target.shape}")
    if reduction not in ("sum", "mean"):
        raise ContractError(f"unknown reduction {reduction!r}")
    dtype = y_hat.data.dtype
    p = clip(y_hat, PROB_CLAMP, 1.0 - PROB_CLAMP)
    t = Tensor(target.astype(dtype))
    not_t = Tensor((1.0 - target).astype(dtype))
    one = Tensor(np.ones((), dtype=dtype))
    terms = t * log(p) + not_t * log(one - p)
    total = -tsum(terms)
    if reduction == "mean":
        total = total / float(target.size)
    return total
