"""Patent text encoding: trainable word embeddings plus a bidirectional LSTM.

Both LSTM directions run the standard cell (input/forget/cell/output
gates, no peepholes).  Padding positions are masked to exactly zero
hidden state so short texts contribute nothing past their real length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import PAD_ID
from .errors import ContractError
from .layers import init_uniform
from .tensor import (
    Tensor,
    concat,
    gather_rows,
    matmul,
    mul,
    sigmoid,
    slice_cols,
    tanh,
)


@dataclass
class LstmDirection:
    """One direction's cell weights; gate order along columns is [i, f, g, o]."""

    w: Tensor  # (T, 4F) input projection
    u: Tensor  # (F, 4F) recurrent projection
    b: Tensor  # (1, 4F)

    @classmethod
    def create(cls, rng, d_in: int, d_hidden: int, dtype=np.float32) -> "LstmDirection":
        return cls(
            w=init_uniform(rng, (d_in, 4 * d_hidden), d_in, dtype),
            u=init_uniform(rng, (d_hidden, 4 * d_hidden), d_hidden, dtype),
            b=init_uniform(rng, (1, 4 * d_hidden), d_in, dtype),
        )

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.w": self.w, f"{prefix}.u": self.u, f"{prefix}.b": self.b}


@dataclass
class BiLstmParams:
    fwd: LstmDirection
    bwd: LstmDirection
    hidden: int

    @classmethod
    def create(cls, rng, d_in: int, d_hidden: int, dtype=np.float32) -> "BiLstmParams":
        return cls(
            fwd=LstmDirection.create(rng, d_in, d_hidden, dtype),
            bwd=LstmDirection.create(rng, d_in, d_hidden, dtype),
            hidden=d_hidden,
        )

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {**self.fwd.named(f"{prefix}.fwd"), **self.bwd.named(f"{prefix}.bwd")}


def embed_words(tokens, emb: Tensor, pad_id: int = PAD_ID) -> Tensor:
    """Embedding rows for a token-id sequence, with PAD rows forced to zero."""
    ids = np.asarray(tokens, dtype=np.intp)
    rows = gather_rows(emb, ids)
    if (ids == pad_id).any():
        keep = (ids != pad_id).astype(emb.dtype)[:, None]
        rows = mul(rows, Tensor(keep))
    return rows


def _run_direction(
    flat: Tensor,
    lens: np.ndarray,
    n: int,
    cell: LstmDirection,
    reverse: bool,
    f_hidden: int,
) -> list[Tensor]:
    """One LSTM direction over a patent-major (B*n, T) embedding block.

    Returns per-position (B, F) hidden states, indexed by position 0..n-1
    regardless of scan direction.  State is multiplied by a {0,1} validity
    mask each step, which both zeroes outputs past a sequence's length and
    makes the reverse scan start fresh at each sequence's last real token.
    """
    b = len(lens)
    dtype = flat.dtype
    h = Tensor.zeros((b, f_hidden), dtype=dtype)
    c = Tensor.zeros((b, f_hidden), dtype=dtype)
    outputs: list[Tensor | None] = [None] * n
    order = range(n - 1, -1, -1) if reverse else range(n)
    for t in order:
        idx = np.arange(b, dtype=np.intp) * n + t
        x_t = gather_rows(flat, idx)
        pre = matmul(x_t, cell.w) + matmul(h, cell.u) + cell.b
        i_g = sigmoid(slice_cols(pre, 0, f_hidden))
        f_g = sigmoid(slice_cols(pre, f_hidden, 2 * f_hidden))
        g_g = tanh(slice_cols(pre, 2 * f_hidden, 3 * f_hidden))
        o_g = sigmoid(slice_cols(pre, 3 * f_hidden, 4 * f_hidden))
        c = mul(f_g, c) + mul(i_g, g_g)
        h = mul(o_g, tanh(c))
        valid = (lens > t).astype(flat.data.dtype)[:, None]
        if not valid.all():
            mask = Tensor(valid)
            h = mul(h, mask)
            c = mul(c, mask)
        outputs[t] = h
    return outputs


def bilstm_encode_batch(flat: Tensor, lens, n: int, params: BiLstmParams) -> Tensor:
    """Encode a batch laid out patent-major: row i*n + t is patent i, position t.

    Output keeps the same layout, rows of width 2F (forward state then
    backward state); positions at or past a sequence's length are zero.
    """
    lens = np.asarray(lens, dtype=np.intp)
    if (lens > n).any():
        raise ContractError(f"a sequence length exceeds the padded width {n}")
    b = len(lens)
    fh = _run_direction(flat, lens, n, params.fwd, reverse=False, f_hidden=params.hidden)
    bh = _run_direction(flat, lens, n, params.bwd, reverse=True, f_hidden=params.hidden)
    fwd_pos = concat(fh, axis=0)  # position-major (n*b, F)
    bwd_pos = concat(bh, axis=0)
    both = concat([fwd_pos, bwd_pos], axis=1)
    # row t*b + i of `both` belongs at patent-major output row i*n + t
    inv = (np.arange(n)[None, :] * b + np.arange(b)[:, None]).reshape(-1)
    return gather_rows(both, inv)


def bilstm_encode(x: Tensor, valid_len: int, params: BiLstmParams) -> Tensor:
    """Contextual token representations (N, 2F) for one embedded sequence."""
    n = x.shape[0]
    if valid_len > n:
        raise ContractError(f"valid_len {valid_len} exceeds sequence length {n}")
    return bilstm_encode_batch(x, np.array([valid_len]), n, params)
