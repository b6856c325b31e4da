"""Adaptive correlation learning over the code taxonomy.

Each code carries a trainable embedding per level.  Messages flow
horizontally (among siblings, dot-product attention) and vertically
(parent and children on adjacent levels), get fused by a per-level
two-layer perceptron, and are finally contextualized by concatenating
every code's ancestor-chain messages.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import DimensionError, TaxonomyError
from .layers import Mlp2
from .taxonomy import Taxonomy
from .tensor import Tensor, concat, gather_rows, matmul, softmax_rows, transpose


class IclMode(str, enum.Enum):
    """Which taxonomy-correlation variant a model runs with."""

    NONE = "none"
    FIXED = "fixed"
    ADAPTIVE_H = "adaptive_h"
    ADAPTIVE_V = "adaptive_v"
    ADAPTIVE_HV = "adaptive_hv"


def sibling_mask(tax: Taxonomy, level: int) -> np.ndarray:
    """{0,1} matrix marking same-parent codes at ``level`` (self included)."""
    codes = tax.codes(level)
    n = len(codes)
    mask = np.zeros((n, n), dtype=np.float64)
    for i, code in enumerate(codes):
        siblings, _ = tax.neighbor_sets(level, code)
        for s in siblings:
            mask[i, tax.index_of[s]] = 1.0
    return mask


def vertical_mask(tax: Taxonomy, level: int) -> np.ndarray:
    """{0,1} matrix over the stacked adjacent-level codes.

    Columns enumerate level ``level-1`` codes (when present) followed by
    level ``level+1`` codes (when present); row i marks code i's parent
    and children.
    """
    codes = tax.codes(level)
    above = tax.codes(level - 1) if level > 1 else []
    below = tax.codes(level + 1) if level < tax.depth else []
    mask = np.zeros((len(codes), len(above) + len(below)), dtype=np.float64)
    for i, code in enumerate(codes):
        if level > 1:
            mask[i, tax.index_of[tax.parent_of[code]]] = 1.0
        for child in tax.children_of[code]:
            mask[i, len(above) + tax.index_of[child]] = 1.0
        if not mask[i].any():
            raise TaxonomyError(f"code '{code}' has an empty vertical neighbor set")
    return mask


def adaptive_propagate(
    embeddings: list[Tensor],
    tax: Taxonomy,
    level: int,
    direction: str,
    uniform: bool = False,
) -> Tensor:
    """Attention-weighted message for every code at ``level``.

    ``direction`` is ``"h"`` (siblings on the same level) or ``"v"``
    (parent and children on adjacent levels).  Attention logits are dot
    products between code embeddings; ``uniform=True`` replaces them with
    equal weights over the neighbor set (the fixed-aggregation variant).
    Output rows are convex combinations of neighbor embeddings.
    """
    if direction not in ("h", "v"):
        raise ValueError(f"direction must be 'h' or 'v', got {direction!r}")
    own = embeddings[level - 1]
    if direction == "h":
        mask = sibling_mask(tax, level)
        pool = own
    else:
        mask = vertical_mask(tax, level)
        parts = []
        if level > 1:
            parts.append(embeddings[level - 2])
        if level < tax.depth:
            parts.append(embeddings[level])
        if not parts:
            # vertical fallback for a one-level taxonomy: the code itself
            mask = np.eye(len(tax.codes(level)), dtype=np.float64)
            parts = [own]
        pool = parts[0] if len(parts) == 1 else concat(parts, axis=0)
    if uniform:
        weights = Tensor(
            (mask / mask.sum(axis=1, keepdims=True)).astype(own.dtype)
        )
        return matmul(weights, pool)
    logits = matmul(own, transpose(pool))
    weights = softmax_rows(logits, mask=mask)
    return matmul(weights, pool)


def fuse_hv(h_msg: Tensor, v_msg: Tensor, fuse_mlp: Mlp2,
            drop_p: float = 0.0, train: bool = False, rng=None) -> Tensor:
    """Combine vertical and horizontal messages: MLP over [v || h]."""
    if h_msg.shape != v_msg.shape:
        raise DimensionError(
            f"fuse_hv: message shapes differ, {h_msg.shape} vs {v_msg.shape}"
        )
    return fuse_mlp(concat([v_msg, h_msg], axis=1), drop_p=drop_p, train=train, rng=rng)


def ancestor_index(tax: Taxonomy, level: int, at_level: int) -> np.ndarray:
    """For each code at ``level``, the row index of its ancestor at ``at_level``."""
    idx = np.empty(tax.n_codes(level), dtype=np.intp)
    for i, code in enumerate(tax.codes(level)):
        chain = tax.ancestor_chain(code)
        if len(chain) < at_level:
            raise TaxonomyError(f"code '{code}' has no ancestor at level {at_level}")
        idx[i] = tax.index_of[chain[at_level - 1]]
    return idx


def contextualize(tax: Taxonomy, msgs: list[Tensor], level: int, g_mlp: Mlp2,
                  drop_p: float = 0.0, train: bool = False, rng=None) -> Tensor:
    """Per-code representation from its full ancestor chain of messages.

    Concatenates, for each code at ``level``, the fused-message rows of its
    level-1..level ancestors (width level*2F) and applies the per-level
    encoder MLP back down to 2F.
    """
    parts = []
    for lvl in range(1, level):
        parts.append(gather_rows(msgs[lvl - 1], ancestor_index(tax, level, lvl)))
    parts.append(msgs[level - 1])
    stacked = parts[0] if len(parts) == 1 else concat(parts, axis=1)
    return g_mlp(stacked, drop_p=drop_p, train=train, rng=rng)


def code_representations(
    embeddings: list[Tensor],
    tax: Taxonomy,
    mode: IclMode,
    fuse_mlps: list[Mlp2],
    g_mlps: list[Mlp2],
    up_to_level: int | None = None,
    drop_p: float = 0.0,
    train: bool = False,
    rng=None,
) -> list[Tensor]:
    """Contextual code representations for levels 1..up_to_level.

    The mode picks which directions propagate adaptively; a direction
    that is switched off contributes the code's raw embedding instead,
    so the fuse layer's input width stays fixed across variants.
    """
    if mode == IclMode.NONE:
        raise ValueError("code_representations is undefined with mode 'none'")
    top = up_to_level or tax.depth
    msgs: list[Tensor] = []
    for level in range(1, top + 1):
        own = embeddings[level - 1]
        if mode == IclMode.FIXED:
            v_msg = adaptive_propagate(embeddings, tax, level, "v", uniform=True)
            h_msg = own
        elif mode == IclMode.ADAPTIVE_V:
            v_msg = adaptive_propagate(embeddings, tax, level, "v")
            h_msg = own
        elif mode == IclMode.ADAPTIVE_H:
            v_msg = own
            h_msg = adaptive_propagate(embeddings, tax, level, "h")
        else:
            v_msg = adaptive_propagate(embeddings, tax, level, "v")
            h_msg = adaptive_propagate(embeddings, tax, level, "h")
        msgs.append(fuse_hv(h_msg, v_msg, fuse_mlps[level - 1],
                            drop_p=drop_p, train=train, rng=rng))
    return [
        contextualize(tax, msgs, level, g_mlps[level - 1],
                      drop_p=drop_p, train=train, rng=rng)
        for level in range(1, top + 1)
    ]
