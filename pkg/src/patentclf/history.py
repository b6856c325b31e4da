"""Assignee history modeling: sliding-window patent graphs with dual
text/label feature channels, sinusoidal position encoding, stacked graph
convolutions, and mean readout into a single behavior vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import PatentRecord
from .errors import ConfigError, ContractError, DimensionError
from .tensor import Tensor, concat, matmul, relu, reshape, tmean

__all__ = [
    "PatentGraph",
    "build_patent_graph",
    "positional_table",
    "positional_encode",
    "gcn_forward",
    "readout_fuse",
    "HistoryEncoder",
]


@dataclass
class PatentGraph:
    """Weighted adjacency over one assignee's recent patents, oldest first.

    Row r aggregates from itself (weight 1) and its up-to-window-1
    predecessors with weight 1/(r-c+1).
    """

    records: list[PatentRecord]
    adjacency: np.ndarray
    window: int

    @property
    def size(self) -> int:
        return len(self.records)


def sliding_window_adjacency(n: int, window: int, dtype=np.float64) -> np.ndarray:
    if n < 1 or window < 1:
        raise ContractError(f"need n >= 1 and window >= 1, got n={n}, window={window}")
    r = np.arange(n)[:, None]
    c = np.arange(n)[None, :]
    d = r - c
    with np.errstate(divide="ignore"):
        a = np.where((d >= 0) & (d < window), 1.0 / (d + 1.0), 0.0)
    return a.astype(dtype)


def build_patent_graph(
    history: list[PatentRecord], d_max: int, window: int
) -> PatentGraph | None:
    """Graph over the most recent <= d_max history records; None when empty."""
    if not history:
        return None
    recent = history[-d_max:]
    return PatentGraph(
        records=recent,
        adjacency=sliding_window_adjacency(len(recent), window),
        window=window,
    )


def positional_table(n: int, d: int, base: float = 10000.0, dtype=np.float64) -> np.ndarray:
    """Sinusoidal position table (n, d): even columns sin, odd columns cos."""
    if d % 2 != 0:
        raise ConfigError(f"positional encoding width must be even, got {d}")
    pos = np.arange(n, dtype=np.float64)[:, None]
    rates = base ** (2.0 * np.arange(d // 2, dtype=np.float64) / d)
    table = np.empty((n, d), dtype=np.float64)
    table[:, 0::2] = np.sin(pos / rates)
    table[:, 1::2] = np.cos(pos / rates)
    return table.astype(dtype)


def positional_encode(x: Tensor, base: float = 10000.0, enabled: bool = True) -> Tensor:
    """Concatenate features with their position table, doubling the width.

    With ``enabled=False`` (the no-position-signal ablation) the table is
    replaced by zeros so downstream widths are unchanged.
    """
    n, d = x.shape
    if enabled:
        table = positional_table(n, d, base=base, dtype=x.data.dtype)
    else:
        if d % 2 != 0:
            raise ConfigError(f"positional encoding width must be even, got {d}")
        table = np.zeros((n, d), dtype=x.data.dtype)
    return concat([x, Tensor(table)], axis=1)


def gcn_forward(graph: PatentGraph, h0: Tensor, weights: list[Tensor]) -> Tensor:
    """Stacked graph convolutions: ReLU(A @ H @ W) per layer."""
    a = Tensor(graph.adjacency.astype(h0.data.dtype))
    h = h0
    for w in weights:
        if h.shape[1] != w.shape[0]:
            raise DimensionError(
                f"gcn_forward: layer expects width {w.shape[0]}, got {h.shape[1]}"
            )
        h = relu(matmul(matmul(a, h), w))
    return h


def readout_fuse(h_text: Tensor, h_label: Tensor) -> Tensor:
    """Mean-pool each channel over nodes and concatenate label-then-text."""
    if h_text.shape != h_label.shape:
        raise DimensionError(
            f"readout_fuse: channel shapes differ, {h_text.shape} vs {h_label.shape}"
        )
    pooled = concat(
        [tmean(h_label, axis=0, keepdims=True), tmean(h_text, axis=0, keepdims=True)],
        axis=1,
    )
    return reshape(pooled, (pooled.shape[1],))


class HistoryEncoder:
    """Turns one assignee history into a behavior vector of width 2F.

    Holds the label-projection matrix and both GCN weight stacks, plus the
    ablation switches.  An empty history yields the zero vector.
    """

    def __init__(
        self,
        word_emb: Tensor,
        label_proj: Tensor | None,
        text_weights: list[Tensor] | None,
        label_weights: list[Tensor] | None,
        level_index: dict[str, int],
        n_codes: int,
        d_max: int,
        window: int,
        hidden: int,
        use_pe: bool = True,
        use_text: bool = True,
        use_label: bool = True,
        level: int = 3,
    ):
        self.word_emb = word_emb
        self.label_proj = label_proj
        self.text_weights = text_weights
        self.label_weights = label_weights
        self.level_index = level_index
        self.n_codes = n_codes
        self.d_max = d_max
        self.window = window
        self.hidden = hidden
        self.use_pe = use_pe
        self.use_text = use_text
        self.use_label = use_label
        self.level = level

    @property
    def out_width(self) -> int:
        return 2 * self.hidden

    def multi_hot(self, record: PatentRecord, dtype) -> np.ndarray:
        row = np.zeros(self.n_codes, dtype=dtype)
        for code in record.labels(self.level):
            row[self.level_index[code]] = 1.0
        return row

    def _mean_text_rows(self, graph: PatentGraph) -> Tensor:
        from .text_encoder import embed_words

        rows = []
        for r in graph.records:
            emb = embed_words(r.tokens, self.word_emb)
            rows.append(tmean(emb, axis=0, keepdims=True))
        return concat(rows, axis=0)

    def _label_rows(self, graph: PatentGraph) -> Tensor:
        hot = np.stack([self.multi_hot(r, self.word_emb.data.dtype) for r in graph.records])
        return matmul(Tensor(hot), self.label_proj)

    def embed(self, history: list[PatentRecord]) -> Tensor:
        """Behavior vector for a history list (oldest first)."""
        graph = build_patent_graph(history, self.d_max, self.window)
        dtype = self.word_emb.data.dtype
        if graph is None:
            return Tensor(np.zeros(self.out_width, dtype=dtype))
        if self.use_text:
            x = positional_encode(self._mean_text_rows(graph), enabled=self.use_pe)
            h_text = gcn_forward(graph, x, self.text_weights)
        else:
            h_text = Tensor(np.zeros((graph.size, self.hidden), dtype=dtype))
        if self.use_label:
            x = positional_encode(self._label_rows(graph), enabled=self.use_pe)
            h_label = gcn_forward(graph, x, self.label_weights)
        else:
            h_label = Tensor(np.zeros((graph.size, self.hidden), dtype=dtype))
        return readout_fuse(h_text, h_label)
