"""Full classifier: text encoder + taxonomy correlations + history graphs
+ label-attention prediction, assembled from a config and exposing a flat
named-parameter map for the optimizer and checkpoints.
"""

from __future__ import annotations

import numpy as np

from .code_correlation import IclMode, code_representations
from .config import ModelConfig
from .corpus import PatentRecord, Vocabulary
from .errors import ConfigError, ContractError
from .history import HistoryEncoder
from .layers import Mlp2, init_uniform
from .predictor import DecoderParams, bce_loss, label_attention
from .taxonomy import Taxonomy
from .tensor import Tensor, concat, dropout, gather_rows, sigmoid, transpose
from .text_encoder import BiLstmParams, bilstm_encode_batch, embed_words


class PatentModel:
    """Holds all trainable tensors and runs batched forward passes.

    Which parameters exist depends on the config: taxonomy-correlation
    parameters only for the levels the classification level can reach,
    history channels only for the enabled feature types.  The parameter
    map's insertion order is the checkpoint manifest order.
    """

    def __init__(
        self,
        config: ModelConfig,
        taxonomy: Taxonomy,
        vocab: Vocabulary,
        seed: int | None = None,
        dtype=np.float32,
    ):
        config.validate()
        if config.level > taxonomy.depth:
            raise ConfigError(
                f"classification level {config.level} exceeds taxonomy depth {taxonomy.depth}"
            )
        self.config = config
        self.taxonomy = taxonomy
        self.vocab = vocab
        self.dtype = dtype
        self.n_codes = taxonomy.n_codes(config.level)
        self.codes = taxonomy.codes(config.level)
        rng = np.random.default_rng(config.seed if seed is None else seed)

        t_dim, f_dim = config.T, config.F
        width = 2 * f_dim
        self.params: dict[str, Tensor] = {}

        self.word_emb = init_uniform(rng, (len(vocab), t_dim), t_dim, dtype)
        self.params["word_emb"] = self.word_emb

        self.lstm = BiLstmParams.create(rng, t_dim, f_dim, dtype)
        self.params.update(self.lstm.named("lstm"))

        self.icl_emb: list[Tensor] = []
        self.icl_fuse: list[Mlp2] = []
        self.icl_ctx: list[Mlp2] = []
        if config.icl != IclMode.NONE:
            top = config.level
            emb_top = top if config.icl == IclMode.ADAPTIVE_H else min(top + 1, taxonomy.depth)
            for lvl in range(1, emb_top + 1):
                e = init_uniform(rng, (taxonomy.n_codes(lvl), width), width, dtype)
                self.icl_emb.append(e)
                self.params[f"icl.emb.L{lvl}"] = e
            for lvl in range(1, top + 1):
                fuse = Mlp2.create(rng, 2 * width, width, width, dtype)
                self.icl_fuse.append(fuse)
                self.params.update(fuse.named(f"icl.fuse.L{lvl}"))
            for lvl in range(1, top + 1):
                ctx = Mlp2.create(rng, lvl * width, width, width, dtype)
                self.icl_ctx.append(ctx)
                self.params.update(ctx.named(f"icl.ctx.L{lvl}"))

        self.static_codes = init_uniform(rng, (self.n_codes, width), width, dtype)
        self.params["static_codes"] = self.static_codes

        self.hist: HistoryEncoder | None = None
        if config.history:
            label_proj = None
            text_weights = None
            label_weights = None
            if config.use_label:
                label_proj = init_uniform(rng, (self.n_codes, width), width, dtype)
                self.params["hist.label_proj"] = label_proj
            if config.use_text:
                text_weights = self._gcn_stack(rng, 2 * t_dim, f_dim, config.I, dtype)
                for i, w in enumerate(text_weights):
                    self.params[f"hist.text.{i}"] = w
            if config.use_label:
                label_weights = self._gcn_stack(rng, 2 * width, f_dim, config.I, dtype)
                for i, w in enumerate(label_weights):
                    self.params[f"hist.label.{i}"] = w
            self.hist = HistoryEncoder(
                word_emb=self.word_emb,
                label_proj=label_proj,
                text_weights=text_weights,
                label_weights=label_weights,
                level_index={c: i for i, c in enumerate(self.codes)},
                n_codes=self.n_codes,
                d_max=config.D,
                window=config.s,
                hidden=f_dim,
                use_pe=config.use_pe,
                use_text=config.use_text,
                use_label=config.use_label,
                level=config.level,
            )

        self.decoder = DecoderParams(
            text=Mlp2.create(rng, 2 * width, width, 1, dtype),
            behavior=Mlp2.create(rng, width, width, self.n_codes, dtype),
        )
        self.params.update(self.decoder.named("dec"))

    @staticmethod
    def _gcn_stack(rng, d_in: int, d_hidden: int, layers: int, dtype) -> list[Tensor]:
        widths = [d_in] + [d_hidden] * layers
        return [
            init_uniform(rng, (widths[i], widths[i + 1]), widths[i], dtype)
            for i in range(layers)
        ]

    # -- forward -----------------------------------------------------------------

    def code_reprs(self, train: bool = False, rng=None, all_levels: bool = False) -> list[Tensor]:
        """Contextual code representations per level (empty list when off)."""
        if self.config.icl == IclMode.NONE:
            return []
        top = self.config.level
        return code_representations(
            self.icl_emb,
            self.taxonomy,
            self.config.icl,
            self.icl_fuse,
            self.icl_ctx,
            up_to_level=top,
            drop_p=self.config.dropout if train else 0.0,
            train=train,
            rng=rng,
        )

    def multi_hot(self, records: list[PatentRecord]) -> np.ndarray:
        hot = np.zeros((len(records), self.n_codes), dtype=self.dtype)
        index = self.taxonomy.index_of
        for i, r in enumerate(records):
            for code in r.labels(self.config.level):
                hot[i, index[code]] = 1.0
        return hot

    def forward_batch(
        self,
        records: list[PatentRecord],
        histories: list[list[PatentRecord]],
        train: bool = False,
        rng=None,
    ) -> Tensor:
        """Per-code probabilities, one row per record."""
        if len(records) != len(histories):
            raise ContractError("records and histories must align")
        cfg = self.config
        drop = cfg.dropout if train else 0.0

        lens = []
        for r in records:
            if r.tokens is None:
                raise ContractError(f"record {r.id} has not been encoded")
            if len(r.tokens) == 0:
                raise ContractError(f"record {r.id} has no words to attend over")
            lens.append(min(len(r.tokens), cfg.N))
        lens = np.asarray(lens, dtype=np.intp)
        n_b = int(lens.max())
        ids = np.full((len(records), n_b), fill_value=1, dtype=np.intp)  # PAD fill
        for i, r in enumerate(records):
            ids[i, : lens[i]] = r.tokens[: lens[i]]

        emb = embed_words(ids.reshape(-1), self.word_emb)
        v_all = bilstm_encode_batch(emb, lens, n_b, self.lstm)
        v_all = dropout(v_all, drop, train, rng)

        reprs = self.code_reprs(train=train, rng=rng)
        h_ctx = reprs[cfg.level - 1] if reprs else self.static_codes

        text_rows = []
        behavior_rows = []
        for i, (r, hist) in enumerate(zip(records, histories)):
            v_k = gather_rows(v_all, np.arange(i * n_b, (i + 1) * n_b, dtype=np.intp))
            m_p = label_attention(h_ctx, v_k, int(lens[i]))
            m_s = label_attention(self.static_codes, v_k, int(lens[i]))
            m_t = concat([m_p, m_s], axis=1)
            text_rows.append(transpose(self.decoder.text(m_t, drop_p=drop, train=train, rng=rng)))
            if self.hist is not None:
                m_b = self.hist.embed(hist)
            else:
                m_b = Tensor(np.zeros(2 * cfg.F, dtype=self.dtype))
            behavior_rows.append(m_b.reshape((1, m_b.shape[0])))

        text_logits = concat(text_rows, axis=0)
        behavior = concat(behavior_rows, axis=0)
        behavior_logits = self.decoder.behavior(behavior, drop_p=drop, train=train, rng=rng)
        return sigmoid(text_logits + behavior_logits)

    def loss_batch(
        self,
        records: list[PatentRecord],
        histories: list[list[PatentRecord]],
        train: bool = False,
        rng=None,
    ) -> Tensor:
        probs = self.forward_batch(records, histories, train=train, rng=rng)
        return bce_loss(probs, self.multi_hot(records), reduction=self.config.loss_reduction)
