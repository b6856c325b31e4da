"""Training loop: batched epochs with Adam, validation-driven early
stopping, and best-epoch checkpointing.  Single-worker and fully seeded,
so a (seed, config, corpus) triple reproduces checkpoints byte for byte.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import save_checkpoint
from .config import ModelConfig
from .corpus import CorpusSplit, PatentRecord, Vocabulary, encode_records, history_of
from .errors import ContractError
from .metrics import MetricTable, RankedPrediction, evaluate_run, rank_codes
from .model import PatentModel
from .optim import Adam
from .taxonomy import Taxonomy
from .tensor import no_grad


@dataclass
class TrainReport:
    """Per-epoch training record; the persisted checkpoint is the best epoch's."""

    train_loss: list[float] = field(default_factory=list)
    val_tables: list[MetricTable] = field(default_factory=list)
    best_epoch: int = 0
    best_val_metric: float = float("-inf")
    stopped_epoch: int = 0
    selection_metric: str = ""
    wall_time: float = 0.0

    def summary(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "val_metric": [t.value("ndcg", t.ks[-1]) for t in self.val_tables],
            "best_epoch": self.best_epoch,
            "best_val_metric": self.best_val_metric,
            "stopped_epoch": self.stopped_epoch,
            "selection_metric": self.selection_metric,
        }


def histories_for(
    records: list[PatentRecord], split: CorpusSplit, d_max: int, enabled: bool = True
) -> list[list[PatentRecord]]:
    """Training-split history (strictly earlier, at most d_max) per record."""
    if not enabled:
        return [[] for _ in records]
    return [history_of(r.assignee, r.time, split, d_max) for r in records]


def usable_ks(n_codes: int, ks=(1, 3, 5)) -> tuple[int, ...]:
    """Ranking cutoffs that fit the label space (k cannot exceed the code count)."""
    fitting = tuple(k for k in ks if k <= n_codes)
    if not fitting:
        raise ContractError(f"no usable K in {ks} for {n_codes} codes")
    return fitting


def ranked_predictions(
    model: PatentModel, records: list[PatentRecord], split: CorpusSplit
) -> list[RankedPrediction]:
    """Forward-only predictions, codes ranked by descending probability
    (ties broken by taxonomy code order)."""
    hists = histories_for(records, split, model.config.D, enabled=model.config.history)
    out: list[RankedPrediction] = []
    level = model.config.level
    bs = model.config.batch_size
    with no_grad():
        for start in range(0, len(records), bs):
            chunk = records[start : start + bs]
            chunk_h = hists[start : start + bs]
            probs = model.forward_batch(chunk, chunk_h, train=False).numpy()
            for r, row in zip(chunk, probs):
                out.append(
                    RankedPrediction(
                        patent_id=r.id,
                        ranking=rank_codes(row, model.codes),
                        true_codes=set(r.labels(level)),
                    )
                )
    return out


def evaluate_model(
    model: PatentModel, records: list[PatentRecord], split: CorpusSplit, ks=(1, 3, 5)
) -> MetricTable:
    return evaluate_run(ranked_predictions(model, records, split), ks=ks)


def train(
    config: ModelConfig,
    split: CorpusSplit,
    taxonomy: Taxonomy,
    vocab: Vocabulary | None = None,
    min_count: int = 5,
    checkpoint_path=None,
    log=None,
) -> tuple[PatentModel, TrainReport]:
    """Run the full training procedure and return the best-epoch model.

    Per epoch: shuffle the training split, and per batch encode texts,
    compute code representations, build history behavior vectors, predict,
    take the cross-entropy loss, and apply one Adam step.  Early stopping
    watches validation NDCG at the largest usable K (5 when the label space
    allows it) and fires after max(1, patience) consecutive non-improving
    epochs; the best epoch's parameters are what the function returns and
    persists.
    """
    config.validate()
    started = time.perf_counter()
    if vocab is None:
        vocab = Vocabulary.build((r.words for r in split.train), min_count=min_count)
    for part in (split.train, split.validation, split.test):
        encode_records(part, vocab, n_max=config.N)

    model = PatentModel(config, taxonomy, vocab, seed=config.seed)
    seq = np.random.SeedSequence(config.seed)
    shuffle_rng, dropout_rng = (np.random.default_rng(s) for s in seq.spawn(2))
    optimizer = Adam(model.params, lr=config.lr)

    train_hists = histories_for(split.train, split, config.D, enabled=config.history)
    ks = usable_ks(model.n_codes)
    report = TrainReport(selection_metric=f"ndcg@{ks[-1]}")

    best_params: dict[str, np.ndarray] | None = None
    non_improving = 0
    stop_after = max(1, config.patience)
    n_train = len(split.train)
    order = np.arange(n_train)

    for epoch in range(1, config.max_epochs + 1):
        shuffle_rng.shuffle(order)
        epoch_loss = 0.0
        for b_start in range(0, n_train, config.batch_size):
            batch_idx = order[b_start : b_start + config.batch_size]
            records = [split.train[i] for i in batch_idx]
            hists = [train_hists[i] for i in batch_idx]
            loss = model.loss_batch(records, hists, train=True, rng=dropout_rng)
            value = loss.item()
            if not np.isfinite(value):
                raise RuntimeError(
                    f"non-finite loss {value} in epoch {epoch}, "
                    f"batch starting at index {b_start}"
                )
            loss.backward()
            optimizer.step()
            epoch_loss += value
        report.train_loss.append(epoch_loss)

        val_records = split.validation if split.validation else split.train
        table = evaluate_model(model, val_records, split, ks=ks)
        report.val_tables.append(table)
        metric = table.value("ndcg", ks[-1])
        if log:
            log(
                f"epoch {epoch:3d}  loss {epoch_loss:12.4f}  "
                f"val ndcg@{ks[-1]} {metric:.4f}"
            )
        if metric > report.best_val_metric:
            report.best_val_metric = metric
            report.best_epoch = epoch
            best_params = {k: p.data.copy() for k, p in model.params.items()}
            non_improving = 0
        else:
            non_improving += 1
            if non_improving >= stop_after:
                report.stopped_epoch = epoch
                break
    if report.stopped_epoch == 0:
        report.stopped_epoch = len(report.train_loss)

    if best_params is not None:
        for name, p in model.params.items():
            p.data = best_params[name]
            p.grad = None
    report.wall_time = time.perf_counter() - started
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, model.params, config, vocab, taxonomy)
    return model, report
