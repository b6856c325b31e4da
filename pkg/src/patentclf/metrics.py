"""Ranking metrics: Precision@K, Recall@K, NDCG@K, averaged over patents."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError


@dataclass
class RankedPrediction:
    """One patent's predicted code ranking (descending score) and true codes."""

    patent_id: str
    ranking: list[str]
    true_codes: set[str]

    def __post_init__(self):
        if len(set(self.ranking)) != len(self.ranking):
            raise ContractError(f"duplicate codes in ranking for {self.patent_id}")


def rank_codes(scores: np.ndarray, codes: list[str]) -> list[str]:
    """Order codes by descending score, ties broken by code position."""
    # stable sort on -score keeps the original (taxonomy) order within ties
    order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    return [codes[i] for i in order]


def _check(r: RankedPrediction, k: int):
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    if len(r.ranking) < k:
        raise ContractError(
            f"ranking for {r.patent_id} has {len(r.ranking)} codes, need at least {k}"
        )


def precision_at_k(r: RankedPrediction, k: int) -> float:
    _check(r, k)
    hits = sum(1 for c in r.ranking[:k] if c in r.true_codes)
    return hits / k


def recall_at_k(r: RankedPrediction, k: int) -> float:
    _check(r, k)
    hits = sum(1 for c in r.ranking[:k] if c in r.true_codes)
    return hits / len(r.true_codes)


def ndcg_at_k(r: RankedPrediction, k: int) -> float:
    _check(r, k)
    dcg = sum(
        1.0 / math.log2(pos + 1)
        for pos, code in enumerate(r.ranking[:k], start=1)
        if code in r.true_codes
    )
    ideal = sum(1.0 / math.log2(pos + 1) for pos in range(1, min(k, len(r.true_codes)) + 1))
    return dcg / ideal


@dataclass
class MetricTable:
    """Mean Precision/Recall/NDCG per K over a prediction run."""

    ks: tuple[int, ...]
    values: dict[tuple[str, int], float] = field(default_factory=dict)
    n_patents: int = 0

    METRICS = ("precision", "recall", "ndcg")

    def value(self, metric: str, k: int) -> float:
        return self.values[(metric, k)]

    def to_text(self) -> str:
        header = f"{'K':>4}  " + "  ".join(f"{m.capitalize():>9}" for m in self.METRICS)
        lines = [header]
        for k in self.ks:
            row = f"{k:>4}  " + "  ".join(
                f"{self.values[(m, k)]:>9.4f}" for m in self.METRICS
            )
            lines.append(row)
        return "\n".join(lines)

    def to_csv(self) -> str:
        lines = ["metric,k,value"]
        for m in self.METRICS:
            for k in self.ks:
                lines.append(f"{m},{k},{self.values[(m, k)]:.6f}")
        return "\n".join(lines)


def evaluate_run(preds: list[RankedPrediction], ks=(1, 3, 5)) -> MetricTable:
    """Unweighted mean of each metric over patents, per K.

    Patents with empty true-code sets are skipped (their metrics would be
    0/0); an empty run after skipping is a contract violation.
    """
    kept = [r for r in preds if r.true_codes]
    if not kept:
        raise ContractError("evaluate_run needs at least one patent with true codes")
    table = MetricTable(ks=tuple(ks), n_patents=len(kept))
    fns = {"precision": precision_at_k, "recall": recall_at_k, "ndcg": ndcg_at_k}
    for name, fn in fns.items():
        for k in table.ks:
            table.values[(name, k)] = sum(fn(r, k) for r in kept) / len(kept)
    return table
