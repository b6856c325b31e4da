"""Patent data model: records, vocabulary, corpus files, temporal splits.

Corpus files are JSON Lines, one object per line:
``{"id": str, "assignee": str, "time": int, "text": str, "labels": [leaf codes]}``.
The loader lowercases and whitespace-tokenizes the text and derives
ancestor labels from the taxonomy, so files carry deepest-level codes only.
"""

from __future__ import annotations

import bisect
import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, CorpusError, TaxonomyError
from .taxonomy import Taxonomy

MASK_ID = 0
PAD_ID = 1
MASK_WORD = "<mask>"
PAD_WORD = "<pad>"


@dataclass
class PatentRecord:
    """One patent: tokenized text, assignee, timestamp, per-level label sets."""

    id: str
    assignee: str
    time: int
    words: list[str]
    labels_by_level: list[set[str]]
    tokens: list[int] | None = None  # encoded ids, truncated, no padding

    def labels(self, level: int) -> set[str]:
        return self.labels_by_level[level - 1]

    @property
    def valid_len(self) -> int:
        if self.tokens is None:
            raise ContractError(f"record {self.id} has not been encoded")
        return len(self.tokens)


class Vocabulary:
    """Word-to-id map with reserved MASK (0, also out-of-vocabulary) and PAD (1)."""

    def __init__(self, words: list[str], dim: int | None = None):
        if words[:2] != [MASK_WORD, PAD_WORD]:
            words = [MASK_WORD, PAD_WORD] + [w for w in words if w not in (MASK_WORD, PAD_WORD)]
        self.words = list(words)
        self.index = {w: i for i, w in enumerate(self.words)}
        self.dim = dim

    def __len__(self) -> int:
        return len(self.words)

    def id_of(self, word: str) -> int:
        return self.index.get(word, MASK_ID)

    @classmethod
    def build(cls, token_lists, min_count: int = 5, dim: int | None = None) -> "Vocabulary":
        """Vocabulary from training-split token lists; rare words are dropped.

        Kept words are ordered by descending count, ties by first appearance,
        which makes ids deterministic for a given corpus.
        """
        counts: Counter[str] = Counter()
        first_seen: dict[str, int] = {}
        pos = 0
        for tokens in token_lists:
            for w in tokens:
                counts[w] += 1
                if w not in first_seen:
                    first_seen[w] = pos
                pos += 1
        kept = [w for w, c in counts.items() if c >= min_count]
        kept.sort(key=lambda w: (-counts[w], first_seen[w]))
        return cls([MASK_WORD, PAD_WORD] + kept, dim=dim)

    def to_dict(self) -> dict:
        return {"words": self.words, "dim": self.dim}

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        return cls(d["words"], dim=d.get("dim"))


def encode_text(raw, vocab: Vocabulary, n_max: int = 100) -> tuple[list[int], int]:
    """First ``n_max`` words as ids, PAD-filled, plus the count of real tokens.

    Out-of-vocabulary words map to MASK.  Integer inputs are treated as
    already-encoded ids and pass through, so re-encoding an encoded text
    of length ``n_max`` is the identity.
    """
    ids: list[int] = []
    for w in raw[:n_max]:
        if isinstance(w, (int, np.integer)):
            wid = int(w)
            if not 0 <= wid < len(vocab):
                raise ContractError(f"token id {wid} outside vocabulary of {len(vocab)}")
            ids.append(wid)
        else:
            ids.append(vocab.id_of(w))
    while ids and ids[-1] == PAD_ID:
        ids.pop()
    valid = len(ids)
    ids.extend([PAD_ID] * (n_max - valid))
    return ids, valid


def encode_records(records: list[PatentRecord], vocab: Vocabulary, n_max: int = 100):
    """Fill ``tokens`` on every record (truncated to n_max, no padding stored)."""
    for r in records:
        ids, valid = encode_text(r.words, vocab, n_max)
        r.tokens = ids[:valid]


def load_corpus(path, taxonomy: Taxonomy) -> list[PatentRecord]:
    """Read a JSON Lines corpus file, deriving ancestor labels via the taxonomy."""
    records: list[PatentRecord] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}: line {lineno}: malformed JSON ({e.msg})") from e
            try:
                rid = str(obj["id"])
                assignee = str(obj["assignee"])
                time = int(obj["time"])
                text = str(obj["text"])
                labels = list(obj["labels"])
            except (KeyError, TypeError, ValueError) as e:
                raise CorpusError(f"{path}: line {lineno}: missing or invalid field ({e})") from e
            try:
                by_level = taxonomy.closure(labels)
            except TaxonomyError as e:
                raise CorpusError(f"record '{rid}': {e}") from e
            records.append(
                PatentRecord(
                    id=rid,
                    assignee=assignee,
                    time=time,
                    words=text.lower().split(),
                    labels_by_level=by_level,
                )
            )
    return records


def save_corpus(path, records: list[PatentRecord], leaf_level: int):
    """Write records as JSON Lines with deepest-level labels only."""
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            obj = {
                "id": r.id,
                "assignee": r.assignee,
                "time": r.time,
                "text": " ".join(r.words),
                "labels": sorted(r.labels(leaf_level)),
            }
            f.write(json.dumps(obj) + "\n")


@dataclass
class CorpusSplit:
    """Disjoint train/validation/test record lists with a per-assignee history index.

    Histories are always looked up in the training split: that is the pool
    of patents the model is allowed to have seen, for training and
    evaluation alike.
    """

    train: list[PatentRecord]
    validation: list[PatentRecord]
    test: list[PatentRecord]
    _by_assignee: dict[str, list[PatentRecord]] = field(init=False, repr=False)
    _times: dict[str, list[int]] = field(init=False, repr=False)

    def __post_init__(self):
        ids: set[str] = set()
        for part in (self.train, self.validation, self.test):
            for r in part:
                if r.id in ids:
                    raise ContractError(f"record id '{r.id}' appears in more than one split")
                ids.add(r.id)
        self._by_assignee = {}
        for pos, r in enumerate(self.train):
            self._by_assignee.setdefault(r.assignee, []).append(r)
        for recs in self._by_assignee.values():
            # stable sort: corpus order breaks equal-timestamp ties
            recs.sort(key=lambda r: r.time)
        self._times = {a: [r.time for r in recs] for a, recs in self._by_assignee.items()}

    def all_records(self) -> list[PatentRecord]:
        return self.train + self.validation + self.test


def history_of(
    assignee: str, before: int, split: CorpusSplit, d_max: int
) -> list[PatentRecord]:
    """The assignee's most recent training-split patents strictly before ``before``.

    At most ``d_max`` records, oldest first; empty when the assignee has no
    earlier patents.  Records at exactly ``before`` are excluded so a
    patent never sees itself or same-timestamp peers.
    """
    recs = split._by_assignee.get(assignee)
    if not recs:
        return []
    cut = bisect.bisect_left(split._times[assignee], before)
    start = max(0, cut - d_max)
    return recs[start:cut]


def split_by_time(records: list[PatentRecord], train_end: int, val_end: int) -> CorpusSplit:
    """Temporal split: train t <= train_end, validation t <= val_end, test after."""
    if not train_end < val_end:
        raise ContractError(f"need train_end < val_end, got {train_end}, {val_end}")
    train = [r for r in records if r.time <= train_end]
    val = [r for r in records if train_end < r.time <= val_end]
    test = [r for r in records if r.time > val_end]
    return CorpusSplit(train=train, validation=val, test=test)


def load_word_vectors(path) -> tuple[int, dict[str, np.ndarray]]:
    """Pretrained vectors: a 'count dim' header then one 'word v1 ... vT' line each."""
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise CorpusError(f"{path}: expected 'count dim' header")
        count, dim = int(header[0]), int(header[1])
        vectors: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(f, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise CorpusError(f"{path}: line {lineno}: expected {dim} values")
            vectors[parts[0]] = np.asarray([float(v) for v in parts[1:]], dtype=np.float32)
    if len(vectors) != count:
        raise CorpusError(f"{path}: header promised {count} vectors, found {len(vectors)}")
    return dim, vectors
