"""Planted-structure synthetic corpora for desk-scale verification.

Every leaf code owns a block of topic words; every assignee owns a small
preferred-code set.  A patent's codes repeat its assignee's previous
patent's codes with probability ``rho`` (else draw from the preference
set), and its words come from its codes' topic blocks with probability
``tau`` (else uniform noise).  Turning either knob up plants a signal
that the matching model component should be able to exploit.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .corpus import CorpusSplit, PatentRecord
from .errors import ConfigError
from .taxonomy import Taxonomy


@dataclass
class SynthSpec:
    """Knobs for the generator; defaults give a 3-level 4/12/36 taxonomy."""

    level_sizes: tuple[int, ...] = (4, 12, 36)
    vocab_size: int = 400
    words_per_patent: int = 30
    n_assignees: int = 20
    patents_per_assignee: int = 30
    rho: float = 0.5           # chance a code repeats from the previous patent
    tau: float = 0.9           # chance a word comes from the codes' topic blocks
    codes_min: int = 1
    codes_max: int = 3
    preference_size: int = 3   # preferred leaf codes per assignee
    sibling_clustered: bool = False
    parent_word_share: float = 0.5  # in sibling-clustered mode: chance a topic word
                                    # comes from the whole sibling group's pool
    train_frac: float = 0.8
    val_frac: float = 0.1

    def validate(self):
        if len(self.level_sizes) < 1 or any(s < 1 for s in self.level_sizes):
            raise ConfigError(f"bad level sizes {self.level_sizes}")
        for upper, lower in zip(self.level_sizes, self.level_sizes[1:]):
            if lower % upper != 0:
                raise ConfigError(
                    f"level sizes {self.level_sizes}: {lower} is not divisible by {upper}"
                )
        n_leaves = self.level_sizes[-1]
        if self.vocab_size < n_leaves:
            raise ConfigError(
                f"vocab size {self.vocab_size} smaller than leaf count {n_leaves}"
            )
        if not 0.0 <= self.rho <= 1.0 or not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"rho and tau must be in [0, 1], got {self.rho}, {self.tau}")
        if not 1 <= self.codes_min <= self.codes_max:
            raise ConfigError(f"bad code count range {self.codes_min}..{self.codes_max}")
        if self.words_per_patent < 1 or self.n_assignees < 1 or self.patents_per_assignee < 1:
            raise ConfigError("counts must be positive")
        if not 0.0 < self.train_frac < 1.0 or not 0.0 < self.val_frac < 1.0 - self.train_frac:
            raise ConfigError(
                f"bad split fractions train={self.train_frac}, val={self.val_frac}"
            )

    def to_dict(self) -> dict:
        return {
            "level_sizes": list(self.level_sizes),
            "vocab_size": self.vocab_size,
            "words_per_patent": self.words_per_patent,
            "n_assignees": self.n_assignees,
            "patents_per_assignee": self.patents_per_assignee,
            "rho": self.rho,
            "tau": self.tau,
            "codes_min": self.codes_min,
            "codes_max": self.codes_max,
            "preference_size": self.preference_size,
            "sibling_clustered": self.sibling_clustered,
            "parent_word_share": self.parent_word_share,
            "train_frac": self.train_frac,
            "val_frac": self.val_frac,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        spec = cls(**{**d, "level_sizes": tuple(d.get("level_sizes", (4, 12, 36)))})
        return spec


def make_taxonomy(level_sizes) -> Taxonomy:
    """Uniform-branching taxonomy with readable code names (A, A0, A0a, ...)."""
    letters = string.ascii_uppercase
    if level_sizes[0] > len(letters):
        raise ConfigError(f"at most {len(letters)} level-1 codes supported")
    levels: list[list[str]] = [[letters[i] for i in range(level_sizes[0])]]
    parent: dict[str, str] = {}
    for upper_size, lower_size in zip(level_sizes, level_sizes[1:]):
        branch = lower_size // upper_size
        lower: list[str] = []
        for p in levels[-1]:
            for j in range(branch):
                child = f"{p}{j}" if len(levels) == 1 else f"{p}{string.ascii_lowercase[j]}"
                parent[child] = p
                lower.append(child)
        levels.append(lower)
    return Taxonomy(levels, parent)


def generate_synthetic(spec: SynthSpec, seed: int) -> tuple[Taxonomy, CorpusSplit]:
    """Deterministic corpus for a seed, split temporally per assignee."""
    spec.validate()
    rng = np.random.default_rng(seed)
    tax = make_taxonomy(spec.level_sizes)
    leaves = tax.codes(tax.depth)
    n_leaves = len(leaves)

    # Topic blocks: leaf i owns a contiguous slice of the vocabulary.
    block = spec.vocab_size // n_leaves
    word_blocks = {
        code: np.arange(i * block, (i + 1) * block) for i, code in enumerate(leaves)
    }
    # In sibling-clustered mode a share of topic words comes from the whole
    # sibling group's pool, so text pins the group more sharply than the leaf.
    group_blocks: dict[str, np.ndarray] = {}
    if spec.sibling_clustered and tax.depth > 1:
        for code in leaves:
            siblings = tax.children_of[tax.parent_of[code]]
            group_blocks[code] = np.concatenate([word_blocks[s] for s in siblings])

    preferences: dict[str, list[str]] = {}
    for a in range(spec.n_assignees):
        name = f"a{a:03d}"
        if spec.sibling_clustered:
            # preference = all leaves under one random mid-level parent
            parent_pool = tax.codes(tax.depth - 1) if tax.depth > 1 else leaves
            chosen = rng.choice(len(parent_pool))
            group = tax.children_of[parent_pool[chosen]] if tax.depth > 1 else list(leaves)
            preferences[name] = list(group)
        else:
            count = min(spec.preference_size, n_leaves)
            preferences[name] = list(rng.choice(leaves, size=count, replace=False))

    def draw_codes(prev: list[str], pref: list[str]) -> list[str]:
        n_codes = int(rng.integers(spec.codes_min, spec.codes_max + 1))
        chosen: list[str] = []
        for j in range(n_codes):
            if prev and rng.random() < spec.rho:
                code = prev[int(rng.integers(len(prev)))]
            elif spec.sibling_clustered and chosen:
                siblings = tax.children_of[tax.parent_of[chosen[0]]]
                code = siblings[int(rng.integers(len(siblings)))]
            else:
                code = pref[int(rng.integers(len(pref)))]
            if code not in chosen:
                chosen.append(code)
        return chosen

    def draw_words(codes: list[str]) -> list[str]:
        words = []
        for _ in range(spec.words_per_patent):
            if rng.random() < spec.tau:
                code = codes[int(rng.integers(len(codes)))]
                if group_blocks and rng.random() < spec.parent_word_share:
                    wid = int(rng.choice(group_blocks[code]))
                else:
                    wid = int(rng.choice(word_blocks[code]))
            else:
                wid = int(rng.integers(spec.vocab_size))
            words.append(f"w{wid:04d}")
        return words

    records: list[PatentRecord] = []
    for a in range(spec.n_assignees):
        name = f"a{a:03d}"
        prev: list[str] = []
        for t in range(spec.patents_per_assignee):
            codes = draw_codes(prev, preferences[name])
            records.append(
                PatentRecord(
                    id=f"p{a:03d}_{t:04d}",
                    assignee=name,
                    time=t,
                    words=draw_words(codes),
                    labels_by_level=tax.closure(codes),
                )
            )
            prev = codes

    per = spec.patents_per_assignee
    train_end = max(0, int(per * spec.train_frac) - 1)
    val_end = max(train_end + 1, int(per * (spec.train_frac + spec.val_frac)) - 1)
    if val_end >= per - 1:
        val_end = per - 2
    if train_end >= val_end:
        train_end = val_end - 1
    if train_end < 0:
        raise ConfigError(
            f"patents_per_assignee={per} too small for a three-way temporal split"
        )
    train = [r for r in records if r.time <= train_end]
    val = [r for r in records if train_end < r.time <= val_end]
    test = [r for r in records if r.time > val_end]
    return tax, CorpusSplit(train=train, validation=val, test=test)
