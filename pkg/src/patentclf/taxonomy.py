"""Hierarchical code taxonomy: levels of code ids plus child-to-parent links."""

from __future__ import annotations

import json

from .errors import TaxonomyError


class Taxonomy:
    """A fixed tree of classification codes organized in levels.

    Every code below level 1 has exactly one parent on the level above.
    Level-1 codes are treated as siblings under an implicit virtual root,
    so horizontal neighbor sets are never empty.
    """

    def __init__(self, levels: list[list[str]], parent_of: dict[str, str]):
        self.levels = [list(codes) for codes in levels]
        self.parent_of = dict(parent_of)
        self.level_of: dict[str, int] = {}
        self.index_of: dict[str, int] = {}
        self.children_of: dict[str, list[str]] = {}
        for lvl, codes in enumerate(self.levels, start=1):
            for i, code in enumerate(codes):
                if code in self.level_of:
                    raise TaxonomyError(f"duplicate code '{code}'")
                self.level_of[code] = lvl
                self.index_of[code] = i
                self.children_of[code] = []
        self._validate()
        for child, parent in self.parent_of.items():
            self.children_of[parent].append(child)

    def _validate(self):
        for lvl, codes in enumerate(self.levels, start=1):
            for code in codes:
                if lvl == 1:
                    if code in self.parent_of:
                        raise TaxonomyError(f"level-1 code '{code}' must not have a parent")
                    continue
                parent = self.parent_of.get(code)
                if parent is None:
                    raise TaxonomyError(f"code '{code}' at level {lvl} has no parent")
                if self.level_of.get(parent) != lvl - 1:
                    raise TaxonomyError(
                        f"parent of '{code}' must sit at level {lvl - 1}, "
                        f"got '{parent}' at level {self.level_of.get(parent)}"
                    )
        for child in self.parent_of:
            if child not in self.level_of:
                raise TaxonomyError(f"parent map references unknown code '{child}'")

    # -- basic queries -----------------------------------------------------

    @property
    def depth(self) -> int:
        return len(self.levels)

    def codes(self, level: int) -> list[str]:
        if not 1 <= level <= self.depth:
            raise TaxonomyError(f"level {level} outside 1..{self.depth}")
        return self.levels[level - 1]

    def n_codes(self, level: int) -> int:
        return len(self.codes(level))

    def require(self, code: str) -> int:
        """Level of ``code``; unknown codes are a lookup error."""
        lvl = self.level_of.get(code)
        if lvl is None:
            raise TaxonomyError(f"unknown code '{code}'")
        return lvl

    def ancestor_chain(self, code: str) -> list[str]:
        """Codes from level 1 down to ``code`` itself, inclusive."""
        self.require(code)
        chain = [code]
        while chain[-1] in self.parent_of:
            chain.append(self.parent_of[chain[-1]])
        return chain[::-1]

    def closure(self, leaf_codes) -> list[set[str]]:
        """Per-level label sets implied by a set of leaf (deepest-level) codes."""
        by_level: list[set[str]] = [set() for _ in range(self.depth)]
        for code in leaf_codes:
            lvl = self.require(code)
            if lvl != self.depth:
                raise TaxonomyError(
                    f"label '{code}' sits at level {lvl}, expected a level-{self.depth} leaf"
                )
            for anc in self.ancestor_chain(code):
                by_level[self.level_of[anc] - 1].add(anc)
        return by_level

    def neighbor_sets(self, level: int, code: str) -> tuple[set[str], set[str]]:
        """Horizontal and vertical neighbor sets of ``code`` at ``level``.

        Horizontal: codes sharing the parent, including the code itself
        (level-1 codes are all mutual siblings).  Vertical: the parent plus
        the children, dropping whichever side does not exist at a boundary;
        a code with neither falls back to itself so the set stays nonempty.
        """
        if self.require(code) != level:
            raise TaxonomyError(f"code '{code}' is not at level {level}")
        if level == 1:
            horizontal = set(self.levels[0])
        else:
            horizontal = set(self.children_of[self.parent_of[code]])
        vertical: set[str] = set()
        if code in self.parent_of:
            vertical.add(self.parent_of[code])
        vertical.update(self.children_of[code])
        if not vertical:
            vertical = {code}
        return horizontal, vertical

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {"levels": self.levels, "parent": self.parent_of}

    @classmethod
    def from_dict(cls, d: dict) -> "Taxonomy":
        return cls(d["levels"], d["parent"])

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "Taxonomy":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))
