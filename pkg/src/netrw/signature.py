"""Alphabets: ranked letters with in/out ranks, frontier letters.

Arity letters are not materialised; they live on as (node, direction, index)
ports of a net.  Ground letters are the ranked letters of rank (0, 1).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Tuple


@dataclass(frozen=True)
class Signature:
    ranked: Mapping[str, Tuple[int, int]] = field(default_factory=dict)
    frontier: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "ranked", dict(self.ranked))
        object.__setattr__(self, "frontier", frozenset(self.frontier))
        overlap = set(self.ranked) & self.frontier
        if overlap:
            raise ValueError(f"letters in both alphabets: {sorted(overlap)}")
        for name, (i, o) in self.ranked.items():
            if i < 0 or o < 0:
                raise ValueError(f"negative rank for {name}")

    def rank(self, letter: str) -> Tuple[int, int]:
        if letter in self.ranked:
            return self.ranked[letter]
        if letter in self.frontier:
            return (1, 1)
        raise KeyError(letter)

    def __contains__(self, letter: str) -> bool:
        return letter in self.ranked or letter in self.frontier

    def is_frontier(self, letter: str) -> bool:
        return letter in self.frontier

    def is_ground(self, letter: str) -> bool:
        return self.ranked.get(letter) == (0, 1)

    def ground_letters(self) -> list:
        return sorted(n for n, r in self.ranked.items() if r == (0, 1))

    def with_ranked(self, letter: str, in_rank: int, out_rank: int) -> "Signature":
        ranked = dict(self.ranked)
        ranked[letter] = (in_rank, out_rank)
        return Signature(ranked, self.frontier)

    def with_frontier(self, *letters: str) -> "Signature":
        return Signature(self.ranked, self.frontier | set(letters))

    def merge(self, other: "Signature") -> "Signature":
        ranked = dict(self.ranked)
        for name, rank in other.ranked.items():
            if ranked.get(name, rank) != rank:
                raise ValueError(f"conflicting ranks for {name}")
            ranked[name] = rank
        return Signature(ranked, self.frontier | other.frontier)


def signature_of(ranked: Mapping[str, Tuple[int, int]] | None = None,
                 frontier: Iterable[str] = ()) -> Signature:
    return Signature(ranked or {}, frozenset(frontier))
