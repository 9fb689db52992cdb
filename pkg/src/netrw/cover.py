"""Covers, saturating covers, partitions, and the induced-partition lattice.

Parts are nets whose node ids refer into the base net; a part is an
enclosure of the base exactly when it equals the base's induced subgraph on
its ids.
"""
from __future__ import annotations

from itertools import combinations
from typing import Iterable, List, Sequence, Set

from .net import Jungle, Net, net_equal


def _part_ids(part: Net) -> Set[str]:
    return set(part.nodes)


def is_cover(parts: Iterable[Net], base: Net) -> bool:
    """Every node of the base lies in some part (by node id)."""
    covered: Set[str] = set()
    for p in parts:
        covered |= _part_ids(p)
    return set(base.nodes) <= covered


def is_enclosure_part(part: Net, base: Net) -> bool:
    ids = _part_ids(part)
    if not ids <= set(base.nodes):
        return False
    return net_equal(part, base.induced(ids))


def is_saturating(parts: Iterable[Net], base: Net) -> bool:
    parts = list(parts)
    return is_cover(parts, base) and all(is_enclosure_part(p, base) for p in parts)


def is_partition(parts: Iterable[Net], base: Net) -> bool:
    parts = list(parts)
    if not is_saturating(parts, base):
        return False
    seen: Set[str] = set()
    for p in parts:
        ids = _part_ids(p)
        if ids & seen:
            return False
        seen |= ids
    return seen == set(base.nodes)


def partition_induced(parts: Sequence[Net], base: Net | None = None) -> List[Set[str]]:
    """Venn-cell refinement of a family of parts: nodes grouped by the exact
    set of parts they belong to."""
    parts = list(parts)
    universe: Set[str] = set()
    for p in parts:
        universe |= _part_ids(p)
    if base is not None:
        universe |= set(base.nodes)
    cells = {}
    for node in universe:
        key = frozenset(i for i, p in enumerate(parts) if node in p.nodes)
        cells.setdefault(key, set()).add(node)
    return [cells[k] for k in sorted(cells, key=lambda k: tuple(sorted(k)))]


def partition_induced_nets(parts: Sequence[Net], base: Net) -> Jungle:
    """PI(A) restricted to the base: each cell as an induced subnet."""
    out = []
    base_ids = set(base.nodes)
    for cell in partition_induced(parts, base):
        cell &= base_ids
        if cell:
            out.append(base.induced(cell))
    return Jungle(out)


def all_partitions(items: Sequence[str]) -> Iterable[List[Set[str]]]:
    """All set partitions of a sequence (desk scale only)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in all_partitions(rest):
        for i in range(len(sub)):
            yield sub[:i] + [sub[i] | {first}] + sub[i + 1:]
        yield [{first}] + sub


def node_partitions(base: Net) -> Iterable[List[Set[str]]]:
    yield from all_partitions(sorted(base.nodes))


def covers_of(base: Net, max_parts: int = 3) -> Iterable[List[Net]]:
    """Some covers of the base built from connected subsets (sampling aid)."""
    from .net import connected_subsets
    subsets = [set(s) for s in connected_subsets(base)]
    for k in range(1, max_parts + 1):
        for combo in combinations(range(len(subsets)), k):
            chosen = [subsets[i] for i in combo]
            if set(base.nodes) == set().union(*chosen):
                yield [base.induced(c) for c in chosen]
