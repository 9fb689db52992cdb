"""Realization of nets over finite operation-table algebras.

Each ranked letter carries a finite table from in-port value tuples to a
carrier value; values flow along edges from out-ports to in-ports.  Free
in-ports draw from declared input sets.  Looped nets stabilise by downward
iteration over per-node possible-value sets, which always converges on a
finite carrier; the budget guards against misdeclared tables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Set, Tuple

from .errors import MissingOperation, NonConvergent
from .net import IN, OUT, Net


@dataclass(frozen=True)
class Algebra:
    """carrier: the finite value set; tables: letter -> {in-tuple: value}.

    Ground letters use the empty tuple key.  Tables may declare look-ahead
    sensitivity by keying on (in-tuple, out-degree), but plain in-tuples are
    the norm and out-ties are ignored.
    """
    carrier: FrozenSet
    tables: Mapping[str, Mapping[tuple, object]]
    inputs: Mapping[str, FrozenSet] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "carrier", frozenset(self.carrier))
        object.__setattr__(self, "tables",
                           {k: dict(v) for k, v in dict(self.tables).items()})
        object.__setattr__(self, "inputs",
                           {k: frozenset(v) for k, v in dict(self.inputs).items()})

    def table(self, letter: str) -> Mapping[tuple, object]:
        if letter not in self.tables:
            raise MissingOperation(f"no operation table for {letter!r}")
        return self.tables[letter]


def realize(t: Net, algebra: Algebra, inputs: Optional[Mapping] = None,
            max_rounds: Optional[int] = None) -> Dict[Tuple[str, int], Set]:
    """Value sets at each unoccupied out-port.

    inputs optionally pins free in-ports: {(node, index): iterable of values};
    unpinned free in-ports range over the letter's declared input set or the
    whole carrier.
    """
    inputs = dict(inputs or {})
    budget = max_rounds if max_rounds is not None else (len(t.nodes) + 1) * max(len(algebra.carrier), 1) + 2

    def free_in_values(node: str, idx: int) -> FrozenSet:
        if (node, idx) in inputs:
            return frozenset(inputs[(node, idx)])
        letter = t.nodes[node]
        return algebra.inputs.get(letter, algebra.carrier)

    values: Dict[str, FrozenSet] = {n: algebra.carrier for n in t.nodes}
    for _ in range(budget):
        changed = False
        new_values: Dict[str, FrozenSet] = {}
        for n in sorted(t.nodes):
            letter = t.nodes[n]
            if t.is_frontier_node(n):
                # frontier letters pass their single in-value through
                e = t.edge_at((n, IN, 1))
                vs = values[e.src] if e is not None else free_in_values(n, 1)
                new_values[n] = frozenset(vs)
                changed = changed or new_values[n] != values[n]
                continue
            table = algebra.table(letter)
            i_rank, _ = t.rank_of(n)
            slots = []
            for k in range(1, i_rank + 1):
                e = t.edge_at((n, IN, k))
                slots.append(values[e.src] if e is not None else free_in_values(n, k))
            out: Set = set()
            for combo in product(*slots) if slots else [()]:
                if combo in table:
                    out.add(table[combo])
            new_values[n] = frozenset(out)
            changed = changed or new_values[n] != values[n]
        values = new_values
        if not changed:
            break
    else:
        raise NonConvergent("realization did not stabilise within the budget")

    outputs: Dict[Tuple[str, int], Set] = {}
    for n in sorted(t.nodes):
        for (node, d, idx) in t.unoccupied_of(n):
            if d == OUT:
                outputs[(node, idx)] = set(values[node])
    return outputs


def realize_values(t: Net, algebra: Algebra, inputs: Optional[Mapping] = None) -> Set:
    """The union of values over all designated (unoccupied out) ports."""
    out: Set = set()
    for vs in realize(t, algebra, inputs).values():
        out |= vs
    return out
