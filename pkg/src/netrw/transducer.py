"""Transducers: carrier nets whose operator nodes carry attached RNS sets.

Evaluation pushes jungles through the carrier bottom-up: a node's output is
the union, over its in-ports, of the attached systems' images of whatever
arrives there; unoccupied in-ports receive the input jungle, unoccupied
out-ports emit the result.  Looped carriers iterate to a bounded fixed
point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .errors import NonConvergent
from .apply import apply_rns, normal_form_single
from .net import IN, OUT, Jungle, Net, as_jungle, jungle_equal
from .rules import Rns


@dataclass(frozen=True)
class Transducer:
    """carrier: operator net; attach: (letter, in index, out index) -> systems."""
    carrier: Net
    attach: Mapping[Tuple[str, int, int], Tuple[Rns, ...]]
    name: str = "td"

    def __post_init__(self):
        object.__setattr__(self, "attach",
                           {k: tuple(v) for k, v in dict(self.attach).items()})
        for node in self.carrier.nodes:
            for key in self._keys_for(node):
                if key not in self.attach:
                    raise KeyError(f"attach map misses {key}")

    def _keys_for(self, node: str) -> List[Tuple[str, int, int]]:
        letter = self.carrier.nodes[node]
        i, o = self.carrier.ranks[letter]
        iis = list(range(1, i + 1)) if i else [0]
        oos = list(range(1, o + 1)) if o else [0]
        return [(letter, ii, oo) for ii in iis for oo in oos]

    def systems(self) -> List[Rns]:
        seen: Dict[str, Rns] = {}
        for group in self.attach.values():
            for rns in group:
                seen.setdefault(rns.name, rns)
        return [seen[k] for k in sorted(seen)]

    def replaced(self, mapping: Mapping[str, Rns]) -> "Transducer":
        """Same carrier with each attached system swapped by name."""
        attach = {}
        for key, group in self.attach.items():
            attach[key] = tuple(mapping.get(r.name, r) for r in group)
        return Transducer(self.carrier, attach, self.name + "'")

    def is_trivial(self) -> bool:
        return all(not rns.rules for group in self.attach.values() for rns in group)


def rns_transducer(rns: Rns, letter: str = "op", name: str = "td") -> Transducer:
    """A single-operator carrier representing one RNS-transformation."""
    carrier = Net({"c0": letter}, [], {letter: (1, 1)}, frozenset())
    return Transducer(carrier, {(letter, 1, 1): (rns,)}, name)


def _node_inputs(td: Transducer, node: str,
                 values: Dict[str, Jungle], S: Jungle) -> Dict[int, Jungle]:
    carrier = td.carrier
    i_rank, _ = carrier.rank_of(node)
    out: Dict[int, Jungle] = {}
    for idx in range(1, i_rank + 1):
        e = carrier.edge_at((node, IN, idx))
        if e is None:
            out[idx] = S
        else:
            out[idx] = values.get(e.src, Jungle([]))
    if i_rank == 0:
        out[0] = S
    return out


def run_transducer(td: Transducer, S, max_rounds: int = 32,
                   normalize: bool = True, max_steps: int = 64) -> Jungle:
    """Evaluate the carrier on an input jungle.

    With normalize=True each attached system contributes its normal forms
    (the usual TD reading); otherwise one parallel application per round.
    """
    S = as_jungle(S)
    carrier = td.carrier
    values: Dict[str, Jungle] = {}

    def transform(node: str, incoming: Dict[int, Jungle]) -> Jungle:
        letter = carrier.nodes[node]
        _, o_rank = carrier.rank_of(node)
        collected: List[Net] = []
        oos = list(range(1, o_rank + 1)) if o_rank else [0]
        for ii in sorted(incoming):
            jungle = incoming[ii]
            if not jungle:
                continue
            for oo in oos:
                for rns in td.attach.get((letter, ii, oo), ()):
                    if normalize:
                        collected.extend(normal_form_single(jungle, rns, max_steps))
                    else:
                        collected.extend(apply_rns(jungle, rns))
        return Jungle(collected)

    for round_no in range(max_rounds):
        new_values: Dict[str, Jungle] = {}
        for node in sorted(carrier.nodes):
            incoming = _node_inputs(td, node, values, S)
            new_values[node] = transform(node, incoming)
        stable = all(jungle_equal(new_values[n], values.get(n, Jungle([])))
                     for n in carrier.nodes)
        values = new_values
        if stable:
            break
    else:
        raise NonConvergent("looped carrier exceeded the fixed-point budget")

    outputs: List[Net] = []
    for node in sorted(carrier.nodes):
        if any(p[1] == OUT for p in carrier.unoccupied_of(node)):
            outputs.extend(values.get(node, Jungle([])))
    if not outputs:
        for node in sorted(carrier.nodes):
            outputs.extend(values.get(node, Jungle([])))
    return Jungle(outputs)


def td_abstraction_related(p: Transducer, q: Transducer) -> bool:
    """Carrier nets land in one abstraction class."""
    return p.carrier.delta_d() == q.carrier.delta_d()
