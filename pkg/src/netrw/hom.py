"""Net homomorphisms: per-letter templates with rank-indexed splice ports.

A ranked letter's template is a net that may contain splice nodes labeled
`^in<k>` / `^out<k>`; these mark where the translated node's k-th in/out
edge re-wires.  Frontier and ground letters translate through the initial
map.  Application translates each node once and re-wires each edge through
the splice ports, pairing multiple occurrences index-wise.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Set, Tuple

from .errors import UnmappedLetter, PortDoublyOccupied
from .net import IN, OUT, Edge, Net, net_equal

_SPLICE = re.compile(r"\^(in|out)(\d+)$")


def splice_kind(letter: str) -> Optional[Tuple[str, int]]:
    m = _SPLICE.match(letter)
    if not m:
        return None
    return m.group(1), int(m.group(2))


def splice_letter(direction: str, index: int) -> str:
    return f"^{direction}{index}"


def template_of(image_letter: str, in_rank: int, out_rank: int,
                ranks: Mapping[str, Tuple[int, int]]) -> Net:
    """The one-node template translating a letter to image_letter, all edges
    carried across port-for-port."""
    nodes = {"c": image_letter}
    edges = []
    tranks = dict(ranks)
    frontier = set()
    img_in, img_out = tranks[image_letter]
    for k in range(1, in_rank + 1):
        sp = splice_letter(IN, k)
        nodes[f"i{k}"] = sp
        tranks[sp] = (1, 1)
        frontier.add(sp)
        if k <= img_in:
            edges.append(Edge(f"i{k}", 1, "c", k))
    for k in range(1, out_rank + 1):
        sp = splice_letter(OUT, k)
        nodes[f"o{k}"] = sp
        tranks[sp] = (1, 1)
        frontier.add(sp)
        if k <= img_out:
            edges.append(Edge("c", k, f"o{k}", 1))
    return Net(nodes, edges, tranks, frontier)


@dataclass(frozen=True)
class NetHomomorphism:
    """initial: frontier/ground letter -> image letter; ranked: letter -> template."""
    initial: Mapping[str, str]
    ranked: Mapping[str, Net]
    ranks: Mapping[str, Tuple[int, int]] = field(default_factory=dict)
    frontier: frozenset = frozenset()
    name: str = "h"

    def __post_init__(self):
        object.__setattr__(self, "initial", dict(self.initial))
        object.__setattr__(self, "ranked", dict(self.ranked))
        object.__setattr__(self, "ranks", dict(self.ranks))
        object.__setattr__(self, "frontier", frozenset(self.frontier))

    def splice_ports(self, letter: str, direction: str, index: int) -> List[Tuple[str, Tuple[str, str, int]]]:
        """Plug points for the (direction, index) edges of a translated node,
        in canonical template order: (splice node, port it occupies)."""
        template = self.ranked[letter]
        plugs = []
        for n in sorted(template.nodes):
            kind = splice_kind(template.nodes[n])
            if kind != (direction, index):
                continue
            for port in template.ports(n):
                e = template.edge_at(port)
                if e is None:
                    continue
                other_end = e.out_end() if e.in_end()[0] == n else e.in_end()
                plugs.append((n, other_end))
        return plugs

    def splice_count(self, letter: str, direction: str, index: int) -> int:
        template = self.ranked[letter]
        return sum(1 for n in template.nodes
                   if splice_kind(template.nodes[n]) == (direction, index))


def identity_homomorphism(net_or_letters, name: str = "id") -> NetHomomorphism:
    """Identity on every letter the argument uses."""
    if isinstance(net_or_letters, Net):
        ranks = dict(net_or_letters.ranks)
        frontier = set(net_or_letters.frontier)
    else:
        ranks, frontier = net_or_letters
        ranks = dict(ranks)
        frontier = set(frontier)
    initial = {}
    templates = {}
    for letter, (i, o) in ranks.items():
        if letter in frontier or (i, o) == (0, 1) and letter not in frontier:
            pass
        if letter in frontier:
            initial[letter] = letter
        else:
            templates[letter] = template_of(letter, i, o, ranks)
    return NetHomomorphism(initial, templates, ranks, frozenset(frontier), name)


def relabel_homomorphism(letter_map: Mapping[str, str], ranks, frontier,
                         name: str = "relabel") -> NetHomomorphism:
    """Down-alphabetic homomorphism renaming letters, ranks preserved."""
    ranks = dict(ranks)
    out_ranks = dict(ranks)
    for a, b in letter_map.items():
        out_ranks.setdefault(b, ranks[a])
    initial = {}
    templates = {}
    for letter, (i, o) in ranks.items():
        target = letter_map.get(letter, letter)
        if letter in frontier:
            initial[letter] = target
        else:
            templates[letter] = template_of(target, i, o, out_ranks)
    return NetHomomorphism(initial, templates, out_ranks, frozenset(frontier), name)


def apply_homomorphism(h: NetHomomorphism, t: Net) -> Net:
    """Translate each node once; re-wire each edge through splice ports.

    Multiple splice occurrences pair index-wise with the opposite side;
    unpaired splice ports stay unoccupied.
    """
    nodes: Dict[str, str] = {}
    edges: Set[Edge] = set()
    ranks: Dict[str, Tuple[int, int]] = {}
    frontier: Set[str] = set()
    # per original node: mapping (direction, index) -> list of plug ports
    plugs: Dict[Tuple[str, str, int], List[Tuple[str, str, int]]] = {}

    counter = 0
    for n in sorted(t.nodes):
        letter = t.nodes[n]
        if splice_kind(letter):
            nid = f"h{counter}"
            counter += 1
            nodes[nid] = letter
            ranks.setdefault(letter, (1, 1))
            frontier.add(letter)
            plugs[(n, IN, 1)] = [(nid, IN, 1)]
            plugs[(n, OUT, 1)] = [(nid, OUT, 1)]
            continue
        if t.is_frontier_node(n) or letter not in h.ranked:
            image = h.initial.get(letter)
            if image is None:
                raise UnmappedLetter(f"no image for letter {letter!r}")
            nid = f"h{counter}"
            counter += 1
            nodes[nid] = image
            irank = h.ranks.get(image, t.ranks.get(letter, (1, 1)))
            ranks.setdefault(image, irank)
            if image in h.frontier:
                frontier.add(image)
            ii, oo = ranks[image]
            plugs[(n, IN, 1)] = [(nid, IN, 1)] if ii >= 1 else []
            plugs[(n, OUT, 1)] = [(nid, OUT, 1)] if oo >= 1 else []
            continue
        template = h.ranked[letter]
        mapping = {}
        for tn in sorted(template.nodes):
            if splice_kind(template.nodes[tn]):
                continue
            nid = f"h{counter}"
            counter += 1
            mapping[tn] = nid
            nodes[nid] = template.nodes[tn]
            ranks.setdefault(template.nodes[tn], template.ranks[template.nodes[tn]])
            if template.nodes[tn] in template.frontier:
                frontier.add(template.nodes[tn])
        for e in template.edges:
            sk = splice_kind(template.nodes[e.src])
            dk = splice_kind(template.nodes[e.dst])
            if sk is None and dk is None:
                edges.add(Edge(mapping[e.src], e.src_port, mapping[e.dst], e.dst_port))
        i_rank, o_rank = t.rank_of(n)
        for k in range(1, i_rank + 1):
            plugs[(n, IN, k)] = [
                (mapping[pn_other[0]], pn_other[1], pn_other[2])
                for _, pn_other in h.splice_ports(letter, IN, k)
            ]
        for k in range(1, o_rank + 1):
            plugs[(n, OUT, k)] = [
                (mapping[pn_other[0]], pn_other[1], pn_other[2])
                for _, pn_other in h.splice_ports(letter, OUT, k)
            ]

    for e in sorted(t.edges):
        outs = plugs.get((e.src, OUT, e.src_port), [])
        ins = plugs.get((e.dst, IN, e.dst_port), [])
        for (op, ip) in zip(outs, ins):
            if op[1] != OUT or ip[1] != IN:
                raise PortDoublyOccupied(
                    f"splice orientation clash rewiring {e!r}")
            edges.add(Edge(op[0], op[2], ip[0], ip[2]))
    return Net(nodes, edges, ranks, frontier)


def classify_homomorphism(h: NetHomomorphism) -> Set[str]:
    """Linear/preserving/deleting/alphabetic flags by splice multiplicity."""
    flags: Set[str] = set()
    down_lin = up_lin = True
    down_pres = up_pres = True
    down_alpha = True
    for letter, template in h.ranked.items():
        i_rank, o_rank = h.ranks.get(letter, (None, None))
        if i_rank is None:
            # infer from the template's splice letters
            kinds = [splice_kind(template.nodes[n]) for n in template.nodes]
            kinds = [k for k in kinds if k]
            i_rank = max([k[1] for k in kinds if k[0] == IN], default=0)
            o_rank = max([k[1] for k in kinds if k[0] == OUT], default=0)
        in_counts = [h.splice_count(letter, IN, k) for k in range(1, i_rank + 1)]
        out_counts = [h.splice_count(letter, OUT, k) for k in range(1, o_rank + 1)]
        if any(c > 1 for c in in_counts):
            down_lin = False
        if any(c > 1 for c in out_counts):
            up_lin = False
        if any(c == 0 for c in in_counts):
            down_pres = False
        if any(c == 0 for c in out_counts):
            up_pres = False
        core = [n for n in template.nodes if not splice_kind(template.nodes[n])]
        if len(core) != 1 or template.nodes[core[0]] in template.frontier:
            down_alpha = False
    for letter, image in h.initial.items():
        if splice_kind(image):
            down_alpha = False
    if down_lin:
        flags.add("down-linear")
    if up_lin:
        flags.add("up-linear")
    if down_pres:
        flags.add("down-preserving")
    else:
        flags.add("down-deleting")
    if up_pres:
        flags.add("up-preserving")
    else:
        flags.add("up-deleting")
    if down_alpha:
        flags.add("down-alphabetic")
    return flags


def compose(h2: NetHomomorphism, h1: NetHomomorphism, name: str = "h2.h1") -> NetHomomorphism:
    """Template pasting: (h2 . h1)(t) = h2(h1(t))."""
    initial = {}
    for letter, img in h1.initial.items():
        initial[letter] = h2.initial.get(img, img)
    templates = {}
    for letter, template in h1.ranked.items():
        templates[letter] = apply_homomorphism(_splice_preserving(h2), template)
    ranks = dict(h2.ranks)
    for letter, rk in h1.ranks.items():
        ranks.setdefault(letter, rk)
    return NetHomomorphism(initial, templates, ranks,
                           h1.frontier | h2.frontier, name)


def _splice_preserving(h: NetHomomorphism) -> NetHomomorphism:
    """h extended to leave splice letters in place (used by compose)."""
    initial = dict(h.initial)
    ranks = dict(h.ranks)
    return NetHomomorphism(initial, h.ranked, ranks, h.frontier, h.name)


def homomorphisms_agree(h: NetHomomorphism, g: NetHomomorphism, samples) -> bool:
    return all(net_equal(apply_homomorphism(h, t), apply_homomorphism(g, t))
               for t in samples)
