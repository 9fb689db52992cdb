"""Pattern matching and substitution over port-graphs.

A pattern is a net whose frontier-letter nodes act as manoeuvre letters:
placeholders for whatever the context attaches at the marked ports.  A
match embeds the pattern's ranked core into the target exactly (labels,
ports, edge set induced) and records, per manoeuvre occurrence, the context
port its tie reaches, if any.  Unoccupied core ports of the pattern must be
unoccupied in the target; manoeuvre-occupied ports may bind an edge half or
nothing at all.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple

from .errors import UnsupportedSubstitution
from .net import (IN, OUT, Edge, Net, Port, apex, net_equal)


@dataclass(frozen=True)
class BoundImage:
    """A standalone tied image: a net plus the port gluing it to context.

    entry is None for the empty image (deletion leaving the arity free).
    """
    net: Optional[Net] = None
    entry: Optional[Port] = None

    def is_empty(self) -> bool:
        return self.net is None


@dataclass(frozen=True)
class Substitution:
    """Bindings from manoeuvre letters to tied images.

    Identity on ranked letters and arity positions by construction.
    """
    bindings: Mapping[str, BoundImage] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "bindings", dict(self.bindings))

    def get(self, letter: str) -> Optional[BoundImage]:
        return self.bindings.get(letter)

    def letters(self):
        return set(self.bindings)


@dataclass(frozen=True)
class MoveSite:
    """One manoeuvre occurrence in a pattern: which core port it holds."""
    letter: str
    node: str            # the manoeuvre node id in the pattern
    core_port: Port      # the pattern core port the tie occupies
    via: str             # "in" if the manoeuvre's in-port faces the core


def move_sites(pattern: Net) -> List[MoveSite]:
    """Manoeuvre occurrences with their core attachment ports.

    Each manoeuvre node must touch the ranked core through exactly one of
    its two ports; free-floating or manoeuvre-to-manoeuvre ties are not
    pattern material.
    """
    sites = []
    for n in sorted(pattern.nodes):
        if not pattern.is_frontier_node(n):
            continue
        letter = pattern.nodes[n]
        attachments = []
        for port in pattern.ports(n):
            e = pattern.edge_at(port)
            if e is None:
                continue
            other = e.src if e.dst == n else e.dst
            if pattern.is_frontier_node(other):
                raise UnsupportedSubstitution(
                    f"manoeuvre letters {letter!r} and {pattern.nodes[other]!r} "
                    "tied directly; patterns must tie manoeuvres to ranked nodes")
            peer = e.out_end() if e.in_end()[0] == n else e.in_end()
            via = IN if e.in_end()[0] == n else OUT
            attachments.append((peer, via))
        if len(attachments) > 1:
            raise UnsupportedSubstitution(
                f"manoeuvre letter {letter!r} is 2-tied in the pattern; only "
                "1-tied manoeuvre occurrences are supported")
        if attachments:
            peer, via = attachments[0]
            sites.append(MoveSite(letter, n, peer, via))
        else:
            sites.append(MoveSite(letter, n, None, ""))
    return sites


@dataclass(frozen=True)
class Match:
    """A verified embedding of a pattern into a target."""
    pattern: Net
    target: Net
    node_map: Tuple[Tuple[str, str], ...]     # core pattern node -> target node
    bindings: Tuple[Tuple[str, Optional[Port]], ...]  # manoeuvre letter -> context peer
    matching_arities: Tuple[Port, ...]        # target ports where ties re-glue

    def mapping(self) -> Dict[str, str]:
        return dict(self.node_map)

    def redex_nodes(self) -> FrozenSet[str]:
        return frozenset(tn for _, tn in self.node_map)

    def binding_map(self) -> Dict[str, Optional[Port]]:
        return dict(self.bindings)

    def witness(self) -> Substitution:
        """Bindings materialised as standalone tied images."""
        out: Dict[str, BoundImage] = {}
        redex = self.redex_nodes()
        ctx = self.target.without(redex) if redex else self.target
        for letter, peer in self.bindings:
            if peer is None or peer[0] in redex:
                out[letter] = BoundImage()
                continue
            comp = ctx.component_of(peer[0])
            out[letter] = BoundImage(ctx.induced(comp), peer)
        return Substitution(out)


def _bare_variable_matches(pattern: Net, target: Net) -> List[Match]:
    """A single manoeuvre letter anchors at whole-subnet occurrences hanging
    from each unoccupied arity of the target, one match per port."""
    [node] = list(pattern.nodes)
    letter = pattern.nodes[node]
    out = []
    for port in sorted(target.unoccupied_ports()):
        out.append(Match(pattern, target, (), ((letter, port),), (port,)))
    return out


def match(pattern: Net, target: Net, exact_interface: bool = True) -> List[Match]:
    """All matches of a pattern in a target.

    Anchored backtracking: ranked nodes first with label and port pruning;
    manoeuvre letters bind last.  Every returned match re-applies cleanly;
    the search is complete for left-linear patterns.
    """
    core = apex(pattern)
    if not core.nodes:
        if len(pattern.nodes) == 1:
            return _bare_variable_matches(pattern, target)
        return []
    sites = move_sites(pattern)
    per_letter: Dict[str, List[MoveSite]] = {}
    for s in sites:
        per_letter.setdefault(s.letter, []).append(s)
    for letter, occ in per_letter.items():
        anchored = [s for s in occ if s.core_port is not None]
        if len(anchored) > 1:
            raise UnsupportedSubstitution(
                f"manoeuvre letter {letter!r} occurs {len(anchored)} times on "
                "a pattern side; left-linear patterns only")

    results: List[Match] = []
    t_edge_lookup = {(e.src, e.src_port): e for e in target.edges}

    core_nodes = sorted(core.nodes, key=lambda n: (-len(core.edges_of(n)), n))
    t_by_label: Dict[str, List[str]] = {}
    for n, l in target.nodes.items():
        t_by_label.setdefault(l, []).append(n)
    t_edge_set = {(e.src, e.src_port, e.dst, e.dst_port) for e in target.edges}

    assignment: Dict[str, str] = {}
    used: Set[str] = set()

    # classify each core port of the pattern: edge (to core), manoeuvre, free
    port_kind: Dict[Port, object] = {}
    for n in core.nodes:
        for port in pattern.ports(n):
            e = pattern.edge_at(port)
            if e is None:
                port_kind[port] = "free"
            else:
                other = e.src if e.dst == n else e.dst
                if pattern.is_frontier_node(other):
                    port_kind[port] = pattern.nodes[other]
                else:
                    port_kind[port] = "edge"

    def finish() -> None:
        image = set(assignment.values())
        mapped_edges = set()
        for e in core.edges:
            key = (assignment[e.src], e.src_port, assignment[e.dst], e.dst_port)
            if key not in t_edge_set:
                return
            mapped_edges.add(key)
        bindings: Dict[str, Optional[Port]] = {}
        released: Set[Port] = set()
        # walk every pattern core port and check the target counterpart
        for (pn, direction, idx), kind in port_kind.items():
            tp = (assignment[pn], direction, idx)
            t_edge = target.edge_at(tp)
            if kind == "edge":
                continue
            if kind == "free":
                if exact_interface and t_edge is not None:
                    return
                continue
            # manoeuvre-occupied port
            if t_edge is None:
                bindings[kind] = None
            else:
                peer = target.peer(tp)
                bindings[kind] = peer
                released.add(tp)
        # target edges inside the image must be mapped core edges or fully
        # released by manoeuvre ports on both halves
        for e in target.edges:
            if e.src in image and e.dst in image:
                if (e.src, e.src_port, e.dst, e.dst_port) in mapped_edges:
                    continue
                if e.out_end() in released and e.in_end() in released:
                    continue
                return
        for s in sites:
            if s.core_port is None and s.letter not in bindings:
                bindings[s.letter] = None
        ties = tuple(sorted(p for p in bindings.values() if p is not None))
        results.append(Match(pattern, target,
                             tuple(sorted(assignment.items())),
                             tuple(sorted(bindings.items())),
                             ties))

    def partial_ok(an: str, bn: str) -> bool:
        if target.rank_of(bn) != core.rank_of(an):
            return False
        for e in core.edges_of(an):
            src = assignment.get(e.src, bn if e.src == an else None)
            dst = assignment.get(e.dst, bn if e.dst == an else None)
            if src and dst and (src, e.src_port, dst, e.dst_port) not in t_edge_set:
                return False
        return True

    def extend(i: int):
        if i == len(core_nodes):
            finish()
            return
        an = core_nodes[i]
        for bn in t_by_label.get(core.nodes[an], ()):
            if bn in used:
                continue
            assignment[an] = bn
            used.add(bn)
            if partial_ok(an, bn):
                extend(i + 1)
            del assignment[an]
            used.discard(bn)

    extend(0)
    # distinct matches may share a redex through automorphisms; keep each
    # (redex, bindings) once
    seen = set()
    unique = []
    for m in results:
        key = (m.redex_nodes(), m.bindings)
        if key not in seen:
            seen.add(key)
            unique.append(m)
    return unique


def match_jungle_pattern(patterns: List[Net], target: Net,
                         exact_interface: bool = True) -> List[List[Match]]:
    """Simultaneous node-disjoint matches of several pattern nets."""
    if not patterns:
        return [[]]
    out: List[List[Match]] = []

    def extend(i: int, taken: FrozenSet[str], acc: List[Match]):
        if i == len(patterns):
            out.append(list(acc))
            return
        for m in match(patterns[i], target, exact_interface):
            redex = m.redex_nodes()
            if redex & taken:
                continue
            acc.append(m)
            extend(i + 1, taken | redex, acc)
            acc.pop()

    extend(0, frozenset(), [])
    # dedupe by the union footprint + binding set
    seen = set()
    unique = []
    for combo in out:
        key = (frozenset().union(*[m.redex_nodes() for m in combo]) if combo else frozenset(),
               tuple(sorted(b for m in combo for b in m.bindings)))
        if key not in seen:
            seen.add(key)
            unique.append(combo)
    return unique


# -- applying substitutions standalone -----------------------------------------


def _fresh_id(taken: Set[str], base: str) -> str:
    i = 0
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def apply_substitution(s: Net, f: Substitution) -> Net:
    """Replace each bound manoeuvre occurrence by a fresh copy of its image.

    Unbound manoeuvre letters stay; empty images free the occupied arity.
    """
    nodes = dict(s.nodes)
    edges = set(s.edges)
    ranks = dict(s.ranks)
    frontier = set(s.frontier)
    taken = set(nodes)
    for n in sorted(s.nodes):
        if not s.is_frontier_node(n):
            continue
        image = f.get(s.nodes[n])
        if image is None:
            continue
        # find the tie through which n hangs on the core, if any
        tie_edges = [e for e in s.edges if e.src == n or e.dst == n]
        del nodes[n]
        for e in tie_edges:
            edges.discard(e)
        if image.is_empty():
            continue
        mapping = {}
        for old in sorted(image.net.nodes):
            nid = _fresh_id(taken, old)
            taken.add(nid)
            mapping[old] = nid
        copy = image.net.renamed(mapping)
        nodes.update(copy.nodes)
        edges.update(copy.edges)
        for letter, rank in copy.ranks.items():
            ranks.setdefault(letter, rank)
        frontier |= copy.frontier
        if image.entry is not None and tie_edges:
            entry = (mapping[image.entry[0]], image.entry[1], image.entry[2])
            for e in tie_edges:
                if e.src == n:       # manoeuvre's out-port fed the core
                    edges.add(Edge(entry[0], entry[2], e.dst, e.dst_port))
                else:                # core out-port fed the manoeuvre
                    edges.add(Edge(e.src, e.src_port, entry[0], entry[2]))
    return Net(nodes, edges, ranks, frontier)


def is_instance(t: Net, s: Net) -> Optional[Substitution]:
    """A substitution f with f(s) structurally equal to t, if one exists."""
    core = apex(s)
    if not core.nodes:
        if len(s.nodes) == 1:
            # a bare manoeuvre letter: t itself is the image
            entry = None
            unos = t.unoccupied_ports()
            entry = unos[0] if unos else None
            f = Substitution({s.nodes[next(iter(s.nodes))]: BoundImage(t, entry)})
            return f if net_equal(apply_substitution(s, f), t) else None
        return None
    if not core.nodes and not s.nodes:
        return None
    for m in match(s, t, exact_interface=True):
        f = m.witness()
        # the bindings must exhaust the target
        covered = set(m.redex_nodes())
        ok = True
        for letter, image in f.bindings.items():
            if image.is_empty():
                continue
            covered |= set(image.net.nodes)
        if covered != set(t.nodes):
            continue
        if net_equal(apply_substitution(s, f), t):
            return f
    return None
