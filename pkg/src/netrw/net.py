"""The net data model: a finite directed port-graph.

A net is a set of labeled nodes, each carrying indexed in-ports and
out-ports per its letter's rank, plus occupation edges pairing an out-port
with an in-port.  Each port holds at most one edge.  A net value is
self-contained: it carries the ranks of the letters it uses, so nets from
extended alphabets mix freely.

Identity of nets is structural: two nets are equal when some node-id
bijection maps one's linkage set onto the other's, labels and port indices
preserved exactly.  Node ids are therefore presentation detail.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from .errors import PortDoublyOccupied, PortOutOfRange, UnknownLetter
from .signature import Signature

IN = "in"
OUT = "out"

Port = Tuple[str, str, int]  # (node id, direction, 1-based index)


@dataclass(frozen=True, order=True)
class Edge:
    src: str
    src_port: int
    dst: str
    dst_port: int

    def out_end(self) -> Port:
        return (self.src, OUT, self.src_port)

    def in_end(self) -> Port:
        return (self.dst, IN, self.dst_port)

    def __repr__(self):
        return f"{self.src}.out{self.src_port}->{self.dst}.in{self.dst_port}"


class Net:
    """Immutable port-graph over node ids."""

    __slots__ = ("nodes", "edges", "ranks", "frontier", "_occ", "_hash")

    def __init__(self, nodes: Mapping[str, str], edges: Iterable[Edge],
                 ranks: Mapping[str, Tuple[int, int]], frontier: Iterable[str] = ()):
        self.nodes: Dict[str, str] = dict(nodes)
        self.edges: FrozenSet[Edge] = frozenset(edges)
        self.frontier: FrozenSet[str] = frozenset(frontier)
        used = set(self.nodes.values())
        self.ranks: Dict[str, Tuple[int, int]] = {
            letter: ((1, 1) if letter in self.frontier else tuple(ranks[letter]))
            for letter in used
        }
        self._occ: Dict[Port, Edge] = {}
        self._hash = None
        self._validate()

    # -- construction helpers ------------------------------------------------

    def _validate(self):
        for e in self.edges:
            for node in (e.src, e.dst):
                if node not in self.nodes:
                    raise UnknownLetter(f"edge endpoint {node} is not a node")
            if not (1 <= e.src_port <= self.out_rank(e.src)):
                raise PortOutOfRange(f"{e.src}.out{e.src_port} exceeds rank")
            if not (1 <= e.dst_port <= self.in_rank(e.dst)):
                raise PortOutOfRange(f"{e.dst}.in{e.dst_port} exceeds rank")
            for port in (e.out_end(), e.in_end()):
                if port in self._occ:
                    raise PortDoublyOccupied(f"port {port} occupied twice")
                self._occ[port] = e

    def label(self, node: str) -> str:
        return self.nodes[node]

    def rank_of(self, node: str) -> Tuple[int, int]:
        return self.ranks[self.nodes[node]]

    def in_rank(self, node: str) -> int:
        return self.rank_of(node)[0]

    def out_rank(self, node: str) -> int:
        return self.rank_of(node)[1]

    def is_frontier_node(self, node: str) -> bool:
        return self.nodes[node] in self.frontier

    # -- ports ---------------------------------------------------------------

    def ports(self, node: str) -> Iterator[Port]:
        i, o = self.rank_of(node)
        for k in range(1, i + 1):
            yield (node, IN, k)
        for k in range(1, o + 1):
            yield (node, OUT, k)

    def all_ports(self) -> Iterator[Port]:
        for node in self.nodes:
            yield from self.ports(node)

    def edge_at(self, port: Port) -> Optional[Edge]:
        return self._occ.get(port)

    def occupied(self, port: Port) -> bool:
        return port in self._occ

    def peer(self, port: Port) -> Optional[Port]:
        e = self._occ.get(port)
        if e is None:
            return None
        return e.in_end() if port == e.out_end() else e.out_end()

    def unoccupied_ports(self) -> List[Port]:
        return [p for p in self.all_ports() if p not in self._occ]

    def unoccupied_of(self, node: str) -> List[Port]:
        return [p for p in self.ports(node) if p not in self._occ]

    def delta_d(self) -> int:
        """Number of unoccupied arity positions."""
        total = sum(i + o for i, o in (self.ranks[l] for l in self.nodes.values()))
        return total - 2 * len(self.edges)

    def uno_split(self) -> Tuple[int, int]:
        """(unoccupied in-count, unoccupied out-count)."""
        ins = sum(1 for p in self.unoccupied_ports() if p[1] == IN)
        return ins, self.delta_d() - ins

    # -- structural queries ----------------------------------------------------

    def letters(self) -> Set[str]:
        return set(self.nodes.values())

    def ranked_letters(self) -> Set[str]:
        return {l for l in self.nodes.values() if l not in self.frontier}

    def frontier_letters(self) -> Set[str]:
        return {l for l in self.nodes.values() if l in self.frontier}

    def edges_of(self, node: str) -> List[Edge]:
        return [e for e in self.edges if e.src == node or e.dst == node]

    def neighbours(self, node: str) -> Set[str]:
        out = set()
        for e in self.edges:
            if e.src == node:
                out.add(e.dst)
            if e.dst == node:
                out.add(e.src)
        out.discard(node)
        return out

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        return len(self.component_of(next(iter(self.nodes)))) == len(self.nodes)

    def component_of(self, node: str) -> Set[str]:
        seen = {node}
        stack = [node]
        while stack:
            for n in self.neighbours(stack.pop()):
                if n not in seen:
                    seen.add(n)
                    stack.append(n)
        return seen

    def components(self) -> List[Set[str]]:
        left = set(self.nodes)
        out = []
        while left:
            comp = self.component_of(next(iter(sorted(left))))
            out.append(comp)
            left -= comp
        return out

    def induced(self, node_ids: Iterable[str]) -> "Net":
        """Sub-port-graph on the given node ids, original ids kept."""
        keep = set(node_ids)
        missing = keep - set(self.nodes)
        if missing:
            raise KeyError(f"unknown nodes {sorted(missing)}")
        nodes = {n: self.nodes[n] for n in keep}
        edges = [e for e in self.edges if e.src in keep and e.dst in keep]
        return Net(nodes, edges, self.ranks, self.frontier)

    def without(self, node_ids: Iterable[str]) -> "Net":
        drop = set(node_ids)
        return self.induced(set(self.nodes) - drop)

    def renamed(self, mapping: Mapping[str, str]) -> "Net":
        nodes = {mapping.get(n, n): l for n, l in self.nodes.items()}
        if len(nodes) != len(self.nodes):
            raise ValueError("node renaming not injective")
        edges = [Edge(mapping.get(e.src, e.src), e.src_port,
                      mapping.get(e.dst, e.dst), e.dst_port) for e in self.edges]
        return Net(nodes, edges, self.ranks, self.frontier)

    def relabeled(self, letter_map: Mapping[str, str],
                  ranks: Mapping[str, Tuple[int, int]] | None = None) -> "Net":
        """Rename letters; ranks carried over unless overridden."""
        new_ranks = dict(self.ranks)
        if ranks:
            new_ranks.update(ranks)
        nodes = {}
        for n, l in self.nodes.items():
            nl = letter_map.get(l, l)
            nodes[n] = nl
            if nl not in new_ranks:
                new_ranks[nl] = self.ranks[l]
        frontier = frozenset(letter_map.get(l, l) for l in self.frontier)
        return Net(nodes, self.edges, new_ranks, frontier)

    def fresh_ids(self, prefix: str, start: int = 0) -> Tuple["Net", Dict[str, str]]:
        mapping = {n: f"{prefix}{i}" for i, n in enumerate(sorted(self.nodes), start)}
        return self.renamed(mapping), mapping

    # -- linkage accounting ----------------------------------------------------

    def node_linkages(self) -> Set[Tuple[str, str, int, int]]:
        """Canonical linkage set: (src label-node, dst label-node, ports)."""
        return {(e.src, e.dst, e.src_port, e.dst_port) for e in self.edges}

    def inward_edges(self, node_ids: Iterable[str] | None = None) -> List[Edge]:
        """Edges with both ends inside the given node set (default: whole net)."""
        keep = set(node_ids) if node_ids is not None else set(self.nodes)
        return [e for e in self.edges if e.src in keep and e.dst in keep]

    def border_edges(self, node_ids: Iterable[str]) -> List[Edge]:
        """Edges crossing between the node set and the rest of this net."""
        keep = set(node_ids)
        return [e for e in self.edges
                if (e.src in keep) != (e.dst in keep)]

    def orn(self) -> Tuple[int, int]:
        """(delta_d, inward linkage connection count)."""
        return self.delta_d(), len(self.edges)

    # -- invariant keys ---------------------------------------------------------

    def invariant_key(self):
        """Cheap isomorphism-invariant fingerprint used as a pruning key."""
        def nkey(n):
            degs = sorted((e.src_port, 1) for e in self.edges if e.src == n)
            degs += sorted((e.dst_port, 0) for e in self.edges if e.dst == n)
            return (self.nodes[n], self.ranks[self.nodes[n]], tuple(degs))
        return (tuple(sorted(nkey(n) for n in self.nodes)), len(self.edges))

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.invariant_key())
        return self._hash

    def __eq__(self, other):
        return isinstance(other, Net) and net_equal(self, other)

    def __repr__(self):
        ns = ",".join(f"{n}:{l}" for n, l in sorted(self.nodes.items()))
        es = ",".join(repr(e) for e in sorted(self.edges))
        return f"Net({ns} | {es})"

    def size(self) -> int:
        return len(self.nodes)


# -- builders -------------------------------------------------------------------


def build_net(node_specs: Mapping[str, str] | Sequence[Tuple[str, str]],
              edge_specs: Iterable[Tuple[str, int, str, int]],
              signature: Signature) -> Net:
    """Validated construction against a signature.

    node_specs: node id -> letter.  edge_specs: (src, out index, dst, in index).
    """
    if not isinstance(node_specs, Mapping):
        node_specs = dict(node_specs)
    for node, letter in node_specs.items():
        if letter not in signature:
            raise UnknownLetter(f"letter {letter!r} not in signature")
    edges = []
    for src, sp, dst, dp in edge_specs:
        edges.append(Edge(src, sp, dst, dp))
    return Net(node_specs, edges, dict(signature.ranked), signature.frontier)


def single_node(letter: str, signature: Signature, node_id: str = "n0") -> Net:
    return build_net({node_id: letter}, [], signature)


# -- equality and isomorphism ------------------------------------------------


def _match_nodes(a: Net, b: Net, label_map) -> Optional[Dict[str, str]]:
    """Backtracking search for an edge-preserving node bijection.

    label_map(la) yields the b-labels that a-label la may map to.
    """
    if len(a.nodes) != len(b.nodes) or len(a.edges) != len(b.edges):
        return None
    a_nodes = sorted(a.nodes, key=lambda n: (-len(a.edges_of(n)), n))
    b_by_label: Dict[str, List[str]] = {}
    for n, l in b.nodes.items():
        b_by_label.setdefault(l, []).append(n)

    b_edge_set = {(e.src, e.src_port, e.dst, e.dst_port) for e in b.edges}
    a_adj: Dict[str, List[Edge]] = {n: a.edges_of(n) for n in a.nodes}

    assignment: Dict[str, str] = {}
    used: Set[str] = set()

    def consistent(an: str, bn: str) -> bool:
        for e in a_adj[an]:
            if e.src in assignment or e.src == an:
                if e.dst in assignment or e.dst == an:
                    src = bn if e.src == an else assignment.get(e.src)
                    dst = bn if e.dst == an else assignment.get(e.dst)
                    if src is None or dst is None:
                        continue
                    if (src, e.src_port, dst, e.dst_port) not in b_edge_set:
                        return False
        return True

    def extend(i: int) -> bool:
        if i == len(a_nodes):
            return True
        an = a_nodes[i]
        for bl in label_map(a.nodes[an]):
            for bn in b_by_label.get(bl, ()):
                if bn in used:
                    continue
                if len(a_adj[an]) != len(b.edges_of(bn)):
                    continue
                assignment[an] = bn
                used.add(bn)
                if consistent(an, bn) and extend(i + 1):
                    return True
                del assignment[an]
                used.discard(bn)
        return False

    if extend(0):
        return dict(assignment)
    return None


def net_equal(a: Net, b: Net) -> bool:
    """Structural identity: node-id relabeling, labels and ports exact."""
    if a is b:
        return True
    if a.invariant_key() != b.invariant_key():
        return False
    return _match_nodes(a, b, lambda l: (l,)) is not None


def equality_witness(a: Net, b: Net) -> Optional[Dict[str, str]]:
    if a.invariant_key() != b.invariant_key():
        return None
    return _match_nodes(a, b, lambda l: (l,))


def net_isomorphic(a: Net, b: Net) -> bool:
    """Equality up to a rank-preserving bijective renaming of letters."""
    if len(a.nodes) != len(b.nodes) or len(a.edges) != len(b.edges):
        return False
    a_hist = {}
    for l in a.nodes.values():
        a_hist[l] = a_hist.get(l, 0) + 1
    b_hist = {}
    for l in b.nodes.values():
        b_hist[l] = b_hist.get(l, 0) + 1
    if len(a_hist) != len(b_hist):
        return False

    a_letters = sorted(a_hist)

    def candidates(la):
        fa = la in a.frontier
        for lb in sorted(b_hist):
            if (b_hist[lb] == a_hist[la] and a.ranks[la] == b.ranks[lb]
                    and (lb in b.frontier) == fa):
                yield lb

    # try every injective letter assignment (letter counts are tiny at desk scale)
    def assign(i: int, acc: Dict[str, str], taken: Set[str]) -> bool:
        if i == len(a_letters):
            return _match_nodes(a, b, lambda l: (acc[l],)) is not None
        la = a_letters[i]
        for lb in candidates(la):
            if lb in taken:
                continue
            acc[la] = lb
            taken.add(lb)
            if assign(i + 1, acc, taken):
                return True
            del acc[la]
            taken.discard(lb)
        return False

    return assign(0, {}, set())


# -- jungles -------------------------------------------------------------------


class Jungle:
    """A finite set of nets, compared as a set up to net_equal."""

    __slots__ = ("nets",)

    def __init__(self, nets: Iterable[Net] = ()):
        dedup: List[Net] = []
        for n in nets:
            if not any(net_equal(n, m) for m in dedup):
                dedup.append(n)
        self.nets = tuple(sorted(dedup, key=lambda n: (n.size(), len(n.edges), repr(n))))

    def __iter__(self) -> Iterator[Net]:
        return iter(self.nets)

    def __len__(self):
        return len(self.nets)

    def __bool__(self):
        return bool(self.nets)

    def __or__(self, other: "Jungle") -> "Jungle":
        return Jungle(self.nets + tuple(other))

    def contains(self, net: Net) -> bool:
        return any(net_equal(net, m) for m in self.nets)

    def delta_d(self) -> int:
        return sum(n.delta_d() for n in self.nets)

    def letters(self) -> Set[str]:
        out: Set[str] = set()
        for n in self.nets:
            out |= n.letters()
        return out

    def ranked_letters(self) -> Set[str]:
        out: Set[str] = set()
        for n in self.nets:
            out |= n.ranked_letters()
        return out

    def is_broken(self) -> bool:
        """True when no member net links to another (members share no edges
        by construction, so a jungle of standalone nets is always broken;
        the flag is meaningful for jungles carved out of one host)."""
        ids: Set[str] = set()
        for n in self.nets:
            if ids & set(n.nodes):
                return False
            ids |= set(n.nodes)
        return True

    def __eq__(self, other):
        if not isinstance(other, Jungle):
            return NotImplemented
        return jungle_equal(self, other)

    def __hash__(self):
        return hash(tuple(sorted(n.invariant_key() for n in self.nets)))

    def __repr__(self):
        return "Jungle[" + "; ".join(repr(n) for n in self.nets) + "]"


def jungle_equal(a: Jungle | Iterable[Net], b: Jungle | Iterable[Net]) -> bool:
    xs = list(a)
    ys = list(b)

    def dedup(zs):
        out = []
        for z in zs:
            if not any(net_equal(z, w) for w in out):
                out.append(z)
        return out
    xs = dedup(xs)
    ys = dedup(ys)
    if len(xs) != len(ys):
        return False
    for x in xs:
        if not any(net_equal(x, y) for y in ys):
            return False
    return True


def as_jungle(value) -> Jungle:
    if isinstance(value, Jungle):
        return value
    if isinstance(value, Net):
        return Jungle([value])
    return Jungle(value)


# -- subnets, enclosures, positions ------------------------------------------


def connected_subsets(net: Net) -> List[FrozenSet[str]]:
    """All connected node subsets, enumerated canonically."""
    return _connected_subsets_exact(net)


def _connected_subsets_exact(net: Net) -> List[FrozenSet[str]]:
    seen: Set[FrozenSet[str]] = set()
    nodes = sorted(net.nodes)
    for n in nodes:
        grow: List[FrozenSet[str]] = [frozenset([n])]
        while grow:
            s = grow.pop()
            if s in seen:
                continue
            seen.add(s)
            for m in sorted({x for node in s for x in net.neighbours(node)} - s):
                grow.append(s | {m})
    return sorted(seen, key=lambda s: (len(s), tuple(sorted(s))))


def subnets(t: Net, max_nodes: int | None = None) -> Jungle:
    """All connected sub-port-graphs of t (induced, original ids kept)."""
    subs = []
    for s in _connected_subsets_exact(t):
        if max_nodes is not None and len(s) > max_nodes:
            continue
        subs.append(t.induced(s))
    return Jungle(subs)


def enclosures(t: Net, max_nodes: int | None = None) -> Jungle:
    """Contexts of subnets; for the port-graph store these are again the
    connected induced sub-port-graphs, t itself included."""
    return subnets(t, max_nodes)


@dataclass(frozen=True)
class Occurrence:
    """One embedding of a net s into a host t: node map plus border ties."""
    node_map: Tuple[Tuple[str, str], ...]  # s-node -> t-node
    ties: Tuple[Edge, ...]                 # host edges crossing the image
    free: Tuple[Port, ...]                 # unoccupied host ports of the image

    def mapped_nodes(self) -> Set[str]:
        return {tn for _, tn in self.node_map}

    def mapping(self) -> Dict[str, str]:
        return dict(self.node_map)


@dataclass(frozen=True)
class PositionSet:
    """Where a subnet sits in a target: the set of its tie descriptors."""
    target: Net
    entries: Tuple[Occurrence, ...]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _embeddings(s: Net, t: Net, exact_ports: bool) -> List[Dict[str, str]]:
    """Injective, label-preserving maps of s onto induced subgraphs of t.

    exact_ports=False is occurrence search: edges of s must appear in t and
    no extra t-edge may run inside the image, but free ports of s may be
    occupied in t (by ties to the context).
    """
    if len(s.nodes) > len(t.nodes):
        return []
    s_nodes = sorted(s.nodes, key=lambda n: (-len(s.edges_of(n)), n))
    t_by_label: Dict[str, List[str]] = {}
    for n, l in t.nodes.items():
        t_by_label.setdefault(l, []).append(n)
    t_edge_set = {(e.src, e.src_port, e.dst, e.dst_port) for e in t.edges}
    results: List[Dict[str, str]] = []
    assignment: Dict[str, str] = {}
    used: Set[str] = set()

    def edges_ok() -> bool:
        image = set(assignment.values())
        mapped_edges = set()
        for e in s.edges:
            key = (assignment[e.src], e.src_port, assignment[e.dst], e.dst_port)
            if key not in t_edge_set:
                return False
            mapped_edges.add(key)
        for e in t.edges:
            if e.src in image and e.dst in image:
                if (e.src, e.src_port, e.dst, e.dst_port) not in mapped_edges:
                    return False
        if exact_ports:
            inv = {v: k for k, v in assignment.items()}
            for e in t.edges:
                for end, node in ((e.out_end(), e.src), (e.in_end(), e.dst)):
                    if node in inv:
                        sp = (inv[node], end[1], end[2])
                        if not s.occupied(sp):
                            return False
        return True

    def partial_ok(an: str, bn: str) -> bool:
        for e in s.edges_of(an):
            other = e.dst if e.src == an else e.src
            if other in assignment or other == an:
                src = assignment.get(e.src, bn if e.src == an else None)
                dst = assignment.get(e.dst, bn if e.dst == an else None)
                if src and dst and (src, e.src_port, dst, e.dst_port) not in t_edge_set:
                    return False
        return True

    def extend(i: int):
        if i == len(s_nodes):
            if edges_ok():
                results.append(dict(assignment))
            return
        an = s_nodes[i]
        for bn in t_by_label.get(s.nodes[an], ()):
            if bn in used:
                continue
            assignment[an] = bn
            used.add(bn)
            if partial_ok(an, bn):
                extend(i + 1)
            del assignment[an]
            used.discard(bn)

    extend(0)
    return results


def occurrences(t: Net, s: Net) -> List[Occurrence]:
    """All places where s occurs in t as an induced subnet (loose ports)."""
    out = []
    seen: Set[FrozenSet[str]] = set()
    for m in _embeddings(s, t, exact_ports=False):
        image = frozenset(m.values())
        if image in seen:
            continue
        seen.add(image)
        ties = tuple(sorted(t.border_edges(image)))
        free = tuple(sorted(p for n in image for p in t.unoccupied_of(n)))
        out.append(Occurrence(tuple(sorted(m.items())), ties, free))
    return out


def positions(t: Net, s: Net) -> PositionSet:
    """All ties at which s occurs in t; empty when s does not occur."""
    return PositionSet(t, tuple(occurrences(t, s)))


def in_enclosures(t: Net, s: Net) -> bool:
    return bool(occurrences(t, s))


# -- overlap / omission / assimilation ----------------------------------------


def overlap(p_nodes: Set[str], q_nodes: Set[str], host: Net) -> Optional[Net]:
    """Overlapping net of two embedded subnets of a common host."""
    shared = set(p_nodes) & set(q_nodes)
    if not shared:
        return None
    return host.induced(shared)


def omission(s_nodes: Set[str], t_nodes: Set[str], host: Net) -> Jungle:
    """s omitted by t: context fragments of s after removing the shared part."""
    rest = set(s_nodes) - set(t_nodes)
    if not rest:
        return Jungle([])
    sub = host.induced(rest)
    return Jungle([sub.induced(c) for c in sub.components()])


def assimilation(s_nodes: Set[str], t_nodes: Set[str], host: Net) -> Net:
    return host.induced(set(s_nodes) | set(t_nodes))


# -- routes and loops ----------------------------------------------------------


@dataclass(frozen=True)
class Route:
    """A catenation of linkages between two nodes; steps carry orientation."""
    steps: Tuple[Tuple[Edge, bool], ...]  # (edge, followed src->dst?)

    def __len__(self):
        return len(self.steps)

    def is_directed(self) -> bool:
        return all(fwd for _, fwd in self.steps) or all(not fwd for _, fwd in self.steps)


def routes(t: Net, a: str, b: str, max_len: int | None = None) -> List[Route]:
    """Simple routes between nodes a and b (no node revisited)."""
    limit = max_len if max_len is not None else len(t.edges)
    out: List[Route] = []

    def walk(node: str, visited: Set[str], acc: List[Tuple[Edge, bool]]):
        if len(acc) > limit:
            return
        if node == b and acc:
            out.append(Route(tuple(acc)))
            return
        for e in t.edges_of(node):
            fwd = e.src == node
            nxt = e.dst if fwd else e.src
            if nxt in visited:
                continue
            walk(nxt, visited | {nxt}, acc + [(e, fwd)])

    walk(a, {a}, [])
    return out


def loops(t: Net) -> List[Route]:
    """Inside loops of the net: simple cycles, each reported once."""
    out: List[Route] = []
    seen: Set[FrozenSet[Edge]] = set()
    nodes = sorted(t.nodes)
    for start in nodes:
        def walk(node: str, visited: List[str], acc: List[Tuple[Edge, bool]]):
            for e in t.edges_of(node):
                fwd = e.src == node
                nxt = e.dst if fwd else e.src
                if nxt == start and acc and not (len(acc) == 1 and acc[0][0] == e):
                    key = frozenset(x for x, _ in acc + [(e, fwd)])
                    if key not in seen:
                        seen.add(key)
                        out.append(Route(tuple(acc + [(e, fwd)])))
                    continue
                if nxt in visited or nxt < start:
                    continue
                walk(nxt, visited + [nxt], acc + [(e, fwd)])
        walk(start, [start], [])
    # self-loop edges form one-step cycles
    for e in sorted(t.edges):
        if e.src == e.dst:
            key = frozenset([e])
            if key not in seen:
                seen.add(key)
                out.append(Route(((e, True),)))
    return out


def directed_loops(t: Net) -> List[Route]:
    return [r for r in loops(t) if r.is_directed()]


def has_loop(t: Net) -> bool:
    # a multigraph has a cycle iff some component has >= as many edges as nodes
    for comp in t.components():
        n_edges = len(t.inward_edges(comp))
        if n_edges >= len(comp):
            return True
    return False


UNBOUNDED = "unbounded"


def height(t: Net):
    """Inductive height; nets whose unfolding revisits material report the
    unbounded marker."""
    if has_loop(t):
        return UNBOUNDED
    if len(t.nodes) <= 1:
        return 0
    # forest: height is the eccentricity of the root (unoccupied out-port
    # node) or the maximum such value over components
    best = 0
    for comp in t.components():
        sub = t.induced(comp)
        roots = [n for n in sorted(sub.nodes)
                 if any(p[1] == OUT for p in sub.unoccupied_of(n))]
        if not roots:
            roots = sorted(sub.nodes)
        for root in roots[:1] if len(roots) == 1 else roots:
            dist = {root: 0}
            stack = [root]
            while stack:
                cur = stack.pop()
                for n in sub.neighbours(cur):
                    if n not in dist:
                        dist[n] = dist[cur] + 1
                        stack.append(n)
            best = max(best, max(dist.values()))
    return best


def root(t: Net) -> Optional[str]:
    """The unique node with an unoccupied out-port, if there is one."""
    cands = [n for n in sorted(t.nodes)
             if any(p[1] == OUT for p in t.unoccupied_of(n))]
    return cands[0] if len(cands) == 1 else None


def apex(t: Net) -> Net:
    """The net with its frontier (manoeuvre) nodes dropped."""
    keep = [n for n in t.nodes if not t.is_frontier_node(n)]
    return t.induced(keep)
