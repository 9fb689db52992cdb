"""Intervening rule systems and the abstraction relation.

A partitioning system (PRNS) contracts each part of a partition of its
rewrite object to a single fresh letter, preserving manoeuvre and arity
position counts.  Two nets are abstraction related exactly when their
unoccupied-arity counts agree; the constructive direction builds a common
origin out of incidence pairs between the two nets' nodes and replays both
contractions through the rewrite engine.

Arity accounting throughout this module compares unoccupied position
counts with the in/out distinction dropped, matching the convention that
out-arities may be read as in-arities when nothing hinges on direction.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .apply import apply_rns, normal_form_single, normal_forms
from .cover import node_partitions, partition_induced_nets, is_partition
from .errors import PreconditionFailed, SizeBound
from .generate import generate_nets
from .net import (IN, OUT, Edge, Jungle, Net, apex, as_jungle, jungle_equal,
                  net_equal, net_isomorphic, occurrences)
from .rules import (LetterDisjoint, Rns, Rule, RulePreform, classify_preform)
from .signature import Signature
from .subst import move_sites


class FreshLetters:
    """Session-scoped fresh letter source: `<base>#<counter>` names."""

    def __init__(self, avoid: Iterable[str] = ()):
        self.avoid: Set[str] = set(avoid)
        self.counters: Dict[str, int] = {}

    def reserve(self, letters: Iterable[str]) -> None:
        self.avoid |= set(letters)

    def fresh(self, base: str = "q") -> str:
        while True:
            i = self.counters.get(base, 0)
            self.counters[base] = i + 1
            cand = f"{base}#{i}"
            if cand not in self.avoid:
                self.avoid.add(cand)
                return cand


# -- contraction rules -----------------------------------------------------------


def _move_letter(k: int, forbidden: Set[str]) -> str:
    name = f"x{k}"
    while name in forbidden:
        name = "_" + name
    return name


def contraction_rule(host: Net, part_ids: Iterable[str], target_letter: str,
                     target_rank: Optional[Tuple[int, int]] = None,
                     port_map: Optional[Mapping[Tuple[str, str, int],
                                                Tuple[str, int]]] = None) -> RulePreform:
    """The preform contracting one host part to a single letter.

    Border edge halves become manoeuvre letters on both sides; port_map may
    pin each half to a specific port of the target letter (defaults to
    sequential allocation).  Unoccupied ports of the part reappear as the
    target letter's remaining free ports.
    """
    part_ids = set(part_ids)
    part = host.induced(part_ids)
    halves: List[Tuple[str, str, int]] = []
    for e in sorted(host.border_edges(part_ids)):
        if e.src in part_ids:
            halves.append((e.src, OUT, e.src_port))
        else:
            halves.append((e.dst, IN, e.dst_port))
    forbidden = set(host.ranks) | {target_letter}

    left_nodes = dict(part.nodes)
    left_edges = set(part.edges)
    lranks = dict(part.ranks)
    lfront = set(part.frontier)
    assignment: Dict[Tuple[str, str, int], str] = {}
    for k, h in enumerate(sorted(halves)):
        x = _move_letter(k, forbidden)
        nid = f"_x{k}"
        left_nodes[nid] = x
        lranks[x] = (1, 1)
        lfront.add(x)
        if h[1] == OUT:
            left_edges.add(Edge(h[0], h[2], nid, 1))
        else:
            left_edges.add(Edge(nid, 1, h[0], h[2]))
        assignment[h] = x
    left = Net(left_nodes, left_edges, lranks, lfront)

    in_halves = [h for h in sorted(halves) if h[1] == IN]
    out_halves = [h for h in sorted(halves) if h[1] == OUT]
    half_set = set(halves)
    really_free = [p for p in part.unoccupied_ports() if p not in half_set]
    free_in = sum(1 for p in really_free if p[1] == IN)
    free_out = len(really_free) - free_in
    if target_rank is None:
        target_rank = (len(in_halves) + free_in, len(out_halves) + free_out)

    if port_map is None:
        port_map = {}
        for i, h in enumerate(in_halves, 1):
            port_map[h] = (IN, i)
        for i, h in enumerate(out_halves, 1):
            port_map[h] = (OUT, i)

    right_nodes = {"c": target_letter}
    right_edges = []
    rranks = {target_letter: target_rank}
    rfront: Set[str] = set()
    for k, h in enumerate(sorted(halves)):
        x = assignment[h]
        nid = f"_y{k}"
        right_nodes[nid] = x
        rranks[x] = (1, 1)
        rfront.add(x)
        d, idx = port_map[h]
        if d == OUT:
            right_edges.append(Edge("c", idx, nid, 1))
        else:
            right_edges.append(Edge(nid, 1, "c", idx))
    right = Net(right_nodes, right_edges, rranks, rfront)
    return RulePreform(left, (right,))


def build_partition_prns(host: Net, parts: Sequence[Iterable[str]],
                         fresh: FreshLetters, name: str = "W",
                         base: str = "q") -> Rns:
    """A partitioning system of the host with the given node partition."""
    rules = []
    for i, part in enumerate(parts):
        letter = fresh.fresh(base)
        rules.append(Rule((contraction_rule(host, part, letter),),
                          f"{name}_p{i}"))
    demands = (LetterDisjoint(frozenset(host.ranked_letters())),)
    return Rns(tuple(rules), demands, name)


def singleton_partition_prns(host: Net, fresh: FreshLetters,
                             name: str = "W") -> Rns:
    return build_partition_prns(host, [[n] for n in sorted(host.nodes)],
                                fresh, name)


def prns_result(c, w: Rns, max_steps: int = 128) -> Jungle:
    """The concept: the normal form of the rewrite object under the system."""
    report = normal_forms(as_jungle(c), w, max_steps)
    return report.forms


# -- validation reports -----------------------------------------------------------


@dataclass(frozen=True)
class Condition:
    name: str
    passed: bool
    witness: str = ""


@dataclass(frozen=True)
class IntervenerReport:
    rns: str
    claimed: str
    checklist: Tuple[Condition, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checklist)

    def failures(self) -> List[Condition]:
        return [c for c in self.checklist if not c.passed]


def _side_counts(net: Net) -> Tuple[int, int]:
    """(free core ports, anchored manoeuvre ties) of a rule side."""
    core = apex(net)
    anchored = sum(1 for s in move_sites(net) if s.core_port is not None)
    free_core = core.delta_d() - anchored
    return free_core, anchored


def _move_hist(net: Net) -> Dict[str, int]:
    out: Dict[str, int] = {}
    for n, l in net.nodes.items():
        if net.is_frontier_node(n):
            out[l] = out.get(l, 0) + 1
    return out


def _saving_conditions(rns: Rns, allow_jungle_rights: bool,
                       manoeuvre_rule: str) -> List[Condition]:
    conds: List[Condition] = []
    ok_m, ok_a, ok_i, ok_single = True, True, True, True
    wit_m = wit_a = wit_i = wit_s = ""
    for rule in rns.rules:
        for p in rule.preforms:
            if p.binds:
                ok_i = False
                wit_i = f"{rule.name} carries right-side image templates"
            if not allow_jungle_rights and len(p.rights) != 1:
                ok_single = False
                wit_s = f"{rule.name} has {len(p.rights)} right alternatives"
            lh = _move_hist(p.left)
            for r in p.rights:
                rh = _move_hist(r)
                if manoeuvre_rule == "saving":
                    if lh != rh:
                        ok_m = False
                        wit_m = f"{rule.name}: manoeuvre counts {lh} vs {rh}"
                else:  # not deleting
                    if not set(lh) <= set(rh):
                        ok_m = False
                        wit_m = f"{rule.name}: drops manoeuvres {set(lh) - set(rh)}"
                lc, la = _side_counts(p.left)
                rc, ra = _side_counts(r)
                if lc != rc:
                    ok_a = False
                    wit_a = (f"{rule.name}: free arity positions {lc} vs {rc}")
    label = ("manoeuvre mightiness saving" if manoeuvre_rule == "saving"
             else "not manoeuvre deleting")
    conds.append(Condition(label, ok_m, wit_m))
    conds.append(Condition("arity mightiness saving", ok_a, wit_a))
    conds.append(Condition("not instance sensitive", ok_i, wit_i))
    if not allow_jungle_rights:
        conds.append(Condition("singleton right sides", ok_single, wit_s))
    return conds


def _right_apex_fresh(rns: Rns, letters: Set[str],
                      singleton_letter: bool) -> List[Condition]:
    ok_fresh, ok_single = True, True
    wit_f = wit_s = ""
    for rule in rns.rules:
        for p in rule.preforms:
            for r in p.rights:
                ra = apex(r)
                if singleton_letter and len(ra.letters()) != 1:
                    ok_single = False
                    wit_s = f"{rule.name}: right apex letters {sorted(ra.letters())}"
                clash = ra.letters() & letters
                if clash:
                    ok_fresh = False
                    wit_f = f"{rule.name}: reuses letters {sorted(clash)}"
    out = []
    if singleton_letter:
        out.append(Condition("right apex a single letter", ok_single, wit_s))
    out.append(Condition("right letters outside the object", ok_fresh, wit_f))
    return out


def _injection_condition(rns: Rns) -> Condition:
    pres = rns.preforms()
    for i, p in enumerate(pres):
        for q in pres[i + 1:]:
            if net_equal(p.left, q.left) and not (
                    len(p.rights) == len(q.rights)
                    and all(net_equal(x, y) for x, y in zip(p.rights, q.rights))):
                return Condition("rule pairing injective", False,
                                 "equal lefts map to different rights")
    return Condition("rule pairing injective", True)


def _disjoint_demand_condition(rns: Rns, letters: Set[str]) -> Condition:
    for d in rns.demands:
        if isinstance(d, LetterDisjoint) and letters <= set(d.letters):
            return Condition("letter disjointness demanded", True)
    return Condition("letter disjointness demanded", False,
                     "no LetterDisjoint demand covering the object letters")


def validate_prns(rns: Rns, c) -> IntervenerReport:
    """Condition-by-condition check of the partitioning-system contract."""
    c = as_jungle(c)
    letters = c.ranked_letters()
    checklist: List[Condition] = []
    checklist += _saving_conditions(rns, allow_jungle_rights=False,
                                    manoeuvre_rule="saving")
    checklist += _right_apex_fresh(rns, letters, singleton_letter=True)
    checklist.append(_injection_condition(rns))
    checklist.append(_disjoint_demand_condition(rns, letters))
    return IntervenerReport(rns.name, "PRNS", tuple(checklist))


def validate_crns(rns: Rns, s, host=None) -> IntervenerReport:
    s = as_jungle(s)
    letters = s.ranked_letters()
    checklist: List[Condition] = []
    checklist += _saving_conditions(rns, allow_jungle_rights=False,
                                    manoeuvre_rule="saving")
    checklist += _right_apex_fresh(rns, letters, singleton_letter=False)
    checklist.append(_injection_condition(rns))
    checklist.append(_disjoint_demand_condition(rns, letters))
    host_j = as_jungle(host) if host is not None else s
    ok, wit = True, ""
    from .subst import match as _match
    for rule in rns.rules:
        for p in rule.preforms:
            if not any(_match(p.left, n, exact_interface=True)
                       for n in host_j):
                ok = False
                wit = f"{rule.name} has no redex in the embedding jungle"
    checklist.append(Condition("every preform has a redex", ok, wit))
    return IntervenerReport(rns.name, "CRNS", tuple(checklist))


def validate_gprns(rns: Rns, c) -> IntervenerReport:
    c = as_jungle(c)
    letters = c.ranked_letters()
    checklist: List[Condition] = []
    checklist += _saving_conditions(rns, allow_jungle_rights=True,
                                    manoeuvre_rule="not-deleting")
    checklist += _right_apex_fresh(rns, letters, singleton_letter=True)
    checklist.append(_injection_condition(rns))
    checklist.append(_disjoint_demand_condition(rns, letters))
    return IntervenerReport(rns.name, "GPRNS", tuple(checklist))


def validate_gcrns(rns: Rns, s) -> IntervenerReport:
    s = as_jungle(s)
    letters = s.ranked_letters()
    checklist: List[Condition] = []
    checklist += _saving_conditions(rns, allow_jungle_rights=True,
                                    manoeuvre_rule="not-deleting")
    checklist += _right_apex_fresh(rns, letters, singleton_letter=False)
    checklist.append(_injection_condition(rns))
    checklist.append(_disjoint_demand_condition(rns, letters))
    return IntervenerReport(rns.name, "GCRNS", tuple(checklist))


def is_distinct_from_right_sides(rns: Rns) -> bool:
    rights = [r for p in rns.preforms() for r in p.rights]
    for i, r in enumerate(rights):
        for r2 in rights[i + 1:]:
            if net_equal(r, r2):
                return False
    return True


def validate_uprns(rns: Rns, c) -> IntervenerReport:
    """Universal partitioning: environment kept, outward rank number saved."""
    c = as_jungle(c)
    letters = c.ranked_letters()
    checklist: List[Condition] = []
    ok_env, wit_env = True, ""
    ok_orn, wit_orn = True, ""
    for rule in rns.rules:
        for p in rule.preforms:
            left_anchor = {s.letter for s in move_sites(p.left)
                           if s.core_port is not None}
            for r in p.rights:
                right_anchor = {s.letter for s in move_sites(r)
                                if s.core_port is not None}
                if not left_anchor <= right_anchor:
                    ok_env = False
                    wit_env = (f"{rule.name}: environment ties "
                               f"{sorted(left_anchor - right_anchor)} dropped")
                lc, la = _side_counts(p.left)
                rc, ra = _side_counts(r)
                if lc + la != rc + ra:
                    ok_orn = False
                    wit_orn = (f"{rule.name}: outward rank number "
                               f"{lc + la} vs {rc + ra}")
    checklist.append(Condition("thoroughly environmentally saving", ok_env, wit_env))
    checklist.append(Condition("outward rank number saving", ok_orn, wit_orn))
    checklist += _right_apex_fresh(rns, letters, singleton_letter=True)
    checklist.append(_injection_condition(rns))
    checklist.append(_disjoint_demand_condition(rns, letters))
    return IntervenerReport(rns.name, "UPRNS", tuple(checklist))


VALIDATORS = {
    "PRNS": validate_prns,
    "CRNS": validate_crns,
    "GPRNS": validate_gprns,
    "GCRNS": validate_gcrns,
    "UPRNS": validate_uprns,
}


# -- the abstraction relation -----------------------------------------------------


def abstraction_related(a, b) -> bool:
    """The complete decision: unoccupied-arity counts agree."""
    return as_jungle(a).delta_d() == as_jungle(b).delta_d()


def _bucket_parts(a: Net, partition: Sequence[Set[str]]) -> Dict[int, int]:
    hist: Dict[int, int] = {}
    for part in partition:
        d = a.induced(part).delta_d()
        hist[d] = hist.get(d, 0) + 1
    return hist


def _bucket_letters(b: Net) -> Dict[int, int]:
    hist: Dict[int, int] = {}
    for n in b.nodes:
        i, o = b.rank_of(n)
        hist[i + o] = hist.get(i + o, 0) + 1
    return hist


def characterization_check(a, b, max_nodes: int = 8) -> bool:
    """True when no partitioning system maps a onto b, judged by the
    bucket-count clause plus shared-letter exclusion."""
    aj, bj = as_jungle(a), as_jungle(b)
    if any(n.size() > max_nodes for n in aj):
        raise SizeBound("partition enumeration refused beyond the node bound")
    shared = aj.ranked_letters() & bj.ranked_letters()
    if shared:
        return True
    b_hist: Dict[int, int] = {}
    for bn in bj:
        for k, v in _bucket_letters(bn).items():
            b_hist[k] = b_hist.get(k, 0) + v
    # clause (i): every partition family misses the bucket histogram
    a_nets = list(aj)
    partition_families = [list(node_partitions(n)) for n in a_nets]
    for combo in itertools.product(*partition_families):
        hist: Dict[int, int] = {}
        for net, parts in zip(a_nets, combo):
            for k, v in _bucket_parts(net, parts).items():
                hist[k] = hist.get(k, 0) + v
        if hist == b_hist:
            return False
    return True


# -- quotient structure search ----------------------------------------------------


def quotient_map(host: Net, parts: Sequence[Set[str]], target: Net
                 ) -> Optional[Dict[int, str]]:
    """A bijection parts -> target nodes under which contracting each part
    reproduces the target's border structure and free-port counts."""
    if len(parts) != len(target.nodes):
        return None
    # free ports of the part within the host: induced extraction frees the
    # border halves, so subtract the border count from the extracted delta
    part_uno = []
    for p in parts:
        extracted = host.induced(p).delta_d()
        part_uno.append(extracted - len(host.border_edges(p)))
    node_of_part: Dict[int, str] = {}
    taken: Set[str] = set()
    border_count: Dict[Tuple[int, int], int] = {}
    part_index = {}
    for i, p in enumerate(parts):
        for n in p:
            part_index[n] = i
    for e in host.edges:
        i, j = part_index[e.src], part_index[e.dst]
        if i != j:
            border_count[(i, j)] = border_count.get((i, j), 0) + 1
    target_nodes = sorted(target.nodes)
    target_uno = {n: len(target.unoccupied_of(n)) for n in target_nodes}
    target_edge_count: Dict[Tuple[str, str], int] = {}
    for e in target.edges:
        target_edge_count[(e.src, e.dst)] = target_edge_count.get((e.src, e.dst), 0) + 1

    order = sorted(range(len(parts)))

    def assign(k: int) -> bool:
        if k == len(order):
            # all borders accounted both ways
            for (i, j), cnt in border_count.items():
                if target_edge_count.get((node_of_part[i], node_of_part[j]), 0) != cnt:
                    return False
            for (u, v), cnt in target_edge_count.items():
                inv = {tn: i for i, tn in node_of_part.items()}
                if border_count.get((inv[u], inv[v]), 0) != cnt:
                    return False
            return True
        i = order[k]
        for tn in target_nodes:
            if tn in taken:
                continue
            if target_uno[tn] != part_uno[i]:
                continue
            node_of_part[i] = tn
            taken.add(tn)
            ok = True
            for (x, y), cnt in border_count.items():
                if x in node_of_part and y in node_of_part:
                    if target_edge_count.get((node_of_part[x], node_of_part[y]), 0) != cnt:
                        ok = False
                        break
            if ok and assign(k + 1):
                return True
            del node_of_part[i]
            taken.discard(tn)
        return False

    if assign(0):
        return dict(node_of_part)
    return None


def quotient_prns(host: Net, parts: Sequence[Set[str]], target: Net,
                  mapping: Dict[int, str], name: str = "W") -> Rns:
    """The partitioning system contracting host parts onto the target's
    exact node letters, ports assigned per a canonical edge pairing."""
    part_index = {}
    for i, p in enumerate(parts):
        for n in p:
            part_index[n] = i
    # pair host border edges with target edges per part pair, canonically
    host_groups: Dict[Tuple[int, int], List[Edge]] = {}
    for e in sorted(host.edges):
        i, j = part_index[e.src], part_index[e.dst]
        if i != j:
            host_groups.setdefault((i, j), []).append(e)
    target_groups: Dict[Tuple[str, str], List[Edge]] = {}
    for e in sorted(target.edges):
        target_groups.setdefault((e.src, e.dst), []).append(e)
    half_port: Dict[Tuple[str, str, int], Tuple[str, int]] = {}
    for (i, j), edges in host_groups.items():
        tedges = target_groups.get((mapping[i], mapping[j]), [])
        for he, te in zip(edges, tedges):
            half_port[(he.src, OUT, he.src_port)] = (OUT, te.src_port)
            half_port[(he.dst, IN, he.dst_port)] = (IN, te.dst_port)
    rules = []
    for i, p in enumerate(parts):
        tn = mapping[i]
        letter = target.nodes[tn]
        halves = {}
        for e in sorted(host.border_edges(p)):
            if e.src in p:
                h = (e.src, OUT, e.src_port)
            else:
                h = (e.dst, IN, e.dst_port)
            halves[h] = half_port[h]
        pre = contraction_rule(host, p, letter,
                               target_rank=target.ranks[letter],
                               port_map=halves)
        rules.append(Rule((pre,), f"{name}_p{i}"))
    demands = (LetterDisjoint(frozenset(host.ranked_letters())),)
    return Rns(tuple(rules), demands, name)


# -- the constructive origin ------------------------------------------------------


@dataclass
class OriginCertificate:
    origin: Net
    w_a: Rns
    w_b: Rns
    replay_a: Jungle
    replay_b: Jungle
    ok: bool

    def validate(self, a: Net, b: Net) -> bool:
        return (self.ok and jungle_equal(self.replay_a, Jungle([a]))
                and jungle_equal(self.replay_b, Jungle([b])))


def _relabel_origin(a: Net, fresh: FreshLetters) -> OriginCertificate:
    """Origin for an equal pair: the net itself with per-node fresh letters
    and the contraction rules relabeling each node back."""
    letter_of = {}
    ranks = dict(a.ranks)
    nodes = {}
    for n in sorted(a.nodes):
        letter = fresh.fresh("o")
        letter_of[n] = letter
        ranks[letter] = a.rank_of(n)
        nodes[n] = letter
    c = Net(nodes, a.edges, ranks, frozenset())
    parts = [{n} for n in sorted(c.nodes)]
    mapping = {i: n for i, n in enumerate(sorted(a.nodes))}
    w = quotient_prns(c, parts, a, mapping, "Wa")
    replay = prns_result(c, w)
    ok = jungle_equal(replay, Jungle([a]))
    return OriginCertificate(c, w, w, replay, replay, ok)


def common_origin(a: Net, b: Net, fresh: Optional[FreshLetters] = None
                  ) -> OriginCertificate:
    """Construct a common substance for two nets with equal free-port counts.

    Nodes of the origin are incidence pairs between the two nets' nodes:
    one spine row and column host the nets' edges, and each matched pair of
    free ports lands on its incidence node.  Contracting rows reproduces
    one net; contracting columns the other.
    """
    if a.delta_d() != b.delta_d():
        raise PreconditionFailed(
            f"free-port counts differ: {a.delta_d()} vs {b.delta_d()}")
    fresh = fresh or FreshLetters(a.ranks.keys() | b.ranks.keys())
    fresh.reserve(a.ranks.keys() | b.ranks.keys())
    if net_equal(a, b):
        return _relabel_origin(a, fresh)

    a_nodes = sorted(a.nodes)
    b_nodes = sorted(b.nodes)
    u_star, v_star = a_nodes[0], b_nodes[0]
    a_slots = sorted(a.unoccupied_ports())
    b_slots = sorted(b.unoccupied_ports())

    # port needs per incidence pair: lists of tagged entries
    needs: Dict[Tuple[str, str], Dict[str, List]] = {}

    def need(u, v):
        return needs.setdefault((u, v), {"in": [], "out": []})

    for u in a_nodes:
        need(u, v_star)
    for v in b_nodes:
        need(u_star, v)
    for e in sorted(a.edges):
        need(e.src, v_star)["out"].append(("a", e, "src"))
        need(e.dst, v_star)["in"].append(("a", e, "dst"))
    for e in sorted(b.edges):
        need(u_star, e.src)["out"].append(("b", e, "src"))
        need(u_star, e.dst)["in"].append(("b", e, "dst"))
    for sa, sb in zip(a_slots, b_slots):
        entry = ("slot", sa, sb)
        need(sa[0], sb[0])[sa[1]].append(entry)

    # materialise origin nodes
    cid: Dict[Tuple[str, str], str] = {}
    nodes: Dict[str, str] = {}
    ranks: Dict[str, Tuple[int, int]] = {}
    port_of: Dict[Tuple[str, object, str], Tuple[str, int]] = {}
    for k, pair in enumerate(sorted(needs)):
        nid = f"c{k}"
        cid[pair] = nid
        letter = fresh.fresh("s")
        entry = needs[pair]
        ranks[letter] = (len(entry["in"]), len(entry["out"]))
        nodes[nid] = letter
        for d in (IN, OUT):
            for idx, tag in enumerate(entry[d], 1):
                if tag[0] in ("a", "b"):
                    port_of[(tag[0], tag[1], tag[2])] = (nid, idx)
    edges = []
    for e in sorted(a.edges):
        sn, sp = port_of[("a", e, "src")]
        dn, dp = port_of[("a", e, "dst")]
        edges.append(Edge(sn, sp, dn, dp))
    for e in sorted(b.edges):
        sn, sp = port_of[("b", e, "src")]
        dn, dp = port_of[("b", e, "dst")]
        edges.append(Edge(sn, sp, dn, dp))
    c = Net(nodes, edges, ranks, frozenset())

    # parts and exact port maps for both contractions
    def build(sideways: str, target: Net, tnodes: List[str]) -> Rns:
        parts: List[Set[str]] = []
        mapping: Dict[int, str] = {}
        for i, t in enumerate(tnodes):
            ids = {cid[(u, v)] for (u, v) in cid
                   if (u if sideways == "a" else v) == t}
            parts.append(ids)
            mapping[i] = t
        # port map: host border halves -> target ports
        half_port: Dict[Tuple[str, str, int], Tuple[str, int]] = {}
        for e in sorted(target.edges):
            sn, sp = port_of[(sideways, e, "src")]
            dn, dp = port_of[(sideways, e, "dst")]
            half_port[(sn, OUT, sp)] = (OUT, e.src_port)
            half_port[(dn, IN, dp)] = (IN, e.dst_port)
        rules = []
        for i, p in enumerate(parts):
            tn = mapping[i]
            letter = target.nodes[tn]
            halves = {}
            for e2 in sorted(c.border_edges(p)):
                h = ((e2.src, OUT, e2.src_port) if e2.src in p
                     else (e2.dst, IN, e2.dst_port))
                halves[h] = half_port[h]
            rules.append(Rule((contraction_rule(c, p, letter,
                                                target_rank=target.ranks[letter],
                                                port_map=halves),),
                              f"W{sideways}_p{i}"))
        return Rns(tuple(rules),
                   (LetterDisjoint(frozenset(c.ranked_letters())),),
                   f"W{sideways}")

    w_a = build("a", a, a_nodes)
    w_b = build("b", b, b_nodes)
    replay_a = prns_result(c, w_a)
    replay_b = prns_result(c, w_b)
    ok = (jungle_equal(replay_a, Jungle([a]))
          and jungle_equal(replay_b, Jungle([b])))
    return OriginCertificate(c, w_a, w_b, replay_a, replay_b, ok)


# -- bounded exhaustive origin search ----------------------------------------------


def origin_candidates(a: Net, b: Net, max_nodes: int = 5,
                      pool_budget: int = 40) -> List[Net]:
    """Candidate substances: canonical relabelings of both nets, the
    constructive origin when admissible, and a generated pool."""
    fresh = FreshLetters(a.ranks.keys() | b.ranks.keys())
    cands: List[Net] = []
    for base in (a, b):
        lmap = {l: fresh.fresh("z") for l in sorted(base.ranked_letters())}
        cands.append(base.relabeled(lmap))
    if a.delta_d() == b.delta_d():
        try:
            cert = common_origin(a, b)
            if cert.origin.size() <= max_nodes * 2:
                cands.append(cert.origin)
        except PreconditionFailed:
            pass
    sig = Signature({fresh.fresh("p"): (1, 1), fresh.fresh("p"): (1, 2),
                     fresh.fresh("p"): (0, 1)}, frozenset())
    for net in generate_nets(sig, min(max_nodes, 3), budget=pool_budget):
        cands.append(net)
    return [cand for cand in cands if cand.size() <= max_nodes * 2]


def search_origin(a: Net, b: Net, max_nodes: int = 5, max_ports: int = 12,
                  pool: Optional[List[Net]] = None,
                  replay: bool = True) -> Optional[OriginCertificate]:
    """Bounded exhaustive search for a common origin.

    Tries every candidate substance and every node partition pair whose
    contractions reproduce the two nets; found certificates replay through
    the engine.
    """
    if a.size() > max_nodes or b.size() > max_nodes:
        raise SizeBound("origin search beyond the node bound")
    cands = pool if pool is not None else origin_candidates(a, b, max_nodes)
    for c in cands:
        total_ports = sum(i + o for i, o in
                          (c.ranks[l] for l in c.nodes.values()))
        if total_ports > max_ports * 2 or c.ranked_letters() & (
                a.ranked_letters() | b.ranked_letters()):
            continue
        if c.delta_d() != a.delta_d() or c.delta_d() != b.delta_d():
            continue
        parts_a = [p for p in node_partitions(c) if len(p) == len(a.nodes)]
        for P in parts_a:
            qa = quotient_map(c, P, a)
            if qa is None:
                continue
            for Q in node_partitions(c):
                if len(Q) != len(b.nodes):
                    continue
                qb = quotient_map(c, Q, b)
                if qb is None:
                    continue
                w_a = quotient_prns(c, P, a, qa, "Wa")
                w_b = quotient_prns(c, Q, b, qb, "Wb")
                if not replay:
                    return OriginCertificate(c, w_a, w_b, Jungle([a]),
                                             Jungle([b]), True)
                ra = prns_result(c, w_a)
                rb = prns_result(c, w_b)
                if jungle_equal(ra, Jungle([a])) and jungle_equal(rb, Jungle([b])):
                    return OriginCertificate(c, w_a, w_b, ra, rb, True)
    return None


# -- conversions and derived checks -------------------------------------------------


def crns_to_prns(crns: Rns, t, fresh: Optional[FreshLetters] = None,
                 max_steps: int = 128) -> Optional[Rns]:
    """Convert an eligible cover system into a partitioning system with the
    same normal forms on t; None when no per-preform partition works or the
    replay disagrees."""
    tj = as_jungle(t)
    if not is_distinct_from_right_sides(crns):
        return None
    rules: List[Rule] = []
    counter = 0
    for p in crns.preforms():
        la = apex(p.left)
        right = p.rights[0]
        ra = apex(right)
        found = None
        for parts in node_partitions(la):
            if len(parts) != len(ra.nodes):
                continue
            mapping = quotient_map(la, parts, ra)
            if mapping is None:
                continue
            # manoeuvre ties must ride along with their parts
            part_index = {}
            for i, pt in enumerate(parts):
                for n in pt:
                    part_index[n] = i
            left_sites = {s.letter: s for s in move_sites(p.left)
                          if s.core_port is not None}
            right_sites = {s.letter: s for s in move_sites(right)
                           if s.core_port is not None}
            ok = True
            for letter, site in left_sites.items():
                rs = right_sites.get(letter)
                if rs is None:
                    ok = False
                    break
                if mapping[part_index[site.core_port[0]]] != rs.core_port[0]:
                    ok = False
                    break
            if ok:
                found = (parts, mapping)
                break
        if found is None:
            return None
        parts, mapping = found
        # per-part contraction rules carrying the original manoeuvres
        for i, pt in enumerate(parts):
            tn = mapping[i]
            sub_rule = _part_rule_with_moves(p.left, right, pt, tn,
                                             f"W_c{counter}")
            counter += 1
            rules.append(sub_rule)
    demands = (LetterDisjoint(frozenset(tj.ranked_letters())),)
    w = Rns(tuple(rules), demands, "W_from_crns")
    lhs = normal_form_single(tj, crns, max_steps)
    rhs = normal_form_single(tj, w, max_steps)
    if jungle_equal(lhs, rhs):
        return w
    return None


def _part_rule_with_moves(left: Net, right: Net, part_ids: Set[str],
                          target_node: str, name: str) -> Rule:
    """Contraction of one sub-part of a pattern, original manoeuvres kept."""
    host = left
    core = apex(left)
    keep = set(part_ids)
    # manoeuvre nodes attached to the part ride along
    attached = set()
    for s in move_sites(left):
        if s.core_port is not None and s.core_port[0] in keep:
            attached.add(s.node)
    sub_left = host.induced(keep | attached)
    # borders of the part inside the core become fresh manoeuvres
    borders = [e for e in core.edges
               if (e.src in keep) != (e.dst in keep)]
    forbidden = set(host.ranks) | set(right.ranks)
    lnodes = dict(sub_left.nodes)
    ledges = set(sub_left.edges)
    lranks = dict(sub_left.ranks)
    lfront = set(sub_left.frontier)
    assignment = {}
    for k, e in enumerate(sorted(borders)):
        x = _move_letter(100 + k, forbidden)
        nid = f"_b{k}"
        lnodes[nid] = x
        lranks[x] = (1, 1)
        lfront.add(x)
        if e.src in keep:
            h = (e.src, OUT, e.src_port)
            ledges.add(Edge(e.src, e.src_port, nid, 1))
        else:
            h = (e.dst, IN, e.dst_port)
            ledges.add(Edge(nid, 1, e.dst, e.dst_port))
        assignment[h] = x
    final_left = Net(lnodes, ledges, lranks, lfront)

    # right: the single target node of the right side with its ties
    letter = right.nodes[target_node]
    rnodes = {"c": letter}
    redges = []
    rranks = {letter: right.ranks[letter]}
    rfront: Set[str] = set()
    idx = 0
    # original manoeuvres of the right side anchored at the target node
    for s in move_sites(right):
        if s.core_port is not None and s.core_port[0] == target_node:
            nid = f"_m{idx}"
            idx += 1
            rnodes[nid] = s.letter
            rranks[s.letter] = (1, 1)
            rfront.add(s.letter)
            if s.core_port[1] == OUT:
                redges.append(Edge("c", s.core_port[2], nid, 1))
            else:
                redges.append(Edge(nid, 1, "c", s.core_port[2]))
    # border manoeuvres: pair canonically with the right side's edges
    ra = apex(right)
    t_edges = sorted(e for e in ra.edges
                     if e.src == target_node or e.dst == target_node)
    b_edges = sorted(borders)
    for he, te in zip(b_edges, t_edges):
        if he.src in keep:
            h = (he.src, OUT, he.src_port)
            d, i2 = OUT, te.src_port
        else:
            h = (he.dst, IN, he.dst_port)
            d, i2 = IN, te.dst_port
        x = assignment[h]
        nid = f"_m{idx}"
        idx += 1
        rnodes[nid] = x
        rranks[x] = (1, 1)
        rfront.add(x)
        if d == OUT:
            redges.append(Edge("c", i2, nid, 1))
        else:
            redges.append(Edge(nid, 1, "c", i2))
    final_right = Net(rnodes, redges, rranks, rfront)
    return Rule((RulePreform(final_left, (final_right,)),), name)


@dataclass(frozen=True)
class RoundtripVerdict:
    exact: bool
    containment: bool
    detail: str = ""


def crns_roundtrip(a, crns: Rns, max_steps: int = 128) -> RoundtripVerdict:
    """Forward then inverse normal forms: exact for systems distinct from
    right sides, containment otherwise."""
    aj = as_jungle(a)
    fwd = normal_form_single(aj, crns, max_steps)
    back = normal_form_single(fwd, crns.inverse(), max_steps)
    exact = jungle_equal(back, aj)
    containment = all(any(net_equal(x, y) for y in back) for x in aj)
    return RoundtripVerdict(exact, containment)


# -- cross colouring -----------------------------------------------------------------


@dataclass
class ColorTrace:
    colored: List[Jungle]
    is_clrns: bool
    total: bool
    detail: str = ""


def _overlap_jungle(pattern: Net, r: Net) -> Jungle:
    """Occurrence contents of the pattern's apex inside r."""
    pieces = []
    pa = apex(pattern)
    if not pa.nodes:
        return Jungle([])
    for occ in occurrences(r, pa):
        pieces.append(r.induced(occ.mapped_nodes()))
    return Jungle(pieces)


def clrns_color(r: Net, w: Rns, coloring: Mapping[str, Rns],
                depth_bound: int = 4, max_steps: int = 64) -> ColorTrace:
    """The overlap-colouring recursion for a rule system against a net.

    coloring maps rule names to their colouring systems; the verdict says
    whether every nonempty coloured jungle encloses the matching right apex
    and whether the left apexes induce a partition of an embedding net.
    """
    colored: List[Jungle] = []
    current: Jungle = Jungle([r])
    is_cl = True
    detail = ""
    for depth in range(depth_bound):
        nxt: List[Net] = []
        progressed = False
        for rule in w.rules:
            color = coloring.get(rule.name)
            for p in rule.preforms:
                base = Jungle([x for cur in current for x in
                               _overlap_jungle(p.left, cur)])
                if not base:
                    continue
                progressed = True
                image = (normal_form_single(base, color, max_steps)
                         if color is not None and color.rules else base)
                colored.append(image)
                nxt.extend(image)
                # every coloured net must occur inside the right apex
                for right in p.rights:
                    ra = apex(right)
                    if not ra.nodes:
                        continue
                    for net in image:
                        if net.size() and not occurrences(ra, net):
                            is_cl = False
                            detail = (f"{rule.name}: coloured jungle not "
                                      "enclosed in the right apex")
        if not progressed:
            break
        current = Jungle(nxt)
    # totality: the left apexes cover r node-disjointly
    covered: Set[str] = set()
    disjoint = True
    for rule in w.rules:
        for p in rule.preforms:
            pa = apex(p.left)
            if not pa.nodes:
                continue
            for occ in occurrences(r, pa):
                ids = occ.mapped_nodes()
                if ids & covered:
                    disjoint = False
                covered |= ids
    total = disjoint and covered == set(r.nodes)
    return ColorTrace(colored, is_cl, total, detail)


# -- generalized abstraction, congruence, centres -----------------------------------


@dataclass
class GarResult:
    related: bool
    certificate: Optional[OriginCertificate]
    type: str


GAR_TYPES = ("PRNS", "GPRNS", "CLRNS", "UPRNS")


def gar_related(a: Net, b: Net, type: str = "PRNS",
                max_nodes: int = 5) -> GarResult:
    """Typed abstraction relation: the free-port-count decision, with an
    origin certificate attached when the nets are small enough."""
    if type not in GAR_TYPES:
        raise ValueError(f"unknown intervener type {type}")
    related = abstraction_related(a, b)
    cert = None
    if related and a.size() <= max_nodes and b.size() <= max_nodes:
        try:
            cert = common_origin(a, b)
        except PreconditionFailed:
            cert = None
    return GarResult(related, cert, type)


@dataclass
class ProbeVerdict:
    samples: int
    counterexamples: List[str]

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def congruence_probe(pairs: Iterable[Tuple[Net, Net]],
                     tds_for: callable, max_steps: int = 64) -> ProbeVerdict:
    """Sampled congruence: related pairs stay related after typed rewriting.

    tds_for(net) returns the typed system to drive that side with.
    """
    from .apply import normal_form_single as nf
    count = 0
    bad: List[str] = []
    for a, b in pairs:
        count += 1
        if not abstraction_related(a, b):
            bad.append(f"sample {count}: inputs not related")
            continue
        ra = nf(Jungle([a]), tds_for(a), max_steps)
        rb = nf(Jungle([b]), tds_for(b), max_steps)
        if ra.delta_d() != rb.delta_d():
            bad.append(f"sample {count}: images differ "
                       f"({ra.delta_d()} vs {rb.delta_d()})")
    return ProbeVerdict(count, bad)


def uar_center_unique(class_sample: Sequence[Net], max_nodes: int = 5
                      ) -> List[Net]:
    """Minimal origins of a pairwise-related sample; raises when the sample
    is not a class.  The caller asserts pairwise isomorphism."""
    sample = list(class_sample)
    if not sample:
        raise PreconditionFailed("empty class sample")
    d = sample[0].delta_d()
    for net in sample[1:]:
        if net.delta_d() != d:
            raise PreconditionFailed("sample members not pairwise related")
    # candidate centres: canonical relabelings of each member plus pool
    fresh = FreshLetters(set().union(*[set(n.ranks) for n in sample]))
    cands: List[Net] = []
    for base in sample:
        lmap = {l: fresh.fresh("z") for l in sorted(base.ranked_letters())}
        cands.append(base.relabeled(lmap))
    sizes = sorted({c.size() for c in cands})
    for size in sizes:
        found: List[Net] = []
        for c in [x for x in cands if x.size() == size]:
            good = True
            for member in sample:
                hit = False
                for P in node_partitions(c):
                    if len(P) != len(member.nodes):
                        continue
                    qm = quotient_map(c, P, member)
                    if qm is not None:
                        w = quotient_prns(c, P, member, qm)
                        if jungle_equal(prns_result(c, w), Jungle([member])):
                            hit = True
                            break
                if not hit:
                    good = False
                    break
            if good:
                found.append(c)
        if found:
            return found
    return []
