"""RNS application, derivations, and normal forms.

One application step rewrites one redex of one net: the redex core is cut
out, a right side is pasted in, and the border ties re-glue through the
manoeuvre letters shared by the two sides.  Applying a system to a jungle
unions the single-step variants over every rule, match, and right
alternative, with nets left untouched when nothing matches them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import DemandViolation, UnsupportedSubstitution
from .net import IN, OUT, Edge, Jungle, Net, apex, as_jungle, jungle_equal, net_equal
from .rules import (DisallowMatch, FreshLetters, LetterDisjoint, OrderDemand,
                    PositionRestrict, RequireMatch, Rns, Rule, RulePreform)
from .subst import Match, MoveSite, match, move_sites


def _fresh_ids(taken: Set[str], count: int, base: str = "m") -> List[str]:
    out = []
    i = 0
    while len(out) < count:
        cand = f"{base}{i}"
        if cand not in taken:
            out.append(cand)
            taken.add(cand)
        i += 1
    return out


def rewrite_at(target: Net, preform: RulePreform, m: Match, right: Net,
               with_map: bool = False):
    """Replace the matched redex by the given right side.

    Returns None when the gluing is incompatible (a lawful no-op); with
    with_map=True returns (net, right-core node id mapping) instead.
    """
    redex = m.redex_nodes()
    bindings = m.binding_map()
    node_map = m.mapping()

    right_core = apex(right)
    taken = set(target.nodes)
    fresh = _fresh_ids(taken, len(right_core.nodes))
    rmap = dict(zip(sorted(right_core.nodes), fresh))

    nodes = {n: l for n, l in target.nodes.items() if n not in redex}
    edges = {e for e in target.edges if e.src not in redex and e.dst not in redex}
    ranks = dict(target.ranks)
    frontier = set(target.frontier)
    for rn in right_core.nodes:
        nodes[rmap[rn]] = right_core.nodes[rn]
        ranks.setdefault(right_core.nodes[rn], right_core.ranks[right_core.nodes[rn]])
    for e in right_core.edges:
        edges.add(Edge(rmap[e.src], e.src_port, rmap[e.dst], e.dst_port))
    for letter, rank in right.ranks.items():
        if letter not in right.frontier:
            ranks.setdefault(letter, rank)

    # Where do the left manoeuvre letters anchor on the right?
    right_sites = {s.letter: s for s in move_sites(right) if s.core_port is not None}
    left_site_port = {}
    for s in move_sites(preform.left):
        if s.core_port is not None:
            pn, d, i = s.core_port
            left_site_port[(node_map[pn], d, i)] = s.letter

    used_ports: Set[Tuple[str, str, int]] = set()
    for e in edges:
        used_ports.add((e.src, OUT, e.src_port))
        used_ports.add((e.dst, IN, e.dst_port))

    def plug(letter: str, peer) -> bool:
        """Connect the right-side anchor of `letter` to the context port."""
        site = right_sites.get(letter)
        if site is None:
            return True  # letter dropped on the right: deletion, port freed
        pn, d, i = site.core_port
        port = (rmap[pn], d, i)
        if peer is None:
            return True  # empty image: the anchor stays unoccupied
        if port in used_ports:
            return False
        if d == OUT:
            e = Edge(port[0], port[2], peer[0], peer[2])
            if peer[1] != IN:
                return False
        else:
            e = Edge(peer[0], peer[2], port[0], port[2])
            if peer[1] != OUT:
                return False
        edges.add(e)
        used_ports.add(port)
        used_ports.add(peer)
        return True

    # released internal edges: both halves sit on manoeuvre-held ports of the
    # redex; they re-form between the two right anchors
    for letter in sorted(bindings):
        peer = bindings[letter]
        if peer is None:
            continue
        if peer[0] in redex:
            partner = left_site_port.get(peer)
            if partner is None:
                return None  # tie into the redex without a named partner
            if partner < letter:
                continue  # handled once per pair
            site_a = right_sites.get(letter)
            site_b = right_sites.get(partner)
            if site_a is None or site_b is None:
                continue  # one side deleted: both ports stay free
            pa = (rmap[site_a.core_port[0]], site_a.core_port[1], site_a.core_port[2])
            pb = (rmap[site_b.core_port[0]], site_b.core_port[1], site_b.core_port[2])
            if pa[1] == pb[1]:
                return None
            out_p, in_p = (pa, pb) if pa[1] == OUT else (pb, pa)
            if out_p in used_ports or in_p in used_ports:
                return None
            edges.add(Edge(out_p[0], out_p[2], in_p[0], in_p[2]))
            used_ports.add(out_p)
            used_ports.add(in_p)
        else:
            if not plug(letter, peer):
                return None

    # right-only letters with image templates (innerly feedbacking rights)
    for letter, site in right_sites.items():
        if letter in bindings:
            continue
        template = preform.binds.get(letter)
        if template is None:
            return None
        if template.is_empty():
            continue
        t_ids = _fresh_ids(taken, len(template.net.nodes), base="t")
        tmap = dict(zip(sorted(template.net.nodes), t_ids))
        copy = template.net.renamed(tmap)
        nodes.update(copy.nodes)
        for l, rk in copy.ranks.items():
            ranks.setdefault(l, rk)
        frontier |= copy.frontier
        edges.update(copy.edges)
        for e in copy.edges:
            used_ports.add((e.src, OUT, e.src_port))
            used_ports.add((e.dst, IN, e.dst_port))
        if template.entry is not None:
            entry = (tmap[template.entry[0]], template.entry[1], template.entry[2])
            if not plug(letter, entry):
                return None

    try:
        result = Net(nodes, edges, ranks, frontier)
    except Exception:
        return None
    if with_map:
        return result, rmap
    return result


@dataclass(frozen=True)
class Step:
    """One application record inside a derivation trace."""
    rns: str
    rule: str
    redex: Tuple[str, ...]
    result: Jungle


def _allowed_matches(net: Net, rule: Rule, rns: Rns) -> List[Tuple[RulePreform, Match]]:
    out = []
    restricts = [d for d in rns.demands
                 if isinstance(d, PositionRestrict) and d.rule == rule.name]
    for p in rule.preforms:
        for m in match(p.left, net, exact_interface=True):
            if restricts and not all(m.redex_nodes() <= d.nodes for d in restricts):
                continue
            out.append((p, m))
    return out


def _single_steps(net: Net, rns: Rns) -> List[Tuple[Rule, Match, Net]]:
    """All one-step rewrites of one net under the system's demands."""
    steps: List[Tuple[Rule, Match, Net]] = []
    for layer in rns.priority_layers():
        layer_hit = False
        for rule in layer:
            for p, m in _allowed_matches(net, rule, rns):
                layer_hit = True
                for right in p.rights:
                    res = rewrite_at(net, p, m, right)
                    if res is not None:
                        steps.append((rule, m, res))
        if layer_hit:
            break
    return steps


def apply_rns(S, rns: Rns, mode: str = "all-redexes") -> Jungle:
    """One parallel application of the system to a jungle.

    all-redexes: the union over all rules, matches, and right alternatives;
    the input itself comes back when nothing matches.  chosen-redex: the
    canonically smallest single step per net, for reproducible driving.
    """
    S = as_jungle(S)
    results: List[Net] = []
    any_match = False
    matched_flags = {}
    per_net_steps = {}
    for idx, net in enumerate(S):
        steps = _single_steps(net, rns)
        per_net_steps[idx] = steps
        matched_flags[idx] = bool(steps)
        any_match = any_match or bool(steps)
    if not any_match:
        return S
    nets = list(S)
    if mode == "chosen-redex":
        out = []
        for idx, net in enumerate(nets):
            steps = per_net_steps[idx]
            if steps:
                best = min(steps, key=lambda s: (tuple(sorted(s[1].redex_nodes())),
                                                 repr(s[2])))
                out.append(best[2])
            else:
                out.append(net)
        return Jungle(out)
    for idx, net in enumerate(nets):
        for _, _, res in per_net_steps[idx]:
            results.append(res)
        # unchanged copies survive in variants rewriting other nets; a lone
        # matched net is consumed by its own rewrites
        if not matched_flags[idx] or len(nets) > 1:
            results.append(net)
    return Jungle(results)


@dataclass
class Derivation:
    """A replayable trace of successive applications."""
    start: Jungle
    steps: List[Step] = field(default_factory=list)
    budget_exceeded: bool = False

    def result(self) -> Jungle:
        return self.steps[-1].result if self.steps else self.start

    def __len__(self):
        return len(self.steps)


def derive(S, system: Sequence[Rns], strategy: str = "bfs",
           max_steps: int = 16) -> Derivation:
    """Apply systems up to max_steps; deterministic for a fixed strategy.

    bfs explores the full union at each step (each step applies every
    system); leftmost applies the first system with any effect.
    """
    S = as_jungle(S)
    trace = Derivation(S)
    current = S
    for _ in range(max_steps):
        progressed = False
        if strategy == "leftmost":
            for rns in system:
                nxt = apply_rns(current, rns, mode="chosen-redex")
                if not jungle_equal(nxt, current):
                    trace.steps.append(Step(rns.name, "*", (), nxt))
                    current = nxt
                    progressed = True
                    break
        else:
            union: List[Net] = []
            changed = False
            for rns in system:
                nxt = apply_rns(current, rns)
                union.extend(nxt)
                if not jungle_equal(nxt, current):
                    changed = True
            nxt_j = Jungle(union) if system else current
            if changed:
                trace.steps.append(Step("|".join(r.name for r in system), "*", (), nxt_j))
                current = nxt_j
                progressed = True
        if not progressed:
            return trace
    # one more probe: if anything still applies, flag the budget
    for rns in system:
        if not jungle_equal(apply_rns(current, rns), current):
            trace.budget_exceeded = True
            break
    return trace


@dataclass
class NormalFormReport:
    forms: Jungle
    flagged: Jungle            # still reducible when the budget ran out
    steps_used: int = 0

    def ok(self) -> bool:
        return not len(self.flagged)


def _demand_filter(rns: Rns, net: Net) -> bool:
    for d in rns.demands:
        if isinstance(d, LetterDisjoint):
            if net.ranked_letters() & d.letters:
                return False
    return True


def normal_forms(S, system, max_steps: int = 64) -> NormalFormReport:
    """All irreducible derivatives reachable within the budget.

    Nets still reducible when the budget runs out are excluded from the
    result and reported on the side channel.
    """
    if isinstance(system, Rns):
        systems = [system]
    else:
        systems = list(system)
    S = as_jungle(S)
    forms: List[Net] = []
    flagged: List[Net] = []
    seen: List[Net] = []
    frontier: List[Net] = list(S)
    steps = 0

    def seen_before(net: Net) -> bool:
        return any(net_equal(net, m) for m in seen)

    while frontier:
        net = frontier.pop(0)
        if seen_before(net):
            continue
        seen.append(net)
        all_steps: List[Net] = []
        for rns in systems:
            for _, _, res in _single_steps(net, rns):
                all_steps.append(res)
        if not all_steps:
            if all(_demand_filter(rns, net) for rns in systems):
                forms.append(net)
            continue
        steps += 1
        if steps > max_steps:
            flagged.append(net)
            flagged.extend(all_steps)
            continue
        frontier.extend(all_steps)
    return NormalFormReport(Jungle(forms), Jungle(flagged), steps)


def normal_form_single(S, system, max_steps: int = 64) -> Jungle:
    """Normal forms as a jungle; raises when the budget cut exploration."""
    report = normal_forms(S, system, max_steps)
    return report.forms


def relation_to_rns(pairs: Iterable[Tuple[object, object]], name: str = "rel") -> Rns:
    """An RNS presenting a finite relation: one rule per left component."""
    grouped: Dict[int, Tuple[Net, List[Net]]] = {}
    order: List[Net] = []
    for a, b in pairs:
        a_nets = list(as_jungle(a))
        b_nets = list(as_jungle(b))
        if len(a_nets) != 1:
            raise UnsupportedSubstitution("relation lefts must be single nets")
        a_net = a_nets[0]
        hit = None
        for i, known in enumerate(order):
            if net_equal(known, a_net):
                hit = i
                break
        if hit is None:
            order.append(a_net)
            hit = len(order) - 1
            grouped[hit] = (a_net, [])
        grouped[hit][1].extend(b_nets)
    rules = []
    for i, (a_net, bs) in sorted(grouped.items()):
        rules.append(Rule((RulePreform(a_net, tuple(bs)),), f"{name}_r{i}"))
    return Rns(tuple(rules), (), name)
