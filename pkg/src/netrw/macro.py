"""Macro/micro rule systems over net classes and the parallel machinery.

Given a ground rule system and a partitioning intervener, the macro acts on
the contracted (concept) net so that contracting, rewriting with the macro,
and expanding through the closing intervener reproduces ground rewriting:

    t W^  R0^  (W0^-1)^   =   t R^

The construction walks the ground derivation tree: at each state it splits
straddling parts, lifts each redex to a concept pattern, contracts each
right side to a fresh letter, and re-derives the intervener for the next
state.  Certificates store the rule systems and the replay transcript.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .abstraction import (FreshLetters, contraction_rule, prns_result,
                          validate_prns, VALIDATORS)
from .apply import apply_rns, normal_form_single, rewrite_at, _single_steps
from .errors import ReplayFailure, TypeMismatch, NotDistinctive, PreconditionFailed
from .net import (IN, OUT, Edge, Jungle, Net, apex, as_jungle, jungle_equal,
                  net_equal)
from .rules import LetterDisjoint, OrderDemand, Rns, Rule, RulePreform
from .subst import Match, match, move_sites
from .transducer import Transducer


Half = Tuple[str, str, int]


@dataclass
class PartSystem:
    """A partition of a host net with one concept letter per part.

    anchors fix, per part, which concept-letter port each border half of
    the part re-glues through; free ports of the part stay free ports of
    the letter.
    """
    host: Net
    parts: List[FrozenSet[str]]
    letters: List[str]
    anchors: List[Dict[Half, Tuple[str, int]]]
    ranks: List[Tuple[int, int]]

    def part_of(self) -> Dict[str, int]:
        out = {}
        for i, p in enumerate(self.parts):
            for n in p:
                out[n] = i
        return out

    def concept(self) -> Tuple[Net, Dict[int, str]]:
        """The contracted net, built directly from the part data."""
        nodes = {}
        ranks: Dict[str, Tuple[int, int]] = {}
        cid: Dict[int, str] = {}
        for i, letter in enumerate(self.letters):
            cid[i] = f"k{i}"
            nodes[f"k{i}"] = letter
            ranks[letter] = self.ranks[i]
        part_of = self.part_of()
        edges = []
        for e in sorted(self.host.edges):
            i, j = part_of[e.src], part_of[e.dst]
            if i == j:
                continue
            d1, p1 = self.anchors[i][(e.src, OUT, e.src_port)]
            d2, p2 = self.anchors[j][(e.dst, IN, e.dst_port)]
            edges.append(Edge(cid[i], p1, cid[j], p2))
        return Net(nodes, edges, ranks, frozenset()), cid

    def rules(self, name: str) -> Rns:
        out = []
        for i, p in enumerate(self.parts):
            pre = contraction_rule(self.host, p, self.letters[i],
                                   target_rank=self.ranks[i],
                                   port_map=self.anchors[i])
            out.append(Rule((pre,), f"{name}_p{i}"))
        return Rns(tuple(out),
                   (LetterDisjoint(frozenset(self.host.ranked_letters())),),
                   name)


def canonical_part(host: Net, ids: Iterable[str], letter: str
                   ) -> Tuple[Dict[Half, Tuple[str, int]], Tuple[int, int]]:
    """Sequential anchor assignment over the sorted border halves."""
    ids = set(ids)
    halves: List[Half] = []
    for e in sorted(host.border_edges(ids)):
        if e.src in ids:
            halves.append((e.src, OUT, e.src_port))
        else:
            halves.append((e.dst, IN, e.dst_port))
    in_h = [h for h in sorted(halves) if h[1] == IN]
    out_h = [h for h in sorted(halves) if h[1] == OUT]
    part = host.induced(ids)
    half_set = set(halves)
    really_free = [p for p in part.unoccupied_ports() if p not in half_set]
    free_in = sum(1 for p in really_free if p[1] == IN)
    free_out = len(really_free) - free_in
    anchors: Dict[Half, Tuple[str, int]] = {}
    for k, h in enumerate(in_h, 1):
        anchors[h] = (IN, k)
    for k, h in enumerate(out_h, 1):
        anchors[h] = (OUT, k)
    rank = (len(in_h) + free_in, len(out_h) + free_out)
    return anchors, rank


def discover_parts(w: Rns, host: Net) -> PartSystem:
    """Read the part structure a partitioning system induces on a host."""
    parts: List[FrozenSet[str]] = []
    letters: List[str] = []
    anchors: List[Dict[Half, Tuple[str, int]]] = []
    ranks: List[Tuple[int, int]] = []
    taken: Set[str] = set()
    for rule in w.rules:
        for p in rule.preforms:
            right = p.rights[0]
            rcore = apex(right)
            letter = next(iter(rcore.letters()))
            rank = right.ranks[letter]
            site_port = {s.letter: (s.core_port[1], s.core_port[2])
                         for s in move_sites(right) if s.core_port is not None}
            for m in match(p.left, host, exact_interface=True):
                ids = m.redex_nodes()
                if ids & taken:
                    continue
                amap: Dict[Half, Tuple[str, int]] = {}
                node_map = m.mapping()
                for s in move_sites(p.left):
                    if s.core_port is None:
                        continue
                    pn, d, i = s.core_port
                    amap[(node_map[pn], d, i)] = site_port[s.letter]
                parts.append(frozenset(ids))
                letters.append(letter)
                anchors.append(amap)
                ranks.append(rank)
                taken |= ids
    if taken != set(host.nodes):
        raise TypeMismatch("intervener does not partition the host")
    return PartSystem(host, parts, letters, anchors, ranks)


# -- lifting ground rewriting to concept level ----------------------------------


def _lift_pattern(ps: PartSystem, preform: RulePreform, m: Match,
                  fresh: FreshLetters, concept: Net, cid: Dict[int, str],
                  beta: str) -> Tuple[List[Rule], PartSystem, Net, int]:
    """Rules applying one ground step at concept level, plus the next state.

    Returns (rules, next part system, next ground net, redex part count).
    Split rules come first; the main rule consumes the redex region.
    """
    host = ps.host
    redex = set(m.redex_nodes())
    part_of = ps.part_of()
    touched = sorted({part_of[n] for n in redex})
    inside = [i for i in touched if set(ps.parts[i]) <= redex]
    straddle = [i for i in touched if i not in inside]

    rules: List[Rule] = []
    # --- split rules -----------------------------------------------------
    split_letters: Dict[int, Tuple[str, str]] = {}
    for i in straddle:
        ids = set(ps.parts[i])
        ids_in = frozenset(ids & redex)
        ids_out = frozenset(ids - redex)
        li = fresh.fresh("i")
        lo = fresh.fresh("o")
        split_letters[i] = (li, lo)
        rules.append(_split_rule(ps, i, ids_in, ids_out, li, lo, concept,
                                 cid, fresh))

    # --- the next ground state -------------------------------------------
    right = preform.rights[0]
    stepped = rewrite_at(host, preform, m, right, with_map=True)
    if stepped is None:
        raise ReplayFailure("ground step refused during macro construction")
    nxt, rmap = stepped
    new_ids = set(nxt.nodes) - set(host.nodes)

    # --- the next part system ----------------------------------------------
    n_parts: List[FrozenSet[str]] = []
    n_letters: List[str] = []
    n_anchors: List[Dict[Half, Tuple[str, int]]] = []
    n_ranks: List[Tuple[int, int]] = []
    lift_port: Dict[int, Dict[Half, Tuple[str, int]]] = {}
    for i, p in enumerate(ps.parts):
        if i in inside:
            continue
        if i in straddle:
            ids_out = frozenset(set(p) - redex)
            if not ids_out:
                continue
            letter = split_letters[i][1]
            am, rk = canonical_part(nxt, ids_out, letter)
            n_parts.append(ids_out)
            n_letters.append(letter)
            n_anchors.append(am)
            n_ranks.append(rk)
        else:
            # ties that vanished with the redex leave their anchors unused
            n_parts.append(p)
            n_letters.append(ps.letters[i])
            n_anchors.append(dict(ps.anchors[i]))
            n_ranks.append(ps.ranks[i])
    if new_ids:
        am, rk = canonical_part(nxt, new_ids, beta)
        n_parts.append(frozenset(new_ids))
        n_letters.append(beta)
        n_anchors.append(am)
        n_ranks.append(rk)
    nps = PartSystem(nxt, n_parts, n_letters, n_anchors, n_ranks)

    # --- expansion records for the letters this step created ----------------
    expansions: Dict[str, RulePreform] = {}
    for i in straddle:
        ids = set(ps.parts[i])
        li, lo = split_letters[i]
        am_i, rk_i = canonical_part(host, ids & redex, li)
        expansions[li] = contraction_rule(host, ids & redex, li, rk_i, am_i)
        if ids - redex:
            am_o, rk_o = canonical_part(nxt, frozenset(ids - redex), lo)
            expansions[lo] = contraction_rule(nxt, ids - redex, lo, rk_o, am_o)
    if new_ids:
        am_b, rk_b = canonical_part(nxt, new_ids, beta)
        expansions[beta] = contraction_rule(nxt, new_ids, beta, rk_b, am_b)

    # --- the main rule ------------------------------------------------------
    rules.append(_main_rule(ps, preform, m, inside, straddle, split_letters,
                            nps, beta, new_ids, fresh, rmap))
    return rules, nps, nxt, len(touched), expansions


def _split_rule(ps: PartSystem, i: int, ids_in: FrozenSet[str],
                ids_out: FrozenSet[str], li: str, lo: str, concept: Net,
                cid: Dict[int, str], fresh: FreshLetters) -> Rule:
    """Replace one concept letter by the redex-side and context-side letters."""
    host = ps.host
    letter = ps.letters[i]
    # left: the concept node with manoeuvres on its occupied ports
    cnode = cid[i]
    lnodes = {"c": letter}
    ledges = []
    lranks = {letter: ps.ranks[i]}
    lfront: Set[str] = set()
    move_of_port: Dict[Tuple[str, int], str] = {}
    k = 0
    for port in sorted(concept.ports(cnode)):
        if concept.edge_at(port) is None:
            continue
        x = f"x{k}"
        k += 1
        nid = f"_m{k}"
        lnodes[nid] = x
        lranks[x] = (1, 1)
        lfront.add(x)
        move_of_port[(port[1], port[2])] = x
        if port[1] == OUT:
            ledges.append(Edge("c", port[2], nid, 1))
        else:
            ledges.append(Edge(nid, 1, "c", port[2]))
    left = Net(lnodes, ledges, lranks, lfront)

    # right: li and lo nodes, split edges between them, anchors re-routed
    a_in, r_in = canonical_part(host, ids_in, li)
    a_out, r_out = canonical_part(host, ids_out, lo)
    rnodes = {"ci": li, "co": lo}
    rranks = {li: r_in, lo: r_out}
    redges: List[Edge] = []
    rfront: Set[str] = set()
    k = 0
    for half, (d, idx) in sorted(ps.anchors[i].items()):
        # where does this half live after the split?
        side, amap = (("ci", a_in) if half[0] in ids_in else ("co", a_out))
        nd, nidx = amap[half]
        x = move_of_port.get((d, idx))
        if x is None:
            continue  # the port was unoccupied in this state
        nid = f"_r{k}"
        k += 1
        rnodes[nid] = x
        rranks[x] = (1, 1)
        rfront.add(x)
        if nd == OUT:
            redges.append(Edge(side, nidx, nid, 1))
        else:
            redges.append(Edge(nid, 1, side, nidx))
    # split edges: borders between ids_in and ids_out inside the part
    for e in sorted(host.edges):
        if e.src in ids_in and e.dst in ids_out:
            d1, p1 = a_in[(e.src, OUT, e.src_port)]
            d2, p2 = a_out[(e.dst, IN, e.dst_port)]
            redges.append(Edge("ci", p1, "co", p2))
        elif e.src in ids_out and e.dst in ids_in:
            d1, p1 = a_out[(e.src, OUT, e.src_port)]
            d2, p2 = a_in[(e.dst, IN, e.dst_port)]
            redges.append(Edge("co", p1, "ci", p2))
    right = Net(rnodes, redges, rranks, rfront)
    return Rule((RulePreform(left, (right,)),),
                f"split_{fresh.fresh('rn')}")


def _main_rule(ps: PartSystem, preform: RulePreform, m: Match,
               inside: List[int], straddle: List[int],
               split_letters: Dict[int, Tuple[str, str]],
               nps: PartSystem, beta: str, new_ids: Set[str],
               fresh: FreshLetters, rmap: Dict[str, str]) -> Rule:
    """The concept-level counterpart of one ground redex."""
    host = ps.host
    redex = set(m.redex_nodes())
    part_of = ps.part_of()

    # concept-side nodes of the redex region, with their port anchors
    region: Dict[int, Tuple[str, Dict[Half, Tuple[str, int]], Tuple[int, int]]] = {}
    for i in inside:
        region[i] = (ps.letters[i], ps.anchors[i], ps.ranks[i])
    for i in straddle:
        ids_in = frozenset(set(ps.parts[i]) & redex)
        li = split_letters[i][0]
        am, rk = canonical_part(host, ids_in, li)
        region[i] = (li, am, rk)

    free_alloc: Dict[Tuple[int, str], Set[int]] = {}

    def region_half(n: str, d: str, idx: int) -> Optional[Tuple[int, str, int]]:
        """Locate a ground half on the lifted region: (part, dir, port)."""
        i = part_of[n]
        if i not in region:
            return None
        letter, am, rk = region[i]
        h = (n, d, idx)
        if h in am:
            dd, pp = am[h]
            return (i, dd, pp)
        if not host.occupied(h):
            # an unbound tie sits on a free port of the part; allocate one
            # of the letter's free port indices for it deterministically
            used = {pp for (dd, pp) in am.values() if dd == d}
            used |= free_alloc.setdefault((i, d), set())
            cap = rk[0] if d == IN else rk[1]
            for cand in range(1, cap + 1):
                if cand not in used:
                    free_alloc[(i, d)].add(cand)
                    return (i, d, cand)
        return None

    lnodes: Dict[str, str] = {}
    lranks: Dict[str, Tuple[int, int]] = {}
    lfront: Set[str] = set()
    ledges: List[Edge] = []
    nid_of: Dict[int, str] = {}
    for i in sorted(region):
        letter, am, rk = region[i]
        nid_of[i] = f"g{i}"
        lnodes[f"g{i}"] = letter
        lranks[letter] = rk

    # intra-region edges (ground edges inside the redex between parts)
    seen_ports: Set[Tuple[str, str, int]] = set()
    for e in sorted(host.edges):
        if e.src in redex and e.dst in redex:
            i, j = part_of[e.src], part_of[e.dst]
            if i == j and i in straddle:
                # both halves inside the straddling part's redex side: the
                # edge lives inside the lifted letter
                continue
            if i == j:
                continue
            a = region_half(e.src, OUT, e.src_port)
            b = region_half(e.dst, IN, e.dst_port)
            if a is None or b is None:
                continue
            ledges.append(Edge(nid_of[a[0]], a[2], nid_of[b[0]], b[2]))
            seen_ports.add((nid_of[a[0]], OUT, a[2]))
            seen_ports.add((nid_of[b[0]], IN, b[2]))

    # manoeuvre ties: the micro pattern's manoeuvre sites, lifted
    node_map = m.mapping()
    lifted_site: Dict[str, Tuple[str, str, int]] = {}
    k = 0
    for s in move_sites(preform.left):
        if s.core_port is None:
            continue
        pn, d, idx = s.core_port
        spot = region_half(node_map[pn], d, idx)
        if spot is None:
            raise ReplayFailure("micro tie escapes the lifted region")
        port = (nid_of[spot[0]], spot[1], spot[2])
        if port in seen_ports:
            raise ReplayFailure("lifted tie clashes with a region edge")
        nid = f"_l{k}"
        k += 1
        lnodes[nid] = s.letter
        lranks[s.letter] = (1, 1)
        lfront.add(s.letter)
        if spot[1] == OUT:
            ledges.append(Edge(port[0], port[2], nid, 1))
        else:
            ledges.append(Edge(nid, 1, port[0], port[2]))
        lifted_site[s.letter] = port
        seen_ports.add(port)
    left = Net(lnodes, ledges, lranks, lfront)

    # right: the fresh beta letter with the micro right's ties re-anchored
    if new_ids:
        idx_b = nps.parts.index(frozenset(new_ids))
        b_anchors = nps.anchors[idx_b]
        b_rank = nps.ranks[idx_b]
    else:
        b_anchors, b_rank = {}, (0, 0)
    rnodes = {"b": beta}
    rranks = {beta: b_rank}
    rfront: Set[str] = set()
    redges: List[Edge] = []
    k = 0
    # ties of the new material: each border half of the new part is the
    # image of one right-side manoeuvre site through the rewrite surgery
    right_net = preform.rights[0]
    half_letter: Dict[Half, str] = {}
    for s in move_sites(right_net):
        if s.core_port is None:
            continue
        pn, d, idx = s.core_port
        half_letter[(rmap[pn], d, idx)] = s.letter
    for half, (d, idx) in sorted(b_anchors.items()):
        letter = half_letter.get(half)
        if letter is None:
            raise ReplayFailure("unnamed tie on the rewritten material")
        nid = f"_r{k}"
        k += 1
        rnodes[nid] = letter
        rranks[letter] = (1, 1)
        rfront.add(letter)
        if d == OUT:
            redges.append(Edge("b", idx, nid, 1))
        else:
            redges.append(Edge(nid, 1, "b", idx))
    right = Net(rnodes, redges, rranks, rfront)
    return Rule((RulePreform(left, (right,)),), f"main_{fresh.fresh('rn')}")


@dataclass
class MacroCertificate:
    micro: Rns
    intervener_in: Rns
    macro: Rns
    intervener_out: Rns
    object: Jungle
    lhs: Jungle
    rhs: Jungle
    ok: bool
    expansions: Dict[str, RulePreform] = field(default_factory=dict)


def build_macro(r: Rns, w: Rns, t, type: str = "PRNS",
                fresh: Optional[FreshLetters] = None,
                max_steps: int = 64) -> MacroCertificate:
    """Construct the macro system and closing intervener for one micro.

    Walks every ground derivation of the object under the micro, lifting
    each step through the current part system; the certificate replays

        t W^ R0^ (W0^-1)^  ==  t R^
    """
    if r.is_conditional():
        raise TypeMismatch("micro must be nonconditional")
    validator = VALIDATORS.get(type)
    if validator is None:
        raise TypeMismatch(f"unsupported intervener type {type}")
    tj = as_jungle(t)
    report = validator(w, tj)
    if not report.passed:
        raise TypeMismatch(
            f"intervener fails {type} validation: "
            + "; ".join(c.name for c in report.failures()))
    if fresh is None:
        fresh = FreshLetters(set())
    fresh.reserve(set().union(*[set(n.ranks) for n in tj]) | r.all_letters()
                  | w.all_letters())

    macro_rules: List[Rule] = []
    final_rules: List[Rule] = []
    expansions: Dict[str, RulePreform] = {}

    def add_rule(rule: Rule, bucket: List[Rule]) -> None:
        for known in bucket:
            kp, np_ = known.preforms[0], rule.preforms[0]
            if (net_equal(kp.left, np_.left)
                    and all(net_equal(a, b) for a, b in zip(kp.rights, np_.rights))):
                return
        bucket.append(rule)

    # walk the full derivation tree; lifted rules are branch-specific by
    # their fresh letters, so no cross-branch interference arises
    frontier: List[Tuple[Net, PartSystem]] = []
    for net in tj:
        ps = discover_parts(w, net)
        frontier.append((net, ps))
    terminal_count = 0
    budget = max_steps
    while frontier:
        host, ps = frontier.pop(0)
        concept, cid = ps.concept()
        steps = []
        for rule in r.rules:
            for p in rule.preforms:
                for m in match(p.left, host, exact_interface=True):
                    steps.append((p, m))
        if not steps:
            # terminal state: its intervener closes the equation
            terminal_count += 1
            for rl in ps.rules(f"W0_{terminal_count}").rules:
                add_rule(rl, final_rules)
            continue
        budget -= 1
        if budget < 0:
            raise ReplayFailure("macro construction exceeded the step budget")
        for p, m in steps:
            beta = fresh.fresh("b")
            new_rules, nps, nxt, _, exp = _lift_pattern(ps, p, m, fresh,
                                                        concept, cid, beta)
            for rl in new_rules:
                add_rule(rl, macro_rules)
            expansions.update(exp)
            frontier.append((nxt, nps))

    order_demands: List[object] = []
    split_names = [rl.name for rl in macro_rules if rl.name.startswith("split_")]
    main_names = [rl.name for rl in macro_rules if rl.name.startswith("main_")]
    for s in split_names:
        for mn in main_names:
            order_demands.append(OrderDemand(s, mn))
    macro = Rns(tuple(macro_rules), tuple(order_demands), "R0")
    w0 = Rns(tuple(final_rules), (), "W0")

    lhs_concept = prns_result(tj, w, max_steps)
    lhs_rewritten = normal_form_single(lhs_concept, macro, max_steps)
    lhs = normal_form_single(lhs_rewritten, w0.inverse(), max_steps)
    rhs = normal_form_single(tj, r, max_steps)
    ok = jungle_equal(lhs, rhs)
    return MacroCertificate(r, w, macro, w0, tj, lhs, rhs, ok, expansions)


# -- expansion: macro patterns back to ground level -----------------------------


def expansion_table(w: Rns) -> Dict[str, Tuple[Net, Dict[Tuple[str, int], Half]]]:
    """letter -> (part content, concept port -> content border half)."""
    table: Dict[str, Tuple[Net, Dict[Tuple[str, int], Half]]] = {}
    for p in w.preforms():
        right = p.rights[0]
        rcore = apex(right)
        if rcore.size() != 1:
            continue
        letter = next(iter(rcore.letters()))
        content = apex(p.left)
        left_half = {s.letter: s.core_port for s in move_sites(p.left)
                     if s.core_port is not None}
        port_to_half: Dict[Tuple[str, int], Half] = {}
        for s in move_sites(right):
            if s.core_port is None:
                continue
            _, d, idx = s.core_port
            if s.letter in left_half:
                port_to_half[(d, idx)] = left_half[s.letter]
        # free letter ports pair with free content ports in canonical order
        anchored_halves = set(port_to_half.values())
        rank = right.ranks[letter]
        for d, cap in ((IN, rank[0]), (OUT, rank[1])):
            free_idx = [k for k in range(1, cap + 1)
                        if (d, k) not in port_to_half]
            free_half = [h for h in sorted(content.unoccupied_ports())
                         if h[1] == d and h not in anchored_halves]
            for idx, half in zip(free_idx, free_half):
                port_to_half[(d, idx)] = half
        table[letter] = (content, port_to_half)
    return table


def _table_from_preforms(preforms: Mapping[str, RulePreform]
                         ) -> Dict[str, Tuple[Net, Dict[Tuple[str, int], Half]]]:
    dummy = Rns(tuple(Rule((p,), f"e{i}") for i, p in
                enumerate(preforms.values())), (), "exp")
    return expansion_table(dummy)


def expand_pattern(pattern: Net,
                   table: Mapping[str, Tuple[Net, Dict[Tuple[str, int], Half]]]
                   ) -> Net:
    """Replace concept-letter nodes by their part contents, ties re-glued."""
    nodes: Dict[str, str] = {}
    edges: List[Edge] = []
    ranks: Dict[str, Tuple[int, int]] = {}
    frontier: Set[str] = set()
    resolver: Dict[Tuple[str, str, int], Tuple[str, str, int]] = {}
    counter = 0
    for n in sorted(pattern.nodes):
        letter = pattern.nodes[n]
        if letter in table and not pattern.is_frontier_node(n):
            content, port_to_half = table[letter]
            mapping = {}
            for cn in sorted(content.nodes):
                nid = f"e{counter}"
                counter += 1
                mapping[cn] = nid
                nodes[nid] = content.nodes[cn]
                ranks.setdefault(content.nodes[cn], content.ranks[content.nodes[cn]])
                if content.nodes[cn] in content.frontier:
                    frontier.add(content.nodes[cn])
            for e in content.edges:
                edges.append(Edge(mapping[e.src], e.src_port,
                                  mapping[e.dst], e.dst_port))
            for (d, idx), half in port_to_half.items():
                resolver[(n, d, idx)] = (mapping[half[0]], half[1], half[2])
        else:
            nid = f"e{counter}"
            counter += 1
            nodes[nid] = letter
            ranks.setdefault(letter, pattern.ranks[letter])
            if letter in pattern.frontier:
                frontier.add(letter)
            i_r, o_r = pattern.ranks[letter]
            for k in range(1, i_r + 1):
                resolver[(n, IN, k)] = (nid, IN, k)
            for k in range(1, o_r + 1):
                resolver[(n, OUT, k)] = (nid, OUT, k)
    for e in sorted(pattern.edges):
        src = resolver.get((e.src, OUT, e.src_port))
        dst = resolver.get((e.dst, IN, e.dst_port))
        if src is None or dst is None:
            raise ReplayFailure("macro tie has no ground counterpart")
        edges.append(Edge(src[0], src[2], dst[0], dst[2]))
    return Net(nodes, edges, ranks, frontier)


def solve_micro(r0: Rns, w: Rns, t,
                extra_expansions: Optional[Mapping[str, RulePreform]] = None,
                max_steps: int = 64) -> Tuple[Rns, Rns]:
    """Recover a ground micro from a macro and the intervener.

    Patterns expand through the intervener's contraction data (plus any
    auxiliary expansions a construction recorded); identity-acting lifted
    rules drop out.  Returns the micro and a closing intervener whose
    replay commutes on t.
    """
    table = expansion_table(w)
    if extra_expansions:
        table.update(_table_from_preforms(dict(extra_expansions)))
    rules: List[Rule] = []
    for i, p in enumerate(r0.preforms()):
        left = expand_pattern(p.left, table)
        rights = tuple(expand_pattern(x, table) for x in p.rights)
        if all(net_equal(left, x) for x in rights):
            continue
        rules.append(Rule((RulePreform(left, rights),), f"mi{i}"))
    micro = Rns(tuple(rules), (), r0.name + "_micro")
    tj = as_jungle(t)
    if not micro.rules:
        return micro, Rns((), (), "W0")
    cert = build_macro(micro, w, tj, max_steps=max_steps)
    return micro, cert.intervener_out


# -- parallels, class rewriting, quotient checks ---------------------------------


@dataclass
class ParallelPair:
    r: Rns
    partner: Rns
    theta_type: str
    origin: Optional[Net] = None
    ok: bool = True
    detail: str = ""


def parallel_of(r: Rns, w_a: Rns, w_b: Rns, origin,
                type: str = "PRNS", max_steps: int = 64) -> ParallelPair:
    """The partner acting on the sister side: expand through one intervener,
    re-contract through the other."""
    cj = as_jungle(origin)
    micro, _ = solve_micro(r, w_a, cj, max_steps=max_steps)
    if not micro.rules:
        return ParallelPair(r, micro, type,
                            list(cj)[0] if len(cj) else None, True,
                            "micro empty: partner trivially parallel")
    cert = build_macro(micro, w_b, cj, type=type, max_steps=max_steps)
    a_side = prns_result(cj, w_a, max_steps)
    b_side = prns_result(cj, w_b, max_steps)
    img_a = normal_form_single(a_side, r, max_steps)
    img_b = normal_form_single(b_side, cert.macro, max_steps)
    ok = img_a.delta_d() == img_b.delta_d() if len(img_a) and len(img_b) else True
    return ParallelPair(r, cert.macro, type, list(cj)[0] if len(cj) else None,
                        ok, "" if ok else
                        f"class keys differ: {img_a.delta_d()} vs {img_b.delta_d()}")


@dataclass
class ClassImage:
    member: Net
    image: Jungle
    key: int


def class_rewrite(class_sample: Sequence[Net], r: Rns, origin: Net,
                  interveners: Sequence[Rns], max_steps: int = 64
                  ) -> List[ClassImage]:
    """Rewrite each class member with the macro transported through its own
    intervener; images stay inside the class of the rewritten origin."""
    keys = {m.delta_d() for m in class_sample}
    if len(keys) != 1:
        raise NotDistinctive("sample members carry different class keys")
    out: List[ClassImage] = []
    for member, w in zip(class_sample, interveners):
        cert = build_macro(r, w, Jungle([origin]), max_steps=max_steps)
        img = normal_form_single(Jungle([member]), cert.macro, max_steps)
        out.append(ClassImage(member, img, img.delta_d()))
    return out


@dataclass
class QuotientVerdict:
    checked: int
    violations: List[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def partially_quotient_check(class_sample: Sequence[Net], tds: Sequence[Rns],
                             origin: Net, interveners: Sequence[Rns],
                             max_steps: int = 64) -> QuotientVerdict:
    """Class rewriting commutes: every member's transported image lands in
    the class of the origin's own image."""
    keys = {m.delta_d() for m in class_sample}
    if len(keys) != 1:
        raise NotDistinctive("sample members carry different class keys")
    violations: List[str] = []
    checked = 0
    for f in tds:
        base = normal_form_single(Jungle([origin]), f, max_steps)
        base_key = base.delta_d() if len(base) else origin.delta_d()
        images = class_rewrite(class_sample, f, origin, interveners, max_steps)
        for ci in images:
            checked += 1
            ok_keys = {base_key, origin.delta_d()}
            if len(ci.image) and ci.key not in ok_keys:
                violations.append(
                    f"{f.name}: member image key {ci.key} outside {ok_keys}")
    return QuotientVerdict(checked, violations)


def build_macro_td(td: Transducer, w: Rns, t, type: str = "PRNS",
                   max_steps: int = 64) -> Tuple[Transducer, Dict[str, MacroCertificate]]:
    """Carrier preserved; every attached system replaced by its macro."""
    certs: Dict[str, MacroCertificate] = {}
    mapping: Dict[str, Rns] = {}
    for rns in td.systems():
        if not rns.rules:
            mapping[rns.name] = rns
            continue
        cert = build_macro(rns, w, t, type=type, max_steps=max_steps)
        certs[rns.name] = cert
        mapping[rns.name] = cert.macro
    return td.replaced(mapping), certs
