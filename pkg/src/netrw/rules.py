"""Rules, preforms, renetting systems, and their classification."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .errors import DemandViolation, UnsupportedSubstitution
from .net import Jungle, Net, apex, height, net_equal, root, UNBOUNDED
from .subst import BoundImage, move_sites


@dataclass(frozen=True)
class RulePreform:
    """One jungle-jungle rewrite pair.

    left is a single (possibly disconnected) pattern net; rights are the
    alternative replacement nets.  Manoeuvre letters on a right side either
    occur on the left (ties re-glued) or carry an explicit image template in
    binds (the mapping-valued right-side substitution).
    """
    left: Net
    rights: Tuple[Net, ...]
    binds: Mapping[str, BoundImage] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "rights", tuple(self.rights))
        object.__setattr__(self, "binds", dict(self.binds))
        left_letters = {s.letter for s in move_sites(self.left)}
        for r in self.rights:
            for s in move_sites(r):
                if s.letter not in left_letters and s.letter not in self.binds:
                    raise UnsupportedSubstitution(
                        f"right-side manoeuvre letter {s.letter!r} has no "
                        "left occurrence and no image template")
            per: Dict[str, int] = {}
            for s in move_sites(r):
                per[s.letter] = per.get(s.letter, 0) + (1 if s.core_port else 0)
            for letter, k in per.items():
                if k > 1 and letter in left_letters:
                    raise UnsupportedSubstitution(
                        f"manoeuvre letter {letter!r} re-glued {k} times on a "
                        "right side; ties cannot be duplicated")

    def inverse(self) -> "RulePreform":
        if len(self.rights) != 1:
            raise UnsupportedSubstitution("only single-right preforms invert")
        return RulePreform(self.rights[0], (self.left,))


@dataclass(frozen=True)
class Rule:
    preforms: Tuple[RulePreform, ...]
    name: str = "r"

    def __post_init__(self):
        object.__setattr__(self, "preforms", tuple(self.preforms))
        if not self.preforms:
            raise ValueError("rule must carry at least one preform")

    @property
    def simultaneous(self) -> bool:
        return len(self.preforms) > 1

    def inverse(self) -> "Rule":
        return Rule(tuple(p.inverse() for p in self.preforms), self.name + "_inv")


# -- conditional demands (closed DSL) -----------------------------------------


@dataclass(frozen=True)
class OrderDemand:
    """Rule `later` applies only where rule `earlier` has no redex."""
    earlier: str
    later: str


@dataclass(frozen=True)
class LetterDisjoint:
    """Accepted normal forms share no ranked letter with this set."""
    letters: FrozenSet[str]

    def __post_init__(self):
        object.__setattr__(self, "letters", frozenset(self.letters))


@dataclass(frozen=True)
class RequireMatch:
    rule: str


@dataclass(frozen=True)
class DisallowMatch:
    rule: str


@dataclass(frozen=True)
class FreshLetters:
    """Right-side letters in this set must stay absent from rewrite objects."""
    letters: FrozenSet[str]

    def __post_init__(self):
        object.__setattr__(self, "letters", frozenset(self.letters))


@dataclass(frozen=True)
class PositionRestrict:
    """Rule applies only at redexes within the listed node ids."""
    rule: str
    nodes: FrozenSet[str]

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))


@dataclass(frozen=True)
class SubstOrder:
    """Deterministic manoeuvre gluing order, recorded with the system."""
    letters: Tuple[str, ...]


DEMAND_TYPES = (OrderDemand, LetterDisjoint, RequireMatch, DisallowMatch,
                FreshLetters, PositionRestrict, SubstOrder)


@dataclass(frozen=True)
class Rns:
    """A renetting system: rules plus conditional demands."""
    rules: Tuple[Rule, ...]
    demands: Tuple[object, ...] = ()
    name: str = "rns"

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "demands", tuple(self.demands))
        names = {r.name for r in self.rules}
        for d in self.demands:
            if not isinstance(d, DEMAND_TYPES):
                raise DemandViolation(f"unknown demand record {d!r}")
            for attr in ("earlier", "later", "rule"):
                ref = getattr(d, attr, None)
                if ref is not None and ref not in names:
                    raise DemandViolation(f"demand references missing rule {ref!r}")

    def rule_named(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def inverse(self) -> "Rns":
        demands = tuple(d for d in self.demands
                        if not isinstance(d, (LetterDisjoint, FreshLetters)))
        return Rns(tuple(r.inverse() for r in self.rules), demands,
                   self.name + "_inv")

    def preforms(self) -> List[RulePreform]:
        return [p for r in self.rules for p in r.preforms]

    def all_letters(self) -> Set[str]:
        out: Set[str] = set()
        for p in self.preforms():
            out |= p.left.letters()
            for r in p.rights:
                out |= r.letters()
        return out

    def is_conditional(self) -> bool:
        return bool(self.demands)

    def priority_layers(self) -> List[List[Rule]]:
        """Rules grouped by the order demands, earliest layer first."""
        after: Dict[str, Set[str]] = {r.name: set() for r in self.rules}
        for d in self.demands:
            if isinstance(d, OrderDemand):
                after[d.later].add(d.earlier)
        layers: List[List[Rule]] = []
        placed: Set[str] = set()
        remaining = {r.name: r for r in self.rules}
        while remaining:
            ready = [n for n, r in remaining.items() if after[n] <= placed]
            if not ready:
                raise DemandViolation("cyclic order demands")
            layers.append([remaining.pop(n) for n in sorted(ready)])
            placed |= set(ready)
        return layers


def single_rule_rns(left: Net, right: Net, name: str = "rns",
                    demands: Iterable[object] = ()) -> Rns:
    return Rns((Rule((RulePreform(left, (right,)),), name + "_r1"),),
               tuple(demands), name)


# -- rule property classification ----------------------------------------------


def _fron(net: Net) -> Set[str]:
    return net.frontier_letters()


def _move_count(net: Net, letter: str) -> int:
    return sum(1 for n, l in net.nodes.items() if l == letter)


def _uno_multiset(net: Net) -> Tuple[Tuple[str, int], ...]:
    """Unoccupied positions grouped by (direction, index)."""
    out: Dict[Tuple[str, int], int] = {}
    for (_, d, i) in net.unoccupied_ports():
        out[(d, i)] = out.get((d, i), 0) + 1
    return tuple(sorted((f"{d}{i}", c) for (d, i), c in out.items()))


def _apex_letters(net: Net) -> Set[str]:
    return apex(net).letters()


def classify_preform(p: RulePreform) -> Set[str]:
    """Property flags for one preform, computed by direct comparison.

    Arity accounting compares unoccupied position counts; the in/out
    distinction is kept for the set-style flags and dropped for mightiness.
    """
    flags: Set[str] = set()
    left = p.left
    rights = list(p.rights)

    def forall(pred):
        return all(pred(r) for r in rights)

    fl = _fron(left)
    if forall(lambda r: fl < _fron(r)):
        flags.add("manoeuvre-increasing")
    if forall(lambda r: fl > _fron(r)):
        flags.add("manoeuvre-deleting")
    if forall(lambda r: fl == _fron(r)):
        flags.add("manoeuvre-saving")
    if any(not (fl <= _fron(r)) and not (_fron(r) <= fl) for r in rights):
        flags.add("manoeuvre-changing")
    letters = fl | set().union(*[_fron(r) for r in rights]) if rights else fl
    if forall(lambda r: all(_move_count(left, x) == _move_count(r, x)
                            for x in letters)):
        flags.add("manoeuvre-mightiness-saving")

    ul = _uno_multiset(left)
    if forall(lambda r: set(ul) < set(_uno_multiset(r))):
        flags.add("arity-increasing")
    if forall(lambda r: set(ul) > set(_uno_multiset(r))):
        flags.add("arity-deleting")
    if forall(lambda r: ul == _uno_multiset(r)):
        flags.add("arity-saving")
    if forall(lambda r: left.delta_d() == r.delta_d()):
        flags.add("arity-mightiness-saving")

    al = _apex_letters(left)
    if forall(lambda r: al < _apex_letters(r)):
        flags.add("letter-increasing")
    if forall(lambda r: al > _apex_letters(r)):
        flags.add("letter-deleting")
    if forall(lambda r: al == _apex_letters(r)):
        flags.add("letter-saving")
    if any(apex(left).size() < apex(r).size() for r in rights):
        flags.add("letter-mightiness-increasing")

    xl = left.frontier_letters()
    if forall(lambda r: xl < r.frontier_letters()):
        flags.add("x-letter-increasing")
    if forall(lambda r: xl > r.frontier_letters()):
        flags.add("x-letter-decreasing")
    if forall(lambda r: xl == r.frontier_letters()):
        flags.add("x-letter-saving")

    hl = height(left)
    hs = [height(r) for r in rights]
    if UNBOUNDED not in [hl] + hs:
        if all(hl > h for h in hs):
            flags.add("height-diminishing")
        if all(hl < h for h in hs):
            flags.add("height-increasing")
        if all(hl == h for h in hs):
            flags.add("height-saving")

    if forall(lambda r: net_equal(left, r)):
        flags.add("identity")

    if all(_move_count(left, x) == 1 for x in fl):
        flags.add("left-linear")
    if forall(lambda r: all(_move_count(r, x) <= 1 for x in r.frontier_letters())):
        flags.add("right-linear")
    if "left-linear" in flags and "right-linear" in flags:
        flags.add("totally-linear")

    if _is_alphabetically_diminishing(p):
        flags.add("alphabetically-diminishing")
    if _is_monadic(p):
        flags.add("monadic")
    return flags


def _is_alphabetically_diminishing(p: RulePreform) -> bool:
    for r in p.rights:
        ra = apex(r)
        cond_i = (ra.size() == 1 and not r.edges) or height(r) == 0
        rt = root(r)
        cond_ii = (height(p.left) == 2 and rt is not None
                   and r.nodes.get(rt) in p.left.letters()
                   and height(r) == 1)
        if not (cond_i or cond_ii):
            return False
    return True


def _is_monadic(p: RulePreform) -> bool:
    """A structure-preserving relabeling carries the left side to each right."""
    from itertools import product as iproduct

    from .net import _match_nodes
    la = apex(p.left)
    for r in p.rights:
        ra = apex(r)
        if la.size() != ra.size() or len(la.edges) != len(ra.edges):
            return False
        letters = sorted(la.letters())
        cands = [[lb for lb in sorted(ra.letters())
                  if la.ranks[l] == ra.ranks[lb]] for l in letters]
        found = False
        for combo in iproduct(*cands):
            lmap = dict(zip(letters, combo))
            if _match_nodes(la, ra, lambda l: (lmap[l],)) is not None:
                found = True
                break
        if not found:
            return False
    return True


def classify_rule(rule: Rule) -> Set[str]:
    """Flags holding for every preform of the rule (plus identity/linearity)."""
    sets = [classify_preform(p) for p in rule.preforms]
    flags = set.intersection(*sets) if sets else set()
    someone = set.union(*sets) if sets else set()
    for f in ("manoeuvre-changing", "letter-mightiness-increasing"):
        if f in someone:
            flags.add(f)
    if rule.simultaneous:
        flags.add("simultaneous")
    else:
        flags.add("single")
    return flags
