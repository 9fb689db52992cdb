"""Deterministic net generation: systematic enumeration and seeded sampling.

The enumerator walks label multisets in canonical order and, per multiset,
edge subsets in canonical order, deduplicating up to structural equality.
Every emitted net passes validation by construction.
"""
from __future__ import annotations

import random
from itertools import combinations, combinations_with_replacement
from typing import Dict, Iterator, List, Optional, Tuple

from .net import Edge, Net, net_equal
from .signature import Signature


def _possible_edges(labels: List[str], sig: Signature) -> List[Tuple[str, int, str, int]]:
    out = []
    for i, li in enumerate(labels):
        _, orank = sig.rank(li)
        for j, lj in enumerate(labels):
            irank, _ = sig.rank(lj)
            for op in range(1, orank + 1):
                for ip in range(1, irank + 1):
                    out.append((f"n{i}", op, f"n{j}", ip))
    return out


def _valid_edge_set(edges) -> bool:
    seen = set()
    for (s, sp, d, dp) in edges:
        if (s, "out", sp) in seen or (d, "in", dp) in seen:
            return False
        seen.add((s, "out", sp))
        seen.add((d, "in", dp))
    return True


def generate_nets(signature: Signature, max_nodes: int, budget: int = 1000,
                  max_edges: Optional[int] = None,
                  connected_only: bool = False,
                  acyclic: bool = True) -> Iterator[Net]:
    """Enumerate pairwise non-equal nets over the signature, smallest first.

    The default stream mirrors generation from the base letters upward:
    loop-free nets only, one node per applied letter.  Deterministic given
    identical arguments; stops after `budget` nets.
    """
    from .net import has_loop

    letters = sorted(signature.ranked) + sorted(signature.frontier)
    emitted = 0
    seen_keys: Dict[object, List[Net]] = {}
    for n in range(1, max_nodes + 1):
        for combo in combinations_with_replacement(letters, n):
            labels = list(combo)
            nodes = {f"n{i}": l for i, l in enumerate(labels)}
            pool = _possible_edges(labels, signature)
            cap = len(pool) if max_edges is None else min(max_edges, len(pool))
            if acyclic:
                cap = min(cap, max(0, n - 1))
            for k in range(0, cap + 1):
                for eset in combinations(pool, k):
                    if not _valid_edge_set(eset):
                        continue
                    net = Net(nodes, [Edge(*e) for e in eset],
                              dict(signature.ranked), signature.frontier)
                    if acyclic and has_loop(net):
                        continue
                    if connected_only and not net.is_connected():
                        continue
                    key = net.invariant_key()
                    bucket = seen_keys.setdefault(key, [])
                    if any(net_equal(net, m) for m in bucket):
                        continue
                    bucket.append(net)
                    yield net
                    emitted += 1
                    if emitted >= budget:
                        return


def sample_net(signature: Signature, rng: random.Random, max_nodes: int = 5,
               edge_bias: float = 0.6, connected: bool = False) -> Net:
    """One random valid net; deterministic for a given rng state."""
    letters = sorted(signature.ranked) + sorted(signature.frontier)
    n = rng.randint(1, max_nodes)
    labels = [rng.choice(letters) for _ in range(n)]
    nodes = {f"n{i}": l for i, l in enumerate(labels)}
    net = Net(nodes, [], dict(signature.ranked), signature.frontier)
    pool = _possible_edges(labels, signature)
    rng.shuffle(pool)
    chosen: List[Tuple[str, int, str, int]] = []
    used = set()
    for (s, sp, d, dp) in pool:
        if (s, "out", sp) in used or (d, "in", dp) in used:
            continue
        if connected or rng.random() < edge_bias:
            chosen.append((s, sp, d, dp))
            used.add((s, "out", sp))
            used.add((d, "in", dp))
        if connected:
            net_try = Net(nodes, [Edge(*e) for e in chosen],
                          dict(signature.ranked), signature.frontier)
            if net_try.is_connected():
                if rng.random() < 1 - edge_bias:
                    break
    return Net(nodes, [Edge(*e) for e in chosen],
               dict(signature.ranked), signature.frontier)


def sample_connected_net(signature: Signature, rng: random.Random,
                         max_nodes: int = 5, tries: int = 200) -> Net:
    for _ in range(tries):
        net = sample_net(signature, rng, max_nodes, edge_bias=0.8)
        if net.is_connected():
            return net
    # fall back to a single node, which is trivially connected
    letters = sorted(signature.ranked)
    nodes = {"n0": rng.choice(letters)}
    return Net(nodes, [], dict(signature.ranked), signature.frontier)
