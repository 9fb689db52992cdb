"""netrw: a net (port-graph) rewriting engine with abstraction machinery.

The package models nets as finite directed port-graphs, rewrites them with
renetting systems (RNS), classifies intervening systems (PRNS, CRNS, GPRNS,
GCRNS, CLRNS, UPRNS), builds macro/parallel rule systems over net classes,
converts between block homomorphisms and rewriting normal forms, and
transfers known transducer solutions onto abstraction-related problems.
"""

from .signature import Signature, signature_of
from .net import (
    Edge, Net, Jungle, build_net, single_node, net_equal, net_isomorphic,
    jungle_equal, as_jungle, subnets, enclosures, positions, occurrences,
    overlap, omission, assimilation, routes, loops, directed_loops, height,
    UNBOUNDED, apex, root,
)
from .cover import (
    is_cover, is_saturating, is_partition, partition_induced,
    partition_induced_nets,
)

__all__ = [
    "Signature", "signature_of", "Edge", "Net", "Jungle", "build_net",
    "single_node", "net_equal", "net_isomorphic", "jungle_equal", "as_jungle",
    "subnets", "enclosures", "positions", "occurrences", "overlap", "omission",
    "assimilation", "routes", "loops", "directed_loops", "height", "UNBOUNDED",
    "apex", "root", "is_cover", "is_saturating", "is_partition",
    "partition_induced", "partition_induced_nets",
]
