"""
Network extraction from a swarm world.

The occupancy (or trail) lattice is binarised at a threshold and labelled
into 8-connected blobs. Each stimulus node belongs to the blob covering most
of its engulf disc. Node adjacency follows the blob's corridors: the blob
minus the node discs falls apart into corridor pieces, and every piece
links the nodes whose (covered) discs it touches.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Set, Tuple

import networkx as nx
import numpy as np
from scipy import ndimage

from .errors import UsageError
from .proximity import Family, PointSet, ProximityGraph, mst
from .swarm import NETWORK_SOURCES, SwarmWorld

logger = logging.getLogger(__name__)

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass
class NetworkReport:
    """
    Connectivity of the stimulus nodes through the blob.

    Attributes:
        component_count: number of 8-connected blobs
        node_components: blob label per node, None when its disc is uncovered
        all_connected: every node lies in one and the same blob
        edge_count: edges of the node-adjacency graph
        is_tree: node-adjacency graph is a spanning tree of the nodes
    """
    component_count: int
    node_components: List[Optional[int]]
    all_connected: bool
    edge_count: int
    is_tree: bool

    def to_dict(self) -> Dict:
        return asdict(self)


def _node_component(labels: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> Optional[int]:
    covered = labels[ys, xs]
    covered = covered[covered > 0]
    if covered.size == 0:
        return None
    values, counts = np.unique(covered, return_counts=True)
    # np.unique sorts, so argmax picks the smallest label among equal counts
    return int(values[np.argmax(counts)])


def extract_network(world: SwarmWorld, threshold: Optional[float] = None,
                    source: Optional[str] = None) -> Tuple[ProximityGraph, NetworkReport]:
    """
    Binarise the world and derive the node-adjacency graph of the blob.

    Args:
        world: Swarm world
        threshold: Cells with value >= threshold belong to the blob
                   (params.network_threshold when omitted)
        source: 'occupancy' or 'trail' (params.network_source when omitted)

    Returns:
        (graph over the stimulus nodes with family 'network', report)
    """
    threshold = world.params.network_threshold if threshold is None else threshold
    source = source or world.params.network_source
    if not threshold > 0:
        raise UsageError(f"Invalid threshold: {threshold}. Must be > 0")
    if source not in NETWORK_SOURCES:
        raise UsageError(f"Invalid source: {source}. Must be one of {NETWORK_SOURCES}")

    grid = world.occupancy if source == 'occupancy' else world.field
    blob = grid >= threshold
    labels, component_count = ndimage.label(blob, structure=EIGHT_CONNECTED)
    node_components = [_node_component(labels, ys, xs) for ys, xs in world.node_discs]

    # covered part of every node disc
    discs = []
    for ys, xs in world.node_discs:
        disc = np.zeros_like(blob)
        disc[ys, xs] = True
        discs.append(disc & blob)
    all_discs = np.logical_or.reduce(discs) if discs else np.zeros_like(blob)
    corridors, corridor_count = ndimage.label(blob & ~all_discs, structure=EIGHT_CONNECTED)

    pairs: Set[Tuple[int, int]] = set()
    touching: Dict[int, Set[int]] = {}
    grown = [ndimage.binary_dilation(disc, structure=EIGHT_CONNECTED) for disc in discs]
    for i, halo in enumerate(grown):
        if node_components[i] is None:
            continue
        for label in np.unique(corridors[halo]).tolist():
            if label > 0:
                touching.setdefault(label, set()).add(i)
        for j in range(i + 1, len(discs)):
            if node_components[j] is not None and np.any(halo & discs[j]):
                pairs.add((i, j))

    coords = np.array([(node.x, node.y) for node in world.nodes], dtype=np.float64)
    for members in touching.values():
        members = sorted(members)
        if len(members) == 2:
            pairs.add((members[0], members[1]))
        elif len(members) > 2:
            tree = mst(PointSet(coords[members]))
            pairs.update((members[a], members[b]) for a, b in tree.edges.tolist())

    edges = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    diff = coords[edges[:, 0]] - coords[edges[:, 1]]
    graph = ProximityGraph(len(world.nodes), edges, np.hypot(diff[:, 0], diff[:, 1]), Family.NETWORK)

    first = node_components[0] if node_components else None
    all_connected = first is not None and all(c == first for c in node_components)
    report = NetworkReport(
        component_count=int(component_count),
        node_components=node_components,
        all_connected=all_connected,
        edge_count=graph.edge_count,
        is_tree=len(world.nodes) > 0 and nx.is_tree(graph.to_networkx()),
    )
    logger.info(f"Extracted network from {source} at threshold {threshold}: "
                f"{component_count} blobs, {corridor_count} corridors, {graph.edge_count} node links, "
                f"all connected={all_connected}, tree={report.is_tree}")
    return graph, report
