"""
Proximity graphs over planar nuclei point sets.

Builds the Toussaint hierarchy (minimum spanning tree ⊆ relative
neighbourhood graph ⊆ Gabriel graph ⊆ Delaunay triangulation) and the
random / small-world reference topologies used to compare clustering and
path lengths.

Gabriel and RNG edges are obtained by filtering Delaunay edges with the
empty-disc and empty-lune tests, and the MST by Kruskal over Delaunay
edges, so each graph stays near O(n log n) for large nuclei fields.

Distance comparisons treat relative differences below TIE_RTOL as ties;
ties never remove an edge (open disc, open lune).

Example usage:
    points = load_points("nuclei.csv")
    report = hierarchy(points)
    report.graphs["gabriel"].write_json("gabriel.json")
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd
from scipy.spatial import Delaunay, cKDTree

from .errors import ContainmentError, IngestionError, UsageError
from .predicates import incircle, orient2d
from .seeding import make_rng

logger = logging.getLogger(__name__)

TIE_RTOL = 1e-9

Edge = Tuple[int, int]


class Family(Enum):
    DELAUNAY = "delaunay"
    GABRIEL = "gabriel"
    RNG = "rng"
    MST = "mst"
    ER = "er"
    WATTS_STROGATZ = "ws"
    NETWORK = "network"


def strictly_less(a, b, rtol: float = TIE_RTOL):
    """a < b by more than the relative tie tolerance; works elementwise."""
    return a < b * (1.0 - rtol)


@dataclass(frozen=True, eq=False)
class PointSet:
    """
    Planar points with per-point ids.

    Attributes:
        coords: (n, 2) array of finite coordinates, no two identical
        ids: (n,) array of distinct integer ids, defaults to 0..n-1
    """
    coords: np.ndarray
    ids: Optional[np.ndarray] = None

    def __post_init__(self):
        coords = np.array(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise IngestionError(f"Invalid point array shape: {coords.shape}. Must be (n, 2)")
        if coords.shape[0] < 2:
            raise IngestionError(f"Invalid point count: {coords.shape[0]}. Must be at least 2")
        if not np.all(np.isfinite(coords)):
            raise IngestionError("Invalid coordinates: all values must be finite")
        if np.unique(coords, axis=0).shape[0] != coords.shape[0]:
            raise IngestionError("Invalid coordinates: duplicate points")

        ids = np.arange(coords.shape[0]) if self.ids is None else np.array(self.ids, dtype=np.int64)
        if ids.shape != (coords.shape[0],) or np.unique(ids).size != ids.size:
            raise IngestionError("Invalid ids: must be one distinct id per point")

        coords.setflags(write=False)
        ids.setflags(write=False)
        object.__setattr__(self, 'coords', coords)
        object.__setattr__(self, 'ids', ids)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def distance(self, a: int, b: int) -> float:
        return float(np.hypot(*(self.coords[a] - self.coords[b])))


@dataclass(frozen=True, eq=False)
class ProximityGraph:
    """
    Undirected weighted graph on nodes 0..n-1.

    Edges are stored as (min, max) index pairs sorted lexicographically.
    Geometric families carry Euclidean edge lengths; random topologies
    carry unit weights.
    """
    n: int
    edges: np.ndarray
    weights: np.ndarray
    family: Family

    def __post_init__(self):
        edges = np.array(self.edges, dtype=np.int64).reshape(-1, 2)
        weights = np.array(self.weights, dtype=np.float64).reshape(-1)
        if edges.shape[0] != weights.shape[0]:
            raise ValueError("Edge and weight counts differ")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("Self-loops are not allowed")
        if edges.size and (edges.min() < 0 or edges.max() >= self.n):
            raise ValueError(f"Edge endpoint outside 0..{self.n - 1}")
        if np.any(weights <= 0):
            raise ValueError("Edge weights must be positive")

        edges = np.sort(edges, axis=1)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges, weights = edges[order], weights[order]
        if edges.shape[0] > 1 and np.any(np.all(edges[1:] == edges[:-1], axis=1)):
            raise ValueError("Duplicate edges are not allowed")

        edges.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, 'edges', edges)
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'family', Family(self.family))

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    def edge_set(self) -> FrozenSet[Edge]:
        return frozenset(map(tuple, self.edges.tolist()))

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edge_set()

    def total_weight(self) -> float:
        return float(self.weights.sum())

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.reshape(-1), minlength=self.n)

    def missing_from(self, other: "ProximityGraph") -> List[Edge]:
        """Edges of this graph absent from `other`."""
        return sorted(self.edge_set() - other.edge_set())

    def is_subgraph_of(self, other: "ProximityGraph") -> bool:
        return not self.missing_from(other)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_weighted_edges_from(
            (int(a), int(b), float(w)) for (a, b), w in zip(self.edges, self.weights))
        return graph

    def to_dict(self) -> Dict:
        return {
            'n': self.n,
            'family': self.family.value,
            'edges': [[int(a), int(b), float(w)] for (a, b), w in zip(self.edges, self.weights)],
        }

    def write_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        with open(path, 'w') as f:
            json.dump(self.to_dict(), f, indent=1)
        return path

    def write_dot(self, path: Union[str, Path], points: Optional[PointSet] = None) -> Path:
        """Write Graphviz DOT; node positions are pinned when points are given."""
        path = Path(path)
        lines = [f"graph {self.family.value} {{"]
        for i in range(self.n):
            if points is not None:
                x, y = points.coords[i].tolist()
                lines.append(f'  {i} [pos="{x!r},{y!r}!"];')
            else:
                lines.append(f"  {i};")
        for (a, b), w in zip(self.edges.tolist(), self.weights.tolist()):
            lines.append(f"  {a} -- {b} [weight={w!r}];")
        lines.append("}")
        path.write_text("\n".join(lines) + "\n")
        return path


@dataclass
class GraphMetrics:
    """
    Topology summary of a graph.

    Attributes:
        clustering_coefficient: mean local clustering (Watts-Strogatz), 0 for degree < 2
        average_path_length: mean hop distance over connected pairs, None if no pair is connected
        connected: whether the graph is connected
        degree_histogram: count of nodes per degree 0, 1, 2, ...
    """
    clustering_coefficient: float
    average_path_length: Optional[float]
    connected: bool
    degree_histogram: List[int] = field(default_factory=list)


@dataclass
class HierarchyReport:
    """Graphs of the Toussaint hierarchy and any containment violations."""
    graphs: Dict[str, ProximityGraph]
    violations: List[Tuple[str, str, Edge]]

    @property
    def holds(self) -> bool:
        return not self.violations


def load_points(path: Union[str, Path]) -> PointSet:
    """
    Read a point set from a CSV file with header `id,x,y`.

    Rows keep their file order; ids are carried along.

    Raises:
        IngestionError: On missing columns, non-finite values, duplicate
                        coordinates or ids, or fewer than 2 points. The
                        message names the offending row ids.
    """
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IngestionError(f"Cannot read point file {path}: {e}") from e

    frame.columns = [c.strip() for c in frame.columns]
    missing = {'id', 'x', 'y'} - set(frame.columns)
    if missing:
        raise IngestionError(f"Point file {path} lacks columns {sorted(missing)}. Header must be id,x,y")
    if len(frame) < 2:
        raise IngestionError(f"Point file {path} has {len(frame)} points. At least 2 are required")

    ids = pd.to_numeric(frame['id'], errors='coerce')
    xs = pd.to_numeric(frame['x'], errors='coerce')
    ys = pd.to_numeric(frame['y'], errors='coerce')

    bad_id = ids.isna() | (ids != ids.round())
    if bad_id.any():
        rows = [int(i) + 2 for i in np.flatnonzero(bad_id)]
        raise IngestionError(f"Non-integer id on file lines {rows}")
    bad = ~(np.isfinite(xs) & np.isfinite(ys))
    if bad.any():
        raise IngestionError(f"Non-finite coordinates for ids {ids[bad].astype(int).tolist()}")

    frame = pd.DataFrame({'id': ids.astype(np.int64), 'x': xs.astype(float), 'y': ys.astype(float)})
    dup_ids = frame['id'].duplicated(keep=False)
    if dup_ids.any():
        raise IngestionError(f"Duplicate ids: {sorted(set(frame.loc[dup_ids, 'id'].tolist()))}")
    dup_xy = frame.duplicated(subset=['x', 'y'], keep=False)
    if dup_xy.any():
        groups = frame[dup_xy].groupby(['x', 'y'])['id'].apply(lambda s: s.tolist())
        described = "; ".join(f"ids {ids_} at ({x!r}, {y!r})" for (x, y), ids_ in groups.items())
        raise IngestionError(f"Duplicate coordinates: {described}")

    logger.info(f"Loaded {len(frame)} points from {path}")
    return PointSet(frame[['x', 'y']].to_numpy(), frame['id'].to_numpy())


def save_points(ps: PointSet, path: Union[str, Path]) -> Path:
    """Write a point set in the `id,x,y` CSV format read by load_points."""
    path = Path(path)
    pd.DataFrame({'id': ps.ids, 'x': ps.coords[:, 0], 'y': ps.coords[:, 1]}).to_csv(path, index=False)
    return path


def _geometric_graph(ps: PointSet, pairs: Iterable[Edge], family: Family) -> ProximityGraph:
    edges = np.array(sorted({(min(a, b), max(a, b)) for a, b in pairs}), dtype=np.int64).reshape(-1, 2)
    diff = ps.coords[edges[:, 0]] - ps.coords[edges[:, 1]]
    return ProximityGraph(ps.n, edges, np.hypot(diff[:, 0], diff[:, 1]), family)


def _collinear(points: List[Tuple[float, float]]) -> bool:
    a, b = points[0], points[1]
    return all(orient2d(a, b, c) == 0 for c in points[2:])


def _path_along_line(ps: PointSet) -> List[Edge]:
    direction = ps.coords[1] - ps.coords[0]
    order = np.argsort(ps.coords @ direction, kind='stable')
    return [(int(a), int(b)) for a, b in zip(order[:-1], order[1:])]


def _legalize(triangles: List[List[int]], points: List[Tuple[float, float]], ids: List[int]) -> List[List[int]]:
    """
    Lawson edge flips until every interior edge is locally Delaunay.

    Exact cocircular quadrilaterals keep the diagonal incident to the
    vertex with the smallest id, i.e. that vertex is lowered on the lifting
    paraboloid, which makes the result unique and input-order independent.
    """
    for tri in triangles:
        if orient2d(points[tri[0]], points[tri[1]], points[tri[2]]) < 0:
            tri[1], tri[2] = tri[2], tri[1]

    edge_map: Dict[Edge, List[int]] = {}
    for t, tri in enumerate(triangles):
        for i in range(3):
            u, v = tri[i], tri[(i + 1) % 3]
            edge_map.setdefault((min(u, v), max(u, v)), []).append(t)

    stack = [e for e, owners in edge_map.items() if len(owners) == 2]
    flips = 0
    while stack:
        edge = stack.pop()
        owners = edge_map.get(edge)
        if owners is None or len(owners) != 2:
            continue
        t1, t2 = owners
        u, v = edge
        p = next(w for w in triangles[t1] if w not in edge)
        q = next(w for w in triangles[t2] if w not in edge)

        # t1 is stored counter-clockwise, so +1 means q lies inside its circumcircle
        side = incircle(points[triangles[t1][0]], points[triangles[t1][1]], points[triangles[t1][2]], points[q])
        if side < 0:
            continue
        if side == 0 and min(ids[u], ids[v], ids[p], ids[q]) not in (ids[p], ids[q]):
            continue

        for t in (t1, t2):
            tri = triangles[t]
            for i in range(3):
                a, b = tri[i], tri[(i + 1) % 3]
                key = (min(a, b), max(a, b))
                edge_map[key].remove(t)
                if not edge_map[key]:
                    del edge_map[key]

        triangles[t1] = [u, q, p] if orient2d(points[u], points[q], points[p]) > 0 else [u, p, q]
        triangles[t2] = [v, p, q] if orient2d(points[v], points[p], points[q]) > 0 else [v, q, p]
        for t in (t1, t2):
            tri = triangles[t]
            for i in range(3):
                a, b = tri[i], tri[(i + 1) % 3]
                edge_map.setdefault((min(a, b), max(a, b)), []).append(t)
        stack.extend([(min(u, p), max(u, p)), (min(p, v), max(p, v)),
                      (min(v, q), max(v, q)), (min(q, u), max(q, u))])
        flips += 1

    if flips:
        logger.debug(f"Delaunay legalisation performed {flips} flips")
    return triangles


def delaunay(ps: PointSet) -> ProximityGraph:
    """
    Edges of the Delaunay triangulation.

    Qhull provides the starting triangulation, which is then legalised with
    exact in-circle tests. All-collinear inputs yield the path graph.
    """
    if ps.n == 2:
        return _geometric_graph(ps, [(0, 1)], Family.DELAUNAY)

    points = [tuple(p) for p in ps.coords.tolist()]
    if _collinear(points):
        logger.info("Points are collinear; Delaunay degrades to the path graph")
        return _geometric_graph(ps, _path_along_line(ps), Family.DELAUNAY)

    tri = Delaunay(ps.coords)
    if len(tri.coplanar):
        logger.warning(f"Qhull left {len(tri.coplanar)} points out of the triangulation")
    simplices = [list(map(int, s)) for s in tri.simplices]
    triangles = [s for s in simplices if orient2d(points[s[0]], points[s[1]], points[s[2]]) != 0]
    if len(triangles) != len(simplices):
        logger.warning(f"Dropped {len(simplices) - len(triangles)} zero-area triangles from Qhull output")
    triangles = _legalize(triangles, points, ps.ids.tolist())

    pairs = set()
    for a, b, c in triangles:
        pairs.update({(min(a, b), max(a, b)), (min(b, c), max(b, c)), (min(a, c), max(a, c))})
    return _geometric_graph(ps, pairs, Family.DELAUNAY)


def _filter_edges(ps: PointSet, base: ProximityGraph, test: str) -> List[Edge]:
    coords = ps.coords
    tree = cKDTree(coords)
    kept = []
    for a, b in base.edges.tolist():
        pa, pb = coords[a], coords[b]
        d2 = float(np.sum((pa - pb) ** 2))
        if test == 'disc':
            centre = (pa + pb) / 2.0
            candidates = tree.query_ball_point(centre, np.sqrt(d2) / 2.0 * (1.0 + 1e-6))
        else:
            candidates = tree.query_ball_point(pa, np.sqrt(d2) * (1.0 + 1e-6))
        candidates = np.array([c for c in candidates if c != a and c != b], dtype=np.int64)
        if candidates.size:
            pc = coords[candidates]
            if test == 'disc':
                blocking = strictly_less(np.sum((pc - (pa + pb) / 2.0) ** 2, axis=1), d2 / 4.0)
            else:
                far = np.maximum(np.sum((pc - pa) ** 2, axis=1), np.sum((pc - pb) ** 2, axis=1))
                blocking = strictly_less(far, d2)
            if np.any(blocking):
                continue
        kept.append((a, b))
    return kept


def gabriel(ps: PointSet, base: Optional[ProximityGraph] = None) -> ProximityGraph:
    """
    Gabriel graph: (a, b) is an edge iff no third point lies strictly inside
    the disc with diameter ab.

    Args:
        ps: Point set
        base: Delaunay graph of ps, computed when omitted
    """
    base = base or delaunay(ps)
    return _geometric_graph(ps, _filter_edges(ps, base, 'disc'), Family.GABRIEL)


def rng(ps: PointSet, base: Optional[ProximityGraph] = None) -> ProximityGraph:
    """
    Relative neighbourhood graph: (a, b) is an edge iff no third point c
    has max(dist(a, c), dist(b, c)) < dist(a, b).

    Args:
        ps: Point set
        base: Delaunay graph of ps, computed when omitted
    """
    base = base or delaunay(ps)
    return _geometric_graph(ps, _filter_edges(ps, base, 'lune'), Family.RNG)


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def _weight_key(weights: np.ndarray) -> np.ndarray:
    """Weights rounded to 12 significant digits; monotone, and equal for float noise on exact ties."""
    exponent = np.floor(np.log10(weights))
    scale = 10.0 ** (11 - exponent)
    return np.round(weights * scale) / scale


def mst(ps: PointSet, base: Optional[ProximityGraph] = None) -> ProximityGraph:
    """
    Euclidean minimum spanning tree by Kruskal's algorithm over Delaunay edges.

    Weights equal to 12 significant digits are ordered by the (min id, max id) of
    their endpoint point ids, so the tree is deterministic and independent
    of input order.
    """
    base = base or delaunay(ps)
    edges, weights = base.edges, base.weights
    tie_key = _weight_key(weights)
    ends = ps.ids[edges]
    order = np.lexsort((ends.max(axis=1), ends.min(axis=1), tie_key))

    forest = _DisjointSet(ps.n)
    chosen = []
    for idx in order:
        a, b = int(edges[idx, 0]), int(edges[idx, 1])
        if forest.union(a, b):
            chosen.append((a, b))
            if len(chosen) == ps.n - 1:
                break
    return _geometric_graph(ps, chosen, Family.MST)


def hierarchy(ps: PointSet, strict: bool = True) -> HierarchyReport:
    """
    Compute MST, RNG, Gabriel and Delaunay graphs and verify
    MST ⊆ RNG ⊆ GG ⊆ DT.

    Args:
        ps: Point set with at least 3 points
        strict: Raise on a violation instead of only reporting it

    Raises:
        ContainmentError: If strict and any containment fails; violations
                          are never repaired
    """
    if ps.n < 3:
        raise UsageError(f"Invalid point count: {ps.n}. The hierarchy needs at least 3 points")

    dt = delaunay(ps)
    graphs = {
        'mst': mst(ps, dt),
        'rng': rng(ps, dt),
        'gabriel': gabriel(ps, dt),
        'delaunay': dt,
    }
    violations = []
    for inner, outer in (('mst', 'rng'), ('rng', 'gabriel'), ('gabriel', 'delaunay')):
        violations.extend((inner, outer, e) for e in graphs[inner].missing_from(graphs[outer]))

    report = HierarchyReport(graphs, violations)
    if violations:
        logger.error(f"Containment chain violated on {len(violations)} edges")
        if strict:
            raise ContainmentError(violations)
    else:
        logger.info("Containment chain MST ⊆ RNG ⊆ GG ⊆ DT holds "
                    f"({', '.join(f'{k}={g.edge_count}' for k, g in graphs.items())})")
    return report


def er_random(n: int, p: float, seed: int = 0) -> ProximityGraph:
    """Erdős–Rényi graph: every unordered pair is an edge independently with probability p."""
    if n < 1:
        raise UsageError(f"Invalid node count: {n}. Must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"Invalid edge probability: {p}. Must be in [0, 1]")

    rows, cols = np.triu_indices(n, 1)
    keep = make_rng(seed).random(rows.size) < p
    edges = np.column_stack((rows[keep], cols[keep]))
    return ProximityGraph(n, edges, np.ones(edges.shape[0]), Family.ER)


def watts_strogatz(n: int, k: int, beta: float, seed: int = 0) -> ProximityGraph:
    """
    Watts–Strogatz small-world graph.

    Starts from a ring lattice where every node links to its k/2 nearest
    neighbours on each side, then rewires the far end of each lattice edge
    with probability beta to a uniformly chosen node, avoiding self-loops
    and duplicate edges.
    """
    if k % 2 != 0 or k < 2:
        raise UsageError(f"Invalid degree: {k}. Must be an even integer >= 2")
    if n <= k:
        raise UsageError(f"Invalid node count: {n}. Must exceed k={k}")
    if not 0.0 <= beta <= 1.0:
        raise UsageError(f"Invalid rewiring probability: {beta}. Must be in [0, 1]")

    generator = make_rng(seed)
    adjacency = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, k // 2 + 1):
            v = (u + j) % n
            adjacency[u].add(v)
            adjacency[v].add(u)

    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            if v not in adjacency[u] or generator.random() >= beta:
                continue
            if len(adjacency[u]) >= n - 1:
                continue
            w = int(generator.integers(n))
            while w == u or w in adjacency[u]:
                w = int(generator.integers(n))
            adjacency[u].discard(v)
            adjacency[v].discard(u)
            adjacency[u].add(w)
            adjacency[w].add(u)

    edges = np.array([(u, v) for u in range(n) for v in adjacency[u] if u < v], dtype=np.int64).reshape(-1, 2)
    return ProximityGraph(n, edges, np.ones(edges.shape[0]), Family.WATTS_STROGATZ)


def metrics(g: ProximityGraph) -> GraphMetrics:
    """
    Clustering coefficient, average path length over connected pairs and
    degree histogram. Path lengths count hops.
    """
    graph = g.to_networkx()
    clustering = float(nx.average_clustering(graph)) if g.n else 0.0

    total, pairs = 0.0, 0
    for component in nx.connected_components(graph):
        size = len(component)
        if size < 2:
            continue
        sub = graph.subgraph(component)
        total += nx.average_shortest_path_length(sub) * size * (size - 1)
        pairs += size * (size - 1)

    return GraphMetrics(
        clustering_coefficient=clustering,
        average_path_length=total / pairs if pairs else None,
        connected=g.n > 0 and nx.is_connected(graph),
        degree_histogram=nx.degree_histogram(graph),
    )


def plot_graph(g: ProximityGraph, ps: PointSet, ax=None, color: str = 'k'):
    """
    Draw a graph over its point set.

    Returns:
        matplotlib axes
    """
    try:
        import matplotlib.pyplot as plt
        from matplotlib.collections import LineCollection
    except ImportError:
        raise ImportError("matplotlib is required for plotting")

    if ax is None:
        _, ax = plt.subplots(figsize=(6, 6))
    segments = ps.coords[g.edges] if g.edge_count else np.zeros((0, 2, 2))
    ax.add_collection(LineCollection(segments, colors=color, linewidths=1.0))
    ax.plot(ps.coords[:, 0], ps.coords[:, 1], 'o', color=color, markersize=3)
    ax.set_aspect('equal')
    ax.set_title(f'{g.family.value} ({g.edge_count} edges)')
    return ax
