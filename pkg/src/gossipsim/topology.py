"""Random overlay graphs: generation, diameter checks and a small DOT dialect."""

from __future__ import annotations

import random
import re
from collections import deque
from dataclasses import dataclass, field


class ConstraintUnsatisfiable(RuntimeError):
    """No graph met the connectivity/diameter constraints within the attempt budget."""


class DisconnectedGraphError(ValueError):
    pass


class DotParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class RejectDirected(DotParseError):
    pass


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on dense node ids ``0..node_count-1``.

    ``adjacency[v]`` is the ascending tuple of neighbors of ``v``. Equality
    compares structure only; ``graph_id`` and ``gen_seed`` are labels.
    """

    node_count: int
    adjacency: tuple[tuple[int, ...], ...]
    graph_id: str = field(default="G", compare=False)
    gen_seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.node_count < 1 or len(self.adjacency) != self.node_count:
            raise ValueError("adjacency must have one entry per node")
        for v, nbrs in enumerate(self.adjacency):
            if v in nbrs:
                raise ValueError(f"self-loop at node {v}")
            if len(set(nbrs)) != len(nbrs):
                raise ValueError(f"parallel edge at node {v}")
            for u in nbrs:
                if not 0 <= u < self.node_count or v not in self.adjacency[u]:
                    raise ValueError(f"asymmetric adjacency between {v} and {u}")

    @classmethod
    def from_edges(cls, node_count: int, edges, graph_id: str = "G", gen_seed: int | None = None) -> "Graph":
        adj: list[set[int]] = [set() for _ in range(node_count)]
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            adj[u].add(v)
            adj[v].add(u)
        return cls(node_count, tuple(tuple(sorted(a)) for a in adj), graph_id, gen_seed)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(u, v)`` with ``u < v``, in ascending order."""
        return [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u < v]

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2


def bfs_distances(g: Graph, source: int) -> list[int]:
    """Hop distance from ``source`` to every node; -1 where unreachable."""
    dist = [-1] * g.node_count
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for u in g.adjacency[v]:
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def is_connected(g: Graph) -> bool:
    return min(bfs_distances(g, 0)) >= 0


def diameter(g: Graph) -> int:
    """Longest shortest path, via BFS from every node."""
    best = 0
    for s in range(g.node_count):
        dist = bfs_distances(g, s)
        far = min(dist)
        if far < 0:
            raise DisconnectedGraphError(f"node {dist.index(-1)} unreachable from {s}")
        best = max(best, max(dist))
    return best


def _bounded_diameter(g: Graph, d_max: int) -> bool:
    # early exit on the first violating source
    for s in range(g.node_count):
        dist = bfs_distances(g, s)
        if min(dist) < 0 or max(dist) > d_max:
            return False
    return True


def _attach_edges(n: int, edges_per_node: int, rng: random.Random) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(n)]
    for u in range(n):
        for _ in range(edges_per_node):
            if len(adj[u]) >= n - 1:
                break
            while True:
                v = rng.randrange(n)
                if v != u and v not in adj[u]:
                    break
            adj[u].add(v)
            adj[v].add(u)
    return adj


def generate_overlay(
    n: int,
    edges_per_node: int = 2,
    d_max: int = 8,
    seed: int = 0,
    max_attempts: int = 1000,
    graph_id: str | None = None,
) -> Graph:
    """Random overlay where every node initiates ``edges_per_node`` links.

    Each node draws distinct uniform partners, redrawing self-loops and
    duplicates, so the graph has ``n * edges_per_node`` edges whenever that
    many distinct partners exist. Attempt ``a`` uses ``seed + a``; the first
    connected draw with diameter at most ``d_max`` is returned.
    """
    if n < 2 or edges_per_node < 1 or d_max < 1:
        raise ValueError("need n >= 2, edges_per_node >= 1, d_max >= 1")
    for attempt in range(max_attempts):
        rng = random.Random(seed + attempt)
        adj = _attach_edges(n, edges_per_node, rng)
        g = Graph(
            n,
            tuple(tuple(sorted(a)) for a in adj),
            graph_id if graph_id is not None else f"g{seed}",
            seed + attempt,
        )
        if _bounded_diameter(g, d_max):
            return g
    raise ConstraintUnsatisfiable(
        f"no connected graph with diameter <= {d_max} after {max_attempts} attempts "
        f"(n={n}, edges_per_node={edges_per_node}, seed={seed})"
    )


def export_dot(g: Graph) -> str:
    lines = ["graph G {"]
    lines.extend(f"  {u} -- {v};" for u, v in g.edges())
    lines.append("}")
    return "\n".join(lines) + "\n"


_HEADER = re.compile(r"^\s*(strict\s+)?(graph|digraph)\b\s*([A-Za-z0-9_\"]*)\s*\{")
_NODE_STMT = re.compile(r"^\d+\s*(\[.*\])?$")
_ATTR_STMT = re.compile(r"^(graph|node|edge)\s*\[.*\]$|^\w+\s*=\s*\S+$")


def import_dot(text: str, graph_id: str = "G") -> Graph:
    """Parse an undirected DOT edge list (``u -- v;`` statements).

    Node-only and attribute statements are ignored. The node count is one
    more than the largest id that appears in an edge.
    """
    edges: list[tuple[int, int]] = []
    seen_header = closed = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        if not seen_header:
            m = _HEADER.match(line)
            if m is None:
                raise DotParseError("expected 'graph <name> {' header", lineno)
            if m.group(2) == "digraph":
                raise RejectDirected("directed graphs are not supported", lineno)
            seen_header = True
            line = line[m.end():].strip()
        if closed:
            raise DotParseError("content after closing brace", lineno)
        if line.endswith("}"):
            closed = True
            line = line[:-1].strip()
        for stmt in filter(None, (s.strip() for s in line.split(";"))):
            if "->" in stmt:
                raise RejectDirected("directed edge '->' in undirected graph", lineno)
            if "--" in stmt:
                body = stmt.split("[", 1)[0]
                ends = [e.strip() for e in body.split("--")]
                if not all(e.isdigit() for e in ends):
                    raise DotParseError(f"bad edge statement {stmt!r}", lineno)
                ids = [int(e) for e in ends]
                edges.extend(zip(ids, ids[1:]))
            elif _NODE_STMT.match(stmt) or _ATTR_STMT.match(stmt):
                continue
            else:
                raise DotParseError(f"unrecognised statement {stmt!r}", lineno)
    if not seen_header:
        raise DotParseError("empty input", 1)
    if not closed:
        raise DotParseError("missing closing brace", len(text.splitlines()))
    if not edges:
        raise DotParseError("graph has no edges", len(text.splitlines()))
    n = max(max(e) for e in edges) + 1
    try:
        return Graph.from_edges(n, edges, graph_id=graph_id)
    except ValueError as exc:
        raise DotParseError(str(exc), len(text.splitlines())) from exc
