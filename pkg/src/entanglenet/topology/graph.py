"""Immutable network graphs and their line-oriented text format."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

__all__ = [
    "NodeRole",
    "Node",
    "Edge",
    "NetworkGraph",
    "GraphFormatError",
    "BOUNDARIES",
    "dump_graph",
    "load_graph",
    "write_graph",
    "read_graph",
    "memory_count",
    "terminal_count",
    "node_degrees",
]

# "periodic-horizontal": the two horizontal sides of the patch (top and
# bottom) are glued together, so the patch is a cylinder whose open ends are
# its left and right sides.
BOUNDARIES = ("open", "periodic-horizontal")

_ROLE_KINDS = {
    "X": "branch-x",
    "Y": "branch-y",
    "S": "source",
    "M": "terminal",
    "W": "workstation",
}
LENGTH_TOL = 1e-9


@dataclass(frozen=True, order=True)
class NodeRole:
    """What a node is.

    ``kind`` is one of ``X``, ``Y`` (company branches, indexed by ``row``),
    ``S`` (source station), ``M`` (measurement terminal) or ``W``
    (workstation).  Sources and terminals carry ``col`` and ``row``.
    """

    kind: str
    col: int | None = None
    row: int | None = None

    def __post_init__(self):
        if self.kind not in _ROLE_KINDS:
            raise ValueError(f"unknown node role {self.kind!r}")
        if self.kind in ("S", "M") and (self.col is None or self.row is None):
            raise ValueError(f"role {self.kind} needs a column and a row")
        if self.kind in ("X", "Y") and self.row is None:
            raise ValueError(f"role {self.kind} needs an index")

    def __str__(self) -> str:
        if self.kind == "W":
            return "W"
        if self.kind in ("X", "Y"):
            return f"{self.kind}:{self.row}"
        return f"{self.kind}:{self.col}:{self.row}"

    @classmethod
    def parse(cls, text: str) -> "NodeRole":
        parts = text.split(":")
        kind = parts[0]
        if kind == "W" and len(parts) == 1:
            return cls("W")
        if kind in ("X", "Y") and len(parts) == 2:
            return cls(kind, row=int(parts[1]))
        if kind in ("S", "M") and len(parts) == 3:
            return cls(kind, col=int(parts[1]), row=int(parts[2]))
        raise ValueError(f"malformed role {text!r}")

    @property
    def description(self) -> str:
        return _ROLE_KINDS[self.kind]


WORKSTATION = NodeRole("W")


@dataclass(frozen=True)
class Node:
    id: int
    role: NodeRole
    x: float
    y: float


@dataclass(frozen=True)
class Edge:
    """Undirected edge ``u < v``.

    ``wrap`` counts how many times the edge crosses the periodic seam going
    from ``u`` to ``v``; the geometric partner of ``u`` sits at
    ``pos(v) + wrap * period``.
    """

    u: int
    v: int
    length: float
    cls: int = 1
    wrap: int = 0


@dataclass(frozen=True)
class NetworkGraph:
    name: str
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    boundary: str = "open"
    rows: int = 0
    cols: int = 0
    period: tuple[float, float] = (0.0, 0.0)
    left: frozenset[int] = frozenset()
    right: frozenset[int] = frozenset()
    metric_override: bool = False
    unconnected_ports: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}")
        ids = [n.id for n in self.nodes]
        if ids != list(range(len(ids))):
            raise ValueError("node ids must be 0..n-1 in order")
        seen = set()
        for e in self.edges:
            if e.u == e.v:
                raise ValueError(f"self-loop on node {e.u}")
            if not (0 <= e.u < e.v < len(ids)):
                raise ValueError(f"edge ({e.u}, {e.v}) is not normalised or out of range")
            if (e.u, e.v) in seen:
                raise ValueError(f"duplicate edge ({e.u}, {e.v})")
            seen.add((e.u, e.v))
            if e.length <= 0:
                raise ValueError(f"edge ({e.u}, {e.v}) has non-positive length")
        if not self.metric_override:
            for e in self.edges:
                d = self.euclidean_length(e)
                if abs(d - e.length) > LENGTH_TOL * max(1.0, e.length):
                    raise ValueError(
                        f"edge ({e.u}, {e.v}) length {e.length} differs from geometry {d}"
                    )
        for name in ("left", "right"):
            bad = [i for i in getattr(self, name) if not 0 <= i < len(ids)]
            if bad:
                raise ValueError(f"{name} boundary refers to unknown nodes {bad[:5]}")

    # geometry -------------------------------------------------------------
    def euclidean_length(self, edge: Edge) -> float:
        a, b = self.nodes[edge.u], self.nodes[edge.v]
        dx = b.x + edge.wrap * self.period[0] - a.x
        dy = b.y + edge.wrap * self.period[1] - a.y
        return math.hypot(dx, dy)

    # combinatorics --------------------------------------------------------
    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_classes(self) -> int:
        return len({e.cls for e in self.edges})

    @property
    def classes(self) -> tuple[int, ...]:
        return tuple(sorted({e.cls for e in self.edges}))

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        u = np.fromiter((e.u for e in self.edges), dtype=np.int64, count=len(self.edges))
        v = np.fromiter((e.v for e in self.edges), dtype=np.int64, count=len(self.edges))
        return u, v

    @cached_property
    def edge_classes(self) -> np.ndarray:
        return np.fromiter((e.cls for e in self.edges), dtype=np.int64, count=len(self.edges))

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        return np.fromiter((e.length for e in self.edges), dtype=float, count=len(self.edges))

    @cached_property
    def side_masks(self) -> tuple[np.ndarray, np.ndarray]:
        """Boolean node masks for the left and right spanning sides."""
        left = np.zeros(len(self.nodes), dtype=bool)
        right = np.zeros(len(self.nodes), dtype=bool)
        left[sorted(self.left)] = True
        right[sorted(self.right)] = True
        return left, right

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """Compressed adjacency ``(indptr, indices)``; each edge appears twice."""
        u, v = self.edge_arrays
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        order = np.argsort(src, kind="stable")
        indptr = np.zeros(len(self.nodes) + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=len(self.nodes)), out=indptr[1:])
        return indptr, dst[order].astype(np.int64)

    def degrees(self) -> dict[int, int]:
        deg = Counter()
        for e in self.edges:
            deg[e.u] += 1
            deg[e.v] += 1
        return {n.id: deg[n.id] for n in self.nodes}

    def neighbors(self, node: int) -> list[int]:
        return [e.v if e.u == node else e.u for e in self.edges if node in (e.u, e.v)]

    def nodes_with_role(self, kind: str) -> list[Node]:
        return [n for n in self.nodes if n.role.kind == kind]

    @property
    def has_span_sides(self) -> bool:
        return bool(self.left) and bool(self.right)


def node_degrees(graph: NetworkGraph) -> dict[int, int]:
    return graph.degrees()


def memory_count(degree: int) -> int:
    """Quantum memories held by a workstation of the given degree."""
    return degree


def terminal_count(degree: int) -> int:
    """Maximum number of measurement terminals at a workstation."""
    return max(1, math.ceil(degree / 2))


# --- text format ----------------------------------------------------------

class GraphFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


_HEADER = "# entanglenet graph v1"


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_graph(graph: NetworkGraph) -> str:
    lines = [
        _HEADER,
        f"lattice {graph.name}",
        f"rows {graph.rows}",
        f"cols {graph.cols}",
        f"boundary {graph.boundary}",
        f"period {_fmt(graph.period[0])} {_fmt(graph.period[1])}",
        f"metric_override {int(graph.metric_override)}",
    ]
    lines += [f"node {n.id} {n.role} {_fmt(n.x)} {_fmt(n.y)}" for n in graph.nodes]
    lines += [
        f"edge {e.u} {e.v} {_fmt(e.length)} {e.cls} {e.wrap}" for e in graph.edges
    ]
    if graph.left:
        lines.append("left " + " ".join(map(str, sorted(graph.left))))
    if graph.right:
        lines.append("right " + " ".join(map(str, sorted(graph.right))))
    lines += [f"port {node} {port}" for node, port in graph.unconnected_ports]
    return "\n".join(lines) + "\n"


def load_graph(text: str) -> NetworkGraph:
    header: dict[str, object] = {}
    nodes: list[Node] = []
    edges: list[Edge] = []
    left: list[int] = []
    right: list[int] = []
    ports: list[tuple[int, str]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, *rest = line.split()
        try:
            if key == "lattice":
                header["name"] = " ".join(rest)
            elif key in ("rows", "cols"):
                header[key] = int(rest[0])
            elif key == "boundary":
                header["boundary"] = rest[0]
            elif key == "period":
                header["period"] = (float(rest[0]), float(rest[1]))
            elif key == "metric_override":
                header["metric_override"] = bool(int(rest[0]))
            elif key == "node":
                nid, role, x, y = rest
                nodes.append(Node(int(nid), NodeRole.parse(role), float(x), float(y)))
            elif key == "edge":
                u, v, length, cls, wrap = rest
                edges.append(Edge(int(u), int(v), float(length), int(cls), int(wrap)))
            elif key == "left":
                left.extend(map(int, rest))
            elif key == "right":
                right.extend(map(int, rest))
            elif key == "port":
                ports.append((int(rest[0]), rest[1]))
            else:
                raise GraphFormatError(line_no, f"unknown record {key!r}")
        except GraphFormatError:
            raise
        except (ValueError, IndexError) as exc:
            raise GraphFormatError(line_no, f"malformed {key!r} record: {exc}") from None
    if "name" not in header:
        raise GraphFormatError(0, "missing 'lattice' header")
    return NetworkGraph(
        name=str(header["name"]),
        nodes=tuple(nodes),
        edges=tuple(edges),
        boundary=str(header.get("boundary", "open")),
        rows=int(header.get("rows", 0)),
        cols=int(header.get("cols", 0)),
        period=tuple(header.get("period", (0.0, 0.0))),
        left=frozenset(left),
        right=frozenset(right),
        metric_override=bool(header.get("metric_override", False)),
        unconnected_ports=tuple(ports),
    )


def write_graph(graph: NetworkGraph, path: str | Path) -> None:
    Path(path).write_text(dump_graph(graph))


def read_graph(path: str | Path) -> NetworkGraph:
    return load_graph(Path(path).read_text())


def edges_from_pairs(pairs: Iterable[tuple[int, int, float, int, int]]) -> tuple[Edge, ...]:
    """Normalise ``(u, v, length, cls, wrap)`` tuples into sorted :class:`Edge` records."""
    out = []
    for u, v, length, cls, wrap in pairs:
        if u > v:
            u, v, wrap = v, u, -wrap
        out.append(Edge(u, v, float(length), int(cls), int(wrap)))
    out.sort(key=lambda e: (e.u, e.v))
    return tuple(out)
