"""The rectangular centred Bravais network linking two companies X and Y.

Sites sit on two interleaved grids.  "Terminal-like" sites ``(c, r)`` with
``c = 0..M+1`` and ``r = 1..N`` hold the X branches (``c = 0``), the
measurement terminals (``1 <= c <= M``) and the Y branches (``c = M+1``);
site ``(c, r)`` is at ``(2 c ell cos(theta), 2 (r-1) ell sin(theta))``.
Source ``S(i, j)``, ``i = 1..M+1``, ``j = 1..N-1``, sits at the centre of
the cell above and to the right of site ``(i-1, j)`` and fires along the
four diagonals, one leg of length ``ell`` each.

Ports are named by direction: a source leg ``LL`` points at site
``(i-1, j)``, ``UL`` at ``(i-1, j+1)``, ``LR`` at ``(i, j)`` and ``UR`` at
``(i, j+1)``.  A site's ``UL`` port faces source ``S(c, r)``, ``LL`` faces
``S(c, r-1)``, ``UR`` faces ``S(c+1, r)`` and ``LR`` faces ``S(c+1, r-1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Mapping

from ..channel import DEFAULT_ALPHA, transmissivity
from .graph import Edge, NetworkGraph, Node, NodeRole

__all__ = [
    "Orientation",
    "PORTS",
    "BravaisConfig",
    "build_bravais",
    "bravais_node_ids",
    "partner_port",
    "opposite_port",
    "leg_target",
    "port_source",
    "site_ports",
]

PORTS = ("UL", "UR", "LL", "LR")


class Orientation(Enum):
    """How the four ports of a source or terminal are grouped into two pairs."""

    DIAGONAL = "diagonal"
    TOP_BOTTOM = "top-bottom"
    LEFT_RIGHT = "left-right"

    @classmethod
    def parse(cls, text: str) -> "Orientation":
        key = text.strip().lower().replace("_", "-")
        for o in cls:
            if o.value == key:
                return o
        raise ValueError(f"unknown orientation {text!r}")


_PAIRS = {
    Orientation.DIAGONAL: (("LL", "UR"), ("UL", "LR")),
    Orientation.TOP_BOTTOM: (("UL", "LL"), ("UR", "LR")),
    Orientation.LEFT_RIGHT: (("UL", "UR"), ("LL", "LR")),
}
_OPPOSITE = {"UL": "LR", "LR": "UL", "UR": "LL", "LL": "UR"}


def partner_port(orientation: Orientation, port: str) -> str:
    for a, b in _PAIRS[orientation]:
        if port == a:
            return b
        if port == b:
            return a
    raise ValueError(f"unknown port {port!r}")


def opposite_port(port: str) -> str:
    """The port at the far end of a leg leaving through ``port``."""
    return _OPPOSITE[port]


@dataclass
class BravaisConfig:
    """Protocol network parameters.

    Orientation maps are keyed by ``(i, j)`` for sources and ``(c, r)`` for
    terminals; anything missing defaults to :attr:`Orientation.DIAGONAL`.
    """

    N: int
    M: int
    ell: float = 22.0
    theta: float = math.pi / 4
    alpha: float = DEFAULT_ALPHA
    gamma: float = 1.0
    source_orientations: Mapping[tuple[int, int], Orientation] = field(default_factory=dict)
    terminal_orientations: Mapping[tuple[int, int], Orientation] = field(default_factory=dict)
    failed_sources: frozenset[tuple[int, int]] = frozenset()
    failed_terminals: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be an integer >= 1, got {self.M!r}")
        if not self.ell > 0:
            raise ValueError(f"ell must be positive, got {self.ell!r}")
        if not 0 < self.theta < math.pi / 2:
            raise ValueError(f"theta must lie in (0, pi/2), got {self.theta!r}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha!r}")
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma!r}")
        self.source_orientations = dict(self.source_orientations)
        self.terminal_orientations = dict(self.terminal_orientations)
        self.failed_sources = frozenset(map(tuple, self.failed_sources))
        self.failed_terminals = frozenset(map(tuple, self.failed_terminals))
        for key in list(self.source_orientations) + list(self.failed_sources):
            if not self.is_source(*key):
                raise ValueError(f"no source at {key}")
        for key in list(self.terminal_orientations) + list(self.failed_terminals):
            if not self.is_terminal(*key):
                raise ValueError(f"no terminal at {key}")

    # geometry -------------------------------------------------------------
    @property
    def width(self) -> float:
        """Company separation ``L = 2 ell (M+1) cos(theta)``."""
        return 2.0 * self.ell * (self.M + 1) * math.cos(self.theta)

    @property
    def height(self) -> float:
        """Branch spread ``H = 2 ell (N-1) sin(theta)``."""
        return 2.0 * self.ell * (self.N - 1) * math.sin(self.theta)

    @property
    def eta(self) -> float:
        """Single-photon transmissivity over one source leg."""
        return transmissivity(self.alpha, self.ell)

    def site_position(self, c: int, r: int) -> tuple[float, float]:
        return (2 * c * self.ell * math.cos(self.theta), 2 * (r - 1) * self.ell * math.sin(self.theta))

    def source_position(self, i: int, j: int) -> tuple[float, float]:
        return ((2 * i - 1) * self.ell * math.cos(self.theta), (2 * j - 1) * self.ell * math.sin(self.theta))

    # indexing -------------------------------------------------------------
    def is_source(self, i: int, j: int) -> bool:
        return 1 <= i <= self.M + 1 and 1 <= j <= self.N - 1

    def is_terminal(self, c: int, r: int) -> bool:
        return 1 <= c <= self.M and 1 <= r <= self.N

    def sources(self) -> Iterator[tuple[int, int]]:
        for i in range(1, self.M + 2):
            for j in range(1, self.N):
                yield (i, j)

    def terminals(self) -> Iterator[tuple[int, int]]:
        for c in range(1, self.M + 1):
            for r in range(1, self.N + 1):
                yield (c, r)

    def source_orientation(self, i: int, j: int) -> Orientation:
        return self.source_orientations.get((i, j), Orientation.DIAGONAL)

    def terminal_orientation(self, c: int, r: int) -> Orientation:
        return self.terminal_orientations.get((c, r), Orientation.DIAGONAL)

    def with_changes(self, **changes) -> "BravaisConfig":
        return replace(self, **changes)


def leg_target(i: int, j: int, port: str) -> tuple[int, int]:
    """Site reached by the leg of source ``S(i, j)`` leaving through ``port``."""
    dc, dr = {"LL": (-1, 0), "UL": (-1, 1), "LR": (0, 0), "UR": (0, 1)}[port]
    return (i + dc, j + dr)


def port_source(config: BravaisConfig, c: int, r: int, port: str) -> tuple[int, int] | None:
    """Source feeding port ``port`` of site ``(c, r)``, or None at the grid edge."""
    di, dj = {"UL": (0, 0), "LL": (0, -1), "UR": (1, 0), "LR": (1, -1)}[port]
    key = (c + di, r + dj)
    return key if config.is_source(*key) else None


def site_ports(config: BravaisConfig, c: int, r: int) -> tuple[str, ...]:
    return tuple(p for p in PORTS if port_source(config, c, r, p) is not None)


def bravais_node_ids(config: BravaisConfig) -> dict[tuple, int]:
    """Node ids used by :func:`build_bravais`.

    Keys are ``("X", r)``, ``("Y", r)``, ``("M", c, r)`` and ``("S", i, j)``.
    """
    ids: dict[tuple, int] = {}
    for r in range(1, config.N + 1):
        ids[("X", r)] = len(ids)
    for r in range(1, config.N + 1):
        ids[("Y", r)] = len(ids)
    for c, r in config.terminals():
        ids[("M", c, r)] = len(ids)
    for i, j in config.sources():
        ids[("S", i, j)] = len(ids)
    return ids


def _site_key(config: BravaisConfig, c: int, r: int) -> tuple:
    if c == 0:
        return ("X", r)
    if c == config.M + 1:
        return ("Y", r)
    return ("M", c, r)


def build_bravais(config: BravaisConfig) -> NetworkGraph:
    """Physical network: every source leg is an edge of length ``ell``.

    Failed sources and terminals stay in the graph; failures only change how
    chains are traced.  Ports of edge terminals that no source feeds are
    listed in ``unconnected_ports``.
    """
    ids = bravais_node_ids(config)
    nodes = []
    for key, nid in ids.items():
        kind = key[0]
        if kind in ("X", "Y"):
            role = NodeRole(kind, row=key[1])
            x, y = config.site_position(0 if kind == "X" else config.M + 1, key[1])
        elif kind == "M":
            role = NodeRole("M", col=key[1], row=key[2])
            x, y = config.site_position(key[1], key[2])
        else:
            role = NodeRole("S", col=key[1], row=key[2])
            x, y = config.source_position(key[1], key[2])
        nodes.append(Node(nid, role, x, y))

    edges = []
    for i, j in config.sources():
        s = ids[("S", i, j)]
        for port in PORTS:
            t = ids[_site_key(config, *leg_target(i, j, port))]
            u, v = min(s, t), max(s, t)
            edges.append(Edge(u, v, float(config.ell)))
    edges.sort(key=lambda e: (e.u, e.v))

    unconnected = []
    for c, r in config.terminals():
        for port in PORTS:
            if port_source(config, c, r, port) is None:
                unconnected.append((ids[("M", c, r)], port))

    return NetworkGraph(
        name=f"bravais-N{config.N}-M{config.M}",
        nodes=tuple(nodes),
        edges=tuple(edges),
        boundary="open",
        rows=config.N,
        cols=config.M,
        left=frozenset(ids[("X", r)] for r in range(1, config.N + 1)),
        right=frozenset(ids[("Y", r)] for r in range(1, config.N + 1)),
        unconnected_ports=tuple(unconnected),
    )
