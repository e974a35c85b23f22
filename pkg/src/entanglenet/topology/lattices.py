"""Unit-cell tables and patch builders for the homogeneous and inhomogeneous lattices.

Each lattice is a :class:`UnitCell`: two translation vectors, the embedded
basis vertices and, where the unit-distance rule is not enough, an explicit
list of edge templates ``(i, j, dcol, drow, cls)`` meaning "basis vertex
``i`` of cell ``(c, r)`` joins basis vertex ``j`` of cell ``(c + dcol,
r + drow)``".  All tables use unit edge length; builders rescale.

Patches are ``cols`` cells along ``a1`` (open ends, spanning direction) and
``rows`` cells along ``a2`` (glued into a cylinder).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .graph import WORKSTATION, NetworkGraph, Node, edges_from_pairs

__all__ = [
    "UnitCell",
    "ARCHIMEDEAN",
    "BOWTIE",
    "ARCHIMEDEAN_DEGREE",
    "INHOMOGENEOUS_BASES",
    "canonical_name",
    "unit_cell",
    "build_patch",
    "build_archimedean",
    "build_bowtie",
    "build_inhomogeneous",
    "lattice_builder",
    "LatticeNotAvailable",
]

S2 = math.sqrt(2.0)
S3 = math.sqrt(3.0)


@dataclass(frozen=True)
class UnitCell:
    name: str
    a1: tuple[float, float]
    a2: tuple[float, float]
    basis: tuple[tuple[float, float], ...]
    # None -> every pair of vertices at unit distance is an edge (class 1)
    edges: tuple[tuple[int, int, int, int, int], ...] | None = None
    note: str = ""

    def edge_templates(self) -> tuple[tuple[int, int, int, int, int], ...]:
        if self.edges is not None:
            return self.edges
        return _unit_distance_templates(self)


def _unit_distance_templates(cell: UnitCell) -> tuple[tuple[int, int, int, int, int], ...]:
    a1, a2 = np.array(cell.a1), np.array(cell.a2)
    basis = [np.array(b) for b in cell.basis]
    out = []
    for i, bi in enumerate(basis):
        for j, bj in enumerate(basis):
            for dc in range(-2, 3):
                for dr in range(-2, 3):
                    if (dc, dr) < (0, 0) or ((dc, dr) == (0, 0) and j <= i):
                        continue
                    d = bj + dc * a1 + dr * a2 - bi
                    if abs(np.hypot(*d) - 1.0) < 1e-9:
                        out.append((i, j, dc, dr, 1))
    return tuple(out)


def _polar(r: float, deg: float) -> tuple[float, float]:
    t = math.radians(deg)
    return (r * math.cos(t), r * math.sin(t))


def _add(*vs: tuple[float, float]) -> tuple[float, float]:
    return (sum(v[0] for v in vs), sum(v[1] for v in vs))


# --- Archimedean lattices ---------------------------------------------------
# Vertex configurations follow the usual naming: the cyclic list of polygon
# sizes around every vertex.  Geometry is the standard unit-edge embedding.

def _truncated_hexagonal() -> UnitCell:
    # (3,12^2): honeycomb whose vertices are blown up into unit triangles.
    h = 1.0 + 2.0 / S3  # honeycomb edge between triangle centres
    up = [90.0, 210.0, 330.0]
    down = [270.0, 30.0, 150.0]
    centre_b = (0.0, h)
    basis = [_polar(1.0 / S3, t) for t in up] + [_add(centre_b, _polar(1.0 / S3, t)) for t in down]
    return UnitCell("3.12.12", (S3 * h, 0.0), (S3 * h / 2.0, 1.5 * h), tuple(basis))


def _truncated_trihexagonal() -> UnitCell:
    # (4,6,12): honeycomb vertices become unit hexagons, edges become squares.
    h = 1.0 + S3
    centre_b = (0.0, h)
    hexagon = [_polar(1.0, 60.0 * k) for k in range(6)]
    basis = hexagon + [_add(centre_b, v) for v in hexagon]
    return UnitCell("4.6.12", (S3 * h, 0.0), (S3 * h / 2.0, 1.5 * h), tuple(basis))


def _truncated_square() -> UnitCell:
    # (4,8^2): a small square (rotated 45 deg) at each site of a square grid.
    d = 1.0 + S2
    r = 1.0 / S2
    basis = ((r, 0.0), (0.0, r), (-r, 0.0), (0.0, -r))
    return UnitCell("4.8.8", (d, 0.0), (0.0, d), basis)


def _rhombitrihexagonal() -> UnitCell:
    # (3,4,6,4): unit hexagons on a triangular grid of spacing 1 + sqrt(3).
    d = 1.0 + S3
    basis = tuple(_polar(1.0, 30.0 + 60.0 * k) for k in range(6))
    return UnitCell("3.4.6.4", (d, 0.0), (d / 2.0, d * S3 / 2.0), basis)


def _snub_hexagonal() -> UnitCell:
    # (3^4,6): triangular lattice with a sqrt(7) x sqrt(7) sublattice removed;
    # the six neighbours of a removed site are the six basis vertices.
    a1 = (2.5, S3 / 2.0)  # 2 e1 + e2
    a2 = (0.5, 1.5 * S3)  # -e1 + 3 e2
    basis = tuple(_polar(1.0, 60.0 * k) for k in range(6))
    return UnitCell("3.3.3.3.6", a1, a2, basis)


def _elongated_triangular() -> UnitCell:
    # (3^3,4^2): a row of squares, then a row of triangles, repeated.
    return UnitCell("3.3.3.4.4", (1.0, 0.0), (0.5, 1.0 + S3 / 2.0), ((0.0, 0.0), (0.0, 1.0)))


def _snub_square() -> UnitCell:
    # (3^2,4,3,4): unit squares rotated by +-15 degrees sharing corners.
    a = math.sqrt(2.0 + S3)
    r = 1.0 / S2
    basis = tuple(_polar(r, 60.0 + 90.0 * k) for k in range(4))
    return UnitCell("3.3.4.3.4", (a, 0.0), (0.0, a), basis)


ARCHIMEDEAN: dict[str, UnitCell] = {
    cell.name: cell
    for cell in (
        _truncated_hexagonal(),
        _truncated_trihexagonal(),
        _truncated_square(),
        UnitCell("6.6.6", (S3, 0.0), (S3 / 2.0, 1.5), ((0.0, 0.0), (0.0, 1.0))),
        UnitCell("3.6.3.6", (2.0, 0.0), (1.0, S3), ((0.0, 0.0), (1.0, 0.0), (0.5, S3 / 2.0))),
        _rhombitrihexagonal(),
        UnitCell("4.4.4.4", (1.0, 0.0), (0.0, 1.0), ((0.0, 0.0),)),
        _snub_hexagonal(),
        _elongated_triangular(),
        _snub_square(),
        UnitCell("3.3.3.3.3.3", (1.0, 0.0), (0.5, S3 / 2.0), ((0.0, 0.0),)),
    )
}

ARCHIMEDEAN_DEGREE = {name: len(name.split(".")) for name in ARCHIMEDEAN}


# --- bow-tie lattices -------------------------------------------------------
# Bow-tie I (Wierman): triangular lattice with the horizontal bonds of every
# other row removed, so triangles meet tip to tip.  Classes follow the
# five-bond unit cell of its critical surface: 5 = the horizontal bond,
# {1, 2} = the two other sides of the triangle standing on it, {3, 4} = the
# sides of the triangle hanging from the horizontal bond one row up.
#
# II-IV come from Ziff & Scullard, J. Phys. A 39, 15083 (2006), which is not
# reproduced here.  III and IV are identified by exact thresholds instead:
#   IV  - planar dual of bow-tie I, so p_c = 1 - 0.404518 = 0.595482;
#   III - every up-triangle of a triangular lattice replaced by a unit
#         triangle (A, D, E) plus pendant bonds D-B and E-C; the
#         generalized-triangle condition P(ABC joined) = P(none joined)
#         gives p_c = 0.625457.
# II (p_c = 0.672929) matches no small triangle-hypergraph cell and is left
# out rather than guessed.

BOWTIE: dict[str, UnitCell] = {
    "I": UnitCell(
        "bowtie-I",
        (1.0, 0.0),
        (0.0, S3),
        ((0.0, 0.0), (0.5, S3 / 2.0)),
        edges=(
            (0, 1, 0, 0, 1),
            (0, 0, 1, 0, 5),
            (1, 0, 1, 0, 2),  # B joins A of the cell to the right (A + a1)
            (1, 0, 0, 1, 3),
            (1, 0, 1, 1, 4),
        ),
        note="Wierman bow-tie lattice",
    ),
    "III": UnitCell(
        "bowtie-III",
        (2.0, 0.0),
        (1.0, S3),
        ((0.0, 0.0), (1.0, 0.0), (0.5, S3 / 2.0)),
        # 0 = terminal A, 1 = D, 2 = E; B = A of the cell at +a1, C = A at +a2
        edges=(
            (0, 1, 0, 0, 1),
            (0, 2, 0, 0, 1),
            (1, 2, 0, 0, 1),
            (1, 0, 1, 0, 1),
            (2, 0, 0, 1, 1),
        ),
        note="triangle-plus-pendants cell on the triangular hypergraph",
    ),
    "IV": UnitCell(
        "bowtie-IV",
        (1.0, 0.0),
        (0.0, 1.0 + S3),
        # dual vertices: up-triangle U, down-triangle D, rhombus R
        ((0.5, 0.5), (0.5, 0.5 + S3), (0.0, (1.0 + S3) / 2.0)),
        edges=(
            (0, 1, 0, -1, 1),
            (0, 2, 0, 0, 1),
            (0, 2, 1, 0, 1),
            (1, 2, 0, 0, 1),
            (1, 2, 1, 0, 1),
        ),
        note="planar dual of bow-tie I",
    ),
}

BOWTIE_VARIANTS = ("I", "II", "III", "IV")


class LatticeNotAvailable(KeyError):
    """The lattice is known by name but has no transcribed unit cell."""


# --- naming -------------------------------------------------------------------

_SUPERSCRIPTS = str.maketrans("⁰¹²³⁴⁵⁶⁷⁸⁹", "0123456789")
_ALIASES = {
    "square": "4.4.4.4",
    "triangular": "3.3.3.3.3.3",
    "honeycomb": "6.6.6",
    "hexagonal": "6.6.6",
    "kagome": "3.6.3.6",
}


def canonical_name(name: str) -> str:
    """Normalise names such as ``(3,12^2)``, ``3.12²``, ``bowtie-I`` or ``square``."""
    text = name.strip()
    low = text.lower().replace("_", "-").replace(" ", "")
    if low in _ALIASES:
        return _ALIASES[low]
    m = re.fullmatch(r"bow-?tie-?(i{1,3}|iv)", low)
    if m:
        return "bowtie-" + m.group(1).upper()
    body = low.strip("()").replace(",", ".")
    # unicode superscripts become ^n
    body = re.sub(r"([⁰¹²³⁴⁵⁶⁷⁸⁹]+)", lambda g: "^" + g.group(1).translate(_SUPERSCRIPTS), body)
    parts = []
    for token in body.split("."):
        m = re.fullmatch(r"(\d+)(?:\^(\d+))?", token)
        if not m:
            raise KeyError(f"unknown lattice {name!r}")
        parts += [m.group(1)] * int(m.group(2) or 1)
    canon = ".".join(parts)
    if canon not in ARCHIMEDEAN:
        raise KeyError(f"unknown lattice {name!r}")
    return canon


def unit_cell(name: str) -> UnitCell:
    canon = canonical_name(name)
    if canon.startswith("bowtie-"):
        variant = canon.split("-", 1)[1]
        if variant not in BOWTIE:
            raise LatticeNotAvailable(f"no unit cell transcribed for {canon}")
        return BOWTIE[variant]
    return ARCHIMEDEAN[canon]


# --- patch construction ------------------------------------------------------

def build_patch(
    cell: UnitCell,
    rows: int,
    cols: int,
    edge_length: float = 1.0,
    name: str | None = None,
    templates: Sequence[tuple[int, int, int, int, int]] | None = None,
    lengths: Mapping[int, float] | None = None,
    metric_override: bool = False,
    collapse_classes: bool = False,
    periodic: bool = True,
) -> NetworkGraph:
    """Tile ``cell`` into a ``cols`` x ``rows`` cylinder (or an open patch).

    ``lengths`` maps class -> edge length and is required when
    ``metric_override`` is set; otherwise edge lengths are measured from the
    scaled geometry.  With ``periodic=False`` bonds leaving the top or
    bottom row are dropped.  When ``rows == 2`` the periodic wrap can produce the
    same bond twice; the duplicate is dropped.
    """
    if rows < 2 or cols < 2:
        raise ValueError("rows and cols must both be at least 2")
    if edge_length <= 0:
        raise ValueError("edge_length must be positive")
    templates = tuple(templates if templates is not None else cell.edge_templates())
    nb = len(cell.basis)
    a1 = np.array(cell.a1) * edge_length
    a2 = np.array(cell.a2) * edge_length
    basis = [np.array(b) * edge_length for b in cell.basis]

    def vid(c: int, r: int, b: int) -> int:
        return (c * rows + r) * nb + b

    nodes = []
    for c in range(cols):
        for r in range(rows):
            for b in range(nb):
                p = c * a1 + r * a2 + basis[b]
                nodes.append(Node(vid(c, r, b), WORKSTATION, float(p[0]), float(p[1])))

    raw = {}
    for c in range(cols):
        for r in range(rows):
            for i, j, dc, dr, cls in templates:
                c2 = c + dc
                if not 0 <= c2 < cols:
                    continue
                r_unwrapped = r + dr
                if not periodic and not 0 <= r_unwrapped < rows:
                    continue
                r2 = r_unwrapped % rows
                wrap = (r_unwrapped - r2) // rows
                u, v = vid(c, r, i), vid(c2, r2, j)
                if u == v:
                    raise ValueError("patch too small: edge wraps onto itself")
                if metric_override:
                    length = float(lengths[cls])
                else:
                    d = c2 * a1 + r_unwrapped * a2 + basis[j] - (c * a1 + r * a2 + basis[i])
                    length = float(np.hypot(*d))
                key = (min(u, v), max(u, v))
                if key in raw:
                    continue
                raw[key] = (u, v, length, 1 if collapse_classes else cls, wrap)

    edges = edges_from_pairs(raw.values())
    left = frozenset(vid(0, r, b) for r in range(rows) for b in range(nb))
    right = frozenset(vid(cols - 1, r, b) for r in range(rows) for b in range(nb))
    return NetworkGraph(
        name=name or cell.name,
        nodes=tuple(nodes),
        edges=edges,
        boundary="periodic-horizontal" if periodic else "open",
        rows=rows,
        cols=cols,
        period=(float(rows * a2[0]), float(rows * a2[1])) if periodic else (0.0, 0.0),
        left=left,
        right=right,
        metric_override=metric_override,
    )


def build_archimedean(name: str, rows: int, cols: int, edge_length: float = 1.0) -> NetworkGraph:
    canon = canonical_name(name)
    if canon not in ARCHIMEDEAN:
        raise KeyError(f"{name!r} is not an Archimedean lattice")
    return build_patch(ARCHIMEDEAN[canon], rows, cols, edge_length)


def build_bowtie(variant: str, rows: int, cols: int, edge_length: float = 1.0) -> NetworkGraph:
    key = str(variant).upper().removeprefix("BOWTIE-").removeprefix("BOW-TIE-")
    if key not in BOWTIE_VARIANTS:
        raise KeyError(f"unknown bow-tie variant {variant!r}")
    if key not in BOWTIE:
        raise LatticeNotAvailable(f"no unit cell transcribed for bow-tie {key}")
    return build_patch(BOWTIE[key], rows, cols, edge_length)


# --- inhomogeneous unit cells --------------------------------------------------

INHOMOGENEOUS_BASES = {"square": 2, "triangular": 3, "honeycomb": 3, "bowtie-I": 5}


def _apex(base: float, left: float, right: float) -> tuple[float, float] | None:
    """Apex of a triangle on the segment (0,0)-(base,0) with the given side lengths."""
    if not (left + right > base and left + base > right and right + base > left):
        return None
    x = (left**2 - right**2 + base**2) / (2.0 * base)
    return (x, math.sqrt(max(left**2 - x**2, 0.0)))


def _inhomogeneous_cell(base: str, ell: Mapping[int, float]) -> tuple[UnitCell, bool]:
    """Unit-scale cell realising the class lengths, and whether it is exact."""
    if base == "square":
        return UnitCell("square", (ell[1], 0.0), (0.0, ell[2]), ((0.0, 0.0),),
                        edges=((0, 0, 1, 0, 1), (0, 0, 0, 1, 2))), True
    if base == "triangular":
        # class 1 along a1, class 2 along a2, class 3 along a2 - a1
        apex = _apex(ell[1], ell[2], ell[3])
        edges = ((0, 0, 1, 0, 1), (0, 0, 0, 1, 2), (0, 0, -1, 1, 3))
        if apex is None:
            return UnitCell("triangular", (1.0, 0.0), (0.5, S3 / 2.0), ((0.0, 0.0),), edges), False
        return UnitCell("triangular", (ell[1], 0.0), apex, ((0.0, 0.0),), edges), True
    if base == "honeycomb":
        # three arms of the star around an A site; any lengths are realisable
        arms = [_polar(ell[k], t) for k, t in zip((1, 2, 3), (90.0, 210.0, 330.0))]
        d1, d2, d3 = (np.array(a) for a in arms)
        a1, a2 = tuple(d2 - d1), tuple(d3 - d1)
        edges = ((0, 1, 0, 0, 1), (0, 1, 1, 0, 2), (0, 1, 0, 1, 3))
        return UnitCell("honeycomb", a1, a2, ((0.0, 0.0), tuple(d1)), edges), True
    if base == "bowtie-I":
        tmpl = BOWTIE["I"].edges
        lower = _apex(ell[5], ell[1], ell[2])
        upper = _apex(ell[5], ell[3], ell[4])
        if lower is None or upper is None:
            return BOWTIE["I"], False
        b = lower
        # the upper triangle hangs from the next horizontal bond: its apex is b
        a2 = (b[0] - upper[0], b[1] + upper[1])
        return UnitCell("bowtie-I", (ell[5], 0.0), a2, ((0.0, 0.0), b), tmpl), True
    raise KeyError(f"unknown inhomogeneous base {base!r}")


def build_inhomogeneous(
    base: str, class_lengths: Mapping[int, float] | Sequence[float], rows: int, cols: int
) -> NetworkGraph:
    """Patch whose edge classes carry their own lengths (km).

    ``class_lengths`` is a mapping ``class -> length`` (classes numbered from
    1) or a sequence in class order.  When the lengths cannot be realised in
    the plane, positions come from the homogeneous cell and the graph is
    flagged ``metric_override``.  If all lengths are equal the classes
    collapse into one.
    """
    canon = "bowtie-I" if base.lower().replace("_", "-") in ("bowtie-i", "bow-tie-i") else base.lower()
    if canon not in INHOMOGENEOUS_BASES:
        raise KeyError(f"unknown inhomogeneous base {base!r}")
    if not isinstance(class_lengths, Mapping):
        class_lengths = {k + 1: v for k, v in enumerate(class_lengths)}
    k = INHOMOGENEOUS_BASES[canon]
    if sorted(class_lengths) != list(range(1, k + 1)):
        raise ValueError(f"{canon} needs exactly {k} class lengths, got {dict(class_lengths)}")
    ell = {c: float(v) for c, v in class_lengths.items()}
    if any(v <= 0 for v in ell.values()):
        raise ValueError("class lengths must be positive")
    cell, exact = _inhomogeneous_cell(canon, ell)
    uniform = len(set(ell.values())) == 1
    name = canon + "[" + ",".join(repr(ell[c]) for c in range(1, k + 1)) + "]"
    if exact:
        return build_patch(cell, rows, cols, 1.0, name=name, collapse_classes=uniform)
    return build_patch(cell, rows, cols, 1.0, name=name, lengths=ell,
                       metric_override=True, collapse_classes=uniform)


def lattice_builder(name: str) -> Callable[[int], NetworkGraph]:
    """``size -> graph`` for a roughly square patch ``size`` cells wide."""
    cell = unit_cell(name)
    width = math.hypot(*cell.a1)
    height = abs(cell.a1[0] * cell.a2[1] - cell.a1[1] * cell.a2[0]) / width

    def build(size: int) -> NetworkGraph:
        rows = max(2, round(size * width / height))
        return build_patch(cell, rows, size)

    build.lattice_name = cell.name  # type: ignore[attr-defined]
    return build
