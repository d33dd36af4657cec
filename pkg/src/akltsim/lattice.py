"""Graph model of sites, bonds and decorations, plus lattice generators.

A site with z neighbors is a spin-z/2 entity carrying z virtual qubits, one
per incident edge.  Degree-1 spin-1/2 vertices are boundary qubits; patches
are generated with their open legs terminated by such qubits so that defect
correction always has a physical endpoint.  Vertex numbering is breadth-first
from a canonical origin and a site's virtual qubits are ordered by neighbor
id, which makes every generator (and every seeded run downstream)
reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import qstate as qs


class LatticeError(ValueError):
    pass


class BellKind(Enum):
    """The four Bell bonds, with their stabilizer signs and the Pauli
    byproduct each one carries relative to the singlet."""

    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"

    @property
    def vector(self) -> np.ndarray:
        return qs.BELL_VECTORS[self.value]

    @property
    def byproduct(self) -> str:
        return _BYPRODUCT[self]

    def sign(self, axis: str) -> int:
        """Sign s in the stabilizer s * sigma_axis x sigma_axis of this Bell state."""
        return _SIGNS[self][axis]


_BYPRODUCT = {
    BellKind.PSI_MINUS: "I",
    BellKind.PSI_PLUS: "Z",
    BellKind.PHI_PLUS: "Y",
    BellKind.PHI_MINUS: "X",
}
KIND_OF_BYPRODUCT = {v: k for k, v in _BYPRODUCT.items()}

_SIGNS = {
    BellKind.PHI_PLUS: {"x": +1, "y": -1, "z": +1},
    BellKind.PHI_MINUS: {"x": -1, "y": +1, "z": +1},
    BellKind.PSI_PLUS: {"x": +1, "y": +1, "z": -1},
    BellKind.PSI_MINUS: {"x": -1, "y": -1, "z": -1},
}


@dataclass(frozen=True)
class Vertex:
    id: int
    role: str = "bulk"  # "bulk" | "boundary_qubit"
    decoration_of: int | None = None  # parent edge index, for materialized decorations


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    bond: BellKind | None = None
    decoration_count: int = 0

    def __post_init__(self):
        if self.u == self.v:
            raise LatticeError("self loops are not allowed")
        if self.u > self.v:
            raise LatticeError("edges must be stored with u < v")
        if self.decoration_count < 0:
            raise LatticeError("decoration count must be nonnegative")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.u, self.v)


@dataclass
class SiteGraph:
    vertices: list[Vertex]
    edges: list[Edge]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [v.id for v in self.vertices]
        if ids != list(range(len(ids))):
            raise LatticeError("vertex ids must be 0..n-1 in order")
        seen = set()
        for e in self.edges:
            if e.u >= len(ids) or e.v >= len(ids):
                raise LatticeError("edge endpoint out of range")
            if e.pair in seen:
                raise LatticeError("duplicate edge")
            seen.add(e.pair)
        for v in self.vertices:
            d = self.degree(v.id)
            if d < 1:
                raise LatticeError(f"vertex {v.id} is isolated")
            if v.role == "boundary_qubit" and d != 1:
                raise LatticeError("boundary qubits must have degree 1")

    # -- structure queries ---------------------------------------------------

    def degree(self, site: int) -> int:
        return sum(1 for e in self.edges if site in e.pair)

    def neighbors(self, site: int) -> list[int]:
        out = [e.v if e.u == site else e.u for e in self.edges if site in e.pair]
        return sorted(out)

    def spin(self, site: int) -> float:
        return self.degree(site) / 2.0

    def bulk_sites(self) -> list[int]:
        return [v.id for v in self.vertices if v.role == "bulk"]

    def boundary_sites(self) -> list[int]:
        return [v.id for v in self.vertices if v.role == "boundary_qubit"]

    def edge_index(self, u: int, v: int) -> int:
        pair = (min(u, v), max(u, v))
        for i, e in enumerate(self.edges):
            if e.pair == pair:
                return i
        raise LatticeError(f"no edge {pair}")

    def is_tree(self) -> bool:
        return len(self.edges) == len(self.vertices) - 1 and self.is_connected()

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        seen = {0}
        stack = [0]
        adj = self._adjacency()
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    def _adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {v.id: [] for v in self.vertices}
        for e in self.edges:
            adj[e.u].append(e.v)
            adj[e.v].append(e.u)
        return {k: sorted(vs) for k, vs in adj.items()}

    # -- virtual-qubit register ----------------------------------------------

    def qubit_map(self) -> dict[int, tuple[int, ...]]:
        """Site -> its virtual-qubit indices; one qubit per leg, legs ordered
        by neighbor id, sites in id order. Bijective onto 0..total-1."""
        out: dict[int, tuple[int, ...]] = {}
        next_q = 0
        for v in self.vertices:
            d = self.degree(v.id)
            out[v.id] = tuple(range(next_q, next_q + d)) if v.role == "bulk" else (next_q,)
            next_q += len(out[v.id])
        return out

    def leg_qubit(self, site: int, neighbor: int) -> int:
        legs = self.qubit_map()[site]
        if len(legs) == 1:
            return legs[0]
        return legs[self.neighbors(site).index(neighbor)]

    def total_qubits(self) -> int:
        return sum(len(q) for q in self.qubit_map().values())

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "schema": "sitegraph/v1",
            "vertices": [
                {"id": v.id, "role": v.role}
                | ({"decoration_of": v.decoration_of} if v.decoration_of is not None else {})
                for v in self.vertices
            ],
            "edges": [
                {"u": e.u, "v": e.v, "decoration_count": e.decoration_count}
                | ({"bond": e.bond.value} if e.bond is not None else {})
                for e in self.edges
            ],
            "meta": self.meta,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "SiteGraph":
        doc = json.loads(text)
        if doc.get("schema") != "sitegraph/v1":
            raise LatticeError("not a sitegraph/v1 document")
        verts = [
            Vertex(v["id"], v.get("role", "bulk"), v.get("decoration_of"))
            for v in doc["vertices"]
        ]
        edges = [
            Edge(e["u"], e["v"], BellKind(e["bond"]) if "bond" in e else None,
                 e.get("decoration_count", 0))
            for e in doc["edges"]
        ]
        meta = doc.get("meta", {})
        return SiteGraph(verts, edges, meta)


# ---------------------------------------------------------------------------
# lattice generators


@dataclass(frozen=True)
class LatticeSpec:
    family: str
    length: int = 0
    rows: int = 0
    cols: int = 0
    z: int = 0
    depth: int = 0
    qubit_terminated: bool = True

    FAMILIES = ("chain_open", "chain_ring", "hex_patch", "square_patch",
                "bethe_tree", "star_patch", "quasichain")


def make_lattice(spec: LatticeSpec) -> SiteGraph:
    if spec.family == "chain_open":
        g = _chain_open(spec.length, spec.qubit_terminated)
    elif spec.family == "chain_ring":
        g = _chain_ring(spec.length)
    elif spec.family == "bethe_tree":
        g = _bethe_tree(spec.z, spec.depth, spec.qubit_terminated)
    elif spec.family == "hex_patch":
        g = _hex_patch(spec.rows, spec.cols, spec.qubit_terminated)
    elif spec.family == "square_patch":
        g = _square_patch(spec.rows, spec.cols, spec.qubit_terminated)
    elif spec.family == "star_patch":
        g = _star_patch(spec.rows, spec.cols)
    elif spec.family == "quasichain":
        g = _quasichain(spec.length)
    else:
        raise LatticeError(f"unknown family {spec.family!r}")
    if not g.is_connected():
        raise LatticeError("generated graph is not connected (generator bug)")
    return g


class _Builder:
    """Accumulates vertices/edges under construction names, then renumbers
    breadth-first from the origin (the first vertex added)."""

    def __init__(self):
        self.names: list = []
        self.roles: dict = {}
        self.edges: set[tuple] = set()

    def vertex(self, name, role="bulk"):
        if name not in self.roles:
            self.names.append(name)
            self.roles[name] = role
        return name

    def add_edge(self, a, b):
        key = tuple(sorted((self.names.index(a), self.names.index(b))))
        self.edges.add(key)

    def terminate(self, name, want_degree: int):
        """Attach boundary qubits until ``name`` reaches the wanted degree."""
        idx = self.names.index(name)
        deg = sum(1 for e in self.edges if idx in e)
        for k in range(want_degree - deg):
            b = ("bq", name, k)
            self.vertex(b, "boundary_qubit")
            self.add_edge(name, b)

    def build(self, meta_sets: dict[str, list] | None = None,
              faces: list[tuple] | None = None) -> SiteGraph:
        # breadth-first renumbering from the first-added vertex
        n = len(self.names)
        adj: dict[int, list[int]] = {i: [] for i in range(n)}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        order = []
        seen = {0}
        queue = [0]
        while queue:
            cur = queue.pop(0)
            order.append(cur)
            for w in sorted(adj[cur]):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        if len(order) != n:
            raise LatticeError("generator produced a disconnected graph")
        new_id = {old: i for i, old in enumerate(order)}
        verts = [Vertex(i, self.roles[self.names[old]]) for i, old in enumerate(order)]
        edges = sorted(
            (tuple(sorted((new_id[a], new_id[b]))) for a, b in self.edges)
        )
        meta: dict = {}
        name_to_new = {self.names[old]: i for old, i in new_id.items()}
        for key, names in (meta_sets or {}).items():
            meta[key] = sorted(name_to_new[nm] for nm in names)
        if faces is not None:
            meta["faces"] = [[name_to_new[nm] for nm in f] for f in faces]
        return SiteGraph(verts, [Edge(u, v) for u, v in edges], meta)


def _chain_open(length: int, terminated: bool) -> SiteGraph:
    if length < 1:
        raise LatticeError("chain length must be >= 1")
    b = _Builder()
    if terminated:
        b.vertex(("bq", "L"), "boundary_qubit")
    for i in range(length):
        b.vertex(("s", i))
    if terminated:
        b.vertex(("bq", "R"), "boundary_qubit")
        b.add_edge(("bq", "L"), ("s", 0))
        b.add_edge(("s", length - 1), ("bq", "R"))
    for i in range(length - 1):
        b.add_edge(("s", i), ("s", i + 1))
    return b.build()


def _chain_ring(length: int) -> SiteGraph:
    if length < 3:
        raise LatticeError("ring length must be >= 3")
    b = _Builder()
    for i in range(length):
        b.vertex(("s", i))
    for i in range(length):
        b.add_edge(("s", i), ("s", (i + 1) % length))
    return b.build()


def _bethe_tree(z: int, depth: int, terminated: bool) -> SiteGraph:
    if z < 2 or depth < 1:
        raise LatticeError("bethe_tree needs z >= 2 and depth >= 1")
    b = _Builder()
    b.vertex(("n", (0,)))
    frontier = [(0,)]
    for level in range(1, depth + 1):
        nxt = []
        for parent in frontier:
            fanout = z if len(parent) == 1 else z - 1
            for k in range(fanout):
                child = parent + (k,)
                role = "boundary_qubit" if (level == depth and terminated) else "bulk"
                b.vertex(("n", child), role)
                b.add_edge(("n", parent), ("n", child))
                nxt.append(child)
        frontier = nxt
    return b.build()


def _hex_patch(rows: int, cols: int, terminated: bool) -> SiteGraph:
    if rows < 1 or cols < 1:
        raise LatticeError("hex_patch needs rows, cols >= 1")
    b = _Builder()
    for r in range(rows):
        for c in range(cols):
            b.vertex(("A", r, c))
            b.vertex(("B", r, c))
    for r in range(rows):
        for c in range(cols):
            b.add_edge(("A", r, c), ("B", r, c))
            if c + 1 < cols:
                b.add_edge(("B", r, c), ("A", r, c + 1))
            if r >= 1:
                b.add_edge(("A", r, c), ("B", r - 1, c))
    if terminated:
        for r in range(rows):
            for c in range(cols):
                b.terminate(("A", r, c), 3)
                b.terminate(("B", r, c), 3)
    faces = [
        (("A", r, c), ("B", r, c), ("A", r, c + 1),
         ("B", r - 1, c + 1), ("A", r - 1, c + 1), ("B", r - 1, c))
        for r in range(1, rows)
        for c in range(cols - 1)
    ]
    meta = {
        "left": [("A", r, 0) for r in range(rows)] + [("B", r, 0) for r in range(rows)],
        "right": [("A", r, cols - 1) for r in range(rows)] + [("B", r, cols - 1) for r in range(rows)],
    }
    return b.build(meta, faces)


def _square_patch(rows: int, cols: int, terminated: bool) -> SiteGraph:
    if rows < 2 or cols < 2:
        raise LatticeError("square_patch needs rows, cols >= 2")
    b = _Builder()
    for r in range(rows):
        for c in range(cols):
            b.vertex(("s", r, c))
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                b.add_edge(("s", r, c), ("s", r, c + 1))
            if r + 1 < rows:
                b.add_edge(("s", r, c), ("s", r + 1, c))
    if terminated:
        for r in range(rows):
            for c in range(cols):
                b.terminate(("s", r, c), 4)
    faces = [
        (("s", r, c), ("s", r, c + 1), ("s", r + 1, c + 1), ("s", r + 1, c))
        for r in range(rows - 1)
        for c in range(cols - 1)
    ]
    meta = {
        "left": [("s", r, 0) for r in range(rows)],
        "right": [("s", r, cols - 1) for r in range(rows)],
    }
    return b.build(meta, faces)


def _star_patch(rows: int, cols: int) -> SiteGraph:
    """Star lattice: every trivalent hex site becomes a triangle of sites."""
    hexg = _hex_patch(rows, cols, terminated=True)
    b = _Builder()
    corner_of: dict[tuple[int, int], tuple] = {}
    for v in hexg.vertices:
        if v.role == "bulk":
            nbrs = hexg.neighbors(v.id)
            for i, w in enumerate(nbrs):
                corner_of[(v.id, w)] = b.vertex(("c", v.id, i))
            for i in range(3):
                for j in range(i + 1, 3):
                    b.add_edge(("c", v.id, i), ("c", v.id, j))
        else:
            b.vertex(("bq", v.id), "boundary_qubit")
    for e in hexg.edges:
        ur, vr = hexg.vertices[e.u].role, hexg.vertices[e.v].role
        a = corner_of[(e.u, e.v)] if ur == "bulk" else ("bq", e.u)
        c = corner_of[(e.v, e.u)] if vr == "bulk" else ("bq", e.v)
        b.add_edge(a, c)
    faces = [
        tuple(("c", v.id, i) for i in range(3))
        for v in hexg.vertices
        if v.role == "bulk"
    ]
    left = set(hexg.meta["left"])
    right = set(hexg.meta["right"])
    meta = {
        "left": [nm for (vid, w), nm in corner_of.items() if vid in left],
        "right": [nm for (vid, w), nm in corner_of.items() if vid in right],
    }
    return b.build(meta, faces)


def _quasichain(length: int) -> SiteGraph:
    """Spin-3/2 backbone with one dangling spin-1/2 per site, ends terminated."""
    if length < 1:
        raise LatticeError("quasichain length must be >= 1")
    b = _Builder()
    b.vertex(("bq", "L"), "boundary_qubit")
    for i in range(length):
        b.vertex(("s", i))
        b.vertex(("d", i), "boundary_qubit")
        b.add_edge(("s", i), ("d", i))
        if i:
            b.add_edge(("s", i - 1), ("s", i))
    b.vertex(("bq", "R"), "boundary_qubit")
    b.add_edge(("bq", "L"), ("s", 0))
    b.add_edge(("s", length - 1), ("bq", "R"))
    return b.build()


# ---------------------------------------------------------------------------
# decorations and bonds


def decorate(g: SiteGraph, edge: tuple[int, int], count: int = 1) -> SiteGraph:
    """Increment the decoration count of an edge (count 0 is the identity)."""
    idx = g.edge_index(*edge)
    if count == 0:
        return g
    edges = list(g.edges)
    e = edges[idx]
    edges[idx] = replace(e, decoration_count=e.decoration_count + count)
    return SiteGraph(list(g.vertices), edges, dict(g.meta))


def decorate_all(g: SiteGraph, count: int = 1) -> SiteGraph:
    out = g
    for e in g.edges:
        out = decorate(out, e.pair, count)
    return out


def materialize_decorations(g: SiteGraph) -> SiteGraph:
    """Insert the stored decorations as degree-2 spin-1 vertices.

    Decoration vertex ids are appended after the existing ids, edges processed
    in index order; each new vertex records its parent edge.  Bonds on
    decorated edges must be singlets (or unset), which is the only case that
    arises in this package.
    """
    verts = list(g.vertices)
    new_edges: list[Edge] = []
    for idx, e in enumerate(g.edges):
        if e.decoration_count == 0:
            new_edges.append(e)
            continue
        if e.bond not in (None, BellKind.PSI_MINUS):
            raise LatticeError("decorating non-singlet bonds is not supported")
        chain = [e.u]
        for _ in range(e.decoration_count):
            d = Vertex(len(verts), "bulk", decoration_of=idx)
            verts.append(d)
            chain.append(d.id)
        chain.append(e.v)
        for a, bb in zip(chain, chain[1:]):
            new_edges.append(Edge(min(a, bb), max(a, bb), e.bond, 0))
    new_edges.sort(key=lambda e: e.pair)
    return SiteGraph(verts, new_edges, dict(g.meta))


def strip_decorations(g: SiteGraph) -> SiteGraph:
    """Inverse of materialize_decorations on the abstract graph."""
    dec = {v.id: v.decoration_of for v in g.vertices if v.decoration_of is not None}
    if not dec:
        return g
    keep = [v for v in g.vertices if v.id not in dec]
    if [v.id for v in keep] != list(range(len(keep))):
        raise LatticeError("decoration vertices must come after all real vertices")
    groups: dict[int, list[int]] = {}
    for d, parent in dec.items():
        groups.setdefault(parent, []).append(d)
    plain: list[Edge] = []
    real_nbrs: dict[int, set[int]] = {p: set() for p in groups}
    group_bond: dict[int, BellKind | None] = {p: None for p in groups}
    for e in g.edges:
        du, dv = e.u in dec, e.v in dec
        if not du and not dv:
            plain.append(e)
            continue
        parent = dec[e.u] if du else dec[e.v]
        for end, is_dec in ((e.u, du), (e.v, dv)):
            if not is_dec:
                real_nbrs[parent].add(end)
        group_bond[parent] = e.bond
    rebuilt = list(plain)
    for parent, members in groups.items():
        ends = sorted(real_nbrs[parent])
        if len(ends) != 2:
            raise LatticeError("decoration chain does not join two real sites")
        rebuilt.append(Edge(ends[0], ends[1], group_bond[parent], len(members)))
    rebuilt.sort(key=lambda e: e.pair)
    return SiteGraph(keep, rebuilt, dict(g.meta))


def assign_bonds(g: SiteGraph, policy: str, rng: np.random.Generator | None = None,
                 fixed: list[BellKind] | None = None) -> SiteGraph:
    """Put a Bell kind on every edge.

    all_singlet is the original construction; uniform_random draws i.i.d.
    uniformly over the four kinds (the random-bond state); fixed_list takes
    the kinds verbatim, in edge-index order.
    """
    if policy == "all_singlet":
        kinds = [BellKind.PSI_MINUS] * len(g.edges)
    elif policy == "uniform_random":
        if rng is None:
            raise LatticeError("uniform_random needs an rng")
        options = list(BellKind)
        kinds = [options[int(rng.integers(4))] for _ in g.edges]
    elif policy == "fixed_list":
        if fixed is None or len(fixed) != len(g.edges):
            raise LatticeError("fixed_list length must match the edge count")
        kinds = list(fixed)
    else:
        raise LatticeError(f"unknown bond policy {policy!r}")
    edges = [replace(e, bond=k) for e, k in zip(g.edges, kinds)]
    return SiteGraph(list(g.vertices), edges, dict(g.meta))
