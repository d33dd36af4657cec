"""Fusion preparation engine.

Blocks are placed per site, dangling qubits are fused edge by edge (Bell
measurement or Hadamard test), Pauli byproducts are tracked in a ledger, and
on trees they are pushed to the boundary qubits with pi rotations.  Rings
support defect consolidation and measurement-based removal at the cost of a
non-predetermined final length.

The projector-built VBS reference (:func:`reference_vbs`) is the oracle every
prepared state is checked against: Bell states on all edges, then the
(deformed) symmetric projector at every bulk site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import qstate as qs
from .circuits import DeformationProfile, reference_block_state
from .lattice import BellKind, KIND_OF_BYPRODUCT, SiteGraph, materialize_decorations
from .numerics import POLICY
from .qstate import Complex, PureState


class ProtocolError(RuntimeError):
    pass


class CycleError(ProtocolError):
    """Tree correction refuses graphs with loops."""


_MUL = {}
for _a in "IXYZ":
    for _b in "IXYZ":
        if _a == "I":
            _MUL[(_a, _b)] = _b
        elif _b == "I":
            _MUL[(_a, _b)] = _a
        elif _a == _b:
            _MUL[(_a, _b)] = "I"
        else:
            _MUL[(_a, _b)] = ({"X", "Y", "Z"} - {_a, _b}).pop()


def pauli_mul(a: str, b: str) -> str:
    """Product of Pauli letters with sign and phase dropped."""
    return _MUL[(a, b)]


@dataclass
class DefectLedger:
    """Per-edge byproduct Pauli (phases dropped) and the applied corrections."""

    byproducts: dict[int, str] = field(default_factory=dict)
    corrections: list[tuple[int, str]] = field(default_factory=list)

    def record(self, edge: int, letter: str):
        self.byproducts[edge] = pauli_mul(self.byproducts.get(edge, "I"), letter)

    def letter(self, edge: int) -> str:
        return self.byproducts.get(edge, "I")

    def is_clear(self) -> bool:
        return all(v == "I" for v in self.byproducts.values())

    def net(self) -> str:
        out = "I"
        for v in self.byproducts.values():
            out = pauli_mul(out, v)
        return out


def resolve_profile(deform, n: int) -> DeformationProfile:
    """Site profile for a 2S = n site: None = uniform (AKLT point), a float a
    selects the extremal family, an explicit profile must match n."""
    if deform is None:
        return DeformationProfile.uniform(n)
    if isinstance(deform, (int, float)):
        return DeformationProfile.extremal(n, float(deform))
    if isinstance(deform, DeformationProfile):
        if deform.n != n:
            raise ProtocolError(f"profile n={deform.n} does not fit a degree-{n} site")
        return deform
    raise ProtocolError(f"cannot interpret deformation {deform!r}")


# ---------------------------------------------------------------------------
# dynamic register


class Register:
    """A labeled register: tensor with one axis per qubit, axes tracked by label."""

    def __init__(self):
        self.labels: list = []
        self.tensor = np.ones((), dtype=Complex)

    @property
    def width(self) -> int:
        return len(self.labels)

    def axis(self, label) -> int:
        return self.labels.index(label)

    def add_block(self, labels: list, amplitudes: np.ndarray):
        if self.width + len(labels) > POLICY.max_qubits:
            raise ProtocolError(
                f"register would exceed the {POLICY.max_qubits}-qubit cap"
            )
        if set(labels) & set(self.labels):
            raise ProtocolError("duplicate register labels")
        block = amplitudes.reshape((2,) * len(labels))
        self.tensor = np.multiply.outer(self.tensor, block)
        self.labels.extend(labels)

    def apply(self, matrix: np.ndarray, labels: list, renormalize: bool = False):
        axes = [self.axis(l) for l in labels]
        self.tensor = qs._apply_matrix(self.tensor, matrix, axes, self.width)
        if renormalize:
            self.renormalize()

    def pauli(self, letter: str, label):
        if letter != "I":
            self.apply(qs.PAULI[letter], [label])

    def branch_weights(self, labels: list, vectors: list[np.ndarray]) -> list[float]:
        axes = [self.axis(l) for l in labels]
        out = []
        for vec in vectors:
            v = vec.reshape((2,) * len(labels))
            rest = np.tensordot(v.conj(), self.tensor, axes=(list(range(len(labels))), axes))
            out.append(float(np.vdot(rest, rest).real))
        return out

    def project_onto(self, labels: list, vector: np.ndarray):
        """Contract the labeled qubits against a vector, removing them."""
        axes = [self.axis(l) for l in labels]
        v = vector.reshape((2,) * len(labels))
        self.tensor = np.tensordot(v.conj(), self.tensor, axes=(list(range(len(labels))), axes))
        for l in labels:
            self.labels.remove(l)
        self.renormalize()

    def renormalize(self):
        norm = np.linalg.norm(self.tensor)
        if norm < POLICY.zero_prob:
            raise ProtocolError("register state vanished (zero-probability branch)")
        self.tensor = self.tensor / norm

    def pure(self, order: list) -> PureState:
        if sorted(map(str, order)) != sorted(map(str, self.labels)):
            raise ProtocolError("extraction order must cover exactly the register")
        perm = [self.axis(l) for l in order]
        t = np.transpose(self.tensor, perm)
        return qs.make_state(np.ascontiguousarray(t).reshape(-1), normalize=True)


# ---------------------------------------------------------------------------
# assembly and fusion


_BELL_ORDER = [BellKind.PSI_MINUS, BellKind.PSI_PLUS, BellKind.PHI_PLUS, BellKind.PHI_MINUS]


@dataclass(frozen=True)
class PreparedState:
    state: PureState
    realized_graph: SiteGraph
    strategy: str
    seed: int | None
    transcript: tuple[tuple[int, str], ...]
    ht_decoration_sites: tuple[int, ...] = ()


class Assembly:
    """Blocks for every bulk site of a (materialized) graph plus fusion state."""

    def __init__(self, graph: SiteGraph, deform=None):
        self.graph = graph
        self.deform = deform
        self.reg = Register()
        self.ledger = DefectLedger()
        self.transcript: list[tuple[int, str]] = []
        self.fused: set[int] = set()
        self.decorated: dict[int, tuple] = {}  # edge -> scratch labels kept as a spin-1 site
        self._internal = [
            i for i, e in enumerate(graph.edges)
            if graph.vertices[e.u].role == "bulk" and graph.vertices[e.v].role == "bulk"
        ]
        self._build_blocks()

    def _build_blocks(self):
        g = self.graph
        width = sum(2 * g.degree(v) for v in g.bulk_sites())
        if width > POLICY.max_qubits:
            raise ProtocolError(
                f"pre-fusion register needs {width} qubits, above the cap {POLICY.max_qubits}"
            )
        qmap = g.qubit_map()
        for v in g.bulk_sites():
            nbrs = g.neighbors(v)
            z = len(nbrs)
            site_labels = [qmap[v][i] for i in range(z)]
            dangle_labels = []
            for w in nbrs:
                if g.vertices[w].role == "boundary_qubit":
                    dangle_labels.append(qmap[w][0])
                else:
                    eid = g.edge_index(v, w)
                    dangle_labels.append(("d", eid, v))
            prof = resolve_profile(self.deform, z)
            block = reference_block_state(z, prof)
            self.reg.add_block(site_labels + dangle_labels, block.amplitudes)

    def internal_edges(self) -> list[int]:
        return list(self._internal)

    def dangling_pair(self, eid: int) -> tuple:
        e = self.graph.edges[eid]
        return (("d", eid, e.u), ("d", eid, e.v))

    def fuse(self, eid: int, mode: str, rng: np.random.Generator) -> str:
        """Fuse one edge; returns the outcome token (a Bell kind value or A/S)."""
        if eid in self.fused:
            raise ProtocolError(f"edge {eid} already fused")
        if eid not in self._internal:
            raise ProtocolError(f"edge {eid} has no dangling pair to fuse")
        pair = list(self.dangling_pair(eid))
        if mode == "BSM":
            vectors = [k.vector for k in _BELL_ORDER]
            probs = np.array(self.reg.branch_weights(pair, vectors))
            probs = np.clip(probs, 0, None)
            k = int(rng.choice(4, p=probs / probs.sum()))
            kind = _BELL_ORDER[k]
            self.reg.project_onto(pair, vectors[k])
            self.ledger.record(eid, kind.byproduct)
            token = kind.value
        elif mode == "HT":
            psim = BellKind.PSI_MINUS.vector
            p_a = self.reg.branch_weights(pair, [psim])[0]
            if rng.random() < p_a:
                self.reg.project_onto(pair, psim)
                token = "A"
            else:
                proj = np.eye(4, dtype=Complex) - np.outer(psim, psim.conj())
                self.reg.apply(proj, pair, renormalize=True)
                self.decorated[eid] = tuple(pair)
                token = "S"
        else:
            raise ProtocolError(f"unknown fusion mode {mode!r}")
        self.fused.add(eid)
        self.transcript.append((eid, token))
        return token

    def fuse_all(self, mode: str, rng: np.random.Generator):
        for eid in self._internal:
            self.fuse(eid, mode, rng)

    def unfused_pairs(self) -> list[tuple]:
        return [self.dangling_pair(eid) for eid in self._internal if eid not in self.fused]

    def apply_site_pauli(self, site: int, letter: str):
        """sigma_letter on every virtual qubit of a site (the embedded pi rotation),
        or on the bare qubit for a boundary site."""
        g = self.graph
        qmap = g.qubit_map()
        if g.vertices[site].role == "boundary_qubit":
            self.reg.pauli(letter, qmap[site][0])
            return
        for q in qmap[site]:
            self.reg.pauli(letter, q)
        self.ledger.corrections.append((site, letter))

    def assembled_order(self) -> list:
        order: list = list(range(self.graph.total_qubits()))
        for eid in self._internal:
            if eid not in self.fused:
                order.extend(self.dangling_pair(eid))
            elif eid in self.decorated:
                order.extend(self.decorated[eid])
        return order

    def pure(self) -> PureState:
        return self.reg.pure(self.assembled_order())


def assemble_blocks(g: SiteGraph, deform=None) -> PureState:
    """Tensor product of all per-site blocks before any fusion.

    Register order: the graph's virtual qubits in qubit-map order, then the
    two dangling scratch qubits of each internal edge in edge-index order.
    """
    return Assembly(g, deform).pure()


# ---------------------------------------------------------------------------
# tree correction


def correction_plan(g: SiteGraph, ledger: DefectLedger, root: int = 0) -> list[tuple[int, str]]:
    """Site/pauli applications that push every ledger defect out to the leaves.

    Pure ledger computation (no state); mutates the ledger to all-identity.
    Raises CycleError when the graph has a loop.
    """
    if not g.is_tree():
        raise CycleError("defect correction requires an acyclic graph")
    plan: list[tuple[int, str]] = []
    seen = {root}
    order: list[tuple[int, int]] = []  # (parent, child) in BFS order
    queue = [root]
    while queue:
        cur = queue.pop(0)
        for w in g.neighbors(cur):
            if w not in seen:
                seen.add(w)
                order.append((cur, w))
                queue.append(w)
    for parent, child in order:
        eid = g.edge_index(parent, child)
        letter = ledger.letter(eid)
        if letter == "I":
            continue
        plan.append((child, letter))
        ledger.byproducts[eid] = "I"
        for w in g.neighbors(child):
            if w != parent:
                ledger.record(g.edge_index(child, w), letter)
    if not ledger.is_clear():
        raise ProtocolError("ledger not cleared by tree correction (bug)")
    return plan


def correct_tree(asm: Assembly) -> None:
    """Apply the ledger-clearing pi rotations on the assembly state."""
    for site, letter in correction_plan(asm.graph, asm.ledger):
        asm.apply_site_pauli(site, letter)


def correct_tree_state(state: PureState, g: SiteGraph, ledger: DefectLedger) -> PureState:
    """Same correction on a canonical-register state (qubit_map order)."""
    qmap = g.qubit_map()
    for site, letter in correction_plan(g, ledger):
        for q in qmap[site]:
            state = qs.apply_gate(state, qs.PAULI[letter], [q])
    return state


# ---------------------------------------------------------------------------
# ring defect removal


_OUTCOME_KINDS = [BellKind.PHI_PLUS, BellKind.PHI_MINUS, BellKind.PSI_PLUS]
_OUTCOME_NAMES = {BellKind.PHI_PLUS: "x", BellKind.PHI_MINUS: "y", BellKind.PSI_PLUS: "z"}


@dataclass(frozen=True)
class RingRemovalResult:
    state: PureState | None
    final_length: int
    terminated: bool
    outcomes: tuple[str, ...]
    sites_measured: tuple[int, ...]


def consolidate_ring_ledger(state: PureState, g: SiteGraph, ledger: DefectLedger) -> tuple[PureState, str]:
    """Push all ring byproducts onto the seam bond (N-1, 0); returns the net letter.

    The register is the ring's canonical one: site i on qubits (2i, 2i+1).
    """
    n = len(g.vertices)
    for i in range(n - 1):
        eid = g.edge_index(i, i + 1)
        letter = ledger.letter(eid)
        if letter == "I":
            continue
        for q in (2 * (i + 1), 2 * (i + 1) + 1):
            state = qs.apply_gate(state, qs.PAULI[letter], [q])
        ledger.byproducts[eid] = "I"
        nxt = g.edge_index(i + 1, i + 2) if i + 1 < n - 1 else g.edge_index(0, n - 1)
        ledger.record(nxt, letter)
    return state, ledger.letter(g.edge_index(0, n - 1))


def remove_trapped_defect(state: PureState, net: str, rng: np.random.Generator,
                          max_final_length: int | None = None) -> RingRemovalResult:
    """Measure sites off a defected ring until the running Pauli product is I.

    ``state`` is a ring state on 2N qubits (site i at qubits 2i, 2i+1) whose
    net defect ``net`` sits on the (N-1, 0) bond.  Sites are measured in
    increasing id from the defect; outcome x/y/z inserts sigma_y/sigma_x/sigma_z
    on the merged bond (the x and y labels swap Pauli letters, which the
    running product tracks exactly).  Fails when fewer than 2 sites would
    remain before cancellation.
    """
    n = state.num_qubits // 2
    outcomes: list[str] = []
    measured: list[int] = []
    inserted = {"x": "Y", "y": "X", "z": "Z"}
    site = 0
    while net != "I":
        if n - len(measured) <= 2:
            return RingRemovalResult(None, n - len(measured), False,
                                     tuple(outcomes), tuple(measured))
        vectors = [k.vector for k in _OUTCOME_KINDS]
        weights = []
        for vec in vectors:
            w, _ = qs.project_out(state, [0, 1], vec)
            weights.append(w)
        probs = np.clip(np.array(weights), 0, None)
        k = int(rng.choice(3, p=probs / probs.sum()))
        _, state = qs.project_out(state, [0, 1], vectors[k])
        name = _OUTCOME_NAMES[_OUTCOME_KINDS[k]]
        outcomes.append(name)
        measured.append(site)
        site += 1
        net = pauli_mul(net, inserted[name])
    return RingRemovalResult(state, n - len(measured), True, tuple(outcomes), tuple(measured))


# ---------------------------------------------------------------------------
# the orchestrating entry point


def prepare(g: SiteGraph, strategy: str, deform=None, seed: int | None = None,
            rng: np.random.Generator | None = None) -> PreparedState:
    """Assemble, fuse and correct in one deterministic seeded run.

    Strategies: ``BSM_corrected`` (trees only; ledger cleared by pi-rotation
    pushing), ``BSM_randombond`` (ledger folded into realized Bell kinds),
    ``HT_decorated`` (triplet outcomes become spin-1 edge decorations).
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    gm = materialize_decorations(g)
    asm = Assembly(gm, deform)
    mode = "HT" if strategy == "HT_decorated" else "BSM"
    asm.fuse_all(mode, rng)

    if strategy == "BSM_corrected":
        correct_tree(asm)
        realized = _with_bonds(gm, {eid: BellKind.PSI_MINUS for eid in asm.internal_edges()})
        state = asm.reg.pure(list(range(gm.total_qubits())))
        return PreparedState(state, realized, strategy, seed, tuple(asm.transcript))

    if strategy == "BSM_randombond":
        kinds = {eid: BellKind(tok) for eid, tok in asm.transcript}
        realized = _with_bonds(gm, kinds)
        state = asm.reg.pure(list(range(gm.total_qubits())))
        return PreparedState(state, realized, strategy, seed, tuple(asm.transcript))

    if strategy == "HT_decorated":
        decorated = sorted(asm.decorated)
        counts = gm
        from .lattice import decorate  # local import to avoid a cycle at module load

        for eid in decorated:
            counts = decorate(counts, gm.edges[eid].pair, 1)
        realized = materialize_decorations(counts)
        order, ht_sites = _ht_register_order(gm, realized, asm)
        state = asm.reg.pure(order)
        return PreparedState(state, realized, strategy, seed, tuple(asm.transcript),
                             tuple(sorted(ht_sites)))

    raise ProtocolError(f"unknown strategy {strategy!r}")


def _with_bonds(g: SiteGraph, kinds: dict[int, BellKind]) -> SiteGraph:
    edges = []
    for i, e in enumerate(g.edges):
        bond = kinds.get(i, BellKind.PSI_MINUS)
        edges.append(replace(e, bond=bond))
    return SiteGraph(list(g.vertices), edges, dict(g.meta))


def _ht_register_order(gm: SiteGraph, realized: SiteGraph, asm: Assembly) -> tuple[list, list[int]]:
    """Map assembly labels onto the realized (decorated) graph's qubit map.

    New decoration sites have ids past the old register; a leg of an old site
    that now points at one keeps the physical qubit that pointed at the old
    neighbor across it.
    """
    n_old = len(gm.vertices)
    qmap_new = realized.qubit_map()
    order: list = [None] * realized.total_qubits()
    for v in gm.vertices:
        for w, q_new in zip(realized.neighbors(v.id), qmap_new[v.id]):
            if w >= n_old:
                eid = realized.vertices[w].decoration_of
                e = gm.edges[eid]
                old_nbr = e.v if e.u == v.id else e.u
                old_label = gm.leg_qubit(v.id, old_nbr)
            else:
                old_label = gm.leg_qubit(v.id, w)
            order[q_new] = old_label
    ht_sites = []
    for d in range(n_old, len(realized.vertices)):
        eid = realized.vertices[d].decoration_of
        ht_sites.append(d)
        for q_new, nbr in zip(qmap_new[d], realized.neighbors(d)):
            side = nbr if nbr < n_old else None
            if side is None:
                raise ProtocolError("stacked decorations on one edge are unsupported here")
            order[q_new] = ("d", eid, side)
    if any(o is None for o in order):
        raise ProtocolError("register relabeling is incomplete (bug)")
    return order, ht_sites


# ---------------------------------------------------------------------------
# the projector-built oracle


def reference_vbs(g: SiteGraph, deform=None, uniform_sites: frozenset | set = frozenset()) -> PureState:
    """Bell states on every edge, then the (deformed) symmetric projector at
    every bulk site; the canonical qubit_map register.  This is the oracle the
    fusion pipeline is validated against."""
    total = g.total_qubits()
    if total > POLICY.max_qubits:
        raise ProtocolError("reference state exceeds the register cap")
    order: list[int] = []
    amps = np.ones((), dtype=Complex)
    for e in g.edges:
        vec = (e.bond or BellKind.PSI_MINUS).vector
        amps = np.multiply.outer(amps, vec.reshape(2, 2))
        order.extend([g.leg_qubit(e.u, e.v), g.leg_qubit(e.v, e.u)])
    perm = [order.index(q) for q in range(total)]
    state = qs.make_state(np.ascontiguousarray(np.transpose(amps, perm)).reshape(-1))
    qmap = g.qubit_map()
    w_cache: dict[tuple, np.ndarray] = {}
    for v in g.bulk_sites():
        z = g.degree(v)
        prof = (DeformationProfile.uniform(z) if v in uniform_sites
                else resolve_profile(deform, z))
        key = (z, prof.coefficients)
        if key not in w_cache:
            iso = qs.dicke_isometry(z)
            w_cache[key] = iso @ np.diag(prof.coefficients) @ iso.conj().T
        state = qs.apply_operator(state, qs.LinOp(w_cache[key], tuple(qmap[v])))
    return state


def oracle_state(prep: PreparedState, deform=None) -> PureState:
    """Reference VBS for a prepared run (HT decorations stay undeformed)."""
    return reference_vbs(prep.realized_graph, deform,
                         uniform_sites=frozenset(prep.ht_decoration_sites))
