"""Circuit IR and synthesis of the elementary block states.

The block on n virtual qubits (site half) plus n dangling qubits is the
doubled-Dicke state sum_k a_k (-1)^k |D(n,k)> |D(n,n-k)>.  It is synthesized
by the three-stage pipeline: a CRY ladder preparing the sparse superposition
over |0^{n-k} 1^k>, a mirror CNOT fan plus Y layer that duplicates and
reflects it, and two parallel split-and-cyclic-shift Dicke unitaries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import qstate as qs
from .qstate import Complex, PureState

GATE_ARITY = {
    "X": 1, "Y": 1, "Z": 1, "H": 1, "RY": 1,
    "CX": 2, "CZ": 2, "CRY": 2, "SWAP": 2, "CCRY": 3,
}
_PARAMETRIC = {"RY", "CRY", "CCRY"}


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    """One gate: kind, qubits (controls first), optional angle."""

    kind: str
    qubits: tuple[int, ...]
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != GATE_ARITY[self.kind]:
            raise CircuitError(f"{self.kind} takes {GATE_ARITY[self.kind]} qubits")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError("gate qubits must be distinct")
        if (self.kind in _PARAMETRIC) != (self.theta is not None):
            raise CircuitError(f"angle mismatch for {self.kind}")
        if self.theta is not None and not math.isfinite(self.theta):
            raise CircuitError("angle must be finite")


@dataclass
class Circuit:
    num_qubits: int
    gates: list[Gate] = field(default_factory=list)
    label: str = ""

    def add(self, kind: str, *qubits: int, theta: float | None = None) -> "Circuit":
        g = Gate(kind, tuple(qubits), theta)
        if any(q < 0 or q >= self.num_qubits for q in g.qubits):
            raise CircuitError("gate target outside register")
        self.gates.append(g)
        return self


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=Complex)


def gate_matrix(g: Gate) -> np.ndarray:
    if g.kind in ("X", "Y", "Z"):
        return qs.PAULI[g.kind]
    if g.kind == "H":
        return qs.HADAMARD
    if g.kind == "RY":
        return _ry(g.theta)
    if g.kind == "SWAP":
        return np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=Complex)
    if g.kind == "CZ":
        return np.diag([1, 1, 1, -1]).astype(Complex)
    # controlled target gates: controls first, all-ones control block is the tail
    base = qs.PAULI["X"] if g.kind == "CX" else _ry(g.theta)
    dim = 2 ** len(g.qubits)
    m = np.eye(dim, dtype=Complex)
    m[dim - 2:, dim - 2:] = base
    return m


def simulate(circuit: Circuit, initial: PureState | None = None) -> PureState:
    state = initial if initial is not None else qs.zero_state(circuit.num_qubits)
    for g in circuit.gates:
        state = qs.apply_gate(state, gate_matrix(g), list(g.qubits))
    return state


def assemble_unitary(circuit: Circuit) -> np.ndarray:
    """Dense matrix of the whole circuit (small n only; used by tests)."""
    dim = 2**circuit.num_qubits
    u = np.eye(dim, dtype=Complex)
    for col in range(dim):
        state = PureState(circuit.num_qubits, u[:, col].copy())
        u[:, col] = simulate(circuit, state).amplitudes
    return u


# ---------------------------------------------------------------------------
# deformation profiles


@dataclass(frozen=True)
class DeformationProfile:
    """Dicke-basis weights a_0..a_n, nonnegative and normalized to sum a_k^2 = 1."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        a = self.coefficients
        if len(a) < 2:
            raise CircuitError("profile needs at least two coefficients (n >= 1)")
        if any((not math.isfinite(x)) or x < 0 for x in a):
            raise CircuitError("profile coefficients must be finite and nonnegative")
        if all(x == 0 for x in a):
            raise CircuitError("profile must have a nonzero coefficient")
        if abs(sum(x * x for x in a) - 1.0) > 1e-12:
            raise CircuitError("profile is not normalized; use make()")

    @property
    def n(self) -> int:
        return len(self.coefficients) - 1

    @property
    def is_symmetric(self) -> bool:
        a = self.coefficients
        return all(abs(a[k] - a[self.n - k]) < 1e-12 for k in range(len(a)))

    @staticmethod
    def make(raw: list[float], symmetric: bool = True) -> "DeformationProfile":
        norm = math.sqrt(sum(x * x for x in raw))
        if norm == 0:
            raise CircuitError("profile must have a nonzero coefficient")
        prof = DeformationProfile(tuple(x / norm for x in raw))
        if symmetric and not prof.is_symmetric:
            raise CircuitError("profile is not symmetric (a_k != a_{n-k})")
        return prof

    @staticmethod
    def uniform(n: int) -> "DeformationProfile":
        return DeformationProfile.make([1.0] * (n + 1))

    @staticmethod
    def extremal(n: int, a: float) -> "DeformationProfile":
        """The single-parameter family: weight a on the extremal Dicke states.

        For n = 2 this is the 1D deformation (a, 1, a); a = 1 is the AKLT point.
        """
        if a <= 0:
            raise CircuitError("deformation parameter must be positive")
        raw = [1.0] * (n + 1)
        raw[0] = a
        raw[n] = a
        return DeformationProfile.make(raw)


def reference_block_state(n: int, profile: DeformationProfile | None = None) -> PureState:
    """Oracle for the block: sum_k a_k (-1)^k |D(n,k)> |D(n,n-k)> on 2n qubits."""
    if n < 1:
        raise CircuitError("block size n must be >= 1")
    prof = profile if profile is not None else DeformationProfile.uniform(n)
    if prof.n != n:
        raise CircuitError(f"profile has n={prof.n}, expected {n}")
    amps = np.zeros(2 ** (2 * n), dtype=Complex)
    for k, a in enumerate(prof.coefficients):
        if a == 0:
            continue
        amps += a * (-1) ** k * np.kron(qs.dicke_vector(n, k), qs.dicke_vector(n, n - k))
    return qs.make_state(amps, normalize=True)


# ---------------------------------------------------------------------------
# synthesis


def synth_psi_b(profile: DeformationProfile) -> Circuit:
    """4-qubit special-case circuit for the (deformed) spin-1 block.

    Takes the extremal n=2 profile (a, 1, a)/norm; the output state is the
    block in the (3124) qubit relabeling, i.e. proportional to
    |0011>+|0101>+|1010>+|1100> - 2a|0110> - 2a|1001>.
    """
    if profile.n != 2:
        raise CircuitError("synth_psi_b needs an n=2 profile")
    a0, a1, a2 = profile.coefficients
    if a1 <= 0 or abs(a0 - a2) > 1e-12:
        raise CircuitError("n=2 profile must have the extremal form (a, 1, a)")
    a = a0 / a1
    if a <= 0:
        raise CircuitError("deformation parameter must be positive")
    theta1 = 2 * math.acos(math.sqrt(1.0 / (2 + 4 * a * a)))
    theta2 = -2 * math.acos(math.sqrt(4 * a * a / (1 + 4 * a * a)))
    c = Circuit(4, label=f"psi_b(a={a:g})")
    c.add("X", 2)
    c.add("RY", 1, theta=theta1)
    c.add("CRY", 1, 2, theta=theta2)
    c.add("H", 0)
    c.add("CX", 1, 3)
    c.add("CX", 0, 2)
    c.add("CZ", 0, 3)
    c.add("CZ", 1, 2)
    c.add("CX", 0, 1)
    c.add("CX", 2, 3)
    return c


def _scs_angles_ladder(profile: DeformationProfile) -> list[float]:
    """Ladder angles theta_1..theta_n with tail-weight ratios of the profile."""
    a2 = [x * x for x in profile.coefficients]
    n = profile.n
    tail = [0.0] * (n + 2)
    for i in range(n, -1, -1):
        tail[i] = tail[i + 1] + a2[i]
    thetas = [0.0] * (n + 1)  # thetas[m] for m = 1..n
    for m in range(1, n + 1):
        l = n - m
        ratio = tail[l + 1] / tail[l]
        thetas[m] = 2 * math.asin(math.sqrt(min(1.0, max(0.0, ratio))))
    return thetas


def synth_block(n: int, profile: DeformationProfile | None = None) -> Circuit:
    """General 2n-qubit block circuit: CRY ladder, mirror CNOT fan + Y layer,
    then U_D on each half.  Long-range CNOTs are routed with SWAP chains."""
    if n < 1:
        raise CircuitError("block size n must be >= 1")
    prof = profile if profile is not None else DeformationProfile.uniform(n)
    if prof.n != n:
        raise CircuitError(f"profile has n={prof.n}, expected {n}")
    c = Circuit(2 * n, label=f"block(n={n})")
    thetas = _scs_angles_ladder(prof)
    c.add("RY", n - 1, theta=thetas[n])
    for k in range(n, 1, -1):
        c.add("CRY", k - 1, k - 2, theta=thetas[k - 1])
    for i in range(1, n + 1):  # duplicate qubit i onto its mirror 2n+1-i (1-based)
        _routed_cx(c, i - 1, 2 * n - i)
    for q in range(n, 2 * n):
        c.add("Y", q)
    for g in dicke_unitary(n).gates:
        c.gates.append(g)
    for g in dicke_unitary(n).gates:
        c.gates.append(Gate(g.kind, tuple(q + n for q in g.qubits), g.theta))
    return c


def _routed_cx(c: Circuit, control: int, target: int):
    if target == control + 1:
        c.add("CX", control, target)
        return
    for j in range(target, control + 1, -1):
        c.add("SWAP", j - 1, j)
    c.add("CX", control, control + 1)
    for j in range(control + 2, target + 1):
        c.add("SWAP", j - 1, j)


def dicke_unitary(n: int) -> Circuit:
    """Split & Cyclic Shift unitary: maps |0^{n-k} 1^k> to |D(n,k)> for every k.

    O(n^2) gates, O(n) depth; n = 1 is the identity (empty circuit).
    """
    if n < 1:
        raise CircuitError("need n >= 1")
    c = Circuit(n, label=f"dicke_unitary(n={n})")
    for m in range(n, 1, -1):
        for l in range(1, m):
            theta = 2 * math.acos(math.sqrt(l / m))
            if l == 1:
                c.add("CX", m - 2, m - 1)
                c.add("CRY", m - 1, m - 2, theta=theta)
                c.add("CX", m - 2, m - 1)
            else:
                c.add("CX", m - l - 1, m - 1)
                c.add("CCRY", m - 1, m - l, m - l - 1, theta=theta)
                c.add("CX", m - l - 1, m - 1)
    return c


# ---------------------------------------------------------------------------
# export / import


def _decompose_ccry(g: Gate) -> list[Gate]:
    a, b, t = g.qubits
    half = g.theta / 2
    return [
        Gate("CRY", (b, t), half),
        Gate("CX", (a, b)),
        Gate("CRY", (b, t), -half),
        Gate("CX", (a, b)),
        Gate("CRY", (a, t), half),
    ]


def export_circuit(circuit: Circuit, fmt: str = "qasm-like-text") -> str:
    """Serialize a circuit. Text is the flat gate list (CCRY decomposed into
    two-qubit gates); JSON is lossless and round-trips via read_circuit_json."""
    if fmt == "json":
        doc = {
            "schema": "circuit/v1",
            "num_qubits": circuit.num_qubits,
            "label": circuit.label,
            "gates": [
                {"kind": g.kind, "qubits": list(g.qubits)}
                | ({"theta": g.theta} if g.theta is not None else {})
                for g in circuit.gates
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt == "qasm-like-text":
        lines = ["# akltsim circuit/v1"]
        if circuit.label:
            lines.append(f"# label: {circuit.label}")
        lines.append(f"qubits {circuit.num_qubits}")
        for g in circuit.gates:
            for gg in (_decompose_ccry(g) if g.kind == "CCRY" else [g]):
                parts = [gg.kind] + [str(q) for q in gg.qubits]
                if gg.theta is not None:
                    parts.append(repr(gg.theta))
                lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"
    raise CircuitError(f"unknown format {fmt!r}")


def read_circuit_json(text: str) -> Circuit:
    doc = json.loads(text)
    if doc.get("schema") != "circuit/v1":
        raise CircuitError("not a circuit/v1 document")
    c = Circuit(int(doc["num_qubits"]), label=doc.get("label", ""))
    for g in doc["gates"]:
        c.add(g["kind"], *g["qubits"], theta=g.get("theta"))
    return c
