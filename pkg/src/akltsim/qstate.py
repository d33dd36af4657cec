"""Dense statevector engine.

Conventions (used by every module in this package):
  - qubit 0 is the most significant bit of the amplitude index, so
    ``state.amplitudes.reshape([2]*n)`` has axis q = qubit q;
  - multi-qubit operator matrices index their targets in the same order
    (targets[0] is the most significant bit of the matrix index);
  - RY(theta) = exp(-i theta Y / 2);
  - global phase is never asserted anywhere, comparisons go through
    :func:`fidelity`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import POLICY

Complex = np.complex128

# single-qubit constants
PAULI = {
    "I": np.eye(2, dtype=Complex),
    "X": np.array([[0, 1], [1, 0]], dtype=Complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=Complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=Complex),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=Complex) / math.sqrt(2)

# Bell vectors in the (q0, q1) big-endian basis 00,01,10,11.
BELL_VECTORS = {
    "phi+": np.array([1, 0, 0, 1], dtype=Complex) / math.sqrt(2),
    "phi-": np.array([1, 0, 0, -1], dtype=Complex) / math.sqrt(2),
    "psi+": np.array([0, 1, 1, 0], dtype=Complex) / math.sqrt(2),
    "psi-": np.array([0, 1, -1, 0], dtype=Complex) / math.sqrt(2),
}


class SimulationError(RuntimeError):
    """Raised on contract violations inside the statevector engine."""


@dataclass(frozen=True)
class PureState:
    """Normalized state over ``num_qubits`` qubits (qubit 0 = MSB)."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 0 or self.num_qubits > POLICY.max_qubits:
            raise SimulationError(
                f"qubit count {self.num_qubits} outside [0, {POLICY.max_qubits}]"
            )
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise SimulationError("amplitude array has wrong length")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-9:
            raise SimulationError(f"state norm {norm} is not 1")

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape([2] * self.num_qubits)

    def permuted(self, order: list[int]) -> "PureState":
        """Relabel so that new qubit i is old qubit order[i]."""
        if sorted(order) != list(range(self.num_qubits)):
            raise SimulationError("permutation must touch every qubit once")
        t = np.transpose(self.tensor(), order)
        return PureState(self.num_qubits, np.ascontiguousarray(t).reshape(-1))


@dataclass(frozen=True)
class LinOp:
    """Dense square operator, optionally tagged with the qubits it acts on."""

    matrix: np.ndarray
    support: tuple[int, ...] | None = None

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise SimulationError("operator matrix must be square")
        if self.support is not None and 2 ** len(self.support) != m.shape[0]:
            raise SimulationError("support size inconsistent with dimension")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class MeasurementRecord:
    outcome_index: int
    probability: float
    post_state: PureState


def make_state(amplitudes: np.ndarray, normalize: bool = False) -> PureState:
    amps = np.asarray(amplitudes, dtype=Complex).reshape(-1)
    n = int(round(math.log2(amps.size)))
    if 2**n != amps.size:
        raise SimulationError("amplitude length is not a power of two")
    if normalize:
        norm = np.linalg.norm(amps)
        if norm < POLICY.zero_prob:
            raise SimulationError("cannot normalize a (numerically) zero vector")
        amps = amps / norm
    return PureState(n, amps)


def zero_state(num_qubits: int) -> PureState:
    amps = np.zeros(2**num_qubits, dtype=Complex)
    amps[0] = 1.0
    return PureState(num_qubits, amps)


def basis_state(bits: str) -> PureState:
    n = len(bits)
    amps = np.zeros(2**n, dtype=Complex)
    amps[int(bits, 2)] = 1.0
    return PureState(n, amps)


def _apply_matrix(tensor: np.ndarray, matrix: np.ndarray, targets: list[int], n: int) -> np.ndarray:
    """Contract ``matrix`` (2^k x 2^k) onto the target axes of an n-axis tensor."""
    k = len(targets)
    gate = matrix.reshape([2] * (2 * k))
    out = np.tensordot(gate, tensor, axes=(list(range(k, 2 * k)), targets))
    # out has target axes first (in gate order); move them back
    rest = [q for q in range(n) if q not in targets]
    dest = [0] * n
    for i, q in enumerate(targets):
        dest[q] = i
    for i, q in enumerate(rest):
        dest[q] = k + i
    return np.transpose(out, dest)


def apply_operator(state: PureState, op: LinOp | np.ndarray, targets: list[int] | None = None) -> PureState:
    """Apply an arbitrary (not necessarily unitary) operator and renormalize.

    Chaining projectors this way yields the same state as projecting once and
    renormalizing at the end; raises if the operator annihilates the state.
    """
    matrix, targets = _resolve(op, targets)
    _check_targets(state, targets, matrix)
    out = _apply_matrix(state.tensor(), matrix, targets, state.num_qubits).reshape(-1)
    norm = np.linalg.norm(out)
    if norm < POLICY.zero_prob:
        raise SimulationError("operator annihilated the state")
    return PureState(state.num_qubits, np.ascontiguousarray(out / norm))


def apply_gate(state: PureState, gate: LinOp | np.ndarray, targets: list[int] | None = None) -> PureState:
    """Apply a unitary gate. Raises if the matrix is not unitary within tolerance."""
    matrix, targets = _resolve(gate, targets)
    dim = matrix.shape[0]
    if not np.allclose(matrix.conj().T @ matrix, np.eye(dim), atol=POLICY.unitary_atol):
        raise SimulationError("gate is not unitary within tolerance")
    _check_targets(state, targets, matrix)
    out = _apply_matrix(state.tensor(), matrix, targets, state.num_qubits).reshape(-1)
    return PureState(state.num_qubits, np.ascontiguousarray(out))


def _resolve(op: LinOp | np.ndarray, targets: list[int] | None) -> tuple[np.ndarray, list[int]]:
    if isinstance(op, LinOp):
        matrix = op.matrix
        if targets is None:
            if op.support is None:
                raise SimulationError("no targets given and operator has no support")
            targets = list(op.support)
    else:
        matrix = np.asarray(op, dtype=Complex)
        if targets is None:
            raise SimulationError("targets required for a bare matrix")
    return matrix, list(targets)


def _check_targets(state: PureState, targets: list[int], matrix: np.ndarray):
    if len(set(targets)) != len(targets):
        raise SimulationError("duplicate target qubits")
    if any(t < 0 or t >= state.num_qubits for t in targets):
        raise SimulationError("target qubit out of range")
    if matrix.shape[0] != 2 ** len(targets):
        raise SimulationError("matrix dimension does not match target count")


def measure(state: PureState, projectors: list[LinOp], rng: np.random.Generator,
            forced_outcome: int | None = None) -> MeasurementRecord:
    """Projective measurement over an explicit, complete projector list.

    Projectors must share a support, be Hermitian and idempotent, and sum to
    the identity on that support. ``forced_outcome`` replays a known outcome
    deterministically (error if its probability is below the zero threshold).
    """
    if not projectors:
        raise SimulationError("empty projector list")
    support = projectors[0].support
    if support is None:
        raise SimulationError("projectors need an explicit support")
    dim = 2 ** len(support)
    total = np.zeros((dim, dim), dtype=Complex)
    for p in projectors:
        if p.support != support:
            raise SimulationError("projectors must share a support")
        m = p.matrix
        if not np.allclose(m, m.conj().T, atol=POLICY.projector_atol):
            raise SimulationError("projector is not Hermitian")
        if not np.allclose(m @ m, m, atol=POLICY.projector_atol):
            raise SimulationError("projector is not idempotent")
        total += m
    if not np.allclose(total, np.eye(dim), atol=POLICY.completeness_atol):
        raise SimulationError("projectors do not sum to identity on the support")

    branches = [
        _apply_matrix(state.tensor(), p.matrix, list(support), state.num_qubits).reshape(-1)
        for p in projectors
    ]
    probs = np.array([float(np.vdot(b, b).real) for b in branches])
    probs = np.clip(probs, 0.0, None)
    if forced_outcome is not None:
        k = forced_outcome
        if k < 0 or k >= len(projectors) or probs[k] < POLICY.zero_prob:
            raise SimulationError("forced outcome has (numerically) zero probability")
    else:
        k = int(rng.choice(len(projectors), p=probs / probs.sum()))
    post = PureState(state.num_qubits, np.ascontiguousarray(branches[k] / math.sqrt(probs[k])))
    return MeasurementRecord(k, float(probs[k]), post)


def sample_kraus(state: PureState, ops: list[LinOp], rng: np.random.Generator,
                 normalize_probs: bool = True) -> MeasurementRecord:
    """Generalized measurement with Kraus operators; probability = ||K psi||^2.

    Probabilities are renormalized when the operator set is not exactly
    complete (used for the spin-2 POVM boundary, where completeness fails).
    """
    branches = []
    probs = []
    for op in ops:
        b = _apply_matrix(state.tensor(), op.matrix, list(op.support), state.num_qubits).reshape(-1)
        branches.append(b)
        probs.append(float(np.vdot(b, b).real))
    probs = np.clip(np.array(probs), 0.0, None)
    total = probs.sum()
    if total < POLICY.zero_prob:
        raise SimulationError("all Kraus branches have zero weight (upstream bug?)")
    p = probs / total if normalize_probs else probs
    k = int(rng.choice(len(ops), p=p / p.sum()))
    post = PureState(state.num_qubits, np.ascontiguousarray(branches[k] / math.sqrt(probs[k])))
    return MeasurementRecord(k, float(probs[k]), post)


def project_out(state: PureState, qubits: list[int], vec: np.ndarray) -> tuple[float, PureState | None]:
    """Contract ``qubits`` against a fixed vector, removing them from the register.

    Returns (weight, remaining state) where weight = ||<vec| psi>||^2; the
    remaining state is None when the weight is numerically zero. Remaining
    qubits keep their relative order.
    """
    k = len(qubits)
    v = np.asarray(vec, dtype=Complex).reshape([2] * k)
    out = np.tensordot(v.conj(), state.tensor(), axes=(list(range(k)), qubits))
    out = out.reshape(-1)
    weight = float(np.vdot(out, out).real)
    if weight < POLICY.zero_prob:
        return weight, None
    rest = PureState(state.num_qubits - k, np.ascontiguousarray(out / math.sqrt(weight)))
    return weight, rest


def reduced_density(state: PureState, keep: list[int]) -> LinOp:
    """Partial trace onto ``keep`` (row/column order follows the keep list)."""
    if not keep:
        raise SimulationError("keep list must be nonempty")
    _check_targets(state, list(keep), np.eye(2 ** len(keep)))
    n = state.num_qubits
    rest = [q for q in range(n) if q not in keep]
    t = np.transpose(state.tensor(), list(keep) + rest).reshape(2 ** len(keep), -1)
    rho = t @ t.conj().T
    return LinOp(rho, tuple(keep))


def expectation(state: PureState, op: LinOp) -> complex:
    phi = _apply_matrix(state.tensor(), op.matrix, list(op.support), state.num_qubits)
    return complex(np.vdot(state.amplitudes, phi.reshape(-1)))


def fidelity(a: PureState, b: PureState) -> float:
    if a.num_qubits != b.num_qubits:
        raise SimulationError("states have different register sizes")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


# ---------------------------------------------------------------------------
# symmetric subspace, Dicke states, spin embedding


def dicke_vector(n: int, k: int) -> np.ndarray:
    """|D(n,k)>: equal superposition of all weight-k basis strings."""
    if not (0 <= k <= n):
        raise SimulationError("need 0 <= k <= n")
    v = np.zeros(2**n, dtype=Complex)
    for idx in range(2**n):
        if bin(idx).count("1") == k:
            v[idx] = 1.0
    return v / np.linalg.norm(v)


def dicke_isometry(n: int) -> np.ndarray:
    """2^n x (n+1) isometry whose column k is |D(n,k)> (physical m = n/2 - k)."""
    return np.stack([dicke_vector(n, k) for k in range(n + 1)], axis=1)


def symmetric_projector(n: int) -> np.ndarray:
    d = dicke_isometry(n)
    return d @ d.conj().T


def spin_matrices(spin: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Sx, Sy, Sz) for a spin-S entity in the basis m = S, S-1, ..., -S."""
    dim = int(round(2 * spin)) + 1
    m = spin - np.arange(dim)
    sz = np.diag(m).astype(Complex)
    # <m+1| S+ |m> = sqrt(S(S+1) - m(m+1))
    sp = np.zeros((dim, dim), dtype=Complex)
    for i in range(1, dim):
        mm = m[i]
        sp[i - 1, i] = math.sqrt(spin * (spin + 1) - mm * (mm + 1))
    sm = sp.conj().T
    sx = (sp + sm) / 2
    sy = (sp - sm) / (2j)
    return sx, sy, sz


def pi_rotation(spin: float, axis: str) -> np.ndarray:
    """exp(i pi S_axis) on the (2S+1)-dimensional physical space."""
    sx, sy, sz = spin_matrices(spin)
    s = {"x": sx, "y": sy, "z": sz}[axis]
    vals, vecs = np.linalg.eigh(s)
    return (vecs * np.exp(1j * math.pi * vals)) @ vecs.conj().T


def spin_embed(spin: float, physical_op: LinOp | np.ndarray) -> LinOp:
    """Pull a (2S+1)-dim physical operator back to the 2S virtual qubits.

    Returns Vt^dagger O Vt where Vt maps |D(2S,k)> to |S, S-k>; the physical
    identity maps to the symmetric-subspace projector.
    """
    op = physical_op.matrix if isinstance(physical_op, LinOp) else np.asarray(physical_op, dtype=Complex)
    n = int(round(2 * spin))
    if op.shape != (n + 1, n + 1):
        raise SimulationError(f"expected a {n + 1}-dimensional physical operator")
    d = dicke_isometry(n)
    return LinOp(d @ op @ d.conj().T)


def axis_qubit_basis(axis: str) -> tuple[np.ndarray, np.ndarray]:
    """(+1, -1) eigenvectors of the single-qubit Pauli along ``axis``."""
    if axis == "z":
        return (np.array([1, 0], dtype=Complex), np.array([0, 1], dtype=Complex))
    if axis == "x":
        s = 1 / math.sqrt(2)
        return (np.array([s, s], dtype=Complex), np.array([s, -s], dtype=Complex))
    if axis == "y":
        s = 1 / math.sqrt(2)
        return (np.array([s, 1j * s], dtype=Complex), np.array([s, -1j * s], dtype=Complex))
    raise SimulationError(f"unknown axis {axis!r}")


def kron_all(vectors: list[np.ndarray]) -> np.ndarray:
    out = np.array([1.0], dtype=Complex)
    for v in vectors:
        out = np.kron(out, v)
    return out
