"""Independent 1D oracle: deformed AKLT matrix-product tensors.

Everything here is derived from the 2x2 site matrices

    A_{+1} = -a c sigma^-,   A_0 = c sigma_z / sqrt(2),   A_{-1} = a c sigma^+,

with c = sqrt(2/(1+2a^2)).  Small chains and rings are contracted exactly and
embedded into the virtual-qubit register through the symmetric isometry, so
this module provides a route to the same states that is fully independent of
the projector/fusion construction in :mod:`akltsim.protocol`.  (The two agree
up to the usual gauge freedom; rings built here match the projector-built
ones exactly up to global phase, since the gauge is a sigma_y conjugation
that cancels under the trace.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qstate as qs
from .qstate import Complex, LinOp, PureState


class MpsError(ValueError):
    pass


_SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=Complex)
_SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=Complex)


@dataclass(frozen=True)
class MpsTensor:
    """Deformed spin-1 AKLT site tensor; physical index order (+1, 0, -1)."""

    a: float = 1.0

    def __post_init__(self):
        if self.a <= 0 or not math.isfinite(self.a):
            raise MpsError("deformation parameter must be positive and finite")

    def matrices(self) -> list[np.ndarray]:
        c = math.sqrt(2.0 / (1.0 + 2.0 * self.a**2))
        return [
            -self.a * c * _SIGMA_MINUS,
            c * qs.PAULI["Z"] / math.sqrt(2),
            self.a * c * _SIGMA_PLUS,
        ]


@dataclass(frozen=True)
class BondDefect:
    """An SU(2) bond insertion; Pauli defects are embedded as i*sigma."""

    matrix: np.ndarray

    def __post_init__(self):
        v = self.matrix
        if v.shape != (2, 2):
            raise MpsError("defect must be a 2x2 matrix")
        if abs(np.linalg.det(v) - 1.0) > 1e-12:
            raise MpsError("defect must have determinant 1")

    @staticmethod
    def identity() -> "BondDefect":
        return BondDefect(np.eye(2, dtype=Complex))

    @staticmethod
    def pauli(letter: str) -> "BondDefect":
        if letter == "I":
            return BondDefect.identity()
        return BondDefect(1j * qs.PAULI[letter])

    @property
    def alpha(self) -> complex:
        return complex(self.matrix[0, 0])

    @property
    def beta(self) -> complex:
        return complex(self.matrix[0, 1])


# ---------------------------------------------------------------------------
# transfer matrices and string order


def _transfer(a: float, op: np.ndarray | None = None) -> np.ndarray:
    """sum_{ij} op_{ij} A_i (x) A_j^*  (op = identity when omitted)."""
    mats = MpsTensor(a).matrices()
    o = np.eye(3, dtype=Complex) if op is None else op
    out = np.zeros((4, 4), dtype=Complex)
    for i in range(3):
        for j in range(3):
            if o[i, j] != 0:
                out += o[i, j] * np.kron(mats[i], mats[j].conj())
    return out


def environment() -> np.ndarray:
    """Infinite-ring environment: the projector onto the leading eigenvector."""
    m = np.zeros((4, 4), dtype=Complex)
    m[0, 0] = m[0, 3] = m[3, 0] = m[3, 3] = 0.5
    return m


def string_order_tm(a: float, r: int, axis: str = "z") -> float:
    """String order over distance r from the transfer-matrix contraction."""
    if a <= 0:
        raise MpsError("deformation parameter must be positive")
    if r < 2:
        raise MpsError("string order needs r >= 2")
    sx, sy, sz = qs.spin_matrices(1)
    s_op = {"x": sx, "y": sy, "z": sz}[axis]
    u_op = qs.pi_rotation(1, axis)
    m = _transfer(a)
    m_s = _transfer(a, s_op)
    m_u = _transfer(a, u_op)
    env = environment()
    num = -np.trace(env @ m_s @ np.linalg.matrix_power(m_u, r - 2) @ m_s)
    den = np.trace(env @ np.linalg.matrix_power(m, r))
    return float((num / den).real)


def string_order_closed(a: float) -> float:
    """Closed form 4 a^4 / (1 + 2 a^2)^2 (equal along all three axes)."""
    if a <= 0:
        raise MpsError("deformation parameter must be positive")
    return 4.0 * a**4 / (1.0 + 2.0 * a**2) ** 2


def string_order_finite_ring(a: float, n: int, r: int, axis: str = "z") -> float:
    """Exact finite-N ring value (full trace instead of the environment)."""
    if r < 2 or r >= n:
        raise MpsError("need 2 <= r < N on a ring")
    sx, sy, sz = qs.spin_matrices(1)
    s_op = {"x": sx, "y": sy, "z": sz}[axis]
    u_op = qs.pi_rotation(1, axis)
    m = _transfer(a)
    m_s = _transfer(a, s_op)
    m_u = _transfer(a, u_op)
    num = -np.trace(np.linalg.matrix_power(m, n - r - 1) @ m_s
                    @ np.linalg.matrix_power(m_u, r - 1) @ m_s)
    den = np.trace(np.linalg.matrix_power(m, n))
    return float((num / den).real)


# ---------------------------------------------------------------------------
# exact small states in the virtual-qubit register


def _embed_physical(phys: np.ndarray, lead_qubits: int = 0) -> PureState:
    """Map physical spin-1 indices to virtual qubit pairs via the symmetric
    isometry; leading/trailing qubit axes (open-chain edge qubits) pass through."""
    w = qs.dicke_isometry(2)  # 4 x 3, |m=+1,0,-1> -> 2 qubits
    t = phys
    n_sites = t.ndim - lead_qubits
    for i in range(n_sites):
        # contract the first remaining physical axis, append a 4-dim axis
        t = np.tensordot(t, w, axes=([lead_qubits], [1]))
    out = t.reshape(-1)
    return qs.make_state(out, normalize=True)


def exact_chain_state(n: int, boundary: str = "ring",
                      defect: BondDefect | None = None, a: float = 1.0) -> PureState:
    """Exact (deformed) AKLT chain or ring in the virtual-qubit picture.

    Ring register: site i occupies qubits (2i, 2i+1); the defect V is inserted
    on the bond between site N-1 and site 0.  Open chains carry one edge qubit
    on each end (register: [left qubit, site qubits..., right qubit]) and do
    not take a defect.
    """
    if n < 1:
        raise MpsError("need at least one site")
    if 2 * n + (2 if boundary == "open" else 0) > qs.POLICY.max_qubits:
        raise MpsError("chain exceeds the register cap")
    mats = MpsTensor(a).matrices()
    if boundary == "ring":
        if n < 2:
            raise MpsError("ring needs at least two sites")
        v = (defect or BondDefect.identity()).matrix
        phys = np.zeros((3,) * n, dtype=Complex)
        for idx in np.ndindex(*(3,) * n):
            m = v
            for s in idx:
                m = m @ mats[s]
            phys[idx] = np.trace(m)
        return _embed_physical(phys)
    if boundary == "open":
        if defect is not None:
            raise MpsError("defects are a ring feature")
        eps = np.array([[0, 1], [-1, 0]], dtype=Complex)
        ts = [qs.PAULI["Y"] @ m @ qs.PAULI["Y"] for m in mats]  # gauge to VBS form
        phys = np.zeros((2,) + (3,) * n + (2,), dtype=Complex)
        for idx in np.ndindex(*(3,) * n):
            m = eps.copy()
            for s in idx:
                m = m @ ts[s]
            phys[(slice(None),) + idx + (slice(None),)] = m
        # axes are (qL, s1..sN, qR); embed sites, keeping qL in front
        w = qs.dicke_isometry(2)
        t = phys
        for i in range(n):
            t = np.tensordot(t, w, axes=([1], [1]))
        # axes now (qL, qR, site1(4), ..., siteN(4)); reorder
        t = np.moveaxis(t, 1, -1)
        return qs.make_state(t.reshape(-1), normalize=True)
    raise MpsError(f"unknown boundary {boundary!r}")


def ring_site_qubits(site: int) -> tuple[int, int]:
    return (2 * site, 2 * site + 1)


def defect_rdm_closed(n: int, defect: BondDefect) -> LinOp:
    """Closed-form site-1 density matrix of a defected ring (undeformed),
    in the physical basis (+1, 0, -1), normalized to trace 1."""
    if n < 2:
        raise MpsError("need at least two sites")
    q = (-1.0 / 3.0) ** (n - 1)
    al, be = defect.alpha, defect.beta
    im_a = al.imag
    rho = np.array(
        [
            [(1 - q) / 2 + q * abs(be) ** 2,
             1j * math.sqrt(2) * q * be * im_a,
             q * be**2],
            [-1j * math.sqrt(2) * q * np.conj(be) * im_a,
             (1 + q) / 2 - q * abs(be) ** 2 - q * (al**2).real,
             -1j * math.sqrt(2) * q * be * im_a],
            [q * np.conj(be) ** 2,
             1j * math.sqrt(2) * q * np.conj(be) * im_a,
             (1 - q) / 2 + q * abs(be) ** 2],
        ],
        dtype=Complex,
    )
    return LinOp(rho / np.trace(rho))


def rdm_virtual_to_physical(rho_virtual: np.ndarray) -> np.ndarray:
    """Bridge a 4x4 two-virtual-qubit density matrix to the 3x3 spin-1 basis."""
    w = qs.dicke_isometry(2)
    return w.conj().T @ rho_virtual @ w
