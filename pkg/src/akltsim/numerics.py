"""Global numeric policy: tolerances and register caps used across the package."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class NumericPolicy:
    """Single source of truth for numeric tolerances.

    All checks in the package read from the module-level ``POLICY`` instance,
    so tightening or loosening a tolerance is a one-line change.
    """

    norm_atol: float = 1e-12          # state norms after public operations
    unitary_atol: float = 1e-10       # gate unitarity
    projector_atol: float = 1e-10     # Hermiticity / idempotency of projectors
    completeness_atol: float = 1e-10  # POVM / projector completeness
    stabilizer_atol: float = 1e-8     # stabilizer expectation vs +1
    zero_prob: float = 1e-12          # outcomes below this are treated as impossible
    max_qubits: int = 26              # dense statevector cap (~1 GiB of complex128)


POLICY = NumericPolicy()
