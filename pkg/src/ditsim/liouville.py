"""Lindblad master equation assembly and steady states.

The master equation is
    drho/dt = -i[H, rho] + 2*kappa_me L(a) + 2*gamma L(sigma) + 2*pump L(a^dag)
with L(C) rho = C rho C^dag - (C^dag C rho + rho C^dag C)/2, so photon number
decays at 2*kappa_me and the dot population at 2*gamma.

Superoperators act on column-stacked density matrices: vec(X rho Y) =
(Y^T kron X) vec(rho).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import numerics
from .errors import PositivityViolation, PumpExceedsDecay
from .operators import OperatorSet, SystemParams, build_operators, single_mode_operators

POSITIVITY_TOL = 1e-8
N_MAX_ESCALATION_LIMIT = 9


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stack a matrix."""
    return np.asarray(m, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    """Inverse of vec."""
    return np.asarray(v, dtype=complex).reshape((d, d), order="F")


@dataclass(frozen=True)
class DissipatorSpec:
    """One Lindblad channel: collapse operator with its total weight."""

    collapse: np.ndarray
    weight: float


@dataclass(frozen=True)
class Liouvillian:
    dim: int
    matrix: np.ndarray


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self, positivity_tol: float = POSITIVITY_TOL) -> None:
        m = self.matrix
        if abs(np.trace(m).real - 1.0) > 1e-10 or abs(np.trace(m).imag) > 1e-10:
            raise ValueError(f"trace {np.trace(m)} is not 1")
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        min_eig = float(np.min(np.linalg.eigvalsh(m)))
        if min_eig < -positivity_tol:
            raise PositivityViolation(f"eigenvalue {min_eig:.3e} below -{positivity_tol}")


def dissipator_action(c: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """L(c) applied to rho (unit weight)."""
    c = np.asarray(c, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    cdc = c.conj().T @ c
    return c @ rho @ c.conj().T - 0.5 * (cdc @ rho + rho @ cdc)


def dissipator_matrix(c: np.ndarray) -> np.ndarray:
    """Superoperator matrix of L(c) (unit weight)."""
    c = np.asarray(c, dtype=complex)
    d = c.shape[0]
    eye = np.eye(d, dtype=complex)
    cdc = c.conj().T @ c
    return (
        np.kron(c.conj(), c)
        - 0.5 * np.kron(eye, cdc)
        - 0.5 * np.kron(cdc.T, eye)
    )


def hamiltonian_matrix(h: np.ndarray) -> np.ndarray:
    """Superoperator matrix of rho -> -i[h, rho]."""
    h = np.asarray(h, dtype=complex)
    eye = np.eye(h.shape[0], dtype=complex)
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def liouvillian_from_parts(h: np.ndarray, dissipators: list[DissipatorSpec]) -> Liouvillian:
    d = h.shape[0]
    mat = hamiltonian_matrix(h)
    for spec in dissipators:
        if spec.weight < 0:
            raise ValueError(f"dissipator weight must be >= 0, got {spec.weight}")
        if spec.weight > 0:
            mat = mat + spec.weight * dissipator_matrix(spec.collapse)
    return Liouvillian(dim=d, matrix=mat)


def require_pump_valid(params: SystemParams) -> None:
    if params.pump >= params.kappa_me:
        raise PumpExceedsDecay(
            f"pump {params.pump} >= kappa_me {params.kappa_me}: no stationary state"
        )


def build_liouvillian(
    ops: OperatorSet, params: SystemParams, include_pump: bool = True
) -> Liouvillian:
    """Assemble the full Liouvillian for the coupled system.

    include_pump=False drops the 2*pump L(a^dag) channel (decay-only dynamics,
    used for initial-value emission spectra).
    """
    if include_pump and params.pump > 0:
        require_pump_valid(params)
    dissipators = [
        DissipatorSpec(collapse=ops.a, weight=2.0 * params.kappa_me),
        DissipatorSpec(collapse=ops.sigma, weight=2.0 * params.gamma),
    ]
    if include_pump and params.pump > 0:
        dissipators.append(DissipatorSpec(collapse=ops.a.conj().T, weight=2.0 * params.pump))
    return liouvillian_from_parts(ops.h, dissipators)


def single_mode_liouvillian(kappa: float, pump: float, n_max: int) -> Liouvillian:
    """Pumped lossy cavity without a dot; handy baseline for tests."""
    if pump >= kappa:
        raise PumpExceedsDecay(f"pump {pump} >= kappa {kappa}")
    dim, a = single_mode_operators(n_max)
    h = np.zeros((dim, dim), dtype=complex)
    dissipators = [DissipatorSpec(collapse=a, weight=2.0 * kappa)]
    if pump > 0:
        dissipators.append(DissipatorSpec(collapse=a.conj().T, weight=2.0 * pump))
    return liouvillian_from_parts(h, dissipators)


def steady_state(liou: Liouvillian, trace_row: int = 0) -> DensityMatrix:
    """Trace-one steady state of the Liouvillian.

    Raises DegenerateSteadyState for a non-unique kernel and
    PositivityViolation when an eigenvalue drops below -1e-8.
    """
    v = numerics.null_vector_trace_normalized(liou.matrix, liou.dim, trace_row=trace_row)
    rho = unvec(v, liou.dim)
    min_eig = float(np.min(np.linalg.eigvalsh(rho)))
    if min_eig < -POSITIVITY_TOL:
        raise PositivityViolation(
            f"steady state eigenvalue {min_eig:.3e} below -{POSITIVITY_TOL}"
        )
    return DensityMatrix(matrix=rho)


def steady_state_escalated(
    params: SystemParams, include_pump: bool = True
) -> tuple[OperatorSet, Liouvillian, DensityMatrix]:
    """Steady state with Fock-truncation escalation.

    Starts at params.n_max; on PositivityViolation retries with n_max + 2 up
    to the escalation limit, then re-raises.
    """
    n = params.n_max
    while True:
        trial = params if n == params.n_max else replace(params, n_max=n)
        ops = build_operators(trial)
        liou = build_liouvillian(ops, trial, include_pump=include_pump)
        try:
            return ops, liou, steady_state(liou)
        except PositivityViolation:
            if n + 2 > N_MAX_ESCALATION_LIMIT:
                raise
            n += 2


def expectation(rho: DensityMatrix | np.ndarray, a: np.ndarray) -> complex:
    """Tr(rho A)."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    return complex(np.trace(m @ np.asarray(a, dtype=complex)))
