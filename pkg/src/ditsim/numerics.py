"""Dense complex linear algebra used by the master-equation layers.

Solves are LU-based with partial pivoting (LAPACK via scipy) plus an explicit
pivot-magnitude singularity check and one step of iterative refinement, so the
residual contract holds without giving up LAPACK speed on the d^2 x d^2
Liouvillian systems.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import DegenerateSteadyState, SingularMatrix

# Pivot magnitudes below this fraction of the largest initial row norm are
# treated as exact singularity.
PIVOT_RTOL = 1e-13
RESIDUAL_RTOL = 1e-10
STEADY_STATE_RESIDUAL_TOL = 1e-9


def _as_square_complex(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(float))):
        raise ValueError("matrix contains non-finite entries")
    return a


def solve_dense(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b for a dense complex square system.

    Raises SingularMatrix when an LU pivot falls below
    PIVOT_RTOL * (largest Euclidean row norm of a).  One refinement step is
    applied if the first solution's residual exceeds the residual tolerance.
    """
    a = _as_square_complex(a)
    b = np.asarray(b, dtype=complex)
    if b.shape != (a.shape[0],):
        raise ValueError(f"rhs shape {b.shape} does not match matrix {a.shape}")
    if not np.all(np.isfinite(b.view(float))):
        raise ValueError("rhs contains non-finite entries")

    row_scale = float(np.max(np.linalg.norm(a, axis=1))) if a.size else 0.0
    if row_scale == 0.0:
        raise SingularMatrix("zero matrix")
    with warnings.catch_warnings():
        # scipy warns on exactly-zero pivots; the explicit check below raises.
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(a, check_finite=False)
    pivots = np.abs(np.diagonal(lu))
    if np.min(pivots) < PIVOT_RTOL * row_scale:
        raise SingularMatrix(
            f"pivot {np.min(pivots):.3e} below tolerance {PIVOT_RTOL * row_scale:.3e}"
        )
    x = lu_solve((lu, piv), b, check_finite=False)
    tol = RESIDUAL_RTOL * max(1.0, float(np.max(np.abs(b))))
    resid = b - a @ x
    if float(np.max(np.abs(resid))) > tol:
        x = x + lu_solve((lu, piv), resid, check_finite=False)
    return x


def residual_inf(a: np.ndarray, x: np.ndarray, b: np.ndarray) -> float:
    """Max-norm residual ||a x - b||_inf."""
    return float(np.max(np.abs(a @ x - b)))


def trace_functional_row(d: int) -> np.ndarray:
    """Row vector t with t . vec(rho) = Tr(rho) for column-stacked vec."""
    row = np.zeros(d * d, dtype=complex)
    row[(np.arange(d) * d) + np.arange(d)] = 1.0
    return row


def null_vector_trace_normalized(
    l: np.ndarray, d: int, trace_row: int = 0
) -> np.ndarray:
    """Unique kernel vector of a Liouvillian, normalized to unit trace.

    Parameters
    ----------
    l : (d*d, d*d) complex ndarray
        Liouvillian matrix acting on column-stacked density matrices.
    d : int
        Hilbert-space dimension.
    trace_row : int
        Index of the row replaced by the trace functional.  Any row whose
        equation the trace constraint can stand in for works, and the result
        does not depend on the choice beyond roundoff.  For generators whose
        coherence sectors decouple from the populations, only rows holding a
        population equation (vec index j*d + j) qualify; other choices leave
        the system singular and raise.

    Returns
    -------
    (d*d,) complex ndarray: vec of the Hermitized, trace-one steady state.

    Raises DegenerateSteadyState when the modified system is singular or the
    kernel residual exceeds the steady-state tolerance (non-unique kernel).
    """
    l = _as_square_complex(l)
    if l.shape != (d * d, d * d):
        raise ValueError(f"Liouvillian shape {l.shape} does not match d={d}")
    if not 0 <= trace_row < d * d:
        raise ValueError(f"trace_row {trace_row} out of range")

    modified = l.copy()
    modified[trace_row, :] = trace_functional_row(d)
    rhs = np.zeros(d * d, dtype=complex)
    rhs[trace_row] = 1.0
    try:
        vec = solve_dense(modified, rhs)
    except SingularMatrix as exc:
        raise DegenerateSteadyState(f"modified system singular: {exc}") from exc

    rho = vec.reshape((d, d), order="F")
    rho = 0.5 * (rho + rho.conj().T)
    tr = float(np.trace(rho).real)
    if tr <= 0.0:
        raise DegenerateSteadyState(f"non-positive trace {tr:.3e} after Hermitization")
    rho = rho / tr
    vec = rho.reshape(-1, order="F")
    resid = float(np.max(np.abs(l @ vec)))
    if resid > STEADY_STATE_RESIDUAL_TOL * max(1.0, float(np.max(np.abs(l)))):
        raise DegenerateSteadyState(
            f"kernel residual {resid:.3e} exceeds tolerance; kernel may be degenerate"
        )
    return vec
