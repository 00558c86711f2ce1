"""System parameters and operators for the coupled cavity / two-level-dot model.

Unit convention: all rates are quoted in units of the dot's radiative decay
gamma (gamma = 1 by default).  The cavity field decay entering the master
equation is kappa_me = Gamma_total = kappa0/2 + kappa1, where kappa0 is the
intrinsic (side-leak) rate and kappa1 the external (mirror) rate of the
transmission model; photon number then decays at 2*kappa_me.

Basis ordering of the composite space is photon-number major, dot-state
minor: index = 2*n + s with s = 0 (ground) or 1 (excited).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of one simulation point (rates in units of gamma).

    Attributes
    ----------
    gamma : dot amplitude decay rate (> 0; sets the unit scale).
    kappa0 : intrinsic cavity photon loss rate.
    kappa1 : external cavity coupling rate (the transmission port).
    g : cavity-dot coupling rate.
    delta : dot-cavity detuning (omega_dot - omega_cav).
    pump : incoherent cavity pump rate P_a.
    n_max : Fock-space truncation (photon numbers 0..n_max).
    kappa_me_override : explicit master-equation cavity decay; None keeps the
        identification kappa_me = Gamma_total.
    """

    gamma: float = 1.0
    kappa0: float = 0.0
    kappa1: float = 0.0
    g: float = 0.0
    delta: float = 0.0
    pump: float = 0.0
    n_max: int = 5
    kappa_me_override: float | None = None

    def __post_init__(self):
        for name in ("gamma", "kappa0", "kappa1", "g", "delta", "pump"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        for name in ("kappa0", "kappa1", "g", "pump"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if self.kappa_me_override is not None and (
            not np.isfinite(self.kappa_me_override) or self.kappa_me_override < 0
        ):
            raise ValueError(f"kappa_me_override must be >= 0, got {self.kappa_me_override}")

    @property
    def gamma_total(self) -> float:
        """Total cavity field decay rate Gamma = kappa0/2 + kappa1."""
        return 0.5 * self.kappa0 + self.kappa1

    @property
    def kappa_me(self) -> float:
        """Cavity decay rate used by the master equation."""
        if self.kappa_me_override is not None:
            return self.kappa_me_override
        return self.gamma_total

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)

    @classmethod
    def from_gamma_total(
        cls,
        gamma_total: float,
        *,
        g: float = 0.0,
        delta: float = 0.0,
        pump: float = 0.0,
        gamma: float = 1.0,
        kappa0: float = 0.0,
        n_max: int = 5,
    ) -> "SystemParams":
        """Build params from a target Gamma_total, defaulting to a pure external port."""
        kappa1 = gamma_total - 0.5 * kappa0
        if kappa1 < 0:
            raise ValueError(
                f"gamma_total {gamma_total} smaller than kappa0/2 = {0.5 * kappa0}"
            )
        return cls(
            gamma=gamma,
            kappa0=kappa0,
            kappa1=kappa1,
            g=g,
            delta=delta,
            pump=pump,
            n_max=n_max,
        )


@dataclass(frozen=True)
class OperatorSet:
    """Dense operators on the composite truncated space (do not mutate)."""

    dim: int
    a: np.ndarray
    sigma: np.ndarray
    h: np.ndarray


def basis_index(n: int, excited: bool) -> int:
    """Composite basis index of |n photons, dot state>."""
    if n < 0:
        raise ValueError("photon number must be >= 0")
    return 2 * n + (1 if excited else 0)


def basis_state(index: int) -> tuple[int, bool]:
    """Inverse of basis_index."""
    if index < 0:
        raise ValueError("index must be >= 0")
    return index // 2, bool(index % 2)


def single_mode_operators(n_max: int) -> tuple[int, np.ndarray]:
    """(dim, annihilation operator) for a lone cavity mode truncated at n_max."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    dim = n_max + 1
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    return dim, a


def build_operators(params: SystemParams) -> OperatorSet:
    """Annihilation, dot lowering, and Hamiltonian operators for params.

    The frame rotates at the cavity frequency, so the cavity term drops and
    the dot term carries the detuning:
        H = delta * sigma^dag sigma - i g sigma^dag a + i g a^dag sigma.
    """
    _, a_fock = single_mode_operators(params.n_max)
    eye2 = np.eye(2, dtype=complex)
    eye_fock = np.eye(params.n_max + 1, dtype=complex)
    sigma_lower = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)

    a = np.kron(a_fock, eye2)
    sigma = np.kron(eye_fock, sigma_lower)
    h = (
        params.delta * (sigma.conj().T @ sigma)
        - 1j * params.g * (sigma.conj().T @ a)
        + 1j * params.g * (a.conj().T @ sigma)
    )
    if np.max(np.abs(h - h.conj().T)) > 1e-12 * max(1.0, float(np.max(np.abs(h)))):
        raise ValueError("Hamiltonian lost Hermiticity; invalid parameters")
    return OperatorSet(dim=params.dim, a=a, sigma=sigma, h=h)
