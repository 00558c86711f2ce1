"""Named error types raised by the simulation layers.

Every failure mode that callers are expected to handle has its own class so
that batch drivers (sweeps, figure reproduction) can record the error name
instead of aborting the whole run.
"""


class SimulationError(Exception):
    """Base class for all ditsim errors."""


class SingularMatrix(SimulationError):
    """A dense solve hit a pivot below the singularity tolerance."""


class DegenerateSteadyState(SimulationError):
    """The trace-normalized null-vector system is singular (non-unique kernel)."""


class PumpExceedsDecay(SimulationError):
    """Incoherent pump rate >= cavity decay rate: no stationary state exists."""


class PositivityViolation(SimulationError):
    """A density matrix eigenvalue fell below the negativity tolerance."""


class ResolventSingular(SimulationError):
    """(i*omega*I - L) could not be solved, typically a zero-mode overlap at omega=0."""


class SingularMomentSystem(SimulationError):
    """The 4x4 moment steady-state system is singular."""


class NoDITStructure(SimulationError):
    """The spectrum does not contain a polariton/DIT/polariton feature triple."""


class GridMismatch(SimulationError):
    """Two spectra being compared do not share the same frequency grid."""


class ZeroDetuning(SimulationError):
    """An off-resonant-only quantity was requested at delta = 0."""


class ConfigError(SimulationError):
    """A run configuration failed validation; message names the offending field."""
