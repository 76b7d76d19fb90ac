"""Exception types shared across the package.

Every failure the library raises deliberately derives from :class:`QgdError`,
so callers (in particular the command line front end) can distinguish our
diagnostics from genuine bugs.
"""


class QgdError(Exception):
    """Base class for all deliberate failures raised by this package."""


class DimensionError(QgdError, ValueError):
    """An array has the wrong shape, an odd dimension, or exceeds a size cap."""


class NormalizationError(QgdError, ValueError):
    """Channel weights do not sum to one within tolerance."""


class NotSymplecticError(QgdError, ValueError):
    """A matrix fails the symplectic condition K J K^T = J within tolerance."""


class DomainError(QgdError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NotNormalError(QgdError, ValueError):
    """The generator product JS is not normal, so no unitary eigenbasis exists."""


class NotPassiveError(QgdError, ValueError):
    """A stationary-state request on a generator with eigenvalues off the imaginary axis."""


class ResonanceError(QgdError, ValueError):
    """Distinct eigenvalues sit on the non-decaying manifold; no unique stationary limit."""


class DivergenceError(QgdError, RuntimeError):
    """A state grew past the overflow bound; the scenario is divergent."""


class IntegrationError(QgdError, RuntimeError):
    """The adaptive integrator failed (for example step size underflow)."""


class PhysicalityError(QgdError, RuntimeError):
    """A computed covariance violates the uncertainty relation beyond tolerance."""


class TermBudgetError(QgdError, RuntimeError):
    """The series term count would exceed the configured cap.

    Use the ode solver or the Monte Carlo sampler for this problem, or raise
    the cap (``max_terms`` argument; ``QGD_MAX_TERMS`` for the command line).
    """


class LeakageError(QgdError, RuntimeError):
    """Truncated Fock population leaked into the top levels beyond tolerance."""


class ScenarioError(QgdError, ValueError):
    """A scenario file failed schema validation."""


class DegenerateSpectrumWarning(UserWarning):
    """Degenerate eigenvalues detected; eigenspace-projector averaging was used."""
