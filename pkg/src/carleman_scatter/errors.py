"""Exception hierarchy shared by all modules.

Every error carries a short machine-parsable ``code`` used by the CLI to
emit single-line diagnostics and pick exit statuses.
"""


class CarlemanError(Exception):
    """Base class for all numerical/domain errors raised by this package."""

    code = "error"


class DomainError(CarlemanError, ValueError):
    """Input outside the mathematical domain of an operation."""

    code = "domain"


class BranchCutAmbiguityError(DomainError):
    """Energy lies on the cut and no boundary side was specified."""

    code = "branch-ambiguity"


class EdgeProximityError(DomainError):
    """Energy too close to a spectral edge for the requested operation."""

    code = "edge-proximity"


class CoalescenceError(DomainError):
    """Stationary points coalesce or escape; asymptotics unreliable."""

    code = "stationary-coalescence"


class GridSupportError(CarlemanError, ValueError):
    """Grid too small, mismatched, or unable to support the computation."""

    code = "grid-support"


class NearSingularEnergyError(CarlemanError, RuntimeError):
    """Linear system ill-conditioned; energy suspected in the singular set."""

    code = "near-singular"


class KernelConditionError(CarlemanError, ValueError):
    """Perturbation kernel violates a required condition (symmetry,
    positivity, decay, or integrability)."""

    code = "kernel-condition"
