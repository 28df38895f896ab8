"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: existence/degeneracy failures exit 2,
usage errors exit 64, numerical failures exit 70.
"""


class GbstabError(Exception):
    """Base class for all package errors."""


class ExistenceError(GbstabError):
    """The requested wave (or a nearby one) does not exist."""


class NonexistenceError(ExistenceError):
    """No periodic orbit for the given (p, a, E, chat)."""


class DegenerateOrbitError(ExistenceError):
    """Double root of E = V(U): homoclinic or equilibrium limit."""


class NearDegenerateError(ExistenceError):
    """A sign-determining scalar sits inside its tolerance band."""


class DegenerateKernelError(ExistenceError):
    """More than one numerical zero mode where theory allows one."""


class NumericalError(GbstabError):
    """Internal numerical failure (exit code 70)."""


class LinearAlgebraError(NumericalError):
    """Dense eigensolver or linear solve failed to converge."""


class AccuracyError(NumericalError):
    """A computed quantity missed its accuracy contract."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class SolvabilityError(NumericalError):
    """Right-hand side not orthogonal to the operator kernel."""


class KernelStructureError(NumericalError):
    """Companion-space projector has the wrong rank."""


class IndeterminateKreinError(NumericalError):
    """Krein quantity of an imaginary eigenvalue below sign tolerance."""


class PoleError(NumericalError):
    """Krein matrix evaluated at (or too close to) one of its poles."""

    def __init__(self, message, lam=None):
        super().__init__(message)
        self.lam = lam


class CrossCheckError(NumericalError):
    """Independent code paths for the same scalar disagree."""


class StencilError(NumericalError):
    """Finite-difference stencil left the existence region."""


class LimitInconclusive(NumericalError):
    """An asymptotic-limit check did not stabilize."""

    def __init__(self, message, samples=None):
        super().__init__(message)
        self.samples = samples


class BlowupError(NumericalError):
    """Time integration produced NaN/overflow."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class InconclusiveError(NumericalError):
    """Growth-rate fit window was never entered."""


class UsageError(GbstabError):
    """Bad command-line or configuration input (exit code 64)."""
