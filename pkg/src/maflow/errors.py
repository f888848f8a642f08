"""Exception taxonomy shared by all maflow modules.

Every library-raised error derives from MaflowError so callers (and the CLI)
can distinguish domain failures from programming errors.
"""


class MaflowError(Exception):
    """Base class for all maflow domain errors."""


class DivisionBySingularJet(MaflowError):
    """Divisor jet has a (near-)zero constant term."""


class DomainError(MaflowError):
    """Elementary function evaluated outside its real domain."""


class OrderExceeded(MaflowError):
    """Requested derivative order exceeds the jet truncation order."""


class DegenerateMetric(MaflowError):
    """Metric matrix is singular where an inverse or volume is needed."""


class DegenerateReference(MaflowError):
    """Reference form is degenerate (vanishing top wedge power)."""


class ParseError(MaflowError):
    """Expression text violates the grammar.

    Carries the byte offset of the first offending token.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class UnknownIdentifier(MaflowError):
    """Expression references a name that is neither bound nor a known function."""


class ArityError(MaflowError):
    """Expression calls a non-function identifier, or misuses a function name."""


class UnknownFlow(MaflowError):
    """Requested catalog flow name does not exist."""


class MissingParameter(MaflowError):
    """A flow or operation requires a parameter that was not supplied."""


class MissingPressure(MaflowError):
    """Operation needs pressure-gradient data the flow cannot provide."""


class SingularStructure(MaflowError):
    """|fhat| below the singularity threshold; structure tensors undefined."""


class VanishingVorticity(MaflowError):
    """Scalar vorticity vanishes where a vorticity-scaled quantity is needed."""


class DegenerateHessian(MaflowError):
    """Stream-function Hessian is singular where its inverse is needed."""


class DimensionError(MaflowError):
    """Operation is not defined for the flow's dimension or background."""


class NonRiemannianAlongCurve(MaflowError):
    """Pullback metric fails to be positive along a curve being measured."""


class MixedSignature(MaflowError):
    """Region sampling found non-elliptic or near-parabolic points."""


class QuadratureFailure(MaflowError):
    """Adaptive quadrature could not reach the requested tolerance."""


class FoldSingularity(MaflowError):
    """Legendre transform attempted on (or across) the fold locus."""


class OutsideSheetDomain(MaflowError):
    """Dual point has no preimage on the requested sheet."""


class VanishingLambda(MaflowError):
    """Symplectic reduction requires a nonvanishing swirl multiplier."""


class SeedDependent(MaflowError):
    """Effective decomposition result depends on the seed two-form."""
