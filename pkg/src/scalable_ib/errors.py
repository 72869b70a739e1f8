"""Exception hierarchy for the scalable-IB library.

Feasibility errors (chain ordering, relevance targets, parameter ranges)
all derive from :class:`FeasibilityError` so callers can map them to a
single exit path without enumerating every subtype.
"""

from __future__ import annotations


class ScalableIBError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(ScalableIBError):
    """Array shapes are inconsistent with the model's dimension or stage count."""


class ModelValidationError(ScalableIBError):
    """A candidate model violates at least one structural invariant.

    Attributes
    ----------
    violations : list
        The structured `Violation` records, one per failed invariant.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(v.message for v in self.violations)
        super().__init__(f"invalid model: {lines}")


class FeasibilityError(ScalableIBError):
    """An input lies outside the feasible set of the region or sweep."""


class InfeasibleChain(FeasibilityError):
    """The Omega chain violates 0 <= O_1 <= ... <= O_T <= cap, or cannot
    be realized by degraded descriptions."""


class RelevanceExceedsBound(FeasibilityError):
    """Requested relevance exceeds the chain's relevance bound."""


class DeltaInfeasible(FeasibilityError):
    """A relevance target exceeds what any code rate can achieve."""


class Delta1Infeasible(DeltaInfeasible):
    pass


class Delta2Infeasible(DeltaInfeasible):
    pass


class InfeasiblePair(FeasibilityError):
    """(omega1, omega2) violates 0 <= omega1 <= omega2 <= cap."""


class EmptyRange(FeasibilityError):
    """The feasible side-information interval is empty."""


class SigmaOutOfRange(FeasibilityError):
    """A requested sigma_si lies outside the feasible interval."""


class TargetInfeasible(FeasibilityError):
    """A vector relevance target exceeds its maximal achievable value."""


class NonConvergence(ScalableIBError):
    """The solver stopped without meeting the target tolerance.

    Attributes
    ----------
    best : object
        Best result found (same shape as the success return value).
    residual : float
        Largest remaining relevance shortfall in bits.
    """

    def __init__(self, message, best=None, residual=float("nan")):
        super().__init__(message)
        self.best = best
        self.residual = residual


class ChainNotStrictlyInterior(FeasibilityError):
    """Chain touches the boundary (singular Omega or Omega at the cap)
    where the test-channel construction needs strict interiority."""


class SingularConditioning(ScalableIBError):
    """A conditioning covariance block is singular."""


class InvalidDistribution(ScalableIBError):
    """A pmf table is negative, misnormalized, or too large."""


class FormatError(ScalableIBError):
    """A serialized instance file is malformed."""


class ParseError(ScalableIBError):
    """A run configuration file is malformed or missing required keys."""
