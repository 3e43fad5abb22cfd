"""Exception taxonomy shared by all protocol layers.

Every error that a protocol component can surface is a distinct class so
tests and the CLI can assert on exact failure modes instead of string
matching.
"""


class QuorumMpcError(Exception):
    """Base class for all package errors."""


class MixedFieldError(QuorumMpcError):
    """Two values from different field contexts were combined."""


class DivisionByZero(QuorumMpcError):
    """Field division or inversion of zero."""


class DuplicateAbscissa(QuorumMpcError):
    """Interpolation points contain a repeated x coordinate."""


class TooFewRecipients(QuorumMpcError):
    """Shamir dealing requires at least 3t + 1 recipients."""


class DecodingFailure(QuorumMpcError):
    """Error-corrected reconstruction failed: corruption exceeded the budget.

    Signals a violated quorum-goodness assumption, never a silent wrong answer.
    """


class FormationFailure(QuorumMpcError):
    """Quorum sampling produced a table violating the goodness guarantees."""


class ThresholdViolated(QuorumMpcError):
    """A role set or quorum exceeded its corruption threshold mid-protocol."""


class NoMajority(QuorumMpcError):
    """Output propagation saw no value reaching the 2/3 majority rule."""


class RoundBudgetExceeded(QuorumMpcError):
    """A protocol instance did not terminate inside its scheduled window."""


class StrategyAfterStart(QuorumMpcError):
    """An adversary strategy was attached after round 0 began."""


class MismatchedRoleSets(QuorumMpcError):
    """Linear share combination over share lists with different role sets."""


class CircuitError(QuorumMpcError):
    """Base class for netlist problems; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ParseError(CircuitError):
    """Malformed netlist text."""


class CycleDetected(CircuitError):
    """The gate graph contains a wire loop."""


class FanInExceeded(CircuitError):
    """A gate consumes or feeds more wires than the configured maximum."""


class ConfigError(QuorumMpcError):
    """Invalid run configuration; message includes path and key."""
