"""Exception hierarchy.

Everything raised on bad input derives from :class:`ScintlinkError`, so callers
(and the command line front end) can map failures to exit codes by class.
"""


class ScintlinkError(Exception):
    """Base class for all package errors."""


class DomainError(ScintlinkError, ValueError):
    """An argument lies outside the domain of the formula."""


class DegenerateChannelError(DomainError):
    """The channel has zero log-variance, so the lognormal law is a point mass.

    Use the constant-channel path instead (Poisson counting, unit gain).
    """


class DegenerateFitError(DomainError):
    """A trace with zero variance cannot be fitted with a lognormal channel."""


class ZeroMeanError(DomainError):
    """A trace with zero mean cannot be normalized."""


class BinningError(ScintlinkError, ValueError):
    """Two histograms do not share the same bins."""


class SpecError(ScintlinkError, ValueError):
    """A simulation or probe configuration violates its invariants."""


class ProtocolError(ScintlinkError, ValueError):
    """The threshold protocol cannot run on the given flux."""


class TruncationError(ScintlinkError, ArithmeticError):
    """The photon-number cutoff leaves too much probability mass uncovered.

    Attributes
    ----------
    mass : float
        Cumulative probability captured up to ``n_max``.
    n_max : int
        The cutoff that was tried.
    """

    def __init__(self, message, mass, n_max):
        super().__init__(message)
        self.mass = mass
        self.n_max = n_max


class TraceFormatError(ScintlinkError, ValueError):
    """A trace file could not be parsed.

    ``lineno`` is 1-based and may be None when the problem is not tied to a line.
    """

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class MetadataError(TraceFormatError):
    """The ``# window_s=`` / ``# sample_rate_hz=`` header is missing or invalid."""
