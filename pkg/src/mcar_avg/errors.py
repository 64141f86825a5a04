"""Exception types shared across the package."""


class McarAvgError(Exception):
    """Base class for all errors raised by this package."""


class DataError(McarAvgError):
    """Malformed input data: CSV parse failures, bad or missing values."""


class RankError(McarAvgError):
    """A design matrix that must have full column rank does not."""


class CandidateError(McarAvgError):
    """A candidate model cannot be constructed or fitted as required."""


class CliError(McarAvgError):
    """Bad command-line usage."""
