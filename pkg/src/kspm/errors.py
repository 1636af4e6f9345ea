"""Exception types shared across the package."""


class KspmError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(KspmError):
    """Invalid configuration file, key, or CLI usage.

    Carries the full list of problems found so a user can fix a config
    file in one pass instead of replaying parse attempts.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NumericalError(KspmError):
    """A solver produced a non-finite state or otherwise blew up."""


class FixedPointDivergenceError(NumericalError):
    """Successive-substitution iteration diverged; carries the report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SnapshotFormatError(KspmError):
    """A snapshot file is truncated, mislabeled, or inconsistent."""
