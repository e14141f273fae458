class ZdcoverError(Exception):
    """Base error. `exit_code` plays the part of an HTTP status: main() maps it to the process exit code."""

    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# Surface construction

class NonPermutation(ZdcoverError):
    pass


class Disconnected(ZdcoverError):
    pass


class DimensionMismatch(ZdcoverError):
    pass


class SurfaceFormatError(ZdcoverError):
    pass


# Flow and renormalization

class Singular(ZdcoverError):
    """The orbit met a cone point or marked point; callers resample the start point."""


class NoReturn(ZdcoverError):
    pass


class NotHyperbolic(ZdcoverError):
    pass


class NotLiftable(ZdcoverError):
    pass


# Statistics and integrals

class DegenerateSigma(ZdcoverError):
    pass


class Unstable(ZdcoverError):
    pass


class NonConvergence(ZdcoverError):
    pass


class DomainError(ZdcoverError):
    pass


# Command line

class UsageError(ZdcoverError):
    exit_code = 2


class UnknownKey(UsageError):
    pass


class MissingRequired(UsageError):
    pass


class ConfigNotHyperbolic(UsageError, NotHyperbolic):
    """NotHyperbolic detected while validating a run configuration."""


class OutputError(ZdcoverError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
