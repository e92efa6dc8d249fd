"""Exception hierarchy shared by all modules."""


class IBVSError(Exception):
    """Base class for every error raised by the package."""


class DegenerateVector(IBVSError, ValueError):
    pass


class DegenerateDistance(IBVSError, ValueError):
    pass


class ParallelLines(IBVSError, ValueError):
    pass


class WindowPlaneSingularity(IBVSError, ValueError):
    pass


class CapOutsidePlane(IBVSError, ValueError):
    pass


class ZeroForce(IBVSError, ValueError):
    pass


class YawSingularity(IBVSError, ValueError):
    pass


class MissionAbort(IBVSError, RuntimeError):
    pass


class ScenarioInvalid(IBVSError, ValueError):
    pass


class ParseError(ScenarioInvalid):
    """Malformed scenario or log file.

    ``key`` names the offending field (dotted path) and ``line`` the line
    number when known.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)


class SegmentMissing(IBVSError, LookupError):
    pass


class NeverEntered(IBVSError, LookupError):
    pass


class NeverCrossed(IBVSError, LookupError):
    pass


class NoRoot(IBVSError, ArithmeticError):
    pass
