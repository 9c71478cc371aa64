"""Exception hierarchy shared by all walkopt modules."""


class WalkOptError(Exception):
    """Base class for every error raised by walkopt."""


class InstanceFormatError(WalkOptError):
    """An instance document is unreadable or does not match the schema.

    ``field`` holds a dotted path to the offending entry, e.g. ``"curve"`` or
    ``"candidates[3].capacity"``.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class InvalidWeightsError(WalkOptError):
    pass


class CurveError(WalkOptError):
    pass


class InfeasibleAllocationError(WalkOptError):
    pass


class EnumerationLimitError(WalkOptError):
    def __init__(self, estimate: int, limit: int):
        super().__init__(
            f"exact enumeration needs about {estimate} allocations, limit is {limit}"
        )
        self.estimate = estimate
        self.limit = limit


class SolutionFormatError(WalkOptError):
    def __init__(self, token: str, message: str):
        super().__init__(f"{token!r}: {message}")
        self.token = token


class GeoDataError(WalkOptError):
    pass


class MetricError(WalkOptError):
    pass
