"""Exception hierarchy shared by all gmlkit modules."""


class GmlError(Exception):
    """Base class for every error raised by gmlkit."""


class DuplicateRegimeId(GmlError):
    pass


class UnknownRegime(GmlError):
    pass


class NonComposable(GmlError):
    pass


class DimensionMismatch(GmlError, ValueError):
    pass


class MissingMemoryField(GmlError):
    pass


class SingularDesign(GmlError):
    """Raised when X^T X is singular, so the least-squares minimizer is undefined."""


class OutOfRangeDelta(GmlError, ValueError):
    pass


class InvalidParams(GmlError, ValueError):
    pass


class InconsistentProfile(GmlError, ValueError):
    pass


class InvalidAlpha(GmlError, ValueError):
    pass


class InvalidResolution(GmlError, ValueError):
    pass


class NonInjectiveRename(GmlError, ValueError):
    pass


class NotASuperset(GmlError, ValueError):
    pass


class PartialMap(GmlError):
    pass


class InvalidScenario(GmlError):
    """Scenario failed validation. ``problems`` lists every schema violation found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems) or "invalid scenario")


class TransportUnrealizable(GmlError):
    """A transport map cannot be applied to the given state or memory."""
