"""Exception types shared across the package."""


class AncviError(Exception):
    """Base class for all package errors."""


class BadGamma(AncviError):
    def __init__(self, value, reason=""):
        self.value = value
        msg = f"invalid discount factor {value!r}"
        super().__init__(msg + (f": {reason}" if reason else ""))


class BadBranching(AncviError):
    pass


class BadSize(AncviError):
    pass


class NonStochasticRow(AncviError):
    def __init__(self, s, a, row_sum):
        self.s, self.a, self.row_sum = s, a, row_sum
        super().__init__(f"transition row (s={s}, a={a}) sums to {row_sum!r}, expected 1")


class NonFiniteEntry(AncviError):
    def __init__(self, location):
        self.location = location
        super().__init__(f"non-finite entry at {location}")


class KindMismatch(AncviError):
    pass


class DimensionMismatch(AncviError):
    pass


class ConfigMismatch(AncviError):
    pass


class NoConvergence(AncviError):
    def __init__(self, max_iter, residual):
        self.max_iter, self.residual = max_iter, residual
        super().__init__(f"residual {residual:.3e} after {max_iter} iterations")


class MissingIterates(AncviError):
    pass


class GammaMismatch(AncviError):
    pass


class SpanViolated(AncviError):
    pass


class HorizonExceeded(AncviError):
    pass


class MdpValidationError(AncviError):
    """Raised when an MDP fails validation; carries the full issue list."""

    def __init__(self, issues):
        self.issues = list(issues)
        lines = "; ".join(str(i) for i in self.issues[:5])
        more = "" if len(self.issues) <= 5 else f" (+{len(self.issues) - 5} more)"
        super().__init__(f"{len(self.issues)} validation issue(s): {lines}{more}")
