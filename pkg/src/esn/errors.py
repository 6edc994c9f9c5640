"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument violates a documented precondition."""


class NotApplicableError(ValueError):
    """The requested operation is undefined for this variant (e.g. quantiles
    of a non-probability weight, Potter checks without a tail exponent)."""


class DivergentIntegral(ArithmeticError):
    """An integral was classified divergent and must not be used as a number."""


class InexactSampleError(RuntimeError):
    """An operation requiring an exact field sample received a censored one."""


class WindowTooSmallError(ValueError):
    """A window is too small for the requested estimate to be unbiased."""
