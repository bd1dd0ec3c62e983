"""Exception types. Each carries a short machine-readable ``code``."""


class MmiError(ValueError):
    code = "mmi-error"

    def __init__(self, message=None):
        super().__init__(f"{self.code}: {message}" if message else self.code)


class InfeasibleGroundTruthError(MmiError):
    code = "infeasible-ground-truth"


class OutsideSupportError(MmiError):
    code = "outside-support"


class NonnegativityError(MmiError):
    code = "nonnegativity-violated"


class InconsistentOrderError(MmiError):
    code = "inconsistent-order"


class EnumerationBudgetError(MmiError):
    code = "enumeration-budget"


class NotInterpolableError(MmiError):
    code = "not-interpolable"


class EpsilonTooSmallError(MmiError):
    code = "epsilon-too-small"
