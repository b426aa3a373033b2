"""Exception types shared across the package.

Everything a caller can trigger with bad or degenerate input derives from
``DomainError`` so the command line can map it to a single exit code.
"""


class DomainError(Exception):
    pass


class MalformedTable(DomainError):
    pass


class BudgetExceeded(DomainError):
    pass


class NotContractingWithinCap(DomainError):
    pass


class UnknownName(DomainError):
    pass


class StabilizationNotReached(DomainError):
    pass


class PatternMismatch(DomainError):
    pass


class AsymmetricPencil(DomainError):
    pass


class NoConvergence(DomainError):
    pass


class RootCountMismatch(DomainError):
    pass


class SingularBlock(DomainError):
    pass


class ZeroCharacter(DomainError):
    pass


class Indeterminate(DomainError):
    pass


class PrefixConditionViolated(DomainError):
    pass
