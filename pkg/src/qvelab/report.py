"""Small result containers returned by the check/verification operations."""

from dataclasses import dataclass, field


@dataclass
class CheckReport:
    """Outcome of a two-sided inequality check: asserts lhs <= rhs (+slack)."""

    lhs: float
    rhs: float
    holds: bool
    info: dict = field(default_factory=dict)

    def __bool__(self):
        return self.holds
