"""Exception types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass


class MapcostError(Exception):
    """Base class for all package errors."""


class StructuralError(MapcostError):
    """Arity or shape mismatch in set/relation algebra."""


class ParseError(MapcostError):
    """Malformed brace notation or config document."""


class ConfigError(MapcostError):
    """Semantically invalid configuration (unknown field, bad reference, ...)."""


class BudgetError(MapcostError):
    """Enumeration would exceed the configured element budget."""


@dataclass(frozen=True)
class Violation:
    """One broken legality rule, with enough context to report it."""

    rule: str            # "dependence" | "parallelism" | "capacity" | "divisibility" | "structure"
    level: str | None
    dim: str | None
    message: str

    def __str__(self) -> str:
        where = f" at level '{self.level}'" if self.level else ""
        what = f" (dim '{self.dim}')" if self.dim else ""
        return f"rule {self.rule}{where}{what}: {self.message}"


class LegalityError(MapcostError):
    """Mapping rejected; carries the full violation list."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))
