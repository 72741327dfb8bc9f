"""Exceptions raised by the solver, the auditors and the config parser."""

from typing import Optional


class ConegeoError(Exception):
    """Base class for all domain errors."""


class PositivityLoss(ConegeoError, ArithmeticError):
    """A potential stopped being admissible (F_uu <= 0 or det Hess F <= 0)."""

    def __init__(self, message: str, node: Optional[tuple[int, int]] = None):
        super().__init__(message)
        self.node = node


class NoConvergence(ConegeoError, RuntimeError):
    """Newton did not reach the tolerance."""

    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class BadBoundary(ConegeoError, ValueError):
    """Boundary slices are not u-admissible."""


class DegenerateWeight(ConegeoError, ValueError):
    """A weight vanishes on the audited grid and no exclusion was given."""


class NonConvexBoundary(ConegeoError, ValueError):
    """Legendre duality needs strictly u-convex boundary potentials."""


class ParseError(ConegeoError, ValueError):
    """Malformed run configuration file."""

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.key = key


class ValidationError(ConegeoError, ValueError):
    """Run configuration violates one or more invariants."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class EntryFailure(ConegeoError):
    """A schedule entry failed; carries the entry index and the outcomes solved so far."""

    def __init__(self, entry: int, cause: Exception, outcomes: list):
        super().__init__(f"schedule entry {entry} failed: {cause}")
        self.entry = entry
        self.cause = cause
        self.outcomes = outcomes
