"""Exception types shared across the package."""


class FlatTilerError(Exception):
    """Base class for all errors raised by flat_tiler."""


class MalformedInput(FlatTilerError):
    """Input document or complex violates the structural invariants."""


class DegenerateValues(FlatTilerError):
    """Adjacent vertices share a value (within tolerance) where genericity is needed."""

    def __init__(self, message, vertices=(), edges=()):
        super().__init__(message)
        self.vertices = sorted(set(int(v) for v in vertices))
        self.edges = sorted(set(int(e) for e in edges))


class SolverFailure(FlatTilerError):
    """Linear solve failed or did not reach the harmonicity tolerance."""


class ConsistencyFailure(FlatTilerError):
    """A construction-level balance check failed; indicates a bug, not bad data."""


class NotApplicable(FlatTilerError):
    """Operation does not apply to this connectivity (e.g. ladder on an annulus)."""


class NotFound(FlatTilerError):
    """An object guaranteed to exist could not be located."""
