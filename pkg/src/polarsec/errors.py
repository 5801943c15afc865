"""Exception types shared across the package."""


class ResourceError(RuntimeError):
    """Requested computation exceeds a configured size cap or budget."""


class ConsistencyError(RuntimeError):
    """Inputs violate a structural invariant (e.g. index-set nesting)."""
