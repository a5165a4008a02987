"""Exception types shared across the package."""


class GraphError(Exception):
    """Structural problem with a computation tape (unknown node, bad shape)."""


class NumericError(Exception):
    """A non-finite value was produced during evaluation or differentiation."""

    def __init__(self, message, node_id=None):
        super().__init__(message)
        self.node_id = node_id


class CapabilityError(Exception):
    """Requested an operation the build does not support (e.g. third-order jets)."""


class ConfigError(Exception):
    """Invalid run or objective configuration."""


class DegenerateReferenceError(Exception):
    """Relative metrics are undefined because the reference solution sums to zero."""


class OracleGuardError(Exception):
    """A test oracle was invoked outside its cost guard (model too large)."""
