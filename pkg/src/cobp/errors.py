"""Exception types shared across the package."""


class ConfigurationError(Exception):
    """A program references something that was never registered."""


class EngineInvariantError(Exception):
    """An internal consistency rule of the execution engine was broken."""


class BoundExceededError(Exception):
    """A traversal hit its state, depth, or step budget before finishing."""

    def __init__(self, message: str, states_visited: int = 0):
        super().__init__(message)
        self.states_visited = states_visited
