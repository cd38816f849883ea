"""
Exceptions raised by czsim
"""


class DomainError(ValueError):
    """An operation was applied outside its mathematical domain"""


class ShapeError(ValueError):
    """Dimensions of the operands do not agree"""


class InputError(ValueError):
    """Malformed numeric input (NaN, inf, wrong rank)"""


class UnsupportedOpError(TypeError):
    """A traced function used an operation outside the factor library"""


class EmptySetError(ValueError):
    """A query that needs a nonempty set was made on an empty one"""


class ConfigError(ValueError):
    """Problem with the run configuration"""


class SolverError(RuntimeError):
    """The LP solver hit its iteration safeguard"""
