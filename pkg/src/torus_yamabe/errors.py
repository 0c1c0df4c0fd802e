"""Exception hierarchy shared by all modules."""


class YamabeError(Exception):
    pass


class InputError(YamabeError, ValueError):
    """Malformed or inconsistent input data."""


class ArgumentError(YamabeError, ValueError):
    pass


class ContextError(YamabeError, ValueError):
    """Elements from different generator contexts were combined."""


class ShapeError(YamabeError, ValueError):
    pass


class NumericError(YamabeError, ArithmeticError):
    pass


class UnsupportedError(YamabeError, NotImplementedError):
    pass


class InternalConsistencyError(YamabeError, AssertionError):
    """Two independent computations of the same quantity disagree."""


class HypothesisUnmet(YamabeError):
    """Input is well formed but outside the theorem's hypotheses."""
