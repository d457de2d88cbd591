"""Exception hierarchy shared by every synthcog module."""

from sklearn.exceptions import NotFittedError


class SynthCogError(Exception):
    """Base class for all errors raised by synthcog."""


class InvalidInputError(SynthCogError, ValueError):
    pass


class UnknownSymbolError(InvalidInputError):
    """A sequence contains a symbol outside the codebook alphabet."""

    def __init__(self, symbol, position, context=None):
        self.symbol = symbol
        self.position = position
        self.context = context
        msg = f"unknown symbol {symbol!r} at position {position}"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)


class CapacityError(SynthCogError):
    """Creating another representation would exceed ``max_representations``."""


class UntrainedModelError(SynthCogError, NotFittedError):
    pass


class ModelFormatError(SynthCogError, ValueError):
    """A model file is malformed, truncated or of an unsupported version."""


class ConfigMismatchError(SynthCogError, ValueError):
    pass


class DatasetError(SynthCogError, ValueError):
    """Dataset file or manifest problem (missing file, malformed row, empty set)."""


class InvalidSpecError(SynthCogError, ValueError):
    pass


class UndefinedAUCError(SynthCogError, ValueError):
    """AUC needs at least one positive and one negative sample."""


class IncompleteMatrixError(SynthCogError, ValueError):
    pass


class IncompleteGroupError(SynthCogError, ValueError):
    pass
