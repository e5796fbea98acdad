"""Exception types raised by the simulator."""


class SizeError(ValueError):
    """Requested qubit count is not representable."""


class ShapeError(ValueError):
    """Array or argument has the wrong dimensions or length."""


class ValidityError(ValueError):
    """Input is not a valid quantum object (non-unitary, wrong trace, ...)."""


class DomainError(ValueError):
    """Argument outside its allowed range."""


class DegenerateStateError(ValueError):
    """State carries no probability weight to work with."""


class UnsupportedError(ValueError):
    """Operation is not defined for this kind of input."""


class NonInvertibleChannelError(ValueError):
    """A channel superoperator cannot be inverted for the reverse sweep."""


class QubitIndexError(IndexError):
    """Qubit position outside the state."""
