class MVDMError(Exception):
    """Base class for errors raised by mvdm."""


class DataError(MVDMError, ValueError):
    """Malformed or inconsistent input (shapes, non-finite values, bad parameters)."""


class NumericalError(MVDMError, ValueError):
    """Well-formed input that leads to an undefined numerical quantity.

    Examples are an isolated sample (zero degree), an empty truncated
    embedding, or an eigensolver whose residuals are out of tolerance.
    """
