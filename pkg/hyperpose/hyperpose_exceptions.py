from __future__ import annotations


class InvalidHyperposeArgumentError(ValueError):
    """Exceptions raised erroneous input arguments.

    Parameters
    ----------
        msg: str
            Error description.
        source_err: Exception | None
            The source of the error if any.
    """

    def __init__(self, msg: str, source_err: Exception = None):
        self.msg = msg
        self.source = source_err

    def __str__(self):
        return repr(self.msg)


class ShapeMismatchError(InvalidHyperposeArgumentError):
    """Tensor shapes are incompatible for the requested operation."""


class ManifoldDomainError(InvalidHyperposeArgumentError):
    """A point is off the hyperboloid, or a map is evaluated outside its domain."""


class SkeletonFormatError(InvalidHyperposeArgumentError):
    """The skeleton description does not encode a single rooted tree.

    Parameters
    ----------
        msg: str
            Error description.
        joint: int | str | None
            The offending joint, by index or name.
    """

    def __init__(self, msg: str, joint: int | str | None = None):
        super().__init__(msg)
        self.joint = joint


class NonFiniteError(InvalidHyperposeArgumentError):
    """A NaN or infinity reached a loss, a gradient or a parameter.

    Parameters
    ----------
        msg: str
            Error description.
        tensor_name: str | None
            Name of the tensor or op where the non-finite value was found.
        step: int | None
            Optimizer step at which it happened, when known.
    """

    def __init__(
        self, msg: str, tensor_name: str | None = None, step: int | None = None
    ):
        super().__init__(msg)
        self.tensor_name = tensor_name
        self.step = step


class DistributionError(InvalidHyperposeArgumentError):
    """Rows expected to be probability distributions are not."""


class DatasetFormatError(InvalidHyperposeArgumentError):
    """A dataset or checkpoint file is corrupted or has an unknown layout."""
