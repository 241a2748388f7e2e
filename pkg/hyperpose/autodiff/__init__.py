from hyperpose.autodiff.tensor import Tape, Tensor, as_tensor  # noqa: F401
