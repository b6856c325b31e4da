"""Patent-code classification with taxonomy correlation learning and
assignee history graphs, on a small numpy autodiff core."""

from .tensor import Tensor, no_grad
from .optim import Adam

__version__ = "0.1.0"

__all__ = ["Tensor", "no_grad", "Adam", "__version__"]
