from . import autograd, checkpoint, layers, optim
from .autograd import Tensor, cross_entropy, softmax
from .checkpoint import Checkpoint
from .layers import Conv1d, Conv2d, Linear, LstmCell, RnnCell, max_over_time
from .optim import SGD, DivergenceError

__all__ = [
    "autograd", "checkpoint", "layers", "optim",
    "Tensor", "cross_entropy", "softmax", "Checkpoint",
    "Conv1d", "Conv2d", "Linear", "LstmCell", "RnnCell", "max_over_time",
    "SGD", "DivergenceError",
]
