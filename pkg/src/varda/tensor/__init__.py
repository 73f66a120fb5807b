from .conv import avg_pool, conv2d, upsample_nearest
from .core import (
    ComputationTape,
    Tensor,
    as_tensor,
    backward,
    current_tape,
    get_default_dtype,
    is_grad_enabled,
    no_grad,
    set_default_dtype,
)
from .gradcheck import grad_check, grad_check_params
from .ops import (
    add,
    broadcast_to,
    clamp,
    concat,
    div,
    exp,
    log,
    log_softmax,
    matmul,
    mean,
    mul,
    neg,
    relu,
    reshape,
    softmax,
    sqrt,
    square,
    sub,
    take,
    transpose,
)
from .ops import sum as sum_  # noqa: F401
from .serialize import decode_array, encode_array, load_array, load_tensor, save_tensor

__all__ = [
    "ComputationTape",
    "Tensor",
    "add",
    "as_tensor",
    "avg_pool",
    "backward",
    "broadcast_to",
    "clamp",
    "concat",
    "conv2d",
    "current_tape",
    "decode_array",
    "div",
    "encode_array",
    "exp",
    "get_default_dtype",
    "grad_check",
    "grad_check_params",
    "is_grad_enabled",
    "load_array",
    "load_tensor",
    "log",
    "log_softmax",
    "matmul",
    "mean",
    "mul",
    "neg",
    "no_grad",
    "relu",
    "reshape",
    "save_tensor",
    "set_default_dtype",
    "softmax",
    "sqrt",
    "square",
    "sub",
    "sum_",
    "take",
    "transpose",
    "upsample_nearest",
]
