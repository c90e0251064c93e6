from .attention import AttentionParams, multi_head_attention, softmax_rows
from .gradcheck import grad_check
from .ops import matmul
from .optim import sgd_step
from .tape import GradTape, Matrix

__all__ = [
    "AttentionParams",
    "GradTape",
    "Matrix",
    "grad_check",
    "matmul",
    "multi_head_attention",
    "sgd_step",
    "softmax_rows",
]
