"""Dense-matrix layers, Adam, dropout and gradient checking for the deep models."""
from .gradcheck import grad_check
from .layers import (
    Dropout,
    attentive_pool_backward,
    attentive_pool_forward,
    conv1d_backward,
    conv1d_forward,
    cross_entropy,
    dense_stack_backward,
    dense_stack_forward,
    glorot,
    lstm_backward,
    lstm_forward,
    pool_backward,
    pool_forward,
    sigmoid,
    softmax,
)
from .optim import AdamState, adam_step

__all__ = [
    "AdamState",
    "Dropout",
    "adam_step",
    "attentive_pool_backward",
    "attentive_pool_forward",
    "conv1d_backward",
    "conv1d_forward",
    "cross_entropy",
    "dense_stack_backward",
    "dense_stack_forward",
    "glorot",
    "grad_check",
    "lstm_backward",
    "lstm_forward",
    "pool_backward",
    "pool_forward",
    "sigmoid",
    "softmax",
]
