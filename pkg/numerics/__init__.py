"""Numerics

Dense float64 tensors with reverse-mode differentiation
"""
from numerics.tensor import Tape, Tensor, backward, concat, einsum, gather_rows, matmul, \
    no_grad, stack, where
from numerics.functional import dropout, gelu, l2_normalize, layer_norm, linear, \
    log_softmax, softmax_masked
from numerics.gradcheck import grad_check, relative_error
