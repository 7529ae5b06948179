from .autograd import GraphReuse, NeuralError, NumericOverflow, ShapeMismatch, Tensor, layer_norm, parameter, softmax
from .model import (
    CompositeModel,
    attention_block,
    load_checkpoint,
    param_shapes,
    parameter_count,
    save_checkpoint,
    ssm_scan,
)

__all__ = [
    "CompositeModel",
    "GraphReuse",
    "NeuralError",
    "NumericOverflow",
    "ShapeMismatch",
    "Tensor",
    "attention_block",
    "layer_norm",
    "load_checkpoint",
    "param_shapes",
    "parameter",
    "parameter_count",
    "save_checkpoint",
    "softmax",
    "ssm_scan",
]
