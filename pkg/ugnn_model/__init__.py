from ugnn_model.config import UGNNConfig
from ugnn_model.layers import (
    Resolution,
    decoder_block,
    encoder_block,
    graph_conv,
    input_embedding,
    sampled_graph_conv,
    time_embedding,
)
from ugnn_model.model import UGNN, init_params, param_shapes

__all__ = [
    "Resolution",
    "UGNN",
    "UGNNConfig",
    "decoder_block",
    "encoder_block",
    "graph_conv",
    "init_params",
    "input_embedding",
    "param_shapes",
    "sampled_graph_conv",
    "time_embedding",
]
