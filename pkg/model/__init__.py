"""Model

The MHAR sequential recommender
"""
from model.attention import absolute_head, compute_PI, compute_TI, content_head, relative_head
from model.config import ModelConfig
from model.layers import mhar_layer
from model.network import TemProxRec, load_checkpoint, save_checkpoint
from model.parameters import Parameters, init_parameters, truncated_normal
