from .checkpoint import (
    Checkpoint,
    config_diff,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    require_compatible,
    save_checkpoint,
)
from .config import CONDITIONING, NetConfig
from .forward import (
    decoder_forward,
    encoder_forward,
    predict,
    reparameterize,
    segmentor_forward,
    segmentor_logits,
)
from .params import DOMAINS, ROLES, ParameterSet, init_params

__all__ = [
    "CONDITIONING",
    "Checkpoint",
    "DOMAINS",
    "NetConfig",
    "ParameterSet",
    "ROLES",
    "config_diff",
    "decode_checkpoint",
    "decoder_forward",
    "encode_checkpoint",
    "encoder_forward",
    "init_params",
    "load_checkpoint",
    "predict",
    "reparameterize",
    "require_compatible",
    "save_checkpoint",
    "segmentor_forward",
    "segmentor_logits",
]
