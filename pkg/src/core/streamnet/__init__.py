"""Stream-preserving neural maps, lifts and deep signature models"""
from src.core.streamnet.architectures import (
    PRESETS,
    BlockConfig,
    HeadConfig,
    MapConfig,
    ModelConfig,
    build_model,
    preset,
)
from src.core.streamnet.lifts import Lift, LiftedSignature, apply_lift, sig_of_lift
from src.core.streamnet.maps import (
    PointwiseMap,
    RecurrentMap,
    StreamMap,
    WindowedMap,
    apply_stream_map,
)
from src.core.streamnet.model import (
    DeepSigModel,
    SignatureBlock,
    deep_sig_backward,
    deep_sig_forward,
)
from src.core.streamnet.params import ModelParams, ParamSpace, adam_step

__all__ = [
    "PRESETS",
    "BlockConfig",
    "DeepSigModel",
    "HeadConfig",
    "Lift",
    "LiftedSignature",
    "MapConfig",
    "ModelConfig",
    "ModelParams",
    "ParamSpace",
    "PointwiseMap",
    "RecurrentMap",
    "SignatureBlock",
    "StreamMap",
    "WindowedMap",
    "adam_step",
    "apply_lift",
    "apply_stream_map",
    "build_model",
    "deep_sig_backward",
    "deep_sig_forward",
    "preset",
    "sig_of_lift",
]
