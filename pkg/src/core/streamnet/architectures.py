"""Declarative model configurations and the named presets"""
import logging
from typing import Literal, Optional

from pydantic import BaseModel, Field

from src.core.streamnet.lifts import Lift
from src.core.streamnet.maps import PointwiseMap, RecurrentMap, StreamMap, WindowedMap
from src.core.streamnet.model import (
    DeepSigModel,
    FlattenHead,
    Head,
    LastPointHead,
    PointwiseHead,
    SignatureBlock,
)
from src.core.streamnet.params import ParamSpace
from src.domain.exceptions import ShapeError

logger = logging.getLogger(__name__)


class MapConfig(BaseModel):
    """Stream map of a block; `identity` has no parameters"""
    kind: Literal["identity", "pointwise", "windowed", "recurrent"] = "identity"
    window: int = Field(default=1, ge=1)
    stride: int = Field(default=1, ge=1)
    hidden: list[int] = Field(default_factory=list)
    out: int = Field(default=1, ge=1)
    preserve_original: bool = False


class BlockConfig(BaseModel):
    map: MapConfig = Field(default_factory=MapConfig)
    lift: Literal["expanding", "block", "sliding", "trivial"] = "trivial"
    lift_window: int = Field(default=3, ge=2)
    depth: int = Field(default=3, ge=1)


class HeadConfig(BaseModel):
    kind: Literal["pointwise", "flatten", "last"] = "flatten"
    hidden: list[int] = Field(default_factory=list)
    out: int = Field(default=1, ge=1)
    final_activation: Literal["identity", "sigmoid", "tanh"] = "identity"


class ModelConfig(BaseModel):
    """Key-value description of a deep signature model"""
    name: str = "custom"
    time_augment: bool = True
    blocks: list[BlockConfig] = Field(default_factory=list)
    head: HeadConfig = Field(default_factory=HeadConfig)


PRESETS: dict[str, ModelConfig] = {
    # raw time-augmented stream, flattened
    "feedforward": ModelConfig(
        name="feedforward",
        head=HeadConfig(kind="flatten", hidden=[16, 16, 16], final_activation="sigmoid"),
    ),
    "neural-sig": ModelConfig(
        name="neural-sig",
        blocks=[BlockConfig(lift="trivial", depth=4)],
        head=HeadConfig(kind="flatten", hidden=[64, 64, 32, 32, 16, 16], final_activation="sigmoid"),
    ),
    "neural-sig-augment": ModelConfig(
        name="neural-sig-augment",
        blocks=[BlockConfig(map=MapConfig(kind="pointwise", hidden=[16, 16], out=3), lift="trivial", depth=3)],
        head=HeadConfig(kind="flatten", hidden=[32, 32, 16], final_activation="sigmoid"),
    ),
    "deep-sig": ModelConfig(
        name="deep-sig",
        blocks=[
            BlockConfig(
                map=MapConfig(kind="windowed", window=3, out=3, preserve_original=True),
                lift="trivial",
                depth=3,
            )
        ],
        head=HeadConfig(kind="flatten", hidden=[32] * 5, final_activation="sigmoid"),
    ),
    "deeper-sig": ModelConfig(
        name="deeper-sig",
        blocks=[
            BlockConfig(
                map=MapConfig(kind="windowed", window=4, hidden=[16, 16], out=3, preserve_original=True),
                lift="expanding",
                depth=2,
            ),
            BlockConfig(map=MapConfig(kind="recurrent", out=6), lift="expanding", depth=2),
            BlockConfig(map=MapConfig(kind="recurrent", out=6), lift="expanding", depth=2),
        ],
        head=HeadConfig(kind="last", hidden=[16, 16], final_activation="sigmoid"),
    ),
    # input is time-augmented noise; output is one value per time step
    "generator": ModelConfig(
        name="generator",
        time_augment=False,
        blocks=[
            BlockConfig(
                map=MapConfig(kind="pointwise", hidden=[8, 8], out=2, preserve_original=True),
                lift="expanding",
                depth=3,
            )
        ],
        head=HeadConfig(kind="pointwise", out=1),
    ),
}


def preset(name: str) -> ModelConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown model preset '{name}', expected one of {sorted(PRESETS)}")
    return PRESETS[name].model_copy(deep=True)


def _build_map(space: ParamSpace, name: str, config: MapConfig, channels: int) -> StreamMap:
    if config.kind == "identity":
        return PointwiseMap(None, name, channels)
    if config.kind == "pointwise":
        return PointwiseMap(space, name, channels, config.hidden, config.out, config.preserve_original)
    if config.kind == "windowed":
        return WindowedMap(space, name, channels, config.window, config.stride, config.hidden, config.out,
                           config.preserve_original)
    return RecurrentMap(space, name, channels, config.window, config.out, config.preserve_original)


def build_model(config: ModelConfig, input_channels: int, input_length: Optional[int] = None) -> DeepSigModel:
    """Instantiate the layers of `config` for streams with `input_channels` channels

    A flatten head needs `input_length` to size its first layer.
    """
    space = ParamSpace()
    blocks = []
    channels, length = input_channels, input_length
    for i, block_config in enumerate(config.blocks):
        stream_map = _build_map(space, f"block{i}.map", block_config.map, channels)
        lift = Lift(kind=block_config.lift, window=block_config.lift_window)
        blocks.append(SignatureBlock(stream_map=stream_map, lift=lift, depth=block_config.depth))
        channels = DeepSigModel.signature_channels(stream_map.out_channels, block_config.depth)
        if length is not None:
            if length < stream_map.min_length:
                raise ShapeError(f"input of length {length} is shorter than the map window", block_index=i)
            length = stream_map.output_length(length)
            if length < lift.min_length:
                raise ShapeError(f"stream of length {length} is too short for the {lift.kind} lift",
                                 block_index=i)
            length = lift.output_length(length)

    head_config = config.head
    head: Head
    if head_config.kind == "flatten":
        if length is None:
            raise ValueError("a flatten head needs the input length")
        head = FlattenHead(space, "head", channels, length, head_config.hidden, head_config.out,
                           head_config.final_activation)
    elif head_config.kind == "last":
        head = LastPointHead(space, "head", channels, head_config.hidden, head_config.out,
                             head_config.final_activation)
    else:
        head = PointwiseHead(space, "head", channels, head_config.hidden, head_config.out,
                             head_config.final_activation)
    model = DeepSigModel(space, input_channels, blocks, head)
    logger.debug(f"Built model '{config.name}' with {model.num_parameters} parameters")
    return model
