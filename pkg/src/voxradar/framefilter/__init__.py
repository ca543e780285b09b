"""Frame filter: small CNN labelling frames Regular/Ambiguous, plus the frame-hold policy."""

from voxradar.framefilter.inputs import extract_input, resample_bilinear
from voxradar.framefilter.modelio import read_model, write_model
from voxradar.framefilter.network import (
    INPUT_SIZE,
    ClassifierModel,
    Pooling,
    Verdict,
    classify,
    cross_entropy,
    forward,
    init_model,
)
from voxradar.framefilter.stream import Flag, StreamState, stream_filter
from voxradar.framefilter.training import SingleClassError, TrainConfig, train

__all__ = [
    "INPUT_SIZE",
    "ClassifierModel",
    "Flag",
    "Pooling",
    "SingleClassError",
    "StreamState",
    "TrainConfig",
    "Verdict",
    "classify",
    "cross_entropy",
    "extract_input",
    "forward",
    "init_model",
    "read_model",
    "resample_bilinear",
    "stream_filter",
    "train",
    "write_model",
]
