"""Static-background calibration: average human-free power grids, subtract from live ones."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from voxradar.reconstruct import GridSpec, PowerGrid

DEFAULT_CALIBRATION_FRAMES = 10


class SpecMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class BackgroundModel:
    mean_grid: PowerGrid
    frame_count: int
    spec: GridSpec

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if self.mean_grid.spec != self.spec:
            raise SpecMismatchError("mean grid spec differs from model spec")

    @property
    def peak(self) -> float:
        return float(self.mean_grid.values.max())


def accumulate_background(frames: Sequence[PowerGrid]) -> BackgroundModel:
    if len(frames) == 0:
        raise ValueError("calibration needs at least one frame")
    spec = frames[0].spec
    if any(f.spec != spec for f in frames[1:]):
        raise SpecMismatchError("calibration frames have differing grid specs")
    stack = np.stack([f.values for f in frames])
    mean = stack.mean(axis=0)
    return BackgroundModel(PowerGrid(mean, spec, frames[-1].epoch), len(frames), spec)


def subtract_background(live: PowerGrid, bg: BackgroundModel) -> PowerGrid:
    """Remove the static power; negative residuals are clamped to zero."""
    if live.spec != bg.spec:
        raise SpecMismatchError("live grid spec differs from background spec")
    return PowerGrid(np.maximum(live.values - bg.mean_grid.values, 0.0), live.spec, live.epoch)
