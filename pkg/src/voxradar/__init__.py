"""Hardware-free FMCW MIMO radar imaging: simulate, reconstruct, calibrate, render, filter."""

from voxradar.scenesim import (
    ArrayGeometry,
    ChirpConfig,
    RawFrame,
    Reflector,
    Scene,
    SimLimits,
    Tag,
    Trajectory,
    inject_ghost,
    scene_at_epoch,
    synthesize_frame,
)
from voxradar.reconstruct import (
    GridSpec,
    PowerGrid,
    direction_power,
    distance_power,
    grid_dims,
    range_from_freq_shift,
    reconstruct_grid,
    reconstruct_grid_naive,
    voxel_power,
)
from voxradar.calibrate import BackgroundModel, accumulate_background, subtract_background
from voxradar.imaging import (
    HeatMap2D,
    Mesh,
    heatmap_slice,
    marching_cubes,
    peak_voxel,
    threshold_normalize,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "BackgroundModel",
    "ChirpConfig",
    "GridSpec",
    "HeatMap2D",
    "Mesh",
    "PowerGrid",
    "RawFrame",
    "Reflector",
    "Scene",
    "SimLimits",
    "Tag",
    "Trajectory",
    "accumulate_background",
    "direction_power",
    "distance_power",
    "grid_dims",
    "heatmap_slice",
    "inject_ghost",
    "marching_cubes",
    "peak_voxel",
    "range_from_freq_shift",
    "reconstruct_grid",
    "reconstruct_grid_naive",
    "scene_at_epoch",
    "subtract_background",
    "synthesize_frame",
    "threshold_normalize",
    "voxel_power",
]
