from __future__ import annotations

import numpy as np

from voxradar.framefilter.network import INPUT_SIZE
from voxradar.imaging import heatmap_slice, peak_voxel
from voxradar.reconstruct import PowerGrid


def resample_bilinear(img: np.ndarray, size: int = INPUT_SIZE) -> np.ndarray:
    """Corner-aligned bilinear resize of a 2-D array to ``size`` x ``size``."""
    img = np.asarray(img, dtype=float)
    out = img
    for axis in (0, 1):
        n = out.shape[axis]
        src = np.arange(n, dtype=float)
        dst = np.linspace(0.0, n - 1, size) if n > 1 else np.zeros(size)
        out = np.apply_along_axis(lambda v: np.interp(dst, src, v), axis, out)
    return out


def extract_input(grid: PowerGrid) -> np.ndarray:
    """Classifier image: peak-elevation (range x azimuth) slice, 32x32, scaled to [0, 1]."""
    _, j, _ = peak_voxel(grid)
    sl = heatmap_slice(grid, j).values
    img = resample_bilinear(sl)
    peak = sl.max()
    if peak <= 0:
        return np.zeros((INPUT_SIZE, INPUT_SIZE))
    return np.clip(img / peak, 0.0, 1.0)
