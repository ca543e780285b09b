"""Human-readable products from power grids: peak slices, low-power filtering, meshes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from voxradar._mctable import CORNERS, EDGES, TRI_TABLE
from voxradar.reconstruct import GridSpec, PowerGrid

DEFAULT_ISO_FRACTION = 0.5


@dataclass
class HeatMap2D:
    values: np.ndarray  # [r][phi]
    theta_index: int
    spec: GridSpec

    @property
    def theta(self) -> float:
        return float(self.spec.theta_centers()[self.theta_index])


@dataclass
class Mesh:
    vertices: np.ndarray  # [V, 3] Cartesian metres
    faces: np.ndarray     # [F, 3] vertex indices

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValueError("face index out of range")
        if not np.all(np.isfinite(self.vertices)):
            raise ValueError("mesh vertices must be finite")

    @property
    def is_empty(self) -> bool:
        return len(self.faces) == 0

    def edge_counts(self) -> dict[tuple[int, int], int]:
        counts: dict[tuple[int, int], int] = {}
        for a, b, c in self.faces.tolist():
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                counts[key] = counts.get(key, 0) + 1
        return counts

    def is_watertight(self) -> bool:
        return all(n == 2 for n in self.edge_counts().values())

    def euler_characteristic(self) -> int:
        used = np.unique(self.faces)
        return len(used) - len(self.edge_counts()) + len(self.faces)


def peak_voxel(grid: PowerGrid) -> tuple[int, int, int]:
    """Index of the strongest voxel; ties go to the smallest R-major linear index."""
    if grid.values.size == 0:
        raise ValueError("empty grid")
    flat = int(np.argmax(grid.values))
    return tuple(int(i) for i in np.unravel_index(flat, grid.values.shape))


def heatmap_slice(grid: PowerGrid, theta_index: int) -> HeatMap2D:
    ny = grid.values.shape[1]
    if not 0 <= theta_index < ny:
        raise IndexError(f"theta index {theta_index} outside [0, {ny})")
    return HeatMap2D(grid.values[:, theta_index, :].copy(), int(theta_index), grid.spec)


def threshold_normalize(grid: PowerGrid, keep_fraction: float) -> PowerGrid:
    """Zero every voxel weaker than ``keep_fraction`` of the grid maximum."""
    if not 0 < keep_fraction <= 1:
        raise ValueError("keep_fraction must lie in (0, 1]")
    v = grid.values
    cut = keep_fraction * v.max() if v.size else 0.0
    return grid.with_values(np.where(v < cut, 0.0, v))


def spherical_to_cartesian(r, theta, phi) -> np.ndarray:
    r, theta, phi = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (r, theta, phi)))
    return np.stack([r * np.cos(theta) * np.sin(phi),
                     r * np.sin(theta),
                     r * np.cos(theta) * np.cos(phi)], axis=-1)


_CORNER_OFFS = np.array(CORNERS)                     # [8, 3]
_EDGE_LO = np.array([a for a, _ in EDGES])           # lower corner of each edge
_EDGE_AXIS = np.array([(a ^ b).bit_length() - 1 for a, b in EDGES])


def marching_cubes(grid: PowerGrid, iso_level: float) -> Mesh:
    """Isosurface of the grid at ``iso_level`` over the voxel-center lattice.

    The grid is embedded in a one-voxel shell of zeros so every surface closes.
    Vertices are placed by linear interpolation along lattice edges in
    (r, theta, phi) and then mapped to Cartesian coordinates.
    """
    if not iso_level > 0:
        raise ValueError("iso_level must be positive")
    if min(grid.values.shape) < 2:
        raise ValueError(f"grid {grid.values.shape} too small for marching cubes")
    vals = np.pad(grid.values, 1)
    inside = vals >= iso_level
    nx, ny, nz = vals.shape
    cells = (nx - 1, ny - 1, nz - 1)

    mask = np.zeros(cells, dtype=np.int64)
    for c, (ox, oy, oz) in enumerate(CORNERS):
        mask |= inside[ox:ox + cells[0], oy:oy + cells[1], oz:oz + cells[2]].astype(np.int64) << c

    flat_mask = mask.ravel()
    active = np.nonzero((flat_mask != 0) & (flat_mask != 255))[0]
    if active.size == 0:
        return Mesh(np.empty((0, 3)), np.empty((0, 3), dtype=np.int64))

    cell_idx = np.stack(np.unravel_index(active, cells), axis=1)  # [A, 3]
    cases = flat_mask[active]
    n_points = vals.size

    tri_keys = []
    for case in np.unique(cases):
        tris = np.array(TRI_TABLE[case])                          # [t, 3] local edges
        sel = cell_idx[cases == case]                             # [s, 3]
        lo = sel[:, None, None, :] + _CORNER_OFFS[_EDGE_LO[tris]][None]   # [s, t, 3, 3]
        lin = np.ravel_multi_index(tuple(np.moveaxis(lo, -1, 0)), vals.shape)
        keys = _EDGE_AXIS[tris][None] * n_points + lin            # [s, t, 3]
        tri_keys.append(keys.reshape(-1, 3))
    tri_keys = np.concatenate(tri_keys)

    uniq, faces = np.unique(tri_keys, return_inverse=True)
    faces = faces.reshape(-1, 3)
    axis, lin = np.divmod(uniq, n_points)
    p0 = np.stack(np.unravel_index(lin, vals.shape), axis=1).astype(float)
    step = np.eye(3)[axis]
    v0 = vals.ravel()[lin]
    v1 = vals.ravel()[np.ravel_multi_index(tuple((p0 + step).astype(np.int64).T), vals.shape)]
    t = (iso_level - v0) / (v1 - v0)
    pos = p0 + t[:, None] * step - 0.5          # padded index -> grid index + 0.5 offset

    spec = grid.spec
    r = spec.r_min + pos[:, 0] * spec.r_res
    theta = spec.theta_min + pos[:, 1] * spec.theta_res
    phi = spec.phi_min + pos[:, 2] * spec.phi_res
    verts = spherical_to_cartesian(r, theta, phi)
    return Mesh(verts, faces)
