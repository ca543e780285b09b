"""Scripted desk-scale scenes: static room clutter, a walking body, wrong-path ghosts.

Used to build labelled frame sets for the classifier and scripted streams for the
pipeline. Everything is a pure function of its arguments and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from voxradar.calibrate import BackgroundModel, accumulate_background, subtract_background
from voxradar.framefilter.inputs import extract_input
from voxradar.imaging import threshold_normalize
from voxradar.reconstruct import GridSpec, PowerGrid, reconstruct_grid
from voxradar.scenesim import (
    ArrayGeometry,
    ChirpConfig,
    Reflector,
    Scene,
    Tag,
    Trajectory,
    inject_ghost,
    synthesize_frame,
)

DEG = math.pi / 180


@dataclass(frozen=True)
class Rig:
    chirp: ChirpConfig = ChirpConfig(samples_per_chirp=128)
    geom: ArrayGeometry = ArrayGeometry(tx_count=3, rx_count=6, dx=0.02, dy=0.02)
    # 0.05 m range bins: coarser bins would undersample the ~0.045 m range resolution.
    spec: GridSpec = GridSpec(0.8, 2.4, 0.05, -45 * DEG, 45 * DEG, 10 * DEG,
                              -90 * DEG, 90 * DEG, 6 * DEG)
    keep_fraction: float = 0.3


def room_clutter() -> list[Reflector]:
    """Fixed furniture and wall returns."""
    return [
        Reflector(2.325, 0.0, -63 * DEG, 0.8, Tag.BACKGROUND),
        Reflector(2.275, 5 * DEG, 57 * DEG, 0.7, Tag.BACKGROUND),
        Reflector(1.025, -25 * DEG, -81 * DEG, 0.6, Tag.BACKGROUND),
        Reflector(1.925, -15 * DEG, 81 * DEG, 0.5, Tag.BACKGROUND),
    ]


def body(r: float, theta: float, phi: float, rng: np.random.Generator | None = None,
         amplitude: float = 1.0) -> list[Reflector]:
    """A standing person as a small cluster: head, torso and two legs."""
    parts = [(0.0, 12 * DEG, 0.0, 0.6), (0.0, 0.0, 0.0, 1.0),
             (0.03, -15 * DEG, -2 * DEG, 0.5), (0.03, -15 * DEG, 2 * DEG, 0.5)]
    out = []
    for dr, dth, dph, a in parts:
        if rng is not None:
            a *= rng.uniform(0.8, 1.2)
            dr += rng.uniform(-0.02, 0.02)
        th = min(max(theta + dth, -45 * DEG), 45 * DEG)
        out.append(Reflector(r + dr, th, phi + dph, amplitude * a, Tag.TARGET))
    return out


def calibrate_rig(rig: Rig, clutter: list[Reflector], frames: int = 10) -> BackgroundModel:
    grids = []
    for e in range(frames):
        f = synthesize_frame(Scene(tuple(clutter), e), rig.geom, rig.chirp)
        grids.append(reconstruct_grid(f, rig.geom, rig.chirp, rig.spec))
    return accumulate_background(grids)


def process(scene: Scene, rig: Rig, bg: BackgroundModel | None) -> PowerGrid:
    """Simulate, reconstruct, subtract background, drop low-power voxels."""
    grid = reconstruct_grid(synthesize_frame(scene, rig.geom, rig.chirp), rig.geom, rig.chirp,
                            rig.spec)
    if bg is not None:
        grid = subtract_background(grid, bg)
    if grid.values.max() > 0:
        grid = threshold_normalize(grid, rig.keep_fraction)
    return grid


def random_ghost(scene: Scene, rng: np.random.Generator, rig: Rig) -> Scene:
    """Wrong-path return off one body part: longer range, shifted angles."""
    targets = [r for r in scene.reflectors if r.tag is Tag.TARGET]
    src = targets[int(rng.integers(len(targets)))]
    r_room = rig.spec.r_max - 0.1 - src.r
    detour = float(rng.uniform(0.2, min(0.4, max(r_room, 0.21))))
    d_theta = float(np.clip(rng.uniform(-0.2, 0.2) + src.theta, -44 * DEG, 44 * DEG) - src.theta)
    d_phi = float(np.clip(rng.uniform(-0.15, 0.15) + src.phi, -85 * DEG, 85 * DEG) - src.phi)
    strength = float(rng.uniform(0.5, 0.9))  # relative to the whole body's return
    total = sum(r.amplitude for r in targets)
    return inject_ghost(scene, src, detour, (d_theta, d_phi),
                        amplitude_fraction=strength * total / src.amplitude)


def random_body_position(rng: np.random.Generator, rig: Rig) -> tuple[float, float, float]:
    r = float(rng.uniform(rig.spec.r_min + 0.15, rig.spec.r_max - 0.8))
    theta = float(rng.uniform(-10 * DEG, 10 * DEG))
    phi = float(rng.uniform(-60 * DEG, 60 * DEG))
    return r, theta, phi


def labelled_frames(n: int, seed: int = 0, rig: Rig = Rig(),
                    bg: BackgroundModel | None = None) -> list[tuple[PowerGrid, int]]:
    """``n`` processed grids, alternating regular (label 0) and ghost-injected (label 1)."""
    rng = np.random.default_rng(seed)
    clutter = room_clutter()
    if bg is None:
        bg = calibrate_rig(rig, clutter)
    out = []
    for i in range(n):
        pos = random_body_position(rng, rig)
        scene = Scene(tuple(clutter + body(*pos, rng=rng)), i)
        label = i % 2
        if label:
            scene = random_ghost(scene, rng, rig)
        out.append((process(scene, rig, bg), label))
    return out


def classifier_dataset(n: int, seed: int = 0, rig: Rig = Rig()) -> tuple[np.ndarray, np.ndarray]:
    frames = labelled_frames(n, seed, rig)
    images = np.stack([extract_input(g) for g, _ in frames])
    labels = np.array([lbl for _, lbl in frames])
    return images, labels


def walkby_trajectory(rig: Rig, epochs: int = 9, start_index=(26, 4, 24),
                      turn_index=(10, 4, 16), theta_index: int = 4) -> Trajectory:
    """Approach from the right then retreat, waypoints on voxel centers.

    Each epoch moves by a whole number of voxels so the true position is always a
    voxel center. The turn happens at the middle epoch.
    """
    mid = epochs // 2
    spec = rig.spec
    wps = []
    for e in range(epochs):
        w = 1 - e / mid if e <= mid else (e - mid) / (epochs - 1 - mid)
        i = round(turn_index[0] + w * (start_index[0] - turn_index[0]))
        k = round(turn_index[2] + w * (start_index[2] - turn_index[2]))
        wps.append((e, spec.center((i, theta_index, k))))
    return Trajectory(tuple(wps), 1.0, Tag.TARGET)
