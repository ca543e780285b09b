"""Inverse model: per-voxel reflection power by steered coherent summation.

Each voxel ``(r, theta, phi)`` is scored by multiplying the frame with the complex
conjugate of the forward model's range and steering phasors and taking the modulus
of the total over transmit antennas, receive antennas and chirp samples. A reflector
sitting exactly on a voxel center therefore sums to ``M * N * T * amplitude`` there.

The steering term depends on elevation only through ``cos(theta)``, so voxels at
``+theta`` and ``-theta`` (same r, phi) always receive identical power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from voxradar.scenesim import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    ChirpConfig,
    MemoryBudgetError,
    RawFrame,
    SimLimits,
    check_budget,
    range_phase,
    steering_phase,
)

# Quotients within this of an integer are treated as exact before taking the ceiling,
# so that e.g. radians(90) / radians(2) yields 45 and not 46.
_DIM_EPS = 1e-9


@dataclass(frozen=True)
class GridSpec:
    r_min: float = 0.0
    r_max: float = 5.0
    r_res: float = 0.1
    theta_min: float = -math.pi / 4
    theta_max: float = math.pi / 4
    theta_res: float = math.radians(10.0)
    phi_min: float = -math.pi / 2
    phi_max: float = math.pi / 2
    phi_res: float = math.radians(5.0)

    def __post_init__(self):
        for name in ("r", "theta", "phi"):
            lo, hi, res = (getattr(self, f"{name}_{s}") for s in ("min", "max", "res"))
            if not all(math.isfinite(x) for x in (lo, hi, res)):
                raise ValueError(f"{name} axis limits must be finite")
            if not hi > lo:
                raise ValueError(f"{name}_max must exceed {name}_min")
            if not res > 0:
                raise ValueError(f"{name}_res must be positive")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.r_min, self.r_max, self.r_res,
                self.theta_min, self.theta_max, self.theta_res,
                self.phi_min, self.phi_max, self.phi_res)

    @property
    def dims(self) -> tuple[int, int, int]:
        return grid_dims(self)

    def r_centers(self) -> np.ndarray:
        return self.r_min + (np.arange(self.dims[0]) + 0.5) * self.r_res

    def theta_centers(self) -> np.ndarray:
        return self.theta_min + (np.arange(self.dims[1]) + 0.5) * self.theta_res

    def phi_centers(self) -> np.ndarray:
        return self.phi_min + (np.arange(self.dims[2]) + 0.5) * self.phi_res

    def center(self, index: tuple[int, int, int]) -> tuple[float, float, float]:
        i, j, k = index
        return (self.r_min + (i + 0.5) * self.r_res,
                self.theta_min + (j + 0.5) * self.theta_res,
                self.phi_min + (k + 0.5) * self.phi_res)

    def index_of(self, r: float, theta: float, phi: float) -> tuple[int, int, int]:
        """Index of the voxel containing a position (clipped to the grid)."""
        dims = self.dims
        idx = (math.floor((r - self.r_min) / self.r_res),
               math.floor((theta - self.theta_min) / self.theta_res),
               math.floor((phi - self.phi_min) / self.phi_res))
        return tuple(min(max(i, 0), d - 1) for i, d in zip(idx, dims))

    def contains(self, r: float, theta: float, phi: float) -> bool:
        return (self.r_min <= r <= self.r_max
                and self.theta_min <= theta <= self.theta_max
                and self.phi_min <= phi <= self.phi_max)


@dataclass
class PowerGrid:
    values: np.ndarray  # [r][theta][phi], float64, >= 0
    spec: GridSpec
    epoch: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.spec.dims:
            raise ValueError(f"grid shape {self.values.shape} != spec dims {self.spec.dims}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")
        if np.any(self.values < 0):
            raise ValueError("grid values must be non-negative")

    def with_values(self, values: np.ndarray) -> "PowerGrid":
        return PowerGrid(values, self.spec, self.epoch)


def range_from_freq_shift(delta_f: float, slope_v: float) -> float:
    """FMCW range from the transmit/receive frequency difference: c*|df| / (2*v)."""
    if not slope_v > 0:
        raise ValueError("chirp slope must be positive")
    return SPEED_OF_LIGHT * abs(delta_f) / (2.0 * slope_v)


def grid_dims(spec: GridSpec) -> tuple[int, int, int]:
    def n(lo, hi, res):
        q = (hi - lo) / res
        nearest = round(q)
        if abs(q - nearest) <= _DIM_EPS * max(1.0, abs(q)):
            return max(int(nearest), 1)
        return math.ceil(q)

    return (n(spec.r_min, spec.r_max, spec.r_res),
            n(spec.theta_min, spec.theta_max, spec.theta_res),
            n(spec.phi_min, spec.phi_max, spec.phi_res))


def direction_power(row_signals, d: float, lam: float, phi: float) -> float:
    """Beam power of one antenna row toward ``phi``: |sum_n s[n] exp(-j 2 pi n d sin(phi) / lam)|."""
    s = np.asarray(row_signals, dtype=complex).ravel()
    if s.size < 1:
        raise ValueError("need at least one antenna signal")
    n = np.arange(s.size)
    return float(abs(np.sum(s * np.exp(-2j * np.pi * n * d * math.sin(phi) / lam))))


def distance_power(signals, slope_v: float, r: float, chirp: ChirpConfig) -> float:
    """Range-matched power of an [N][T] block, dechirped at range ``r``."""
    s = np.asarray(signals, dtype=complex)
    if s.ndim != 2 or s.shape[1] != chirp.samples_per_chirp:
        raise ValueError(f"signals must be [N][{chirp.samples_per_chirp}], got {s.shape}")
    phase = 2.0 * np.pi * (slope_v * r / SPEED_OF_LIGHT) * chirp.sample_times()
    return float(abs(np.sum(s * np.exp(1j * phase)[None, :])))


def voxel_power(frame: RawFrame, geom: ArrayGeometry, chirp: ChirpConfig,
                voxel: tuple[float, float, float], spec: GridSpec | None = None) -> float:
    """Direct-sum power at one voxel; the reference every faster path is checked against."""
    r, theta, phi = voxel
    if spec is not None:
        if not spec.contains(r, theta, phi):
            raise ValueError(f"voxel {voxel} outside grid limits")
    elif not (r > 0 and SimLimits().contains(theta, phi)):
        raise ValueError(f"voxel {voxel} outside angular limits")
    frame.check_matches(geom, chirp)
    return _direct_power(frame.samples, geom, chirp, r, theta, phi)


def _direct_power(samples, geom, chirp, r, theta, phi) -> float:
    phase = (steering_phase(geom, chirp, theta, phi)[:, :, None]
             + range_phase(chirp, r)[None, None, :])
    return float(abs(np.sum(samples * np.exp(1j * phase))))


def reconstruct_grid_naive(frame: RawFrame, geom: ArrayGeometry, chirp: ChirpConfig,
                           spec: GridSpec) -> PowerGrid:
    frame.check_matches(geom, chirp)
    dims = spec.dims
    rc, tc, pc = spec.r_centers(), spec.theta_centers(), spec.phi_centers()
    out = np.empty(dims)
    for i in range(dims[0]):
        for j in range(dims[1]):
            for k in range(dims[2]):
                out[i, j, k] = _direct_power(frame.samples, geom, chirp, rc[i], tc[j], pc[k])
    return PowerGrid(out, spec, frame.epoch)


@lru_cache(maxsize=16)
def _tables(geom: ArrayGeometry, chirp: ChirpConfig, spec: GridSpec):
    """Dechirp phasors [X, T] and steering phasors [Y*Z, M*N] for one configuration."""
    rng_tab = np.exp(1j * range_phase(chirp, spec.r_centers()))
    theta, phi = np.meshgrid(spec.theta_centers(), spec.phi_centers(), indexing="ij")
    steer = np.exp(1j * steering_phase(geom, chirp, theta, phi))
    steer = steer.reshape(theta.size, geom.tx_count * geom.rx_count)
    rng_tab.setflags(write=False)
    steer.setflags(write=False)
    return rng_tab, steer


def reconstruct_grid(frame: RawFrame, geom: ArrayGeometry, chirp: ChirpConfig,
                     spec: GridSpec, *, limits: SimLimits = SimLimits()) -> PowerGrid:
    """Power at every voxel center.

    Factored evaluation: dechirp each antenna pair against every range bin, then
    beamform the resulting [M*N, X] block against every (theta, phi) steering vector.
    """
    frame.check_matches(geom, chirp)
    x, y, z = spec.dims
    mn = geom.tx_count * geom.rx_count
    check_budget(max(x * y * z, y * z * mn, x * chirp.samples_per_chirp), limits)
    rng_tab, steer = _tables(geom, chirp, spec)
    dechirped = frame.samples.reshape(mn, -1) @ rng_tab.T      # [MN, X]
    power = np.abs(dechirped.T @ steer.T)                       # [X, Y*Z]
    return PowerGrid(power.reshape(x, y, z), spec, frame.epoch)


__all__ = [
    "GridSpec",
    "MemoryBudgetError",
    "PowerGrid",
    "direction_power",
    "distance_power",
    "grid_dims",
    "range_from_freq_shift",
    "reconstruct_grid",
    "reconstruct_grid_naive",
    "voxel_power",
]
