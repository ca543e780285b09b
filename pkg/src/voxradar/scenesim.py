"""Forward model: complex MIMO baseband samples for scenes of point reflectors.

Sample model for transmit antenna ``m``, receive antenna ``n`` and chirp sample ``t``::

    s[m, n, t] = sum_k A_k * exp(-j*2*pi*(v*r_k/c)*t_sec)
                           * exp(-j*(2*pi/lam)*cos(theta_k)*(n*dy*sin(phi_k) + m*dx*cos(phi_k)))

with ``t_sec = t * duration / samples_per_chirp``. ``r`` is the one-way equivalent
range, the same quantity the reconstruction grid indexes. :func:`steering_phase` and
:func:`range_phase` are the single definition of both phase terms; the reconstructor
applies their negatives.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


class MemoryBudgetError(ValueError):
    """Requested array would exceed the configured element budget."""


class OutOfLimitsError(ValueError):
    """A position falls outside the simulator's angular limits."""


class Tag(str, enum.Enum):
    TARGET = "target"
    BACKGROUND = "background"
    GHOST = "ghost"


@dataclass(frozen=True)
class SimLimits:
    theta_min: float = -math.pi / 4
    theta_max: float = math.pi / 4
    phi_min: float = -math.pi / 2
    phi_max: float = math.pi / 2
    max_elements: int = 1 << 26  # complex samples per frame

    def contains(self, theta: float, phi: float) -> bool:
        return (self.theta_min <= theta <= self.theta_max
                and self.phi_min <= phi <= self.phi_max)


@dataclass(frozen=True)
class Reflector:
    r: float
    theta: float
    phi: float
    amplitude: float = 1.0
    tag: Tag = Tag.TARGET

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ValueError(f"reflector range must be positive, got {self.r}")
        if not (self.amplitude >= 0 and math.isfinite(self.amplitude)):
            raise ValueError(f"reflector amplitude must be >= 0, got {self.amplitude}")
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("reflector angles must be finite")
        object.__setattr__(self, "tag", Tag(self.tag))

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.r, self.theta, self.phi)


@dataclass(frozen=True)
class Scene:
    reflectors: tuple[Reflector, ...] = ()
    epoch: int = 0

    def __post_init__(self):
        object.__setattr__(self, "reflectors", tuple(self.reflectors))

    def __len__(self) -> int:
        return len(self.reflectors)

    def union(self, other: "Scene") -> "Scene":
        return Scene(self.reflectors + other.reflectors, self.epoch)


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear path in (r, theta, phi) keyed by integer epochs."""

    waypoints: tuple[tuple[int, tuple[float, float, float]], ...]
    amplitude: float = 1.0
    tag: Tag = Tag.TARGET

    def __post_init__(self):
        wps = tuple((int(e), tuple(float(x) for x in pos)) for e, pos in self.waypoints)
        if not wps:
            raise ValueError("trajectory needs at least one waypoint")
        epochs = [e for e, _ in wps]
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise ValueError("trajectory epochs must be strictly increasing")
        object.__setattr__(self, "waypoints", wps)
        object.__setattr__(self, "tag", Tag(self.tag))

    @property
    def span(self) -> tuple[int, int]:
        return self.waypoints[0][0], self.waypoints[-1][0]

    def position_at(self, epoch: int) -> tuple[float, float, float]:
        first, last = self.span
        if not first <= epoch <= last:
            raise ValueError(f"epoch {epoch} outside trajectory span [{first}, {last}]")
        for (e0, p0), (e1, p1) in zip(self.waypoints, self.waypoints[1:]):
            if e0 <= epoch <= e1:
                if epoch == e0:
                    return p0
                if epoch == e1:
                    return p1
                w = (epoch - e0) / (e1 - e0)
                return tuple(a + w * (b - a) for a, b in zip(p0, p1))
        return self.waypoints[0][1]


@dataclass(frozen=True)
class ChirpConfig:
    """FMCW sweep. Defaults span the 3.3-10 GHz band over 1 ms with 128 samples."""

    f_start: float = 3.3e9
    f_stop: float = 10.0e9
    duration: float = 1e-3
    samples_per_chirp: int = 128

    def __post_init__(self):
        if not self.f_stop > self.f_start > 0:
            raise ValueError("need f_stop > f_start > 0")
        if not self.duration > 0:
            raise ValueError("chirp duration must be positive")
        if int(self.samples_per_chirp) < 2:
            raise ValueError("samples_per_chirp must be >= 2")

    @property
    def slope(self) -> float:
        """Chirp slope v = df/dt in Hz/s."""
        return (self.f_stop - self.f_start) / self.duration

    @property
    def f_center(self) -> float:
        return 0.5 * (self.f_start + self.f_stop)

    @property
    def carrier_lambda(self) -> float:
        return SPEED_OF_LIGHT / self.f_center

    def sample_times(self) -> np.ndarray:
        return np.arange(self.samples_per_chirp) * (self.duration / self.samples_per_chirp)


@dataclass(frozen=True)
class ArrayGeometry:
    tx_count: int = 3
    rx_count: int = 6
    dx: float = 0.02
    dy: float = 0.02

    def __post_init__(self):
        if self.tx_count < 1 or self.rx_count < 1:
            raise ValueError("antenna counts must be >= 1")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("antenna spacings must be positive")


@dataclass
class RawFrame:
    samples: np.ndarray  # complex, [tx, rx, t]
    epoch: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 3:
            raise ValueError("RawFrame samples must be 3-D [tx][rx][t]")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("RawFrame samples must be finite")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.samples.shape

    def check_matches(self, geom: ArrayGeometry, chirp: ChirpConfig) -> None:
        want = (geom.tx_count, geom.rx_count, chirp.samples_per_chirp)
        if self.samples.shape != want:
            raise ValueError(f"frame shape {self.samples.shape} does not match {want}")


def steering_phase(geom: ArrayGeometry, chirp: ChirpConfig, theta, phi) -> np.ndarray:
    """Emission steering phase for arrival direction(s) (theta, phi).

    Returns an array of shape ``broadcast(theta, phi).shape + (M, N)``. The simulator
    multiplies by ``exp(-1j * phase)``; the reconstructor by ``exp(+1j * phase)``.
    """
    theta = np.asarray(theta, dtype=float)[..., None, None]
    phi = np.asarray(phi, dtype=float)[..., None, None]
    m = np.arange(geom.tx_count, dtype=float)[:, None]
    n = np.arange(geom.rx_count, dtype=float)[None, :]
    k = 2.0 * np.pi / chirp.carrier_lambda
    return k * np.cos(theta) * (n * geom.dy * np.sin(phi) + m * geom.dx * np.cos(phi))


def range_phase(chirp: ChirpConfig, r) -> np.ndarray:
    """Beat-tone phase 2*pi*(v*r/c)*t_sec, shape ``r.shape + (T,)``."""
    r = np.asarray(r, dtype=float)[..., None]
    return 2.0 * np.pi * (chirp.slope * r / SPEED_OF_LIGHT) * chirp.sample_times()


def check_budget(n_elements: int, limits: SimLimits) -> None:
    if n_elements > limits.max_elements:
        raise MemoryBudgetError(
            f"{n_elements} elements exceeds budget of {limits.max_elements}")


def synthesize_frame(scene: Scene, geom: ArrayGeometry, chirp: ChirpConfig, *,
                     limits: SimLimits = SimLimits(), noise: float = 0.0, seed: int = 0,
                     path_loss: bool = False) -> RawFrame:
    """Superpose every reflector's return into one RawFrame.

    Contributions are accumulated one reflector at a time in scene order so that
    the result is deterministic. With ``noise > 0`` zero-mean Gaussian noise of that
    standard deviation is added to each real and imaginary component, seeded by
    ``(seed, scene.epoch)``.
    """
    shape = (geom.tx_count, geom.rx_count, chirp.samples_per_chirp)
    check_budget(math.prod(shape), limits)
    for refl in scene.reflectors:
        if not limits.contains(refl.theta, refl.phi):
            raise OutOfLimitsError(f"reflector at theta={refl.theta}, phi={refl.phi} "
                                   "is outside the angular limits")

    out = np.zeros(shape, dtype=complex)
    for refl in scene.reflectors:
        amp = refl.amplitude / refl.r**2 if path_loss else refl.amplitude
        steer = np.exp(-1j * steering_phase(geom, chirp, refl.theta, refl.phi))
        rng_tone = np.exp(-1j * range_phase(chirp, refl.r))
        out += amp * (steer[:, :, None] * rng_tone[None, None, :])

    if noise > 0:
        rng = np.random.default_rng([int(seed), int(scene.epoch)])
        out += noise * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return RawFrame(out, scene.epoch)


def inject_ghost(scene: Scene, source: Reflector, detour_extra: float,
                 angle_error: tuple[float, float] = (0.0, 0.0), *,
                 amplitude_fraction: float = 0.5,
                 limits: SimLimits = SimLimits()) -> Scene:
    """Append a wrong-path return of ``source``: longer range, offset angles."""
    if source not in scene.reflectors:
        raise ValueError("source reflector is not part of the scene")
    if not detour_extra > 0:
        raise ValueError("detour_extra must be > 0")
    if amplitude_fraction < 0:
        raise ValueError("amplitude_fraction must be >= 0")
    d_theta, d_phi = angle_error
    theta, phi = source.theta + d_theta, source.phi + d_phi
    if not limits.contains(theta, phi):
        raise OutOfLimitsError(f"ghost at theta={theta}, phi={phi} is outside the angular limits")
    ghost = Reflector(source.r + detour_extra, theta, phi,
                      source.amplitude * amplitude_fraction, Tag.GHOST)
    return replace(scene, reflectors=scene.reflectors + (ghost,))


def scene_at_epoch(trajectories: Sequence[Trajectory], epoch: int,
                   static: Iterable[Reflector] = ()) -> Scene:
    refls = list(static)
    for traj in trajectories:
        r, theta, phi = traj.position_at(epoch)
        refls.append(Reflector(r, theta, phi, traj.amplitude, traj.tag))
    return Scene(tuple(refls), epoch)


@dataclass
class SceneScript:
    """Contents of a scene definition file: static reflectors, moving ones, ghost events."""

    static: list[Reflector] = field(default_factory=list)
    trajectories: list[Trajectory] = field(default_factory=list)
    ghosts: list[dict] = field(default_factory=list)

    def scene(self, epoch: int, limits: SimLimits = SimLimits()) -> Scene:
        sc = scene_at_epoch(self.trajectories, epoch, self.static)
        for g in self.ghosts:
            if int(g["epoch"]) != epoch:
                continue
            src = sc.reflectors[int(g.get("source", 0))]
            sc = inject_ghost(sc, src, float(g["detour_m"]),
                              (float(g.get("dtheta_rad", 0.0)), float(g.get("dphi_rad", 0.0))),
                              amplitude_fraction=float(g.get("amplitude_fraction", 0.5)),
                              limits=limits)
        return sc


def _reflector_from_dict(d: dict) -> Reflector:
    return Reflector(float(d["r_m"]), float(d["theta_rad"]), float(d["phi_rad"]),
                     float(d.get("amplitude", 1.0)), Tag(d.get("tag", "target")))


def scene_script_from_dict(data: dict) -> SceneScript:
    static = [_reflector_from_dict(d) for d in data.get("reflectors", [])]
    trajs = []
    for t in data.get("trajectories", []):
        wps = [(int(w["epoch"]), (float(w["r_m"]), float(w["theta_rad"]), float(w["phi_rad"])))
               for w in t["waypoints"]]
        trajs.append(Trajectory(tuple(wps), float(t.get("amplitude", 1.0)),
                                Tag(t.get("tag", "target"))))
    return SceneScript(static, trajs, list(data.get("ghosts", [])))


def scene_script_to_dict(script: SceneScript) -> dict:
    def refl(r: Reflector) -> dict:
        return {"r_m": r.r, "theta_rad": r.theta, "phi_rad": r.phi,
                "amplitude": r.amplitude, "tag": r.tag.value}

    return {
        "reflectors": [refl(r) for r in script.static],
        "trajectories": [
            {"amplitude": t.amplitude, "tag": t.tag.value,
             "waypoints": [{"epoch": e, "r_m": p[0], "theta_rad": p[1], "phi_rad": p[2]}
                           for e, p in t.waypoints]}
            for t in script.trajectories],
        "ghosts": list(script.ghosts),
    }
