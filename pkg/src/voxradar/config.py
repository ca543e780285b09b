"""Pipeline configuration, stored as JSON.

Recognised keys (all optional, defaults in brackets)::

    chirp:     f_start_hz [3.3e9], f_stop_hz [10e9], duration_s [1e-3], samples_per_chirp [128]
    geometry:  tx_count [3], rx_count [6], dx_m [0.02], dy_m [0.02]
    grid:      r_min_m, r_max_m, r_res_m, theta_min_deg, theta_max_deg, theta_res_deg,
               phi_min_deg, phi_max_deg, phi_res_deg   [0, 5, 0.1, -45, 45, 10, -90, 90, 5]
    calibration_frames [10]   keep_fraction [0.3]   iso_fraction [0.5]
    detection_floor [1e-6]    noise [0.0]           path_loss [false]
    background_path [null]    model_path [null]     output_dir ["out"]   seed [0]

``detection_floor`` is relative to the calibrated background peak: residual power
below it is treated as zero before thresholding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from voxradar.reconstruct import GridSpec
from voxradar.scenesim import ArrayGeometry, ChirpConfig


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    chirp: ChirpConfig = field(default_factory=ChirpConfig)
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    grid: GridSpec = field(default_factory=GridSpec)
    calibration_frames: int = 10
    keep_fraction: float = 0.3
    iso_fraction: float = 0.5
    detection_floor: float = 1e-6
    noise: float = 0.0
    path_loss: bool = False
    background_path: str | None = None
    model_path: str | None = None
    output_dir: str = "out"
    seed: int = 0

    def __post_init__(self):
        if self.calibration_frames < 1:
            raise ConfigError("calibration_frames must be >= 1")
        if not 0 < self.keep_fraction <= 1:
            raise ConfigError("keep_fraction must lie in (0, 1]")
        if not 0 < self.iso_fraction <= 1:
            raise ConfigError("iso_fraction must lie in (0, 1]")
        if self.detection_floor < 0 or self.noise < 0:
            raise ConfigError("detection_floor and noise must be >= 0")


def config_from_dict(data: dict) -> PipelineConfig:
    try:
        c = data.get("chirp", {})
        chirp = ChirpConfig(float(c.get("f_start_hz", 3.3e9)), float(c.get("f_stop_hz", 10e9)),
                            float(c.get("duration_s", 1e-3)), int(c.get("samples_per_chirp", 128)))
        g = data.get("geometry", {})
        geom = ArrayGeometry(int(g.get("tx_count", 3)), int(g.get("rx_count", 6)),
                             float(g.get("dx_m", 0.02)), float(g.get("dy_m", 0.02)))
        s = data.get("grid", {})
        rad = math.radians
        spec = GridSpec(float(s.get("r_min_m", 0.0)), float(s.get("r_max_m", 5.0)),
                        float(s.get("r_res_m", 0.1)),
                        rad(float(s.get("theta_min_deg", -45))), rad(float(s.get("theta_max_deg", 45))),
                        rad(float(s.get("theta_res_deg", 10))),
                        rad(float(s.get("phi_min_deg", -90))), rad(float(s.get("phi_max_deg", 90))),
                        rad(float(s.get("phi_res_deg", 5))))
        return PipelineConfig(
            chirp, geom, spec,
            calibration_frames=int(data.get("calibration_frames", 10)),
            keep_fraction=float(data.get("keep_fraction", 0.3)),
            iso_fraction=float(data.get("iso_fraction", 0.5)),
            detection_floor=float(data.get("detection_floor", 1e-6)),
            noise=float(data.get("noise", 0.0)),
            path_loss=bool(data.get("path_loss", False)),
            background_path=data.get("background_path"),
            model_path=data.get("model_path"),
            output_dir=str(data.get("output_dir", "out")),
            seed=int(data.get("seed", 0)),
        )
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def config_to_dict(cfg: PipelineConfig) -> dict:
    deg = math.degrees
    s = cfg.grid
    return {
        "chirp": {"f_start_hz": cfg.chirp.f_start, "f_stop_hz": cfg.chirp.f_stop,
                  "duration_s": cfg.chirp.duration,
                  "samples_per_chirp": cfg.chirp.samples_per_chirp},
        "geometry": {"tx_count": cfg.geometry.tx_count, "rx_count": cfg.geometry.rx_count,
                     "dx_m": cfg.geometry.dx, "dy_m": cfg.geometry.dy},
        "grid": {"r_min_m": s.r_min, "r_max_m": s.r_max, "r_res_m": s.r_res,
                 "theta_min_deg": deg(s.theta_min), "theta_max_deg": deg(s.theta_max),
                 "theta_res_deg": deg(s.theta_res),
                 "phi_min_deg": deg(s.phi_min), "phi_max_deg": deg(s.phi_max),
                 "phi_res_deg": deg(s.phi_res)},
        "calibration_frames": cfg.calibration_frames,
        "keep_fraction": cfg.keep_fraction,
        "iso_fraction": cfg.iso_fraction,
        "detection_floor": cfg.detection_floor,
        "noise": cfg.noise,
        "path_loss": cfg.path_loss,
        "background_path": cfg.background_path,
        "model_path": cfg.model_path,
        "output_dir": cfg.output_dir,
        "seed": cfg.seed,
    }


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return config_from_dict(data)


def save_config(path: str | Path, cfg: PipelineConfig) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")
