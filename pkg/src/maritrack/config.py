"""Scenario configuration: YAML in, validated immutable models out."""
from __future__ import annotations

from pathlib import Path
from typing import Annotated

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import alloc, bus, mot, nav, percept, view

Vec3 = tuple[float, float, float]
Pos = Annotated[float, Field(gt=0)]
NonNeg = Annotated[float, Field(ge=0)]
Prob = Annotated[float, Field(ge=0, le=1)]


class ConfigError(ValueError):
    """Validation failure; ``errors`` holds ``(field path, message)`` pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{p}: {m}" for p, m in errors))


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, strict=False)


class Rates(_Model):
    tick_hz: Pos = 10.0
    comm_hz: Pos = 2.0
    alloc_hz: Pos = 1.0


class Extrinsic(_Model):
    translation: Vec3 = (0.0, 0.0, 0.0)
    ypr_deg: Vec3 = (0.0, 0.0, 0.0)

    def transform(self):
        from .geom import RigidTransform
        return RigidTransform.from_ypr(self.translation, self.ypr_deg)


# downward-looking optical frame: camera z -> body -z, camera x -> body -y
DOWNWARD_CAMERA = Extrinsic(translation=(0.0, 0.0, -0.1), ypr_deg=(-90.0, 0.0, 180.0))


class Agent(_Model):
    id: Annotated[int, Field(ge=0)]
    start: Vec3
    v_max: Pos = 3.0
    odom_T_body: Extrinsic = Extrinsic()
    body_T_camera: Extrinsic = DOWNWARD_CAMERA
    patrol: list[Vec3] = []


class Container(_Model):
    id: Annotated[int, Field(ge=0)]
    position: Vec3
    drift: Vec3 = (0.0, 0.0, 0.0)
    bob_amplitude: NonNeg = 0.0
    bob_period: Pos = 6.0


class Vessel(_Model):
    position: Vec3 = (0.0, 0.0, 0.0)
    ypr_deg: Vec3 = (0.0, 0.0, 0.0)
    odom_T_base: Extrinsic = Extrinsic()


class Sensor(_Model):
    f: Pos = 320.0
    cx: NonNeg = 320.0
    cy: NonNeg = 240.0
    baseline: Pos = 0.3
    width: Annotated[int, Field(gt=0)] = 640
    height: Annotated[int, Field(gt=0)] = 480
    d_min: Pos = 1.0
    d_max: Pos = 200.0
    z_min: Pos = 0.5
    z_max: Pos = 50.0
    z_slack: NonNeg = 5.0
    min_support: Annotated[int, Field(ge=1)] = 9
    patch_size: Annotated[int, Field(ge=1)] = 25
    p_det: Prob = 0.95
    sigma_d: NonNeg = 0.1
    sigma_px: NonNeg = 0.0
    lambda_fp: NonNeg = 0.0
    confidence: tuple[Prob, Prob] = (0.90, 0.97)
    invalid_fraction: Prob = 0.0
    object_size: Pos = 2.5
    sigma0: Pos = 0.1
    k: NonNeg = 0.02

    @model_validator(mode="after")
    def _bounds(self):
        if not self.d_min < self.d_max:
            raise ValueError("d_min must be below d_max")
        if not self.z_min < self.z_max:
            raise ValueError("z_min must be below z_max")
        if self.confidence[0] > self.confidence[1]:
            raise ValueError("confidence range is reversed")
        return self

    def intrinsics(self) -> percept.CameraIntrinsics:
        return percept.CameraIntrinsics(
            self.f, self.cx, self.cy, self.baseline, self.width, self.height,
            self.d_min, self.d_max, self.z_min, self.z_max, self.z_slack, self.min_support)

    def detector(self) -> percept.DetectorModel:
        return percept.DetectorModel(self.p_det, self.sigma_d, self.sigma_px, self.lambda_fp,
                                     tuple(self.confidence), self.patch_size,
                                     self.invalid_fraction, self.object_size)

    def noise(self) -> percept.RangeNoiseModel:
        return percept.RangeNoiseModel(self.sigma0, self.k)


class Nav(_Model):
    process_psd: Pos = 0.5
    gps_std: Pos = 0.3
    imu_std: Pos = 0.1
    inflation: Annotated[float, Field(ge=1)] = 4.0
    maneuver_threshold: Pos = 1.0
    init_pos_var: Pos = 100.0
    init_vel_var: Pos = 4.0
    init_acc_var: Pos = 1.0
    gps_divisor: Annotated[int, Field(ge=1)] = 1
    imu_divisor: Annotated[int, Field(ge=1)] = 1
    truth_noise_scale: NonNeg = 1.0
    attitude_noise_deg: NonNeg = 0.0

    def noise(self) -> nav.NavNoiseConfig:
        return nav.NavNoiseConfig(self.process_psd, self.gps_std, self.imu_std, self.inflation,
                                  self.init_pos_var, self.init_vel_var, self.init_acc_var)


class Mot(_Model):
    tau_gate: Pos = mot.CHI2_3DOF_99
    n_confirm: Annotated[int, Field(ge=1)] = 3
    t_prune: Pos = 5.0
    t_prune_tentative: Pos = 1.0
    tau_prune_cov: float = 6.0
    process_psd: NonNeg = 0.01
    init_vel_var: Pos = 1.0

    def params(self) -> mot.MotConfig:
        return mot.MotConfig(**self.model_dump())


class Fuse(_Model):
    tau_fuse: Pos = mot.CHI2_3DOF_99
    process_psd: NonNeg = 0.01
    t_stale: Pos = 5.0


class Bus(_Model):
    drop_prob: Prob = 0.0


class Alloc(_Model):
    eta: NonNeg = 1.0
    beta: NonNeg = 0.1
    rho: NonNeg = 0.2
    gamma: NonNeg = 0.2
    kappa: NonNeg = 1e3
    d_max: Pos = 100.0
    r_safe: Pos = 0.5
    K: Annotated[int, Field(ge=1)] = 2

    def weights(self) -> alloc.AllocWeights:
        return alloc.AllocWeights(self.eta, self.beta, self.rho, self.gamma, self.kappa,
                                  self.d_max, self.r_safe)


class Mission(_Model):
    r_h: Pos = 4.0
    h: Pos = 6.0
    L: Annotated[int, Field(ge=1)] = 8
    eps: Pos = 0.1
    tau_logdet: float = -6.0
    tau_dj: NonNeg = 0.05
    arrive_tol: Pos = 0.5

    def ring(self) -> view.RingParams:
        return view.RingParams(self.r_h, self.h, self.L, self.eps)


class Eval(_Model):
    radius: Pos = 5.0


class ScenarioConfig(_Model):
    seed: Annotated[int, Field(ge=0)] = 0
    duration: Pos = 60.0
    rates: Rates = Rates()
    vessel: Vessel = Vessel()
    agents: list[Agent]
    containers: list[Container] = []
    sensor: Sensor = Sensor()
    nav: Nav = Nav()
    mot: Mot = Mot()
    fuse: Fuse = Fuse()
    bus: Bus = Bus()
    alloc: Alloc = Alloc()
    mission: Mission = Mission()
    eval: Eval = Eval()

    @model_validator(mode="after")
    def _unique_ids(self):
        for name, items in (("agents", self.agents), ("containers", self.containers)):
            ids = [x.id for x in items]
            if len(ids) != len(set(ids)):
                raise ValueError(f"duplicate {name[:-1]} id")
        if not self.agents:
            raise ValueError("at least one agent is required")
        return self

    @property
    def dt(self) -> float:
        return 1.0 / self.rates.tick_hz

    def bus_config(self) -> bus.BusConfig:
        return bus.BusConfig(1.0 / self.rates.comm_hz, self.bus.drop_prob)


def _loc(err) -> str:
    return ".".join(str(p) for p in err["loc"]) or "<root>"


def from_dict(data: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError([(_loc(e), e["msg"]) for e in exc.errors()]) from None


def parse_config(path) -> ScenarioConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([("<file>", f"invalid YAML: {exc}")]) from None
    if not isinstance(data, dict):
        raise ConfigError([("<root>", "top level must be a mapping")])
    return from_dict(data)


def to_dict(cfg: ScenarioConfig) -> dict:
    """Fully expanded config (defaults included) as plain JSON-compatible data."""
    return cfg.model_dump(mode="json")


def emit_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)
