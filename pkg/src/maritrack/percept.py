"""Stereo lifting of detections and the synthetic detector.

The detector is a stand-in for a learned model: it projects true container
positions through the camera, drops some, jitters the disparity samples and
sprinkles false positives.  Everything downstream only sees ``Detection``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geom import RigidTransform


@dataclass(frozen=True)
class CameraIntrinsics:
    f: float = 320.0
    cx: float = 320.0
    cy: float = 240.0
    baseline: float = 0.3
    width: int = 640
    height: int = 480
    d_min: float = 1.0
    d_max: float = 200.0
    z_min: float = 0.5
    z_max: float = 50.0
    z_slack: float = 5.0        # pre-clamp depth may exceed [z_min, z_max] by this much
    min_support: int = 9

    def __post_init__(self):
        if not (self.f > 0 and self.baseline > 0):
            raise ValueError("focal length and baseline must be positive")
        if not 0 < self.d_min < self.d_max:
            raise ValueError("need 0 < d_min < d_max")
        if not 0 < self.z_min < self.z_max:
            raise ValueError("need 0 < z_min < z_max")

    @property
    def fB(self) -> float:
        return self.f * self.baseline


@dataclass(frozen=True)
class DetectorModel:
    p_det: float = 0.95
    sigma_d: float = 0.1              # disparity noise, px
    sigma_px: float = 0.0             # box-center noise, px
    lambda_fp: float = 0.0            # false positives per frame
    confidence: tuple[float, float] = (0.90, 0.97)
    patch_size: int = 25
    invalid_fraction: float = 0.0     # fraction of patch samples replaced by 0 (invalid)
    object_size: float = 2.5          # m, only used for the box extent


@dataclass(frozen=True)
class Detection:
    bbox: tuple[float, float, float, float]   # (u, v, w, h), (u, v) = center
    confidence: float
    disparity_patch: tuple[float, ...]
    class_id: int = 0
    truth_id: int | None = None               # simulator bookkeeping, never read by the estimators

    def __post_init__(self):
        if not (self.bbox[2] > 0 and self.bbox[3] > 0):
            raise ValueError("box width and height must be positive")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")


@dataclass(frozen=True)
class Measurement3D:
    position: np.ndarray
    R: np.ndarray
    agent: int
    timestamp: float
    range: float = float("nan")
    truth_id: int | None = None


@dataclass(frozen=True)
class RangeNoiseModel:
    sigma0: float = 0.1
    k: float = 0.02

    def sigma(self, d: float) -> float:
        return self.sigma0 + self.k * d


def median_disparity(det: Detection, intr: CameraIntrinsics) -> float | None:
    """Median of the in-bounds disparity samples, ``None`` without enough support."""
    d = np.asarray(det.disparity_patch, dtype=float)
    valid = d[(d >= intr.d_min) & (d <= intr.d_max)]
    if valid.size == 0 or valid.size < intr.min_support:
        return None
    return float(np.median(valid))


def back_project(center, d: float | None, intr: CameraIntrinsics) -> np.ndarray | None:
    """Pinhole stereo lifting to the camera frame; ``None`` when rejected."""
    if d is None or not np.isfinite(d) or d <= 0:
        return None
    Z = intr.fB / d
    if Z < intr.z_min - intr.z_slack or Z > intr.z_max + intr.z_slack:
        return None
    Z = min(max(Z, intr.z_min), intr.z_max)
    u, v = center
    return np.array([(u - intr.cx) * Z / intr.f, (v - intr.cy) * Z / intr.f, Z])


def project(p_cam, intr: CameraIntrinsics) -> tuple[float, float, float] | None:
    """Camera-frame point to ``(u, v, disparity)``; ``None`` outside the frustum."""
    X, Y, Z = p_cam
    if Z <= 0 or Z > intr.z_max:
        return None
    u = intr.f * X / Z + intr.cx
    v = intr.f * Y / Z + intr.cy
    if not (0.0 <= u <= intr.width and 0.0 <= v <= intr.height):
        return None
    return u, v, intr.fB / Z


def range_noise(d: float, model: RangeNoiseModel) -> np.ndarray:
    """Isotropic measurement covariance ``sigma(d)^2 I``."""
    if d < 0:
        raise ValueError("range must be non-negative")
    s = model.sigma(d)
    return (s * s) * np.eye(3)


def _surface_disparity(u: float, v: float, camera_pose: RigidTransform,
                       intr: CameraIntrinsics) -> float:
    """Disparity of the world z=0 point seen at pixel (u, v); 0 when the ray misses it."""
    ray = camera_pose.rotation @ np.array([(u - intr.cx) / intr.f, (v - intr.cy) / intr.f, 1.0])
    origin = camera_pose.translation
    if ray[2] >= 0 or origin[2] <= 0:
        return 0.0
    depth = -origin[2] / ray[2]          # camera-frame Z, since ray has unit z in the camera
    if depth > intr.z_max:
        return 0.0
    return intr.fB / depth


def synth_detect(truth: dict[int, np.ndarray], camera_pose: RigidTransform,
                 intr: CameraIntrinsics, model: DetectorModel,
                 rng: np.random.Generator) -> list[Detection]:
    """Synthetic detections of ``truth`` (id -> world position) seen from ``camera_pose``.

    ``camera_pose`` is the true ``T_w,c``.  Targets are visited in id order
    and the random draws happen in a fixed sequence, so a seeded generator
    makes the output reproducible.
    """
    cam_T_w = camera_pose.inverse()
    out: list[Detection] = []
    lo, hi = model.confidence
    for tid in sorted(truth):
        p_cam = cam_T_w.apply(truth[tid])
        proj = project(p_cam, intr)
        if proj is None:
            continue
        if rng.random() >= model.p_det:
            continue
        u, v, d_true = proj
        if model.sigma_px > 0:
            u += model.sigma_px * rng.standard_normal()
            v += model.sigma_px * rng.standard_normal()
        patch = d_true + model.sigma_d * rng.standard_normal(model.patch_size)
        if model.invalid_fraction > 0:
            patch[rng.random(model.patch_size) < model.invalid_fraction] = 0.0
        extent = max(intr.f * model.object_size / p_cam[2], 1.0)
        out.append(Detection(
            bbox=(float(u), float(v), float(extent), float(extent)),
            confidence=float(lo + (hi - lo) * rng.random()),
            disparity_patch=tuple(float(x) for x in patch),
            class_id=int(tid) % 5,
            truth_id=int(tid),
        ))
    n_fp = rng.poisson(model.lambda_fp) if model.lambda_fp > 0 else 0
    for _ in range(n_fp):
        u = intr.width * rng.random()
        v = intr.height * rng.random()
        # clutter sits on the sea surface: disparity of the ray's z=0 hit
        d = _surface_disparity(u, v, camera_pose, intr)
        patch = d + model.sigma_d * rng.standard_normal(model.patch_size)
        if d == 0.0:
            patch[:] = 0.0
        out.append(Detection(
            bbox=(float(u), float(v), 8.0, 8.0),
            confidence=float(lo + (hi - lo) * rng.random()) * 0.8,
            disparity_patch=tuple(float(x) for x in patch),
            class_id=int(rng.integers(5)),
        ))
    return out


def lift_detection(det: Detection, intr: CameraIntrinsics, world_T_cam: RigidTransform,
                   noise: RangeNoiseModel, agent: int, timestamp: float) -> Measurement3D | None:
    """Median disparity -> camera point -> world point with range-dependent R."""
    d = median_disparity(det, intr)
    p_cam = back_project(det.bbox[:2], d, intr)
    if p_cam is None:
        return None
    rng_m = float(np.linalg.norm(p_cam))
    return Measurement3D(
        position=world_T_cam.apply(p_cam),
        R=range_noise(rng_m, noise),
        agent=agent,
        timestamp=timestamp,
        range=rng_m,
        truth_id=det.truth_id,
    )
