"""Rigid transforms and the per-scenario frame tree.

Frame naming: ``w`` is the shared world frame; each UAV ``j`` owns ``o{j}``
(odometry), ``b{j}`` (body) and ``c{j}`` (camera); the surface vessel owns
``so`` (odometry) and ``s`` (base).  ``T_ab`` maps coordinates expressed in
frame ``b`` into frame ``a``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_ORTHO_TOL = 1e-9


class MissingFrameError(KeyError):
    """Raised when a transform chain references an unknown link."""


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_ypr(yaw: float, pitch: float, roll: float, degrees: bool = True) -> np.ndarray:
    """Z-Y-X intrinsic rotation ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``."""
    if degrees:
        yaw, pitch, roll = np.deg2rad([yaw, pitch, roll])
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not np.allclose(R @ R.T, np.eye(3), atol=_ORTHO_TOL * 10, rtol=0.0):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL * 10:
            raise ValueError("rotation must have determinant +1")
        if not np.all(np.isfinite(t)):
            raise ValueError("translation must be finite")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_translation(cls, x: float, y: float, z: float) -> "RigidTransform":
        return cls(np.eye(3), np.array([x, y, z], dtype=float))

    @classmethod
    def from_ypr(cls, translation, ypr_deg) -> "RigidTransform":
        return cls(rot_ypr(*ypr_deg), np.asarray(translation, dtype=float))

    def matrix(self) -> np.ndarray:
        """Homogeneous 4x4 form."""
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def apply(self, p) -> np.ndarray:
        """Map a point (or an ``(n, 3)`` array of points)."""
        p = np.asarray(p, dtype=float)
        return p @ self.rotation.T + self.translation

    def inverse(self) -> "RigidTransform":
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return compose(self, other)


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Return ``a @ b``: maps coordinates through ``b`` first, then ``a``."""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def inverse(t: RigidTransform) -> RigidTransform:
    return t.inverse()


def odom_frame(agent) -> str:
    return f"o{agent}"


def body_frame(agent) -> str:
    return f"b{agent}"


def camera_frame(agent) -> str:
    return f"c{agent}"


class FrameTree:
    """Static tree of named frames rooted at ``w``.

    Each frame other than ``w`` has exactly one parent.  ``set`` overwrites
    an existing link; the world->odometry links are rewritten each tick from
    the localization filters.
    """

    ROOT = "w"

    def __init__(self):
        self._parent: dict[str, str] = {}
        self._link: dict[str, RigidTransform] = {}

    def set(self, parent: str, child: str, transform: RigidTransform) -> None:
        if child == self.ROOT:
            raise ValueError("the world frame cannot have a parent")
        known = self._parent.get(child)
        if known is not None and known != parent:
            raise ValueError(f"frame {child!r} already has parent {known!r}")
        # reject cycles: walking up from the parent must never reach the child
        node = parent
        while node in self._parent:
            node = self._parent[node]
            if node == child:
                raise ValueError(f"link {parent}->{child} would create a cycle")
        self._parent[child] = parent
        self._link[child] = transform

    def get(self, parent: str, child: str) -> RigidTransform:
        if self._parent.get(child) != parent:
            raise MissingFrameError(f"no link {parent}->{child}")
        return self._link[child]

    @property
    def frames(self) -> set[str]:
        return {self.ROOT, *self._parent}

    def world_from(self, frame: str) -> RigidTransform:
        """Transform ``T_w,frame`` obtained by chaining links up to the root."""
        T = RigidTransform.identity()
        node = frame
        while node != self.ROOT:
            if node not in self._parent:
                raise MissingFrameError(f"frame {node!r} is not connected to the world frame")
            T = compose(self._link[node], T)
            node = self._parent[node]
        return T

    def add_agent(self, agent, world_T_odom: RigidTransform, odom_T_body: RigidTransform,
                  body_T_camera: RigidTransform) -> None:
        self.set(self.ROOT, odom_frame(agent), world_T_odom)
        self.set(odom_frame(agent), body_frame(agent), odom_T_body)
        self.set(body_frame(agent), camera_frame(agent), body_T_camera)

    def add_vessel(self, world_T_vodom: RigidTransform, vodom_T_base: RigidTransform) -> None:
        self.set(self.ROOT, "so", world_T_vodom)
        self.set("so", "s", vodom_T_base)

    def camera_chain(self, agent) -> RigidTransform:
        """``T_w,o @ T_o,b @ T_b,c`` for one UAV."""
        o, b, c = odom_frame(agent), body_frame(agent), camera_frame(agent)
        return compose(compose(self.get(self.ROOT, o), self.get(o, b)), self.get(b, c))


def camera_to_world(tree: FrameTree, agent, p_cam) -> np.ndarray:
    return tree.camera_chain(agent).apply(p_cam)


def world_to_camera(tree: FrameTree, agent, p_world) -> np.ndarray:
    return tree.camera_chain(agent).inverse().apply(p_world)


def world_to_frame(tree: FrameTree, frame: str, p_world) -> np.ndarray:
    return tree.world_from(frame).inverse().apply(p_world)
