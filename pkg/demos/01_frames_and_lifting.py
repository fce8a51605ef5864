"""
From pixels to world coordinates
================================

A downward stereo camera hangs under a UAV.  We push a floating container
through the frame tree into the image, synthesize a noisy detection, and
lift the median disparity back into the world frame.
"""
import numpy as np

from maritrack.config import DOWNWARD_CAMERA
from maritrack.geom import FrameTree, RigidTransform, world_to_camera
from maritrack.percept import (CameraIntrinsics, DetectorModel, RangeNoiseModel, lift_detection,
                               median_disparity, project, synth_detect)

# %%
# The tree chains world -> odom -> body -> camera for each UAV.  Here the
# UAV odometry frame sits 20 m above the world origin.
tree = FrameTree()
tree.add_agent(1, RigidTransform.from_translation(0.0, 0.0, 20.0), RigidTransform.identity(),
               DOWNWARD_CAMERA.transform())
w_T_c = tree.camera_chain(1)
print("camera origin in world:", w_T_c.translation)

# %%
# A container 3 m east and 2 m north of the UAV, on the water.
container = np.array([3.0, 2.0, 0.0])
p_cam = world_to_camera(tree, 1, container)
intr = CameraIntrinsics()
u, v, d = project(p_cam, intr)
print(f"camera coords {p_cam.round(3)}, pixel ({u:.1f}, {v:.1f}), disparity {d:.3f} px")

# %%
# The detector returns a box and a patch of disparity samples.  Some samples
# are invalid (zero); the median over the valid ones is robust to them.
det_model = DetectorModel(p_det=1.0, sigma_d=0.1, sigma_px=0.5, invalid_fraction=0.2)
rng = np.random.default_rng(0)
(det,) = synth_detect({1: container}, w_T_c, intr, det_model, rng)
print("patch samples:", np.round(det.disparity_patch[:8], 2), "...")
print("median disparity:", median_disparity(det, intr))

# %%
# Lifting gives a world point with a range-dependent isotropic covariance.
m = lift_detection(det, intr, w_T_c, RangeNoiseModel(sigma0=0.1, k=0.02), agent=1, timestamp=0.0)
print("lifted position:", m.position.round(3), " error:", np.linalg.norm(m.position - container).round(3), "m")
print("measurement sigma:", np.sqrt(m.R[0, 0]).round(3), "m at range", round(m.range, 2), "m")

# %%
# Depth noise grows with the square of range: sigma_Z = Z^2 sigma_d / (f B).
for z in (10.0, 20.0, 40.0):
    print(f"Z = {z:4.0f} m -> sigma_Z = {z * z * det_model.sigma_d / intr.fB:.3f} m")
