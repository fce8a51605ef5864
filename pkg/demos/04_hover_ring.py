"""
Choosing where to hover
=======================

Around a tracked container we place L candidate viewpoints on a ring.  The
UAV picks the feasible one with the best information gain per metre of
travel, and a target retires once its covariance is small enough or no
viewpoint would help.
"""
import numpy as np

from maritrack.percept import RangeNoiseModel
from maritrack.view import RingParams, check_termination, score_ring, select_hover

ring = RingParams(r_h=4.0, h=6.0, L=8, eps=0.1)
noise = RangeNoiseModel(sigma0=0.1, k=0.02)
target, P = np.array([10.0, 5.0, 0.0]), np.diag([1.0, 0.5, 2.0])

# %%
# Every candidate is at the same slant range, so the gains are equal and
# travel decides.
uav = np.array([0.0, 0.0, 20.0])
for c in score_ring(uav, target, P, blockers=[], r_safe=1.0, ring=ring, noise=noise):
    print(f"psi={np.degrees(c.psi):5.1f}  pose={c.pose.round(2)}  gain={c.gain:.3f}  travel={c.travel:.2f}")
best = select_hover(uav, target, P, [], 1.0, ring, noise)
print("chosen:", best.pose.round(2))

# %%
# A second UAV already hovering at that pose blocks it.
blocked = select_hover(uav, target, P, [best.pose], 1.0, ring, noise)
print("with the pose taken:", blocked.pose.round(2))

# %%
# Repeated measurements from the chosen pose shrink the covariance until
# the logdet threshold retires the target.
tau_logdet, tau_dj = -12.0, 0.05
R = (noise.sigma(np.linalg.norm(best.pose - target)) ** 2) * np.eye(3)
for n in range(1, 200):
    P = np.linalg.inv(np.linalg.inv(P) + np.linalg.inv(R))
    gain = select_hover(uav, target, P, [], 1.0, ring, noise).gain
    if check_termination(P, gain, tau_logdet, tau_dj):
        print(f"done after {n} measurements, logdet {np.linalg.slogdet(P)[1]:.2f}, best gain {gain:.3f}")
        break
