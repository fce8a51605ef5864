"""Small dense helpers shared by the filters and fusion."""
from __future__ import annotations

import numpy as np


class NotPositiveDefinite(ValueError):
    pass


def symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def check_spd(P: np.ndarray, name: str = "matrix") -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise NotPositiveDefinite(f"{name} must be square")
    if not np.all(np.isfinite(P)):
        raise NotPositiveDefinite(f"{name} has non-finite entries")
    if np.abs(P - P.T).max() > 1e-12 + 1e-9 * np.abs(P).max():
        raise NotPositiveDefinite(f"{name} is not symmetric")
    try:
        np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(f"{name} is not positive definite") from None
    return P


def logdet(P: np.ndarray) -> float:
    """Log-determinant of an SPD matrix via Cholesky."""
    L = np.linalg.cholesky(P)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def spd_inv(P: np.ndarray) -> np.ndarray:
    return symmetrize(np.linalg.inv(P))


def joseph_update(x: np.ndarray, P: np.ndarray, z: np.ndarray, H: np.ndarray, R: np.ndarray):
    """Kalman measurement update in Joseph form; returns ``(mean, cov)``."""
    S = H @ P @ H.T + R
    K = np.linalg.solve(S, H @ P).T
    nu = z - H @ x
    IKH = np.eye(P.shape[0]) - K @ H
    P_new = IKH @ P @ IKH.T + K @ R @ K.T
    return x + K @ nu, symmetrize(P_new)
