"""Expected precoder norms and the per-AP DL power budget."""
from __future__ import annotations

import numpy as np

from nafdsim.precoding import GroupingAssignment


def expected_norms(gamma: np.ndarray, strong: np.ndarray, n: int) -> np.ndarray:
    """E||v||^2 per (AP, UE): gamma/(N - |S_m|) for ZF members, N*gamma for MRT."""
    gamma = np.asarray(gamma, dtype=float)
    size = strong.sum(axis=1, keepdims=True)
    return np.where(strong, gamma / np.maximum(n - size, 1), n * gamma)


def expected_gains(gamma: np.ndarray, strong: np.ndarray, n: int) -> np.ndarray:
    """E[g^H v] per (AP, UE): gamma for ZF members, N*gamma for MRT."""
    return np.where(strong, gamma, n * np.asarray(gamma, dtype=float))


def dl_utilization(theta: np.ndarray, gamma_dl: np.ndarray, grouping: GroupingAssignment) -> np.ndarray:
    """Fraction of each AP's transmit budget in use, sum_k theta^2 E||v_mk||^2."""
    norms = expected_norms(gamma_dl, grouping.strong_dl, grouping.n_antennas)
    return np.sum(np.asarray(theta) ** 2 * norms, axis=1)


def fractional_theta(gamma_dl: np.ndarray, grouping: GroupingAssignment, a, exponent: float,
                     serve: np.ndarray | None = None) -> np.ndarray:
    """theta_mk proportional to gamma_mk**exponent, scaled so every active AP uses its full budget."""
    gamma_dl = np.asarray(gamma_dl, dtype=float)
    active = np.asarray(a, dtype=bool)
    mask = np.ones(gamma_dl.shape, dtype=bool) if serve is None else np.asarray(serve, bool)
    mask = mask & active[:, None]
    raw = np.where(mask, np.power(gamma_dl, exponent, where=mask, out=np.zeros_like(gamma_dl)), 0.0)
    norms = expected_norms(gamma_dl, grouping.strong_dl, grouping.n_antennas)
    load = np.sum(raw**2 * norms, axis=1)
    scale = np.zeros_like(load)
    np.divide(1.0, np.sqrt(load), out=scale, where=load > 0)
    return raw * scale[:, None]
