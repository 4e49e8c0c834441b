"""Exact Kalman filtering for :class:`~nestedpf.models.LinearGaussianModel`, used as the oracle."""

from __future__ import annotations

import numpy as np

from .models import LinearGaussianModel

__all__ = ["kalman_filter"]


def kalman_filter(model: LinearGaussianModel, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Filtered means and covariances of the joint state ``(x, z)`` for each ``t``.

    Observation ``y[0]`` is conditioned on the prior; the transition from ``t``
    to ``t+1`` follows every update.
    """
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    A, C = model.A, model.C
    Q, R = model.process_cov, model.obs_cov
    m, P = model.prior_mean.copy(), model.prior_cov.copy()
    n = len(m)
    means = np.empty((len(ys), n))
    covs = np.empty((len(ys), n, n))
    for t, y in enumerate(ys):
        if t > 0:
            m = A @ m
            P = A @ P @ A.T + Q
        S = C @ P @ C.T + R
        K = np.linalg.solve(S, C @ P).T
        m = m + K @ (y - C @ m)
        I_KC = np.eye(n) - K @ C
        P = I_KC @ P @ I_KC.T + K @ R @ K.T
        means[t], covs[t] = m, P
    return means, covs
