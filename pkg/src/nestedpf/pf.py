"""Bootstrap particle filter on the joint space of ``(x, z)``."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .models import StateSpaceModel
from .randomness import AllWeightsDegenerate, Degenerate, RngStream, normalize, resample

__all__ = ["PfState", "pf_init", "pf_step", "pf_estimate"]


@dataclass
class PfState:
    """Weighted joint particles after the measurement update at step ``t``.

    Before the first step ``t == -1`` and the particles are prior draws.
    """

    model: StateSpaceModel
    particles: np.ndarray
    weights: np.ndarray
    stream: RngStream
    t: int = -1
    scheme: str = "systematic"
    predicted_observation: np.ndarray | None = None
    likelihood_evals: int = 0

    @property
    def n_particles(self) -> int:
        return len(self.particles)


def pf_init(model: StateSpaceModel, n: int, stream: RngStream, scheme: str = "systematic") -> PfState:
    if n < 1:
        raise ValueError("number of particles must be >= 1")
    x0, z0 = model.sample_joint0(stream, n)
    return PfState(model, np.concatenate([x0, z0], axis=1), np.full(n, 1.0 / n), stream, scheme=scheme)


def pf_step(state: PfState, y) -> PfState:
    """Resample, propagate through the joint prior transition, then weight by the likelihood."""
    model, stream = state.model, state.stream
    nx = model.dim_x
    t = state.t + 1
    x, z = state.particles[:, :nx], state.particles[:, nx:]
    if t > 0:
        idx = resample(state.weights, state.n_particles, stream, state.scheme)
        x, z = x[idx], z[idx]
        x_next = model.sample_x_next(t - 1, x, z, stream)
        z = model.sample_z_next(t - 1, x, x_next, z, stream)
        x = x_next
    y_pred = model.predict_observation_mean(t, x, z).mean(axis=0)
    loglik = model.observation_logpdf(t, y, x, z)
    try:
        w = normalize(loglik).weights
    except AllWeightsDegenerate as exc:
        raise Degenerate(t, str(exc)) from exc
    return replace(state, particles=np.concatenate([x, z], axis=1), weights=w, t=t,
                   predicted_observation=y_pred,
                   likelihood_evals=state.likelihood_evals + state.n_particles)


def pf_estimate(state: PfState) -> np.ndarray:
    """Weighted posterior mean of ``(x_t, z_t)``."""
    return state.weights @ state.particles
