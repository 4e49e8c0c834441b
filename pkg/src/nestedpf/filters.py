"""A uniform stepping interface over the three filters."""

from __future__ import annotations

import numpy as np

from .dpf import dpf_estimate, dpf_init, dpf_step
from .ladpf import ladpf_estimate, ladpf_init, ladpf_step
from .models import StateSpaceModel
from .pf import pf_estimate, pf_init, pf_step
from .randomness import Degenerate, RngStream

__all__ = ["ALGORITHMS", "Filter"]

ALGORITHMS = ("pf", "dpf", "ladpf")


class Filter:
    """Wraps one filter state; a degenerate step freezes the filter instead of raising.

    Parameters
    ----------
    algorithm : {"pf", "dpf", "ladpf"}
    n_pf : int, optional
        Particle count for ``"pf"``; defaults to ``n_x * (n_z + 1)``.
    """

    def __init__(self, algorithm: str, model: StateSpaceModel, stream: RngStream, n_x: int, n_z: int,
                 n_pf: int | None = None, n_x_prime: int = 5, n_z_prime: int = 5,
                 marginal_mode: str = "monte_carlo", scheme: str = "systematic",
                 reuse_lookahead: bool = True):
        self.algorithm = algorithm
        self.model = model
        if algorithm == "pf":
            n = n_pf if n_pf is not None else n_x * (n_z + 1)
            self.state = pf_init(model, n, stream, scheme)
            self._step, self._estimate = pf_step, pf_estimate
        elif algorithm == "dpf":
            self.state = dpf_init(model, n_x, n_z, stream, marginal_mode, scheme)
            self._step, self._estimate = dpf_step, dpf_estimate
        elif algorithm == "ladpf":
            self.state = ladpf_init(model, n_x, n_z, stream, n_x_prime, n_z_prime, reuse_lookahead, scheme)
            self._step, self._estimate = ladpf_step, ladpf_estimate
        else:
            raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
        self.diverged_at: int | None = None
        self._last = None
        self._order = np.argsort(model.state_order)

    @property
    def t(self) -> int:
        return self.state.t

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    @property
    def likelihood_evals(self) -> int:
        return self.state.likelihood_evals

    @property
    def predicted_observation(self):
        return self.state.predicted_observation

    def step(self, y) -> bool:
        """Advance on ``y``; returns False once the filter has diverged."""
        if self.diverged:
            return False
        try:
            self.state = self._step(self.state, y)
        except Degenerate as exc:
            self.diverged_at = exc.t
            return False
        self._last = self._estimate(self.state)
        return True

    def estimate(self) -> np.ndarray:
        """Posterior mean in the model's own ``(x, z)`` layout; frozen after divergence."""
        if self._last is None:
            return np.zeros(self.model.dim_x + self.model.dim_z)
        return self._last

    def estimate_reference(self) -> np.ndarray:
        """Posterior mean reordered to the un-swapped reference layout."""
        return self.estimate()[self._order]
