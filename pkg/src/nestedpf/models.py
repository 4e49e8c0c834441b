"""Nested state-space models.

A model splits the latent state into an outer group ``x`` (sampled first) and
an inner group ``z``::

    x[t+1] = f_x(t, x[t], z[t]) + v_x
    z[t+1] = f_z(t, x[t], z[t]) + v_z
    y[t]   = h(t, x[t], z[t]) + e

All methods broadcast over leading axes: ``x`` has shape ``(..., dim_x)``,
``z`` has shape ``(..., dim_z)``, and densities are returned with the
broadcast leading shape. Densities are available in log form (``*_logpdf``),
which is what the filters use, and in linear form.
"""

from __future__ import annotations

import csv
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .randomness import RngStream, psd_factor

__all__ = [
    "NotSwappable",
    "NotAdditiveGaussian",
    "StateSpaceModel",
    "AdditiveGaussianModel",
    "Model1",
    "Model2",
    "LinearGaussianModel",
    "SwappedModel",
    "ChangePointModel",
    "Trajectory",
    "model1",
    "model2",
    "linear_gaussian_model",
    "swap_decomposition",
    "simulate_trajectory",
]

LOG_2PI = np.log(2.0 * np.pi)


class NotSwappable(ValueError):
    pass


class NotAdditiveGaussian(TypeError):
    pass


class _Gaussian:
    """Zero-mean Gaussian with a cached factor; logpdf needs a non-singular covariance."""

    def __init__(self, cov):
        self.cov = np.atleast_2d(np.asarray(cov, dtype=float))
        self.dim = self.cov.shape[0]
        self.lower = psd_factor(self.cov)
        diag = np.diag(self.lower)
        self.singular = bool(np.any(diag <= 1e-300))
        if not self.singular:
            self.inv_lower = np.linalg.inv(self.lower)
            self.log_norm = -np.sum(np.log(diag)) - 0.5 * self.dim * LOG_2PI

    def sample(self, stream: RngStream, shape) -> np.ndarray:
        eps = stream.standard_normal(tuple(shape) + (self.dim,))
        return eps @ self.lower.T

    def logpdf(self, residual: np.ndarray) -> np.ndarray:
        if self.singular:
            raise ValueError("density of a singular Gaussian is undefined")
        w = residual @ self.inv_lower.T
        return self.log_norm - 0.5 * np.sum(w * w, axis=-1)


class StateSpaceModel(ABC):
    """Behavioral interface every filter relies on."""

    dim_x: int
    dim_z: int
    dim_y: int

    @abstractmethod
    def sample_x0(self, stream: RngStream, size: int = 1) -> np.ndarray: ...

    @abstractmethod
    def sample_z0_given_x0(self, x0: np.ndarray, stream: RngStream) -> np.ndarray: ...

    @abstractmethod
    def sample_x_next(self, t: int, x: np.ndarray, z: np.ndarray, stream: RngStream) -> np.ndarray: ...

    @abstractmethod
    def x_transition_logpdf(self, t: int, x_next, x, z) -> np.ndarray: ...

    @abstractmethod
    def sample_z_next(self, t: int, x, x_next, z, stream: RngStream) -> np.ndarray: ...

    @abstractmethod
    def z_transition_logpdf(self, t: int, z_next, x, x_next, z) -> np.ndarray: ...

    @abstractmethod
    def observation_logpdf(self, t: int, y, x, z) -> np.ndarray: ...

    @abstractmethod
    def sample_observation(self, t: int, x, z, stream: RngStream) -> np.ndarray: ...

    @abstractmethod
    def predict_observation_mean(self, t: int, x, z) -> np.ndarray: ...

    # Optional: models with additive Gaussian x-noise expose these for the
    # moment-matched transition marginal.
    def x_transition_mean(self, t: int, x, z) -> np.ndarray:
        raise NotAdditiveGaussian(f"{type(self).__name__} has no additive-Gaussian x transition")

    @property
    def x_noise_cov(self) -> np.ndarray:
        raise NotAdditiveGaussian(f"{type(self).__name__} has no additive-Gaussian x transition")

    # ``state_order`` maps the model's (x, z) layout back to the reference layout
    # of the physical system; identity unless the decomposition was swapped.
    @property
    def state_order(self) -> np.ndarray:
        return np.arange(self.dim_x + self.dim_z)

    def sample_joint0(self, stream: RngStream, size: int = 1) -> tuple[np.ndarray, np.ndarray]:
        x0 = self.sample_x0(stream, size)
        return x0, self.sample_z0_given_x0(x0, stream)

    def x_transition_density(self, t, x_next, x, z):
        return np.exp(self.x_transition_logpdf(t, x_next, x, z))

    def z_transition_density(self, t, z_next, x, x_next, z):
        return np.exp(self.z_transition_logpdf(t, z_next, x, x_next, z))

    def observation_density(self, t, y, x, z):
        return np.exp(self.observation_logpdf(t, y, x, z))


class AdditiveGaussianModel(StateSpaceModel):
    """Nested model with additive, jointly Gaussian noise.

    The process noise ``v = (v_x, v_z)`` may be correlated. Given the realized
    x-noise ``x_next - f_x``, the z-noise is drawn from its Gaussian conditional,
    which keeps the joint one-step law exact under either sampling order.

    Subclasses implement ``f_x``, ``f_z`` and ``h``.
    """

    def __init__(self, dim_x, dim_z, dim_y, process_cov, obs_cov, prior_mean=None, prior_cov=None):
        self.dim_x, self.dim_z, self.dim_y = int(dim_x), int(dim_z), int(dim_y)
        n = self.dim_x + self.dim_z
        self.process_cov = np.atleast_2d(np.asarray(process_cov, dtype=float))
        self.obs_cov = np.atleast_2d(np.asarray(obs_cov, dtype=float))
        self.prior_mean = np.zeros(n) if prior_mean is None else np.asarray(prior_mean, dtype=float)
        self.prior_cov = np.eye(n) if prior_cov is None else np.atleast_2d(np.asarray(prior_cov, dtype=float))
        if self.process_cov.shape != (n, n) or self.prior_cov.shape != (n, n):
            raise ValueError(f"process and prior covariances must be {n}x{n}")
        if self.obs_cov.shape != (self.dim_y, self.dim_y):
            raise ValueError(f"observation covariance must be {self.dim_y}x{self.dim_y}")
        self._setup_noise()

    def _setup_noise(self):
        nx = self.dim_x
        q = self.process_cov
        self._vx = _Gaussian(q[:nx, :nx])
        qxx_pinv = np.linalg.pinv(q[:nx, :nx])
        self._z_gain = q[nx:, :nx] @ qxx_pinv
        self._vz_cond = _Gaussian(q[nx:, nx:] - self._z_gain @ q[:nx, nx:])
        self._e = _Gaussian(self.obs_cov)
        p = self.prior_cov
        m = self.prior_mean
        self._x0 = _Gaussian(p[:nx, :nx])
        self._z0_gain = p[nx:, :nx] @ np.linalg.pinv(p[:nx, :nx])
        self._z0_cond = _Gaussian(p[nx:, nx:] - self._z0_gain @ p[:nx, nx:])
        self._m0x, self._m0z = m[:nx], m[nx:]

    @abstractmethod
    def f_x(self, t: int, x: np.ndarray, z: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def f_z(self, t: int, x: np.ndarray, z: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def h(self, t: int, x: np.ndarray, z: np.ndarray) -> np.ndarray: ...

    def _bshape(self, x, z):
        return np.broadcast_shapes(np.shape(x)[:-1], np.shape(z)[:-1])

    def sample_x0(self, stream, size=1):
        return self._m0x + self._x0.sample(stream, (size,))

    def sample_z0_given_x0(self, x0, stream):
        x0 = np.asarray(x0, dtype=float)
        mean = self._m0z + (x0 - self._m0x) @ self._z0_gain.T
        return mean + self._z0_cond.sample(stream, x0.shape[:-1])

    def x_transition_mean(self, t, x, z):
        return self.f_x(t, x, z)

    @property
    def x_noise_cov(self):
        return self._vx.cov

    def sample_x_next(self, t, x, z, stream):
        mean = self.f_x(t, x, z)
        return mean + self._vx.sample(stream, mean.shape[:-1])

    def x_transition_logpdf(self, t, x_next, x, z):
        return self._vx.logpdf(x_next - self.f_x(t, x, z))

    def z_transition_mean(self, t, x, x_next, z):
        mean = self.f_z(t, x, z)
        if self.dim_x and np.any(self._z_gain):
            mean = mean + (x_next - self.f_x(t, x, z)) @ self._z_gain.T
        return mean

    def sample_z_next(self, t, x, x_next, z, stream):
        mean = self.z_transition_mean(t, x, x_next, z)
        return mean + self._vz_cond.sample(stream, mean.shape[:-1])

    def z_transition_logpdf(self, t, z_next, x, x_next, z):
        return self._vz_cond.logpdf(z_next - self.z_transition_mean(t, x, x_next, z))

    def observation_logpdf(self, t, y, x, z):
        return self._e.logpdf(np.asarray(y, dtype=float) - self.h(t, x, z))

    def sample_observation(self, t, x, z, stream):
        mean = self.h(t, x, z)
        return mean + self._e.sample(stream, mean.shape[:-1])

    def predict_observation_mean(self, t, x, z):
        return self.h(t, x, z)


class Model1(AdditiveGaussianModel):
    """Two-dimensional benchmark: scalar ``x`` and scalar ``z``.

    ``swapped_dynamics=True`` exchanges the two transition equations (x follows
    the growth-model recursion and z the slow one); used as a change point.
    """

    def __init__(self, process_cov=((1.0, 0.1), (0.1, 1.0)), obs_var=1.0, prior_cov=None,
                 swapped_dynamics=False):
        super().__init__(1, 1, 1, process_cov, [[obs_var]], prior_cov=prior_cov)
        self.swapped_dynamics = swapped_dynamics

    @staticmethod
    def _slow(a, b):
        return a + b / (1.0 + b * b)

    @staticmethod
    def _growth(t, a, b):
        return a + 0.5 * b + 25.0 * b / (1.0 + b * b) + 8.0 * np.cos(1.2 * t)

    def f_x(self, t, x, z):
        if self.swapped_dynamics:
            return self._growth(t, z, x)
        return self._slow(x, z)

    def f_z(self, t, x, z):
        if self.swapped_dynamics:
            return self._slow(z, x)
        return self._growth(t, x, z)

    def h(self, t, x, z):
        return np.arctan(x) + z * z / 20.0


class Model2(AdditiveGaussianModel):
    """Four-dimensional benchmark: ``x = (x1, x2)``, ``z = (z1, z2)``.

    The printed z2 recursion uses the new ``z1[t+1]``. Substituting it gives an
    update driven by time-t states with noise ``(v_z1, v_z1 + v_z2)``, so the
    effective z-noise covariance is ``L Qzz L^T`` with ``L = [[1, 0], [1, 1]]``.
    """

    def __init__(self, zz_cov=((1.0, 0.1), (0.1, 10.0)), obs_var=1.0):
        lower = np.array([[1.0, 0.0], [1.0, 1.0]])
        q = np.zeros((4, 4))
        q[:2, :2] = np.eye(2)
        q[2:, 2:] = lower @ np.asarray(zz_cov, dtype=float) @ lower.T
        self.zz_cov = np.asarray(zz_cov, dtype=float)
        super().__init__(2, 2, 1, q, [[obs_var]])

    def f_x(self, t, x, z):
        x1, x2 = x[..., 0], x[..., 1]
        shape = self._bshape(x, z)
        out = np.empty(shape + (2,))
        out[..., 0] = 0.5 * x1 + 8.0 * np.sin(t)
        out[..., 1] = 0.4 * x1 + 0.5 * x2
        return out

    def f_z(self, t, x, z):
        z1, z2 = z[..., 0], z[..., 1]
        shape = self._bshape(x, z)
        z1_next = z1 + z2 / (1.0 + z2 * z2)
        out = np.empty(shape + (2,))
        out[..., 0] = z1_next
        out[..., 1] = z1_next + 0.5 * z2 + 25.0 * z2 / (1.0 + z2 * z2) + 8.0 * np.cos(1.2 * t)
        return out

    def h(self, t, x, z):
        x1, x2 = x[..., 0], x[..., 1]
        z1, z2 = z[..., 0], z[..., 1]
        val = (x1 + x2) / (1.0 + x1 * x1) + np.arctan(z1) + z2 * z2 / 20.0
        return val[..., None]


class LinearGaussianModel(AdditiveGaussianModel):
    """``s' = A s + B v``, ``y = C s + e`` with ``s = (x, z)``; the first ``dim_x`` entries are outer."""

    def __init__(self, A, B, C, Q, R, dim_x, prior_mean=None, prior_cov=None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.B = np.atleast_2d(np.asarray(B, dtype=float))
        self.C = np.atleast_2d(np.asarray(C, dtype=float))
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        R = np.atleast_2d(np.asarray(R, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.B.shape[0] != n or self.C.shape[1] != n:
            raise ValueError("A, B, C dimensions are inconsistent")
        if Q.shape != (self.B.shape[1],) * 2 or R.shape != (self.C.shape[0],) * 2:
            raise ValueError("Q must match B's columns and R must match C's rows")
        if not 1 <= dim_x < n:
            raise ValueError("dim_x must split the state into two non-empty groups")
        psd_factor(Q), psd_factor(R)
        self.Q, self.R = Q, R
        super().__init__(dim_x, n - dim_x, self.C.shape[0], self.B @ Q @ self.B.T, R,
                         prior_mean=prior_mean, prior_cov=prior_cov)

    def _joint(self, x, z):
        shape = self._bshape(x, z)
        return np.concatenate([np.broadcast_to(x, shape + (self.dim_x,)),
                               np.broadcast_to(z, shape + (self.dim_z,))], axis=-1)

    def f_x(self, t, x, z):
        return self._joint(x, z) @ self.A[: self.dim_x].T

    def f_z(self, t, x, z):
        return self._joint(x, z) @ self.A[self.dim_x:].T

    def h(self, t, x, z):
        return self._joint(x, z) @ self.C.T


def _swap_perm(n_first, n_second):
    # position k of the swapped layout holds original coordinate perm[k]
    return np.r_[np.arange(n_first, n_first + n_second), np.arange(n_first)]


class SwappedModel(AdditiveGaussianModel):
    """The same joint law with the roles of the outer and inner groups exchanged."""

    def __init__(self, base: AdditiveGaussianModel):
        if not isinstance(base, AdditiveGaussianModel):
            raise NotSwappable(f"cannot reorder the transition of {type(base).__name__}")
        self.base = base
        perm = _swap_perm(base.dim_x, base.dim_z)
        q = base.process_cov[np.ix_(perm, perm)]
        p = base.prior_cov[np.ix_(perm, perm)]
        super().__init__(base.dim_z, base.dim_x, base.dim_y, q, base.obs_cov,
                         prior_mean=base.prior_mean[perm], prior_cov=p)

    def f_x(self, t, x, z):
        return self.base.f_z(t, z, x)

    def f_z(self, t, x, z):
        return self.base.f_x(t, z, x)

    def h(self, t, x, z):
        return self.base.h(t, z, x)

    @property
    def state_order(self):
        # our layout (base_z, base_x); reference index of each of our coordinates
        return self.base.state_order[_swap_perm(self.base.dim_x, self.base.dim_z)]


class ChangePointModel(StateSpaceModel):
    """Uses ``before`` for transitions with ``t < change_point`` and ``after`` from then on.

    Both models must share dimensions, the prior and the observation law.
    """

    def __init__(self, before: StateSpaceModel, after: StateSpaceModel, change_point: int):
        if (before.dim_x, before.dim_z, before.dim_y) != (after.dim_x, after.dim_z, after.dim_y):
            raise ValueError("change-point models must share dimensions")
        self.before, self.after, self.change_point = before, after, int(change_point)
        self.dim_x, self.dim_z, self.dim_y = before.dim_x, before.dim_z, before.dim_y

    def _at(self, t):
        return self.before if t < self.change_point else self.after

    def sample_x0(self, stream, size=1):
        return self.before.sample_x0(stream, size)

    def sample_z0_given_x0(self, x0, stream):
        return self.before.sample_z0_given_x0(x0, stream)

    def sample_x_next(self, t, x, z, stream):
        return self._at(t).sample_x_next(t, x, z, stream)

    def x_transition_logpdf(self, t, x_next, x, z):
        return self._at(t).x_transition_logpdf(t, x_next, x, z)

    def sample_z_next(self, t, x, x_next, z, stream):
        return self._at(t).sample_z_next(t, x, x_next, z, stream)

    def z_transition_logpdf(self, t, z_next, x, x_next, z):
        return self._at(t).z_transition_logpdf(t, z_next, x, x_next, z)

    def observation_logpdf(self, t, y, x, z):
        return self._at(t).observation_logpdf(t, y, x, z)

    def sample_observation(self, t, x, z, stream):
        return self._at(t).sample_observation(t, x, z, stream)

    def predict_observation_mean(self, t, x, z):
        return self._at(t).predict_observation_mean(t, x, z)

    def x_transition_mean(self, t, x, z):
        return self._at(t).x_transition_mean(t, x, z)

    @property
    def x_noise_cov(self):
        cov = self.before.x_noise_cov
        if not np.array_equal(cov, self.after.x_noise_cov):
            raise NotAdditiveGaussian("x noise covariance changes at the change point")
        return cov

    @property
    def state_order(self):
        return self.before.state_order


def model1(**kwargs) -> Model1:
    return Model1(**kwargs)


def model2(**kwargs) -> Model2:
    return Model2(**kwargs)


def linear_gaussian_model(A, B, C, Q, R, dim_x=1, prior_mean=None, prior_cov=None) -> LinearGaussianModel:
    return LinearGaussianModel(A, B, C, Q, R, dim_x, prior_mean=prior_mean, prior_cov=prior_cov)


def swap_decomposition(model: StateSpaceModel) -> StateSpaceModel:
    """Return a model whose outer group is the given model's inner group.

    Change-point models are swapped piecewise.
    """
    if isinstance(model, ChangePointModel):
        return ChangePointModel(swap_decomposition(model.before), swap_decomposition(model.after),
                                model.change_point)
    return SwappedModel(model)


@dataclass
class Trajectory:
    """Simulated states and observations for ``t = 0..T-1``."""

    xs: np.ndarray
    zs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        if not len(self.xs) == len(self.zs) == len(self.ys):
            raise ValueError("trajectory arrays must share their length")

    def __len__(self):
        return len(self.xs)

    @property
    def states(self) -> np.ndarray:
        return np.concatenate([self.xs, self.zs], axis=1)

    def to_csv(self, path) -> None:
        header = (["t"] + [f"x{i}" for i in range(self.xs.shape[1])]
                  + [f"z{i}" for i in range(self.zs.shape[1])]
                  + [f"y{i}" for i in range(self.ys.shape[1])])
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for t in range(len(self)):
                row = np.concatenate([self.xs[t], self.zs[t], self.ys[t]])
                writer.writerow([t] + [f"{v:.17g}" for v in row])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(Path(path), newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = np.array([[float(v) for v in row] for row in reader])
        cols = np.array(header)
        pick = lambda p: rows[:, np.char.startswith(cols, p)]  # noqa: E731
        return cls(pick("x"), pick("z"), pick("y"))


def simulate_trajectory(model: StateSpaceModel, T: int, stream: RngStream) -> Trajectory:
    """Ancestral sampling of states and observations for ``t = 0..T-1``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    xs = np.empty((T, model.dim_x))
    zs = np.empty((T, model.dim_z))
    ys = np.empty((T, model.dim_y))
    x, z = model.sample_joint0(stream, 1)
    x, z = x[0], z[0]
    for t in range(T):
        xs[t], zs[t] = x, z
        ys[t] = model.sample_observation(t, x, z, stream)
        if t + 1 < T:
            x_next = model.sample_x_next(t, x, z, stream)
            z = model.sample_z_next(t, x, x_next, z, stream)
            x = x_next
    return Trajectory(xs, zs, ys)
