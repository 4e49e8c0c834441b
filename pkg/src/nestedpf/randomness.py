"""Seedable random streams and the sampling/resampling primitives shared by the filters.

Every stream is a Philox counter-based generator keyed by ``(seed, stream_id)``,
so replicates and sub-tasks get independent substreams that do not depend on
scheduling order or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "AllWeightsDegenerate",
    "Degenerate",
    "NotPSD",
    "RngStream",
    "WeightVector",
    "normalize",
    "normalize_rows",
    "psd_factor",
    "sample_gaussian",
    "resample",
    "resample_rows",
    "categorical_rows",
    "effective_sample_size",
]

StreamId = Union[int, Sequence[int]]

PSD_TOL = 1e-10


class AllWeightsDegenerate(FloatingPointError):
    """Every log-weight is -inf or non-finite; the weighted sample carries no mass."""


class Degenerate(AllWeightsDegenerate):
    """A filter's outer weights degenerated at step ``t``; the run is divergent."""

    def __init__(self, t: int, message: str = ""):
        super().__init__(f"weights degenerated at t={t}" + (f": {message}" if message else ""))
        self.t = t


class NotPSD(np.linalg.LinAlgError):
    """A covariance matrix is not positive semi-definite within tolerance."""


@dataclass
class RngStream:
    """A deterministic random stream identified by ``(seed, stream_id)``.

    ``stream_id`` may be an int or a tuple of ints; tuples are the natural way to
    key nested substreams such as ``(replicate, purpose)``.
    """

    seed: int
    stream_id: StreamId = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.reset()

    @property
    def key(self) -> tuple[int, ...]:
        sid = self.stream_id
        return (int(sid),) if np.isscalar(sid) else tuple(int(s) for s in sid)

    def reset(self) -> None:
        """Rewind the stream to its first draw."""
        ss = np.random.SeedSequence(int(self.seed) & (2**64 - 1), spawn_key=self.key)
        self.generator = np.random.Generator(np.random.Philox(ss))

    def substream(self, *stream_id: int) -> "RngStream":
        """Independent child stream keyed by appending ``stream_id`` to this key."""
        return RngStream(self.seed, self.key + tuple(int(s) for s in stream_id))

    # thin conveniences over the generator
    def standard_normal(self, size=None) -> np.ndarray:
        return self.generator.standard_normal(size)

    def uniform(self, size=None) -> np.ndarray:
        return self.generator.random(size)


@dataclass(frozen=True)
class WeightVector:
    """Normalized linear weights together with the log-weights they came from."""

    weights: np.ndarray
    log_weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)


def normalize(log_weights) -> WeightVector:
    """Normalize log-weights with a max shift.

    Raises ``AllWeightsDegenerate`` when no entry is finite.

    >>> normalize([0.0, 0.0]).weights
    array([0.5, 0.5])
    """
    lw = np.asarray(log_weights, dtype=float)
    lw = np.where(np.isnan(lw), -np.inf, lw)
    finite = np.isfinite(lw)
    if lw.size == 0 or not finite.any():
        raise AllWeightsDegenerate("all log-weights are -inf or non-finite")
    if np.any(lw == np.inf):
        raise AllWeightsDegenerate("log-weight of +inf")
    shifted = lw - lw.max()
    w = np.exp(shifted)
    total = w.sum()
    w /= total
    return WeightVector(w, shifted - np.log(total))


def normalize_rows(log_weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise normalization of a 2-D log-weight table.

    Degenerate rows (no finite entry) are reset to uniform instead of raising.

    Returns
    -------
    log_w : ndarray
        Normalized log-weights, same shape as the input.
    degenerate : ndarray of bool
        Which rows were reset.
    """
    lw = np.asarray(log_weights, dtype=float)
    lw = np.where(np.isnan(lw) | (lw == np.inf), -np.inf, lw)
    degenerate = ~np.isfinite(lw).any(axis=-1)
    if degenerate.any():
        lw = lw.copy()
        lw[degenerate] = 0.0
    lw = lw - logsumexp(lw, axis=-1, keepdims=True)
    return lw, degenerate


def effective_sample_size(weights) -> float:
    w = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(w * w))


def psd_factor(cov, tol: float = PSD_TOL) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == cov`` for a PSD (possibly singular) matrix."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape[0] != cov.shape[1]:
        raise NotPSD(f"covariance must be square, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, atol=tol, rtol=0.0):
        raise NotPSD("covariance is not symmetric")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    scale = max(1.0, float(np.abs(vals).max(initial=0.0)))
    if vals.min(initial=0.0) < -tol * scale:
        raise NotPSD(f"covariance has negative eigenvalue {vals.min():.3g}")
    root = vecs * np.sqrt(np.clip(vals, 0.0, None))
    # QR of root.T turns the symmetric square root into a triangular factor.
    r = np.linalg.qr(root.T, mode="r")
    lower = r.T
    signs = np.where(np.diag(lower) < 0, -1.0, 1.0)
    return lower * signs


def sample_gaussian(stream: RngStream, mean, cov, size=None) -> np.ndarray:
    """Draw from N(mean, cov). With ``size`` given, returns ``size + mean.shape``."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    lower = psd_factor(cov)
    shape = mean.shape if size is None else tuple(np.atleast_1d(size)) + mean.shape
    eps = stream.standard_normal(shape)
    return mean + eps @ lower.T


def _inverse_cdf_rows(weights: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Per-row inverse-CDF lookup for sorted uniforms in [0, 1).

    ``weights`` has shape (R, K); ``uniforms`` (R, n). Rows are offset by their
    index so one flat ``searchsorted`` serves the whole table.
    """
    n_rows, k = weights.shape
    cdf = np.cumsum(weights, axis=1)
    cdf[:, -1] = 1.0
    offsets = np.arange(n_rows, dtype=float)[:, None]
    flat = (cdf + offsets).ravel()
    idx = np.searchsorted(flat, (uniforms + offsets).ravel(), side="right")
    idx = idx.reshape(uniforms.shape) - (np.arange(n_rows) * k)[:, None]
    return np.clip(idx, 0, k - 1)


def _as_weights(weights) -> np.ndarray:
    w = np.asarray(weights.weights if isinstance(weights, WeightVector) else weights, dtype=float)
    if w.ndim == 0 or not np.all(np.isfinite(w)) or np.any(w < 0) or w.sum() <= 0:
        raise AllWeightsDegenerate("weights must be non-negative, finite and not all zero")
    return w


def resample_rows(weights, n_out: int, stream: RngStream, scheme: str = "systematic") -> np.ndarray:
    """Resample every row of a (R, K) weight table; returns (R, n_out) ancestor indices."""
    w = _as_weights(weights)
    w = w / w.sum(axis=-1, keepdims=True)
    n_rows = w.shape[0]
    if scheme == "systematic":
        u = (np.arange(n_out)[None, :] + stream.uniform((n_rows, 1))) / n_out
    elif scheme == "multinomial":
        u = np.sort(stream.uniform((n_rows, n_out)), axis=1)
    else:
        raise ValueError(f"unknown resampling scheme {scheme!r}")
    return _inverse_cdf_rows(w, u)


def resample(weights, n_out: int, stream: RngStream, scheme: str = "systematic") -> np.ndarray:
    """Ancestor indices for ``n_out`` offspring of a normalized weight vector.

    Systematic resampling uses a single uniform draw; multinomial draws
    ``n_out`` independent uniforms. Both are unbiased: the expected number of
    offspring of index ``i`` is ``n_out * weights[i]``.
    """
    if n_out < 1:
        raise ValueError("n_out must be >= 1")
    w = _as_weights(weights)
    return resample_rows(w[None, :], n_out, stream, scheme)[0]


def categorical_rows(log_weights: np.ndarray, n_draws: int, stream: RngStream) -> np.ndarray:
    """Independent categorical draws per row of an (R, K) log-weight table, (R, n_draws)."""
    lw = np.asarray(log_weights, dtype=float)
    w = np.exp(lw - lw.max(axis=-1, keepdims=True))
    w /= w.sum(axis=-1, keepdims=True)
    u = stream.uniform((w.shape[0], n_draws))
    # Unsorted uniforms are fine: lookup is elementwise.
    return _inverse_cdf_rows(w, u)
