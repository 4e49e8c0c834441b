"""Decentralized particle filter with prior proposals.

The outer filter carries ``n_x`` particles of ``x``; each outer particle owns
a conditional cloud of ``n_z`` particles of ``z``. One call to :func:`dpf_step`
runs the seven sub-steps for a single observation:

1. outer weights from the likelihood marginal,
2. outer resampling of the ``(x, z-cloud, r)`` tuples,
3. inner measurement update ``q_bar``,
4. proposal of ``x[t+1]`` from the transition mixture,
5. inner update ``q`` given the proposed ``x[t+1]``,
6. inner resampling by ``q``,
7. proposal of ``z[t+1]`` (its own target, so ``r_tilde == 1``).

All weights are carried in log form.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .models import StateSpaceModel
from .randomness import (
    AllWeightsDegenerate,
    Degenerate,
    RngStream,
    categorical_rows,
    normalize,
    normalize_rows,
    resample,
    resample_rows,
)

__all__ = [
    "MARGINAL_MODES",
    "ZeroRWeights",
    "DpfState",
    "MarginalEstimates",
    "transition_marginal_mc",
    "transition_marginal_gaussian",
    "likelihood_marginal",
    "dpf_init",
    "dpf_step",
    "dpf_estimate",
]

MARGINAL_MODES = ("monte_carlo", "gaussian")


class ZeroRWeights(ValueError):
    pass


@dataclass
class MarginalEstimates:
    """Per-outer-particle transition and likelihood marginals (log scale).

    ``log_trans_marg`` is ``None`` at the first step, where proposals come from the prior.
    """

    log_trans_marg: np.ndarray | None
    log_lik_marg: np.ndarray


@dataclass
class DpfState:
    """Filter state after step ``t``.

    ``x``, ``z_cloud``, ``weights`` and ``log_q_bar`` describe the weighted
    posterior at ``t`` (before resampling). ``x_prop``, ``z_prop`` and
    ``log_r_prop`` are the proposals for ``t + 1`` (``x_tilde``, ``z_tilde``,
    ``r_tilde``). At ``t == -1`` the proposals are prior draws.
    """

    model: StateSpaceModel
    stream: RngStream
    n_x: int
    n_z: int
    x_prop: np.ndarray
    z_prop: np.ndarray
    log_r_prop: np.ndarray
    t: int = -1
    marginal_mode: str = "monte_carlo"
    scheme: str = "systematic"
    x: np.ndarray | None = None
    z_cloud: np.ndarray | None = None
    weights: np.ndarray | None = None
    log_q_bar: np.ndarray | None = None
    predicted_observation: np.ndarray | None = None
    likelihood_evals: int = 0
    inner_resets: int = 0
    log_trans_prop: np.ndarray | None = None
    marginals: MarginalEstimates | None = None
    keep_paths: bool = False
    x_paths: np.ndarray | None = field(default=None, repr=False)


def _log_mixture(log_components: np.ndarray, log_weights: np.ndarray) -> np.ndarray:
    return logsumexp(log_components + log_weights, axis=-1)


def transition_marginal_mc(model, t, x_candidate, x_prev_i, z_row, q_bar_row, log=False):
    """Mixture ``sum_j q_bar[j] p(x_candidate | x_prev_i, z_row[j])``.

    ``x_candidate`` may carry leading batch axes; the mixture is over ``z_row``.
    """
    x_candidate = np.asarray(x_candidate, dtype=float)
    z_row = np.asarray(z_row, dtype=float)
    q = np.asarray(q_bar_row, dtype=float)
    with np.errstate(divide="ignore"):
        log_q = np.log(q / q.sum())
    logp = model.x_transition_logpdf(t, x_candidate[..., None, :], np.asarray(x_prev_i, dtype=float), z_row)
    out = _log_mixture(logp, log_q)
    return out if log else np.exp(out)


def _moment_match(model, t, x_prev, z_rows, q_rows):
    """Mean and covariance of the transition mixture for each outer particle."""
    means = model.x_transition_mean(t, x_prev[..., None, :], z_rows)
    mu = np.einsum("...j,...jd->...d", q_rows, means)
    dev = means - mu[..., None, :]
    spread = np.einsum("...j,...jd,...je->...de", q_rows, dev, dev)
    return mu, model.x_noise_cov + spread


def transition_marginal_gaussian(model, t, x_candidate, x_prev_i, z_row, q_bar_row, log=False):
    """Moment-matched Gaussian stand-in for :func:`transition_marginal_mc`."""
    q = np.asarray(q_bar_row, dtype=float)
    mu, cov = _moment_match(model, t, np.asarray(x_prev_i, dtype=float), np.asarray(z_row, dtype=float),
                            q / q.sum())
    x_candidate = np.asarray(x_candidate, dtype=float)
    out = _gaussian_logpdf(x_candidate, np.broadcast_to(mu, x_candidate.shape),
                           np.broadcast_to(cov, x_candidate.shape[:-1] + cov.shape))
    return out if log else np.exp(out)


def likelihood_marginal(model, t, y, x_candidate_i, z_tilde_row, r_tilde_row, log=False):
    """Self-normalized estimate ``sum_j r[j] p(y | x, z[j]) / sum_j r[j]``."""
    r = np.asarray(r_tilde_row, dtype=float)
    if not r.sum() > 0:
        raise ZeroRWeights("r_tilde weights sum to zero")
    with np.errstate(divide="ignore"):
        log_r = np.log(r)
    loglik = model.observation_logpdf(t, y, np.asarray(x_candidate_i, dtype=float), np.asarray(z_tilde_row, dtype=float))
    out = _log_mixture(loglik, log_r) - logsumexp(log_r)
    return out if log else np.exp(out)


def dpf_init(model: StateSpaceModel, n_x: int, n_z: int, stream: RngStream,
             marginal_mode: str = "monte_carlo", scheme: str = "systematic",
             keep_paths: bool = False) -> DpfState:
    if n_x < 1 or n_z < 1:
        raise ValueError("n_x and n_z must be >= 1")
    if marginal_mode not in MARGINAL_MODES:
        raise ValueError(f"marginal_mode must be one of {MARGINAL_MODES}")
    if marginal_mode == "gaussian":
        model.x_noise_cov  # fail early for models without additive Gaussian x-noise
    x0 = model.sample_x0(stream, n_x)
    z0 = model.sample_z0_given_x0(np.repeat(x0[:, None, :], n_z, axis=1), stream)
    return DpfState(model, stream, n_x, n_z, x0, z0, np.zeros((n_x, n_z)),
                    marginal_mode=marginal_mode, scheme=scheme, keep_paths=keep_paths)


def _gaussian_logpdf(x, mu, cov):
    lower = np.linalg.cholesky(cov)
    w = np.linalg.solve(lower, (x - mu)[..., None])[..., 0]
    d = x.shape[-1]
    return -0.5 * np.sum(w * w, axis=-1) - np.log(np.diagonal(lower, axis1=-2, axis2=-1)).sum(-1) - 0.5 * d * np.log(2 * np.pi)


def _propose_x_gaussian(model, t, x, z_bar, log_q_bar, stream):
    mu, cov = _moment_match(model, t, x, z_bar, np.exp(log_q_bar))
    lower = np.linalg.cholesky(cov)
    eps = stream.standard_normal(mu.shape)
    return mu + np.einsum("ide,ie->id", lower, eps)


def dpf_step(state: DpfState, y) -> DpfState:
    model, stream = state.model, state.stream
    n_x, n_z = state.n_x, state.n_z
    t = state.t + 1
    x_tilde, z_tilde, log_r = state.x_prop, state.z_prop, state.log_r_prop
    rows = np.arange(n_x)

    # predicted observation from the prior-propagated cloud, before any update
    log_r_norm = log_r - logsumexp(log_r, axis=1, keepdims=True)
    h = model.predict_observation_mean(t, x_tilde[:, None, :], z_tilde)
    y_pred = np.einsum("ij,ijk->k", np.exp(log_r_norm), h) / n_x

    # (1) outer weights; the prior x-proposal cancels the transition marginal
    loglik = model.observation_logpdf(t, y, x_tilde[:, None, :], z_tilde)
    log_lik_marg = logsumexp(loglik + log_r_norm, axis=1)
    try:
        w = normalize(log_lik_marg)
    except AllWeightsDegenerate as exc:
        raise Degenerate(t, str(exc)) from exc

    # (3) computed per tuple before resampling; q_bar travels with its tuple
    log_q_bar, bad_qbar = normalize_rows(loglik + log_r)

    # (2) resample outer tuples
    a = resample(w, n_x, stream, state.scheme)
    x = x_tilde[a]
    z_bar = z_tilde[a]
    lqb = log_q_bar[a]
    base = loglik[a] + log_r[a]

    # (4) propose x[t+1] from the transition mixture
    if state.marginal_mode == "gaussian":
        x_new = _propose_x_gaussian(model, t, x, z_bar, lqb, stream)
    else:
        j = categorical_rows(lqb, 1, stream)[:, 0]
        x_new = model.sample_x_next(t, x, z_bar[rows, j], stream)

    # (5) inner weights given the proposed x[t+1]
    log_trans = model.x_transition_logpdf(t, x_new[:, None, :], x[:, None, :], z_bar)
    log_q, bad_q = normalize_rows(base + log_trans)
    if state.marginal_mode == "gaussian":
        log_trans_marg = _gaussian_logpdf(x_new, *_moment_match(model, t, x, z_bar, np.exp(lqb)))
    else:
        log_trans_marg = logsumexp(log_trans + lqb, axis=1)

    # (6) resample inner clouds
    b = resample_rows(np.exp(log_q), n_z, stream, state.scheme)
    z = z_bar[rows[:, None], b]

    # (7) propose z[t+1]; one transition per resampled inner particle
    z_new = model.sample_z_next(t, x[:, None, :], x_new[:, None, :], z, stream)

    paths = None
    if state.keep_paths:
        prev = state.x_paths[a] if state.x_paths is not None else np.empty((n_x, 0, model.dim_x))
        paths = np.concatenate([prev, x[:, None, :]], axis=1)

    return replace(
        state,
        t=t,
        x=x_tilde,
        z_cloud=z_tilde,
        weights=w.weights,
        log_q_bar=log_q_bar,
        x_prop=x_new,
        z_prop=z_new,
        log_r_prop=np.zeros((n_x, n_z)),
        log_trans_prop=log_trans_marg,
        marginals=MarginalEstimates(state.log_trans_prop, log_lik_marg),
        predicted_observation=y_pred,
        likelihood_evals=state.likelihood_evals + n_x * n_z,
        inner_resets=state.inner_resets + int(bad_qbar.sum() + bad_q.sum()),
        x_paths=paths,
    )


def dpf_estimate(state: DpfState) -> np.ndarray:
    """Nested posterior mean: ``E[x] = sum_i w_i x_i`` and ``E[z] = sum_i w_i sum_j q_bar_ij z_ij``."""
    if state.weights is None:
        raise ValueError("no observation processed yet")
    ex = state.weights @ state.x
    inner = np.einsum("ij,ijk->ik", np.exp(state.log_q_bar), state.z_cloud)
    return np.concatenate([ex, state.weights @ inner])
