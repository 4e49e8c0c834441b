"""Look-ahead decentralized particle filter.

Each step estimates the predictive likelihood ``p(y_t | x_{0:t-1}^i, y_{0:t-1})``
of every outer particle with a small Monte Carlo table, resamples on those
weights *before* proposing, and then proposes ``x_t`` from the approximate
optimal proposal by likelihood-proportional selection from the same table.

Per outer particle ``i`` the table holds ``n_x_prime`` draws ``xx[m]`` from the
transition mixture and, for each, ``n_z_prime`` draws ``zz[m, k]`` from the
inner predictive given ``xx[m]``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .models import StateSpaceModel
from .randomness import (
    AllWeightsDegenerate,
    Degenerate,
    RngStream,
    WeightVector,
    categorical_rows,
    normalize,
    normalize_rows,
    resample,
    resample_rows,
)

__all__ = [
    "LookaheadTable",
    "LaDpfState",
    "ladpf_init",
    "lookahead_weights",
    "la_resample",
    "la_propose",
    "ladpf_step",
    "ladpf_estimate",
]


@dataclass
class LookaheadTable:
    """Look-ahead samples for a batch of parents (leading axis ``i``).

    Shapes: ``x`` (N, M, dim_x); ``z`` (N, M, K, dim_z); ``loglik`` (N, M, K);
    ``log_ancestor`` (N, M, n_z) holds the normalized log-weights of the
    parent's inner particles given ``x[i, m]``.
    """

    x: np.ndarray
    z: np.ndarray
    loglik: np.ndarray
    log_ancestor: np.ndarray

    def take(self, idx: np.ndarray) -> "LookaheadTable":
        return LookaheadTable(self.x[idx], self.z[idx], self.loglik[idx], self.log_ancestor[idx])


@dataclass
class LaDpfState:
    """Equally weighted outer particles at step ``t`` with their inner clouds.

    ``log_q_bar`` rows are the inner measurement-update weights at ``t``.
    Between phases of a step, ``table`` holds the look-ahead samples generated
    from the current tuples.
    """

    model: StateSpaceModel
    stream: RngStream
    n_x: int
    n_z: int
    x: np.ndarray
    z_cloud: np.ndarray
    log_q_bar: np.ndarray
    t: int = -1
    n_x_prime: int = 5
    n_z_prime: int = 5
    reuse_lookahead: bool = True
    scheme: str = "systematic"
    table: LookaheadTable | None = None
    w_hat: np.ndarray | None = None
    predicted_observation: np.ndarray | None = None
    likelihood_evals: int = 0
    inner_resets: int = 0


def ladpf_init(model: StateSpaceModel, n_x: int, n_z: int, stream: RngStream, n_x_prime: int = 5,
               n_z_prime: int = 5, reuse_lookahead: bool = True, scheme: str = "systematic") -> LaDpfState:
    if min(n_x, n_z, n_x_prime, n_z_prime) < 1:
        raise ValueError("all particle counts must be >= 1")
    x0 = model.sample_x0(stream, n_x)
    z0 = model.sample_z0_given_x0(np.repeat(x0[:, None, :], n_z, axis=1), stream)
    return LaDpfState(model, stream, n_x, n_z, x0, z0, np.full((n_x, n_z), -np.log(n_z)),
                      n_x_prime=n_x_prime, n_z_prime=n_z_prime, reuse_lookahead=reuse_lookahead,
                      scheme=scheme)


def _build_table(model, t, y, x_par, z_par, lqb_par, n_m, n_k, stream) -> LookaheadTable:
    """Draw the look-ahead table for time ``t`` from parents at ``t - 1``."""
    n = len(x_par)
    rows = np.arange(n)
    # x candidates from the transition mixture: component by q_bar, then transition
    j = categorical_rows(lqb_par, n_m, stream)
    xx = model.sample_x_next(t - 1, x_par[:, None, :], z_par[rows[:, None], j], stream)
    # parent inner weights given each candidate (q-type update)
    log_anc = lqb_par[:, None, :] + model.x_transition_logpdf(
        t - 1, xx[:, :, None, :], x_par[:, None, None, :], z_par[:, None, :, :])
    log_anc, _ = normalize_rows(log_anc.reshape(n * n_m, -1))
    log_anc = log_anc.reshape(n, n_m, -1)
    l = categorical_rows(log_anc.reshape(n * n_m, -1), n_k, stream).reshape(n, n_m, n_k)
    z_anc = z_par[rows[:, None, None], l]
    zz = model.sample_z_next(t - 1, x_par[:, None, None, :], xx[:, :, None, :], z_anc, stream)
    loglik = model.observation_logpdf(t, y, xx[:, :, None, :], zz)
    return LookaheadTable(xx, zz, loglik, log_anc)


def lookahead_weights(state: LaDpfState, y) -> tuple[WeightVector, LaDpfState]:
    """Predictive-likelihood weights of the outer particles for observation ``y``.

    Returns the normalized weights and the state carrying the look-ahead table.
    At the first step there is no transition; the prior clouds serve as the table.
    """
    model, stream = state.model, state.stream
    t = state.t + 1
    if t == 0:
        loglik = model.observation_logpdf(t, y, state.x[:, None, :], state.z_cloud)
        table = LookaheadTable(state.x[:, None, :], state.z_cloud[:, None, :, :], loglik[:, None, :],
                               state.log_q_bar[:, None, :])
        evals = state.n_x * state.n_z
    else:
        table = _build_table(model, t, y, state.x, state.z_cloud, state.log_q_bar,
                             state.n_x_prime, state.n_z_prime, stream)
        evals = state.n_x * state.n_x_prime * state.n_z_prime
    n_cells = table.loglik.shape[1] * table.loglik.shape[2]
    log_w = logsumexp(table.loglik, axis=(1, 2)) - np.log(n_cells)
    y_pred = model.predict_observation_mean(t, table.x[:, :, None, :], table.z).reshape(-1, model.dim_y).mean(axis=0)
    try:
        w = normalize(log_w)
    except AllWeightsDegenerate as exc:
        raise Degenerate(t, str(exc)) from exc
    new = replace(state, table=table, w_hat=w.weights,
                  predicted_observation=y_pred, likelihood_evals=state.likelihood_evals + evals)
    return w, new


def la_resample(state: LaDpfState, w_hat) -> LaDpfState:
    """Resample outer tuples, with their parents and look-ahead tables, by ``w_hat``."""
    a = resample(w_hat, state.n_x, state.stream, state.scheme)
    return replace(state, x=state.x[a], z_cloud=state.z_cloud[a], log_q_bar=state.log_q_bar[a],
                   table=state.table.take(a))


def la_propose(state: LaDpfState, y) -> LaDpfState:
    """Draw ``x_t`` from the approximate optimal proposal, then the inner clouds and ``q_bar``."""
    model, stream = state.model, state.stream
    n_x, n_z = state.n_x, state.n_z
    t = state.t + 1
    rows = np.arange(n_x)
    x_par, z_par, lqb_par = state.x, state.z_cloud, state.log_q_bar
    table = state.table
    evals = 0
    if t == 0:
        x, z = x_par, z_par
    else:
        if not state.reuse_lookahead:
            table = _build_table(model, t, y, x_par, z_par, lqb_par, state.n_x_prime, state.n_z_prime, stream)
            evals += n_x * state.n_x_prime * state.n_z_prime
        # pick a (m, k) cell with probability proportional to its likelihood; keep x[m]
        n_m, n_k = table.loglik.shape[1:]
        cell = categorical_rows(table.loglik.reshape(n_x, n_m * n_k), 1, stream)[:, 0]
        m = cell // n_k
        x = table.x[rows, m]
        anc = resample_rows(np.exp(table.log_ancestor[rows, m]), n_z, stream, state.scheme)
        z = model.sample_z_next(t - 1, x_par[:, None, :], x[:, None, :], z_par[rows[:, None], anc], stream)
    loglik = model.observation_logpdf(t, y, x[:, None, :], z)
    log_q_bar, bad = normalize_rows(loglik)
    return replace(state, t=t, x=x, z_cloud=z, log_q_bar=log_q_bar, table=None,
                   likelihood_evals=state.likelihood_evals + evals + n_x * n_z,
                   inner_resets=state.inner_resets + int(bad.sum()))


def ladpf_step(state: LaDpfState, y) -> LaDpfState:
    w_hat, state = lookahead_weights(state, y)
    state = la_resample(state, w_hat)
    return la_propose(state, y)


def ladpf_estimate(state: LaDpfState) -> np.ndarray:
    """Posterior mean from equally weighted outer particles and ``q_bar``-weighted inner clouds."""
    inner = np.einsum("ij,ijk->ik", np.exp(state.log_q_bar), state.z_cloud)
    return np.concatenate([state.x.mean(axis=0), inner.mean(axis=0)])
