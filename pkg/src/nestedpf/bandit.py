"""Hedge and Exp3 for choosing which state group a nested filter samples first.

Rewards come from one-step-ahead prediction errors of the observation:
``r = alpha / (alpha + eps**2)`` with ``eps = ||y_t - y_pred_t||``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .filters import Filter
from .randomness import RngStream

__all__ = [
    "RewardOutOfRange",
    "HedgeState",
    "Exp3State",
    "DecompositionAction",
    "Controller",
    "hedge_distribution",
    "hedge_update",
    "exp3_select",
    "exp3_update",
    "prediction_reward",
    "controller_step",
]

DEFAULT_ACTIONS = ("x first, then z", "z first, then x")


class RewardOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class HedgeState:
    eta: float
    G: np.ndarray

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        G = np.asarray(self.G, dtype=float)
        if not np.all(np.isfinite(G)):
            raise ValueError("cumulative gains must be finite")
        object.__setattr__(self, "G", G)

    @classmethod
    def start(cls, eta: float, K: int = 2) -> "HedgeState":
        return cls(eta, np.zeros(K))

    @property
    def K(self) -> int:
        return len(self.G)


@dataclass(frozen=True)
class Exp3State:
    gamma: float
    hedge: HedgeState

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")

    @classmethod
    def start(cls, gamma: float, eta: float, K: int = 2) -> "Exp3State":
        return cls(gamma, HedgeState.start(eta, K))


@dataclass(frozen=True)
class DecompositionAction:
    id: int
    meaning: str


def hedge_distribution(state: HedgeState) -> np.ndarray:
    """``p_i proportional to exp(eta * G_i)``, computed with a max shift."""
    a = state.eta * state.G
    p = np.exp(a - a.max())
    return p / p.sum()


def hedge_update(state: HedgeState, reward_vector) -> HedgeState:
    r = np.asarray(reward_vector, dtype=float)
    if r.shape != state.G.shape or not np.all(np.isfinite(r)):
        raise ValueError("reward vector must be finite with one entry per action")
    return replace(state, G=state.G + r)


def exp3_mixture(state: Exp3State) -> np.ndarray:
    return (1.0 - state.gamma) * hedge_distribution(state.hedge) + state.gamma / state.hedge.K


def exp3_select(state: Exp3State, stream: RngStream) -> tuple[int, np.ndarray]:
    """Mix Hedge's distribution with the uniform one and draw an action from the mixture."""
    p_hat = exp3_mixture(state)
    cdf = np.cumsum(p_hat)
    action = int(np.searchsorted(cdf, stream.uniform() * cdf[-1], side="right"))
    return min(action, len(p_hat) - 1), p_hat


def exp3_update(state: Exp3State, chosen: int, reward: float, p_hat) -> Exp3State:
    """Feed Hedge the importance-weighted reward of the chosen action (zero elsewhere)."""
    if not 0.0 <= reward <= 1.0:
        raise RewardOutOfRange(f"reward {reward} outside [0, 1]")
    p_hat = np.asarray(p_hat, dtype=float)
    if not p_hat[chosen] > 0:
        raise ValueError("chosen action has zero selection probability")
    simulated = np.zeros(state.hedge.K)
    simulated[chosen] = reward / p_hat[chosen]
    return replace(state, hedge=hedge_update(state.hedge, simulated))


def prediction_reward(epsilon: float, alpha: float) -> float:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return alpha / (alpha + float(epsilon) ** 2)


@dataclass
class Controller:
    """Sequential bandit controller over decomposition actions.

    In ``"hedge"`` mode every action's filter is advanced and scored. In
    ``"exp3"`` mode only the chosen action is scored; with ``keep_alive`` the
    other filters still advance on every observation, otherwise they are left
    behind and caught up from the observation buffer when next chosen.
    """

    mode: str
    stream: RngStream
    alpha: float = 0.001
    eta: float = 0.5
    gamma: float = 0.2
    keep_alive: bool = True
    K: int = 2
    t: int = -1
    hedge: HedgeState | None = None
    exp3: Exp3State | None = None
    history: list[np.ndarray] = field(default_factory=list, repr=False)
    log: list[dict] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.mode not in ("hedge", "exp3"):
            raise ValueError("mode must be 'hedge' or 'exp3'")
        if self.hedge is None and self.exp3 is None:
            if self.mode == "hedge":
                self.hedge = HedgeState.start(self.eta, self.K)
            else:
                self.exp3 = Exp3State.start(self.gamma, self.eta, self.K)

    @property
    def probabilities(self) -> np.ndarray:
        return hedge_distribution(self.hedge if self.mode == "hedge" else self.exp3.hedge)


def _advance(filt: Filter, history: Sequence[np.ndarray]) -> bool:
    """Step ``filt`` through every observation it has not seen yet."""
    ok = not filt.diverged
    while filt.t + 1 < len(history):
        ok = filt.step(history[filt.t + 1])
    return ok


def _score(filt: Filter, ok: bool, y, alpha: float) -> tuple[float, float]:
    if not ok:
        return 0.0, np.nan
    eps = float(np.linalg.norm(np.atleast_1d(y) - filt.predicted_observation))
    return prediction_reward(eps, alpha), eps


def controller_step(controller: Controller, filters: Sequence[Filter], y) -> tuple[int, Controller, Sequence[Filter]]:
    """Process one observation: advance filters, score, and update the bandit.

    Returns ``(chosen action, controller, filters)``; the controller and the
    filters are updated in place and returned for convenience.
    """
    if len(filters) != controller.K:
        raise ValueError("need one filter per action")
    c = controller
    c.t += 1
    c.history.append(np.atleast_1d(np.asarray(y, dtype=float)))
    p = c.probabilities
    eps = np.full(c.K, np.nan)
    if c.mode == "hedge":
        rewards = np.zeros(c.K)
        for k, filt in enumerate(filters):
            rewards[k], eps[k] = _score(filt, _advance(filt, c.history), y, c.alpha)
        c.hedge = hedge_update(c.hedge, rewards)
        chosen = int(np.argmax(p))
        p_hat = p
        reward = rewards[chosen]
    else:
        chosen, p_hat = exp3_select(c.exp3, c.stream)
        for k, filt in enumerate(filters):
            if k == chosen or c.keep_alive:
                r_k, eps[k] = _score(filt, _advance(filt, c.history), y, c.alpha)
                if k == chosen:
                    reward = r_k
        c.exp3 = exp3_update(c.exp3, chosen, min(max(reward, 0.0), 1.0), p_hat)
    c.log.append({"t": c.t, "p": p, "p_hat": p_hat, "chosen": chosen, "reward": reward, "eps": eps})
    return chosen, c, filters
