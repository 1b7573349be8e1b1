"""Continuous-action learning automaton over bid quantities.

The learner keeps a Gaussian N(mu, sigma) over bids.  Odd iterations play
the mean, even iterations play a clamped sample; after the first pair, every
iteration compares the latest (mean-play, sampled-play) profits and nudges
mu a fixed step toward whichever did better while sigma grows or shrinks a
fixed step depending on whether the sample landed beyond one standard
deviation of the mean, minus a constant decay.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import LearnerConfig, ModelError

MEAN_PLAY = "mean"
SAMPLED_PLAY = "sampled"


@dataclass(frozen=True)
class LearnerParams:
    delta_mu: float
    delta_sigma: float
    c: float
    sigma_floor: float
    action_min: float
    action_max: float
    iteration_limit: int
    sigma_rule: str = "absolute"  # "absolute": compare |x-mu| to sigma; "signed": x-mu

    def __post_init__(self):
        if min(self.delta_mu, self.delta_sigma, self.c) <= 0:
            raise ModelError("delta_mu, delta_sigma and c must be > 0")
        if self.sigma_floor < 0:
            raise ModelError("sigma_floor must be >= 0")
        if self.action_min >= self.action_max:
            raise ModelError("need action_min < action_max")
        if self.sigma_rule not in ("absolute", "signed"):
            raise ModelError("sigma_rule must be 'absolute' or 'signed'")

    @classmethod
    def from_config(cls, cfg: LearnerConfig, action_min: float, action_max: float) -> "LearnerParams":
        return cls(
            delta_mu=cfg.delta_mu,
            delta_sigma=cfg.delta_sigma,
            c=cfg.c,
            sigma_floor=cfg.sigma_floor,
            action_min=action_min,
            action_max=action_max,
            iteration_limit=cfg.iteration_limit,
            sigma_rule=cfg.sigma_rule,
        )


@dataclass(frozen=True)
class ExperienceRecord:
    t: int
    action: float
    profit: float
    kind: str  # MEAN_PLAY on odd t, SAMPLED_PLAY on even t


@dataclass(frozen=True)
class LearnerState:
    mu: float
    sigma: float
    t: int = 1
    buffer: tuple[ExperienceRecord, ...] = ()

    @classmethod
    def initial(cls, cfg: LearnerConfig, params: LearnerParams) -> "LearnerState":
        mu = min(max(cfg.mu0, params.action_min), params.action_max)
        return cls(mu=mu, sigma=max(cfg.sigma0, params.sigma_floor))


def is_mean_play(t: int) -> bool:
    return t % 2 == 1


def select_action(state: LearnerState, params: LearnerParams, rng: np.random.Generator) -> float:
    """The bid for the current iteration: mean on odd t, clamped sample on even."""
    if is_mean_play(state.t):
        return state.mu
    x = rng.normal(state.mu, state.sigma) if state.sigma > 0 else state.mu
    return min(max(x, params.action_min), params.action_max)


def update_coefficients(
    x: float, mu: float, sigma: float, b_x: float, b_mu: float, sigma_rule: str = "absolute"
) -> tuple[float, float]:
    """(k_mu, k_sigma) for one comparison of sampled vs mean profit.

    Ties in profit freeze the mean and leave sigma to its decay.  The
    boundary |x - mu| == sigma counts as the near side.
    """
    if b_x > b_mu:
        k_mu = math.copysign(1.0, x - mu) if x != mu else 0.0
    elif b_mu > b_x:
        k_mu = math.copysign(1.0, mu - x) if x != mu else 0.0
    else:
        return 0.0, 0.0

    dev = abs(x - mu) if sigma_rule == "absolute" else x - mu
    if b_x > b_mu:
        k_sigma = 1.0 if dev > sigma else -1.0
    else:
        k_sigma = 1.0 if dev <= sigma else -1.0
    return k_mu, k_sigma


def update_distribution(
    state: LearnerState, x: float, b_x: float, b_mu: float, params: LearnerParams
) -> LearnerState:
    """Apply one fixed-step update of (mu, sigma) from a profit comparison."""
    k_mu, k_sigma = update_coefficients(x, state.mu, state.sigma, b_x, b_mu, params.sigma_rule)
    mu = state.mu + k_mu * params.delta_mu
    mu = min(max(mu, params.action_min), params.action_max)
    sigma = max(params.sigma_floor, state.sigma + k_sigma * params.delta_sigma - params.c)
    return replace(state, mu=mu, sigma=sigma)


def record_and_update(state: LearnerState, action: float, profit: float, params: LearnerParams) -> LearnerState:
    """Store the played (action, profit) and, once two plays exist, update.

    On odd t (mean play) the comparison is b_mu = P_t against the previous
    iteration's sampled profit; on even t it is b_x = P_t against the
    previous iteration's mean profit.  No update happens for t <= 2.
    """
    kind = MEAN_PLAY if is_mean_play(state.t) else SAMPLED_PLAY
    rec = ExperienceRecord(t=state.t, action=action, profit=profit, kind=kind)
    state = replace(state, buffer=state.buffer + (rec,))
    if state.t > 2:
        prev = state.buffer[-2]
        if kind == MEAN_PLAY:
            x, b_x, b_mu = prev.action, prev.profit, profit
        else:
            x, b_x, b_mu = action, profit, prev.profit
        state = update_distribution(state, x, b_x, b_mu, params)
    return replace(state, t=state.t + 1)


def learning_step(
    state: LearnerState,
    market_callback,
    params: LearnerParams,
    rng: np.random.Generator,
) -> LearnerState:
    """Play one iteration against a market: bid, observe profit, update."""
    if state.t > params.iteration_limit:
        raise ModelError("iteration limit exceeded")
    action = select_action(state, params, rng)
    profit = market_callback(action)
    return record_and_update(state, action, profit, params)
