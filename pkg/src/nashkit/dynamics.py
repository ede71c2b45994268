"""Learning dynamics: fictitious play, Hedge, MWU and regret matching.

Both players move simultaneously and, apart from fictitious play, observe
the opponent's mixed strategy (full-information expected updates). All
dynamics start from zero information: empty counts, zero cumulative
payoffs and zero regrets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Union

import numpy as np

from .game import SUPPORT_THRESHOLD, BimatrixGame, MixedProfile, epsilon, ws_epsilon_of

DEFAULT_T = 100_000
MWU_RATE = 0.5


@dataclass
class DynamicsTrace:
    average_profile: MixedProfile
    last_profile: MixedProfile
    T: int
    seed: Optional[int] = None
    algorithm: str = ""
    checkpoints: List[int] = field(default_factory=list)
    epsilon_series: List[float] = field(default_factory=list)
    ws_series: List[float] = field(default_factory=list)
    counts: Optional[tuple] = None


@dataclass
class RegretLedger:
    """Cumulative per-action regrets and payoffs of one player."""

    regrets: np.ndarray
    payoffs: np.ndarray

    @classmethod
    def zeros(cls, k: int) -> "RegretLedger":
        return cls(np.zeros(k), np.zeros(k))

    def update(self, action_payoffs, strategy) -> None:
        u = np.asarray(action_payoffs, dtype=float)
        self.payoffs += u
        self.regrets += u - float(strategy @ u)


def _interval(T: int, every: Optional[int]) -> int:
    return max(1, T // 100) if every is None else max(1, int(every))


def _record(game, trace, t, x_sum, y_sum):
    p = MixedProfile.from_weights(x_sum / t, y_sum / t)
    trace.checkpoints.append(t)
    trace.epsilon_series.append(epsilon(game, p))
    trace.ws_series.append(ws_epsilon_of(game, p, SUPPORT_THRESHOLD))


def fictitious_play(game: BimatrixGame, T: int = DEFAULT_T, seed: Optional[int] = None,
                    checkpoint_every: Optional[int] = None, checkpoints: bool = True) -> DynamicsTrace:
    """Simultaneous discrete-time fictitious play.

    Round 0 plays the lowest index; later rounds play the lowest-index best
    response to the opponent's empirical distribution so far. The average
    profile is the pair of empirical distributions after ``T`` rounds.
    ``seed`` is recorded only, as the dynamic is deterministic.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    R, C = game.R, game.C
    m, n = game.shape
    RT = np.ascontiguousarray(R.T)
    row_payoff = np.zeros(m)  # sum over past column actions of R[:, j]
    col_payoff = np.zeros(n)  # sum over past row actions of C[i, :]
    cx = np.zeros(m, dtype=np.int64)
    cy = np.zeros(n, dtype=np.int64)
    trace = DynamicsTrace(None, None, T, seed, "fp")
    every = _interval(T, checkpoint_every)
    i = j = 0
    for t in range(T):
        if t > 0:
            i = int(np.argmax(row_payoff))
            j = int(np.argmax(col_payoff))
        cx[i] += 1
        cy[j] += 1
        row_payoff += RT[j]
        col_payoff += C[i]
        if checkpoints and (t + 1) % every == 0:
            _record(game, trace, t + 1, cx.astype(float), cy.astype(float))
    trace.average_profile = MixedProfile(cx / T, cy / T)
    trace.last_profile = MixedProfile.pure(i, j, m, n)
    trace.counts = (cx, cy)
    return trace


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=float)
    z = np.exp(z - z.max())
    return z / z.sum()


def hedge_temperature(T: int) -> float:
    """Preset temperature ``log(2) / T``."""
    return math.log(2.0) / T


def _run_mixed(game, T, seed, name, step_row, step_col, init_row, init_col, every, checkpoints):
    """Drive a pair of mixed-strategy learners; each ``step`` maps (state, payoffs, t) -> strategy."""
    if T < 1:
        raise ValueError("T must be at least 1")
    R, C = game.R, game.C
    m, n = game.shape
    x, sx = init_row(m)
    y, sy = init_col(n)
    x_sum = np.zeros(m)
    y_sum = np.zeros(n)
    trace = DynamicsTrace(None, None, T, seed, name)
    every = _interval(T, every)
    for t in range(1, T + 1):
        x_sum += x
        y_sum += y
        u_row = R @ y
        u_col = x @ C
        if checkpoints and t % every == 0:
            _record(game, trace, t, x_sum, y_sum)
        if t == T:
            break
        x = step_row(sx, u_row, x, t)
        y = step_col(sy, u_col, y, t)
    trace.average_profile = MixedProfile.from_weights(x_sum / T, y_sum / T)
    trace.last_profile = MixedProfile.from_weights(x, y)
    return trace


def hedge(game: BimatrixGame, T: int = DEFAULT_T,
          temperature: Union[float, Callable[[int], float], None] = None,
          seed: Optional[int] = None, checkpoint_every: Optional[int] = None,
          checkpoints: bool = True) -> DynamicsTrace:
    """Softmax of cumulative payoffs divided by the temperature.

    ``temperature`` is a constant or a function of the round number; the
    default is :func:`hedge_temperature` of ``T``.
    """
    if temperature is None:
        temperature = hedge_temperature(T)
    sched = temperature if callable(temperature) else (lambda t, c=float(temperature): c)
    if sched(1) <= 0:
        raise ValueError("temperature must be positive")

    def init(k):
        return np.full(k, 1.0 / k), np.zeros(k)

    def step(cum, u, _p, t):
        cum += u
        return softmax(cum / sched(t + 1))

    return _run_mixed(game, T, seed, "hedge", step, step, init, init, checkpoint_every, checkpoints)


def mwu_update(weights, u, rate: float, variant: str = "exp") -> np.ndarray:
    """One multiplicative update: ``w (1 - rate)^u`` or the first-order ``w (1 - rate u)``."""
    w = np.asarray(weights, dtype=float)
    u = np.asarray(u, dtype=float)
    if variant == "exp":
        return w * (1.0 - rate) ** u
    if variant == "linear":
        return w * (1.0 - rate * u)
    raise ValueError("variant must be 'exp' or 'linear'")


def mwu(game: BimatrixGame, T: int = DEFAULT_T, rate: float = MWU_RATE, variant: str = "exp",
        seed: Optional[int] = None, checkpoint_every: Optional[int] = None,
        checkpoints: bool = True) -> DynamicsTrace:
    """Multiplicative weights driven by losses ``1 - payoff``.

    Weights are kept in log space so long runs do not underflow.
    """
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must lie in (0, 1)")
    if variant == "exp":
        def logstep(loss):
            return loss * math.log1p(-rate)
    elif variant == "linear":
        def logstep(loss):
            return np.log1p(-rate * loss)
    else:
        raise ValueError("variant must be 'exp' or 'linear'")

    def init(k):
        return np.full(k, 1.0 / k), np.zeros(k)

    def step(logw, u, _p, t):
        logw += logstep(1.0 - u)
        return softmax(logw)

    return _run_mixed(game, T, seed, f"mwu_{variant}", step, step, init, init, checkpoint_every, checkpoints)


def regret_matching_strategy(regrets) -> np.ndarray:
    """Positive regrets normalized, or uniform when none is positive."""
    r = np.clip(np.asarray(regrets, dtype=float), 0.0, None)
    s = r.sum()
    if s > 0:
        return r / s
    return np.full(r.size, 1.0 / r.size)


def regret_matching(game: BimatrixGame, T: int = DEFAULT_T, seed: Optional[int] = None,
                    checkpoint_every: Optional[int] = None, checkpoints: bool = True) -> DynamicsTrace:
    """Play proportionally to positive cumulative regret."""

    def init(k):
        return np.full(k, 1.0 / k), np.zeros(k)

    def step(reg, u, p, t):
        reg += u - p @ u
        return regret_matching_strategy(reg)

    return _run_mixed(game, T, seed, "regret_matching", step, step, init, init, checkpoint_every, checkpoints)


DYNAMICS = {
    "fp": fictitious_play,
    "hedge": hedge,
    "mwu_exp": lambda game, T=DEFAULT_T, seed=None, **kw: mwu(game, T, variant="exp", seed=seed, **kw),
    "mwu_linear": lambda game, T=DEFAULT_T, seed=None, **kw: mwu(game, T, variant="linear", seed=seed, **kw),
    "regret_matching": regret_matching,
}
