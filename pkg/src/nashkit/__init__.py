"""Equilibrium computation for two-player normal-form (bimatrix) games."""
from .algorithms import ALGORITHMS, Outcome, run_algorithm
from .approx_ne import SearchMixResult, bbm07, cdffjs15_038, dfm22_13, dmp06, kps06, ts07, ts_descent
from .approx_wsne import WsneResult, cdffjs15_06528, dfm22_12, fgss12, ks07
from .dynamics import DynamicsTrace, fictitious_play, hedge, mwu, regret_matching
from .errors import *  # noqa: F401,F403
from .exact import k_uniform_search, kappa, lemke_howson, support_enumeration, to_lcp
from .fileio import read_game, read_profile, write_game, write_profile
from .game import (
    ApproxReport,
    BimatrixGame,
    MixedProfile,
    best_response,
    epsilon,
    epsilon_of,
    normalize,
    regrets,
    ws_epsilon_of,
)
from .generate import GameSpec, fixture, generate, random_general, random_zero_sum
from .lp import LpProblem, LpSolution, solve_lp, solve_zero_sum

__version__ = "0.1.0"
