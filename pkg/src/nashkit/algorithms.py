"""One entry point per algorithm id, shared by the CLI and the bench harness.

Every runner takes ``(game, params, rng, deadline)`` and returns an
:class:`Outcome`. For search-and-mix algorithms the ``pre_*`` metrics
describe the profile before the mixing phase; for learning dynamics they
describe the last iterate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from . import approx_ne, approx_wsne, dynamics, exact
from .errors import NumericalFailure
from .game import SUPPORT_THRESHOLD, BimatrixGame, MixedProfile, epsilon, ws_epsilon_of

OK, TIMEOUT, PRECISION_ERROR = "ok", "timeout", "precision_error"
STATUSES = (OK, TIMEOUT, PRECISION_ERROR)

DEFAULT_PARAMS = {
    "delta": approx_ne.DEFAULT_DELTA,
    "round_cap": approx_ne.DEFAULT_ROUND_CAP,
    "wsne_delta": 0.1,
    "search_budget": 10 ** 6,
    "fgss_size_cap": 30,
    "T": dynamics.DEFAULT_T,
    "initial_label": 1,
}


@dataclass
class Outcome:
    profile: Optional[MixedProfile]
    epsilon: Optional[float]
    ws_epsilon: Optional[float]
    pre_epsilon: Optional[float] = None
    pre_ws_epsilon: Optional[float] = None
    status: str = OK
    detail: str = ""
    extras: dict = field(default_factory=dict)


def _metrics(game, profile):
    return epsilon(game, profile), ws_epsilon_of(game, profile, SUPPORT_THRESHOLD)


def _outcome(game, final, pre=None, status=OK, detail="", **extras) -> Outcome:
    eps, ws = _metrics(game, final)
    pe = pw = None
    if pre is not None:
        pe, pw = _metrics(game, pre)
    return Outcome(final, eps, ws, pe, pw, status, detail, extras)


def _status_of(raw: str):
    """Map an algorithm's own status word onto the harness statuses."""
    if raw in STATUSES:
        return raw, ""
    return OK, raw  # round_cap, stalled: a valid profile with a note


def _search_mix(fn):
    def run(game, params, rng, deadline):
        res = fn(game)
        return _outcome(game, res.final, res.pre_mix, *_status_of(res.status))

    return run


def _dmp(game, params, rng, deadline):
    # the starting row is a seeded draw; row 1 without an rng
    start = int(rng.integers(1, game.m + 1)) if rng is not None else 1
    res = approx_ne.dmp06(game, start_row=start)
    return _outcome(game, res.final, res.pre_mix, *_status_of(res.status), start_row=start)


def _descent(fn):
    def run(game, params, rng, deadline):
        init = approx_ne.random_init(game, rng) if rng is not None else None
        res, st = fn(game, params["delta"], init, int(params["round_cap"]), deadline)
        status, detail = _status_of(res.status)
        return _outcome(game, res.final, res.pre_mix, status, detail, rounds=st.rounds, f=st.f)

    return run


def _wsne(call):
    def run(game, params, rng, deadline):
        res = call(game, params, deadline)
        return _outcome(game, res.profile, None, *_status_of(res.status), tactic=res.tactic_used)

    return run


def _dynamic(name):
    def run(game, params, rng, deadline):
        seed = None if rng is None else int(rng.integers(2 ** 63))
        tr = dynamics.DYNAMICS[name](game, int(params["T"]), seed=seed, checkpoints=False)
        return _outcome(game, tr.average_profile, tr.last_profile)

    return run


def _support_enumeration(game, params, rng, deadline):
    diag: dict = {}
    found = exact.support_enumeration(game, diagnostics=diag, deadline=deadline)
    status = TIMEOUT if diag.get("timed_out") else OK
    if not found:
        if status == OK:
            status = PRECISION_ERROR
        return Outcome(None, None, None, status=status, detail="no equilibrium found")
    return _outcome(game, found[0], None, status, count=len(found))


def _lemke_howson(game, params, rng, deadline):
    return _outcome(game, exact.lemke_howson(game, int(params["initial_label"])))


ALGORITHMS: Dict[str, Callable] = {
    "kps06": _search_mix(approx_ne.kps06),
    "dmp06": _dmp,
    "cdffjs15_038": _search_mix(approx_ne.cdffjs15_038),
    "bbm07": _search_mix(approx_ne.bbm07),
    "ts07": _descent(approx_ne.ts07),
    "dfm22_13": _descent(approx_ne.dfm22_13),
    "ks07": _wsne(lambda g, p, d: approx_wsne.ks07(g)),
    "fgss12": _wsne(lambda g, p, d: approx_wsne.fgss12(g, int(p["fgss_size_cap"]), d)),
    "cdffjs15_06528": _wsne(lambda g, p, d: approx_wsne.cdffjs15_06528(g)),
    "dfm22_12": _wsne(lambda g, p, d: approx_wsne.dfm22_12(g, p["wsne_delta"], int(p["search_budget"]), d)),
    "fp": _dynamic("fp"),
    "hedge": _dynamic("hedge"),
    "mwu_exp": _dynamic("mwu_exp"),
    "mwu_linear": _dynamic("mwu_linear"),
    "regret_matching": _dynamic("regret_matching"),
    "support_enumeration": _support_enumeration,
    "lemke_howson": _lemke_howson,
}

DYNAMIC_IDS = ("fp", "hedge", "mwu_exp", "mwu_linear", "regret_matching")


def run_algorithm(
    alg: str,
    game: BimatrixGame,
    params: Optional[dict] = None,
    rng: Optional[np.random.Generator] = None,
    deadline: Optional[float] = None,
) -> Outcome:
    """Run ``alg`` and fold numerical failures into a ``precision_error`` outcome.

    ``deadline`` is an absolute ``time.perf_counter()`` value honoured by the
    algorithms that can stop early.
    """
    if alg not in ALGORITHMS:
        raise KeyError(f"unknown algorithm {alg!r}; known: {sorted(ALGORITHMS)}")
    merged = dict(DEFAULT_PARAMS)
    merged.update(params or {})
    try:
        return ALGORITHMS[alg](game, merged, rng, deadline)
    except NumericalFailure as exc:
        return Outcome(None, None, None, status=PRECISION_ERROR, detail=str(exc))
