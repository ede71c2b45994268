"""Benchmark harness: scenarios x sizes x seeds x algorithms.

Config file (INI, one ``[bench]`` section)::

    [bench]
    scenarios = zero_sum, general        ; also fixture:<name>, file:<path>
    sizes = 10, 100                      ; n or mxn
    algorithms = kps06, ts07, fp
    seed_count = 40                      ; default 40 @ 10, 20 @ 100, 10 @ 1000, else 10
    seed_start = 0                       ; or seed_list = 3, 7, 11
    master_seed = 0                      ; per-task RNG root
    timeout_floor = 60                   ; seconds
    ts_reference = true                  ; timeout = max(floor, TS07 time on the game)
    reference_cap = 3600                 ; seconds allowed for the TS07 reference itself
    warmup = true                        ; run twice, time the second run
    jobs = 1
    delta = 0.001                        ; TS07 / DFM22-1/3
    round_cap = 500
    wsne_delta = 0.1                     ; DFM22-1/2
    search_budget = 1000000
    fgss_size_cap = 30
    iterations = 100000                  ; learning dynamics T
    initial_label = 1                    ; Lemke-Howson

Each task runs in a forked child process so a wall-clock timeout can be
enforced; algorithms that accept a deadline also stop cooperatively.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import logging
import math
import multiprocessing as mp
import os
import time
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from multiprocessing.connection import wait
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .algorithms import ALGORITHMS, DEFAULT_PARAMS, OK, PRECISION_ERROR, TIMEOUT, run_algorithm
from .errors import ConfigError, NashkitError
from .generate import FIXTURES, GameSpec, generate

log = logging.getLogger(__name__)

CSV_VERSION = 1
CSV_COLUMNS = (
    "csv_version", "task", "scenario", "size", "seed", "algorithm",
    "epsilon", "ws_epsilon", "pre_mix_epsilon", "pre_mix_ws_epsilon",
    "time_ms", "timeout_ms", "status", "detail", "config_digest",
)
TIME_COLUMNS = ("time_ms", "timeout_ms")
SEED_DEFAULTS = {10: 40, 100: 20, 1000: 10}
FALLBACK_SEEDS = 10
KILL_GRACE = 10.0

_SCENARIO_FAMILY = {"zero_sum": "random_zero_sum", "general": "random_general"}
_INT_KEYS = ("seed_count", "seed_start", "master_seed", "jobs", "round_cap", "search_budget",
             "fgss_size_cap", "iterations", "initial_label")
_FLOAT_KEYS = ("timeout_floor", "reference_cap", "delta", "wsne_delta")
_BOOL_KEYS = ("ts_reference", "warmup")
_LIST_KEYS = ("scenarios", "sizes", "algorithms", "seed_list")
KNOWN_KEYS = _INT_KEYS + _FLOAT_KEYS + _BOOL_KEYS + _LIST_KEYS


@dataclass(frozen=True)
class Task:
    index: int
    scenario: str
    size: str
    spec: GameSpec
    algorithm: str

    @property
    def game_key(self) -> str:
        return f"{self.scenario}|{self.size}|{self.spec.seed}"


@dataclass
class BenchPlan:
    tasks: List[Task]
    params: dict
    timeout_floor: float = 60.0
    reference_cap: float = 3600.0
    ts_reference: bool = True
    warmup: bool = True
    jobs: int = 1
    master_seed: int = 0
    digest: str = ""
    warnings: List[str] = field(default_factory=list)


@dataclass
class RunRecord:
    task: int
    scenario: str
    size: str
    seed: Optional[int]
    algorithm: str
    epsilon: Optional[float]
    ws_epsilon: Optional[float]
    pre_mix_epsilon: Optional[float]
    pre_mix_ws_epsilon: Optional[float]
    time_ms: float
    timeout_ms: float
    status: str
    detail: str = ""
    config_digest: str = ""

    def row(self) -> dict:
        d = asdict(self)
        d["csv_version"] = CSV_VERSION
        return {k: _fmt(d[k]) for k in CSV_COLUMNS}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


# config -------------------------------------------------------------------


def _split(value: str) -> List[str]:
    return [s.strip() for s in value.replace("\n", ",").split(",") if s.strip()]


def _dedup(items, what, warnings):
    out = list(OrderedDict.fromkeys(items))
    if len(out) < len(items):
        msg = f"duplicate {what} removed"
        log.warning(msg)
        warnings.append(msg)
    return out


def _parse_size(tok: str) -> Tuple[int, int]:
    parts = tok.lower().split("x")
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad size {tok!r}", "bench.sizes") from None
    if len(dims) == 1:
        dims = dims * 2
    if len(dims) != 2 or min(dims) < 1:
        raise ConfigError(f"bad size {tok!r}", "bench.sizes")
    return dims[0], dims[1]


def load_config(source) -> Dict[str, str]:
    """Read the ``[bench]`` section from a path or from INI text."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        if isinstance(source, str) and "\n" not in source and os.path.exists(source):
            with open(source, encoding="utf-8") as fh:
                cp.read_file(fh)
        elif isinstance(source, str) and "[" in source:
            cp.read_string(source)
        else:
            raise ConfigError(f"cannot read config {source!r}")
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config: {exc}") from None
    if not cp.has_section("bench"):
        raise ConfigError("missing [bench] section", "bench")
    return dict(cp["bench"])


def plan(source, overrides: Optional[dict] = None) -> BenchPlan:
    """Expand a config into a deterministic task list."""
    raw = load_config(source)
    raw.update({k: str(v) for k, v in (overrides or {}).items() if v is not None})
    for key in raw:
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown key", f"bench.{key}")
    cfg: dict = {}
    for key in _INT_KEYS:
        if key in raw:
            try:
                cfg[key] = int(raw[key])
            except ValueError:
                raise ConfigError(f"expected an integer, got {raw[key]!r}", f"bench.{key}") from None
    for key in _FLOAT_KEYS:
        if key in raw:
            try:
                cfg[key] = float(raw[key])
            except ValueError:
                raise ConfigError(f"expected a number, got {raw[key]!r}", f"bench.{key}") from None
            if not math.isfinite(cfg[key]) or cfg[key] < 0:
                raise ConfigError("must be a non-negative number", f"bench.{key}")
    for key in _BOOL_KEYS:
        if key in raw:
            v = raw[key].strip().lower()
            if v not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ConfigError(f"expected a boolean, got {raw[key]!r}", f"bench.{key}")
            cfg[key] = v in ("true", "yes", "1", "on")

    warnings: List[str] = []
    algs = _dedup(_split(raw.get("algorithms", "")), "algorithms", warnings)
    if not algs:
        raise ConfigError("no algorithms listed", "bench.algorithms")
    for a in algs:
        if a not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {a!r}", "bench.algorithms")
    scenarios = _dedup(_split(raw.get("scenarios", "")), "scenarios", warnings)
    if not scenarios:
        raise ConfigError("no scenarios listed", "bench.scenarios")
    sizes = _dedup([_parse_size(s) for s in _split(raw.get("sizes", ""))], "sizes", warnings)
    seed_list = None
    if "seed_list" in raw:
        try:
            seed_list = _dedup([int(s) for s in _split(raw["seed_list"])], "seeds", warnings)
        except ValueError:
            raise ConfigError("seeds must be integers", "bench.seed_list") from None
        if not seed_list:
            raise ConfigError("empty seed list", "bench.seed_list")
    if cfg.get("jobs", 1) < 1:
        raise ConfigError("must be at least 1", "bench.jobs")
    if "seed_count" in cfg and cfg["seed_count"] < 1:
        raise ConfigError("must be at least 1", "bench.seed_count")

    games: List[Tuple[str, str, GameSpec]] = []
    for sc in scenarios:
        if sc in _SCENARIO_FAMILY:
            if not sizes:
                raise ConfigError("random scenarios need sizes", "bench.sizes")
            for m, n in sizes:
                if seed_list is not None:
                    seeds = seed_list
                else:
                    count = cfg.get("seed_count", SEED_DEFAULTS.get(max(m, n), FALLBACK_SEEDS))
                    start = cfg.get("seed_start", 0)
                    seeds = list(range(start, start + count))
                for s in seeds:
                    games.append((sc, f"{m}x{n}", GameSpec(_SCENARIO_FAMILY[sc], (m, n), s)))
        elif sc.startswith("fixture:"):
            name = sc.split(":", 1)[1]
            if name not in FIXTURES:
                raise ConfigError(f"unknown fixture {name!r}", "bench.scenarios")
            g = generate(GameSpec("fixture", name=name))
            games.append((sc, f"{g.m}x{g.n}", GameSpec("fixture", name=name)))
        elif sc.startswith("file:"):
            path = sc.split(":", 1)[1]
            try:
                g = generate(GameSpec("file", name=path))
            except (NashkitError, OSError) as exc:
                raise ConfigError(f"cannot load {path}: {exc}", "bench.scenarios") from None
            games.append((sc, f"{g.m}x{g.n}", GameSpec("file", name=path)))
        else:
            raise ConfigError(f"unknown scenario {sc!r}", "bench.scenarios")

    tasks = [
        Task(i, sc, size, spec, alg)
        for i, ((sc, size, spec), alg) in enumerate((g, a) for g in games for a in algs)
    ]
    params = dict(DEFAULT_PARAMS)
    for key in ("delta", "round_cap", "wsne_delta", "search_budget", "fgss_size_cap", "initial_label"):
        if key in cfg:
            params[key] = cfg[key]
    if "iterations" in cfg:
        params["T"] = cfg["iterations"]
    canon = {k: raw[k] for k in sorted(raw) if k != "jobs"}
    digest = hashlib.sha256(json.dumps(canon, sort_keys=True).encode()).hexdigest()[:12]
    return BenchPlan(
        tasks, params,
        timeout_floor=cfg.get("timeout_floor", 60.0),
        reference_cap=cfg.get("reference_cap", 3600.0),
        ts_reference=cfg.get("ts_reference", True),
        warmup=cfg.get("warmup", True),
        jobs=cfg.get("jobs", 1),
        master_seed=cfg.get("master_seed", 0),
        digest=digest,
        warnings=warnings,
    )


# execution ----------------------------------------------------------------


def task_rng(master_seed: int, game_key: str) -> np.random.Generator:
    """RNG for random initial points; keyed by the game so TS07 and DFM22-1/3 share a start."""
    h = int.from_bytes(hashlib.blake2b(game_key.encode(), digest_size=8).digest(), "little")
    return np.random.default_rng(np.random.SeedSequence([int(master_seed) & (2 ** 64 - 1), h]))


def execute(task: Task, params: dict, master_seed: int, timeout: float, warmup: bool) -> dict:
    """Run one task in the current process and return its record fields."""
    game = generate(task.spec)
    out = None
    elapsed = 0.0
    for _ in range(2 if warmup else 1):
        rng = task_rng(master_seed, task.game_key)
        t0 = time.perf_counter()
        out = run_algorithm(task.algorithm, game, params, rng, t0 + timeout)
        elapsed = time.perf_counter() - t0
        if out.status != OK:
            break
    status = out.status
    if status == OK and elapsed > timeout:
        status = TIMEOUT
    return dict(
        epsilon=out.epsilon, ws_epsilon=out.ws_epsilon,
        pre_mix_epsilon=out.pre_epsilon, pre_mix_ws_epsilon=out.pre_ws_epsilon,
        time_ms=elapsed * 1000.0, status=status, detail=out.detail,
    )


def _child(conn, task, params, master_seed, timeout, warmup):
    try:
        conn.send(execute(task, params, master_seed, timeout, warmup))
    except Exception as exc:  # any crash becomes a failed record
        conn.send(dict(status=PRECISION_ERROR, detail=f"{type(exc).__name__}: {exc}"))
    finally:
        conn.close()


def _record(task: Task, fields: dict, timeout: float, digest: str) -> RunRecord:
    base = dict(epsilon=None, ws_epsilon=None, pre_mix_epsilon=None, pre_mix_ws_epsilon=None,
                time_ms=float("nan"), detail="")
    base.update(fields)
    return RunRecord(
        task.index, task.scenario, task.size, task.spec.seed, task.algorithm,
        base["epsilon"], base["ws_epsilon"], base["pre_mix_epsilon"], base["pre_mix_ws_epsilon"],
        float(base["time_ms"]), timeout * 1000.0, base["status"], base["detail"], digest,
    )


def _run_batch(jobs_list, plan_: BenchPlan, jobs: int, on_done: Callable):
    """Run ``(task, timeout)`` pairs in at most ``jobs`` child processes."""
    ctx = mp.get_context("fork")
    pending = list(jobs_list)
    running: Dict = {}
    while pending or running:
        while pending and len(running) < jobs:
            task, timeout = pending.pop(0)
            recv, send = ctx.Pipe(duplex=False)
            proc = ctx.Process(
                target=_child, args=(send, task, plan_.params, plan_.master_seed, timeout, plan_.warmup)
            )
            proc.start()
            send.close()
            limit = timeout * (2 if plan_.warmup else 1) + KILL_GRACE
            start = time.monotonic()
            running[recv] = (proc, task, timeout, start, start + limit)
        ready = wait(list(running), timeout=0.2)
        now = time.monotonic()
        for conn in list(running):
            proc, task, timeout, start, kill_at = running[conn]
            fields = None
            if conn in ready:
                try:
                    fields = conn.recv()
                except EOFError:
                    fields = dict(status=PRECISION_ERROR, detail=f"worker exited with code {proc.exitcode}")
            elif now > kill_at:
                proc.kill()
                fields = dict(status=TIMEOUT, detail="killed at the wall-clock limit",
                              time_ms=(now - start) * 1000.0)
            if fields is not None:
                conn.close()
                proc.join()
                del running[conn]
                on_done(task, timeout, fields)


class _CsvSink:
    """Append records as they complete, then rewrite them in task order."""

    def __init__(self, path):
        self.path = path
        with open(path, "w", newline="", encoding="utf-8") as fh:
            csv.DictWriter(fh, CSV_COLUMNS, lineterminator="\n").writeheader()

    def append(self, rec: RunRecord) -> None:
        with open(self.path, "a", newline="", encoding="utf-8") as fh:
            csv.DictWriter(fh, CSV_COLUMNS, lineterminator="\n").writerow(rec.row())
            fh.flush()
            os.fsync(fh.fileno())

    def finalize(self, records: List[RunRecord]) -> None:
        tmp = self.path + ".sorted"
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, CSV_COLUMNS, lineterminator="\n")
            w.writeheader()
            for rec in sorted(records, key=lambda r: r.task):
                w.writerow(rec.row())
        os.replace(tmp, self.path)


def run(plan_: BenchPlan, out_dir=None, jobs: Optional[int] = None,
        progress: Optional[Callable[[RunRecord], None]] = None) -> List[RunRecord]:
    """Execute the plan; write ``records.csv`` and ``summary.md`` under ``out_dir`` when given.

    Per-game timeouts are ``max(timeout_floor, TS07 time)``; the TS07
    reference is the plan's own ``ts07`` task when present.
    """
    jobs = plan_.jobs if jobs is None else int(jobs)
    if jobs < 1:
        raise ConfigError("must be at least 1", "bench.jobs")
    sink = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        sink = _CsvSink(os.path.join(out_dir, "records.csv"))
    records: List[RunRecord] = []
    ref_time: Dict[str, float] = {}

    def done(task, timeout, fields):
        if task.index < 0:  # hidden reference run
            ref_time[task.game_key] = fields.get("time_ms", float("nan")) / 1000.0
            return
        rec = _record(task, fields, timeout, plan_.digest)
        if task.algorithm == "ts07" and plan_.ts_reference:
            ref_time[task.game_key] = rec.time_ms / 1000.0
        records.append(rec)
        if sink is not None:
            sink.append(rec)
        if progress is not None:
            progress(rec)

    first = []
    if plan_.ts_reference:
        keys = OrderedDict()
        for t in plan_.tasks:
            keys.setdefault(t.game_key, []).append(t)
        for key, tasks in keys.items():
            ts = [t for t in tasks if t.algorithm == "ts07"]
            ref = ts[0] if ts else Task(-1, tasks[0].scenario, tasks[0].size, tasks[0].spec, "ts07")
            first.append((ref, plan_.reference_cap))
        _run_batch(first, plan_, jobs, done)
    firsts = {t.index for t, _ in first}

    def limit(t):
        ref = ref_time.get(t.game_key, 0.0)
        return max(plan_.timeout_floor, ref if math.isfinite(ref) else 0.0)

    rest = [(t, limit(t)) for t in plan_.tasks if t.index not in firsts]
    _run_batch(rest, plan_, jobs, done)
    records.sort(key=lambda r: r.task)
    if sink is not None:
        sink.finalize(records)
        with open(os.path.join(out_dir, "summary.md"), "w", encoding="utf-8") as fh:
            fh.write(render_tables(summarize(records)))
    return records


# results ------------------------------------------------------------------


def read_records(path) -> List[RunRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            def num(k):
                return float(row[k]) if row[k] != "" else None

            out.append(RunRecord(
                int(row["task"]), row["scenario"], row["size"],
                int(row["seed"]) if row["seed"] != "" else None, row["algorithm"],
                num("epsilon"), num("ws_epsilon"), num("pre_mix_epsilon"), num("pre_mix_ws_epsilon"),
                float(row["time_ms"]), float(row["timeout_ms"]), row["status"], row["detail"],
                row["config_digest"],
            ))
    return out


def deterministic_digest(path) -> str:
    """Hash of the CSV with the time columns blanked."""
    h = hashlib.sha256()
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            for k in TIME_COLUMNS:
                row[k] = ""
            h.update(json.dumps([row[k] for k in CSV_COLUMNS]).encode())
    return h.hexdigest()


@dataclass
class Cell:
    n_ok: int = 0
    n_timeout: int = 0
    n_precision: int = 0
    epsilon: Optional[float] = None
    ws_epsilon: Optional[float] = None
    pre_epsilon: Optional[float] = None
    pre_ws_epsilon: Optional[float] = None
    time_ms: Optional[float] = None


def _mean(vals):
    vals = [v for v in vals if v is not None]
    return math.fsum(vals) / len(vals) if vals else None


def summarize(records: List[RunRecord]) -> "OrderedDict[Tuple[str, str, str], Cell]":
    """Per (scenario, size, algorithm) means over ``ok`` records."""
    groups: "OrderedDict[Tuple[str, str, str], List[RunRecord]]" = OrderedDict()
    for r in sorted(records, key=lambda r: r.task):
        groups.setdefault((r.scenario, r.size, r.algorithm), []).append(r)
    cells = OrderedDict()
    for key, recs in groups.items():
        ok = [r for r in recs if r.status == OK]
        cells[key] = Cell(
            len(ok),
            sum(r.status == TIMEOUT for r in recs),
            sum(r.status == PRECISION_ERROR for r in recs),
            _mean([r.epsilon for r in ok]),
            _mean([r.ws_epsilon for r in ok]),
            _mean([r.pre_mix_epsilon for r in ok]),
            _mean([r.pre_mix_ws_epsilon for r in ok]),
            _mean([r.time_ms for r in ok]),
        )
    return cells


def _cell_text(c: Cell, attr: str, pre_attr: str) -> str:
    if c.n_ok == 0:
        return "Timeout" if c.n_timeout >= c.n_precision else "Precision Error"
    text = "%.4f" % getattr(c, attr)
    pre = getattr(c, pre_attr)
    if pre is not None:
        text += " (%.4f)" % pre
    failed = c.n_timeout + c.n_precision
    if failed:
        text += f" [{failed} failed]"
    return text


def render_tables(cells) -> str:
    """Markdown tables: one per scenario and metric, algorithms by size."""
    buf = io.StringIO()
    scenarios = list(OrderedDict.fromkeys(k[0] for k in cells))
    for sc in scenarios:
        sizes = list(OrderedDict.fromkeys(k[1] for k in cells if k[0] == sc))
        algs = list(OrderedDict.fromkeys(k[2] for k in cells if k[0] == sc))
        for title, attr, pre in (("epsilon", "epsilon", "pre_epsilon"),
                                 ("ws_epsilon", "ws_epsilon", "pre_ws_epsilon"),
                                 ("time_ms", "time_ms", "")):
            buf.write(f"### {sc}: {title}\n\n")
            buf.write("| algorithm | " + " | ".join(sizes) + " |\n")
            buf.write("|---" * (len(sizes) + 1) + "|\n")
            for a in algs:
                row = []
                for s in sizes:
                    c = cells.get((sc, s, a))
                    if c is None:
                        row.append("")
                    elif attr == "time_ms":
                        row.append("%.1f" % c.time_ms if c.n_ok else _cell_text(c, attr, pre))
                    else:
                        row.append(_cell_text(c, attr, pre))
                buf.write(f"| {a} | " + " | ".join(row) + " |\n")
            buf.write("\n")
    return buf.getvalue()
