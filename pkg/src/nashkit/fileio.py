"""Plain-text game and profile files.

Game file (UTF-8, ``#`` starts a comment)::

    m n
    <m lines of n numbers: R>

    <m lines of n numbers: C>

Numbers are written with 17 significant digits so a write/read cycle
reproduces every float exactly. Payoffs outside [0, 1] are normalized on
read. A profile file holds two lines: the row strategy, then the column
strategy.
"""
from __future__ import annotations

import math
import os
from typing import List, Tuple

import numpy as np

from .errors import FileError, ParseError, ShapeMismatch
from .game import BimatrixGame, MixedProfile, normalize

_FMT = "%.17g"


def _read_lines(path) -> List[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise FileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8 text ({exc.reason})", 1) from exc


def _tokens(text: str) -> List[Tuple[int, str]]:
    """``(column, token)`` pairs, columns 1-based, comments removed."""
    text = text.split("#", 1)[0]
    out, col = [], 0
    for tok in text.split():
        col = text.index(tok, col)
        out.append((col + 1, tok))
        col += len(tok)
    return out


def _number(tok: str, line: int, col: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"expected a number, found {tok!r}", line, col) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {tok!r}", line, col)
    return v


def _blocks(lines: List[str]):
    """Group content lines into blank-separated blocks; comment-only lines are skipped."""
    blocks, current = [], []
    for no, raw in enumerate(lines, start=1):
        if not raw.strip():
            if current:
                blocks.append(current)
                current = []
            continue
        toks = _tokens(raw)
        if toks:
            current.append((no, toks))
    if current:
        blocks.append(current)
    return blocks


def _parse_header(entry) -> Tuple[int, int]:
    no, toks = entry
    if len(toks) != 2:
        raise ParseError(f"header must be 'm n', found {len(toks)} fields", no, toks[0][0] if toks else 1)
    dims = []
    for col, tok in toks:
        if not tok.isdigit() or int(tok) < 1:
            raise ParseError(f"expected a positive integer, found {tok!r}", no, col)
        dims.append(int(tok))
    return dims[0], dims[1]


def _matrix(rows, m: int, n: int, name: str) -> np.ndarray:
    if len(rows) != m:
        raise ShapeMismatch(f"{name} has {len(rows)} rows, header declares {m} (line {rows[0][0]})")
    M = np.empty((m, n))
    for i, (no, toks) in enumerate(rows):
        if len(toks) != n:
            raise ShapeMismatch(f"line {no}: {name} row has {len(toks)} entries, header declares {n}")
        M[i] = [_number(tok, no, col) for col, tok in toks]
    return M


def parse_game(text: str) -> BimatrixGame:
    blocks = _blocks(text.splitlines())
    if not blocks:
        raise ParseError("empty game file", 1)
    m, n = _parse_header(blocks[0][0])
    body = [blocks[0][1:]] if len(blocks[0]) > 1 else []
    body += blocks[1:]
    if len(body) != 2:
        last = body[-1][-1][0] if body else blocks[0][0][0]
        raise ShapeMismatch(f"expected 2 blank-separated matrices, found {len(body)} (near line {last})")
    R = _matrix(body[0], m, n, "R")
    C = _matrix(body[1], m, n, "C")
    if min(R.min(), C.min()) < 0.0 or max(R.max(), C.max()) > 1.0:
        return normalize(R, C)
    return BimatrixGame(R, C)


def read_game(path) -> BimatrixGame:
    return parse_game("\n".join(_read_lines(path)))


def format_game(game: BimatrixGame, comment: str = "") -> str:
    out = [f"# {line}" for line in comment.splitlines()]
    out.append(f"{game.m} {game.n}")
    out += [" ".join(_FMT % v for v in row) for row in game.R]
    out.append("")
    out += [" ".join(_FMT % v for v in row) for row in game.C]
    return "\n".join(out) + "\n"


def _write(path, text: str) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise FileError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_game(game: BimatrixGame, path, comment: str = "") -> None:
    _write(path, format_game(game, comment))


def read_profile(path) -> MixedProfile:
    lines = [(no, _tokens(raw)) for no, raw in enumerate(_read_lines(path), start=1)]
    lines = [(no, toks) for no, toks in lines if toks]
    if len(lines) != 2:
        raise ParseError(f"profile file needs 2 strategy lines, found {len(lines)}", lines[-1][0] if lines else 1)
    x, y = ([_number(tok, no, col) for col, tok in toks] for no, toks in lines)
    try:
        return MixedProfile(x, y)
    except ValueError as exc:
        raise ParseError(str(exc), lines[0][0]) from None


def write_profile(profile: MixedProfile, path) -> None:
    _write(path, " ".join(_FMT % v for v in profile.x) + "\n" + " ".join(_FMT % v for v in profile.y) + "\n")
