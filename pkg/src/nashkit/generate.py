"""Seeded game generators and the named fixture games.

Random matrices come from numpy's Philox4x32-10 counter-based generator.
The 128-bit key is ``(seed mod 2**64, stream)`` with stream 0 for R and
stream 1 for C, and entries are ``Generator.random`` doubles (53 random
bits scaled into [0, 1)). A matrix therefore depends only on
``(seed, stream, shape)``, and R is the same in both random families for a
given seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import UnknownFixture
from .game import BimatrixGame, normalize

FAMILIES = ("random_zero_sum", "random_general", "fixture", "file")
ROW_STREAM, COL_STREAM = 0, 1
_SEED_MASK = (1 << 64) - 1


FIXTURES = {
    # pure strategy 2 for the row player against a nearly pure column
    # player separates the two approximation notions
    "wsne-diff": ([[1 / 3, 0.0], [1.0, 1.0]], [[1 / 3, 1.0], [0.0, 1.0]]),
    "matching-pennies": ([[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]]),
    "prisoners-dilemma": ([[2 / 3, 0.0], [1.0, 1 / 3]], [[2 / 3, 1.0], [0.0, 1 / 3]]),
    # degenerate: the second row ties against column 2
    "degenerate-2x2": ([[1.0, 0.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]),
}


@dataclass(frozen=True)
class GameSpec:
    family: str
    size: Tuple[int, int] = (0, 0)
    seed: Optional[int] = None
    name: Optional[str] = None  # fixture name or file path

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.family.startswith("random"):
            m, n = self.size
            if int(m) < 1 or int(n) < 1:
                raise ValueError(f"sizes must be positive, got {self.size}")
            if self.seed is None:
                raise ValueError("random families need a seed")
            object.__setattr__(self, "size", (int(m), int(n)))
            object.__setattr__(self, "seed", int(self.seed))
        elif self.name is None:
            raise ValueError(f"family {self.family!r} needs a name")

    def label(self) -> str:
        if self.family.startswith("random"):
            return f"{self.family}:{self.size[0]}x{self.size[1]}:{self.seed}"
        return f"{self.family}:{self.name}"


def uniform_matrix(seed: int, stream: int, shape) -> np.ndarray:
    """Entries i.i.d. uniform on [0, 1) from the keyed Philox stream."""
    bitgen = np.random.Philox(key=np.array([int(seed) & _SEED_MASK, int(stream)], dtype=np.uint64))
    return np.random.Generator(bitgen).random(tuple(shape))


def fixture(name: str) -> BimatrixGame:
    try:
        R, C = FIXTURES[name]
    except KeyError:
        raise UnknownFixture(f"unknown fixture {name!r}; known: {sorted(FIXTURES)}") from None
    return BimatrixGame(np.array(R), np.array(C))


def generate(spec: GameSpec) -> BimatrixGame:
    """Build the game described by ``spec``.

    Zero-sum games draw R and normalize the pair (R, -R); general games use
    both streams as they are, since their entries already lie in [0, 1].
    """
    if spec.family == "random_zero_sum":
        R = uniform_matrix(spec.seed, ROW_STREAM, spec.size)
        return normalize(R, -R)
    if spec.family == "random_general":
        R = uniform_matrix(spec.seed, ROW_STREAM, spec.size)
        C = uniform_matrix(spec.seed, COL_STREAM, spec.size)
        return BimatrixGame(R, C)
    if spec.family == "fixture":
        return fixture(spec.name)
    from .fileio import read_game

    return read_game(spec.name)


def random_zero_sum(n: int, seed: int, m: Optional[int] = None) -> BimatrixGame:
    return generate(GameSpec("random_zero_sum", (m or n, n), seed))


def random_general(n: int, seed: int, m: Optional[int] = None) -> BimatrixGame:
    return generate(GameSpec("random_general", (m or n, n), seed))
