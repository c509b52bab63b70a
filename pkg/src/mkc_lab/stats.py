"""Keyed, order-independent randomness and Monte-Carlo tallies.

Every random draw in this package is addressed by an explicit (seed, labels)
key instead of consuming a shared sequential stream.  Lazily evaluated
quantities therefore come out identical no matter the order in which they are
queried, and independent shots can be distributed over workers without any
coordination.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1

#: Negative weights above this magnitude are rejected; below it they are
#: clamped to zero, so clamping never moves a weight by more than 1e-12.
WEIGHT_CLAMP = 1e-12
WEIGHT_SUM_TOL = 1e-6


def _digest(seed: int, labels: tuple[int, ...]) -> bytes:
    words = [seed & _MASK64, len(labels) & _MASK64]
    words.extend(label & _MASK64 for label in labels)
    packed = struct.pack("<%dQ" % len(words), *words)
    return hashlib.blake2b(packed, digest_size=16).digest()


def keyed_uniform(seed: int, labels: tuple[int, ...]) -> float:
    """One uniform variate in [0, 1), a pure function of (seed, labels)."""
    word = int.from_bytes(_digest(seed, labels)[:8], "little")
    return word / 2.0**64


def derive_seed(seed: int, *labels: int) -> int:
    """A 64-bit sub-seed for a labelled child stream."""
    return int.from_bytes(_digest(seed, tuple(labels))[8:], "little")


@dataclass(frozen=True)
class RngKey:
    """Addressed random stream.

    Identical keys replay identical draws; keys differing in any label behave
    as independent streams.
    """

    seed: int
    labels: tuple[int, ...] = ()

    def uniform(self) -> float:
        return keyed_uniform(self.seed, self.labels)

    def generator(self) -> np.random.Generator:
        """Counter-based bit stream for bulk draws under this key."""
        key = np.frombuffer(_digest(self.seed, self.labels), dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def draw_categorical(key: RngKey, weights) -> int:
    """Sample an index with the given probabilities, deterministically per key.

    Weights may carry float dust: entries no lower than -1e-12 are clamped to
    zero and the vector renormalised.  A sum deviating from 1 by more than
    1e-6 is rejected outright.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-d sequence")
    if float(w.min()) < -WEIGHT_CLAMP:
        raise ValueError(f"negative weight {float(w.min()):g} below clamp threshold")
    total = float(w.sum())
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights sum to {total:g}, not 1")
    w = np.clip(w, 0.0, None)
    cdf = np.cumsum(w / w.sum())
    idx = int(np.searchsorted(cdf, key.uniform(), side="right"))
    return min(idx, w.size - 1)


class Tally:
    """Streaming per-variable accumulator keeping (count, sum, sum of squares).

    Means and standard errors are derived on demand, never stored.  Merging is
    associative and commutative, so partial tallies from independent chunks can
    be combined in any grouping.
    """

    __slots__ = ("_cells",)

    def __init__(self) -> None:
        self._cells: dict[str, list[float]] = {}

    def add(self, name: str, value: float) -> None:
        cell = self._cells.get(name)
        if cell is None:
            self._cells[name] = [1.0, value, value * value]
        else:
            cell[0] += 1.0
            cell[1] += value
            cell[2] += value * value

    def count(self, name: str) -> int:
        cell = self._cells.get(name)
        return 0 if cell is None else int(cell[0])

    def mean(self, name: str) -> float:
        cell = self._cells.get(name)
        if cell is None:
            raise ValueError(f"no samples recorded for {name!r}")
        return cell[1] / cell[0]

    def variables(self) -> list[str]:
        return sorted(self._cells)

    def merge(self, other: Tally) -> Tally:
        """Fold ``other`` into this tally and return it."""
        for name, (n, s, ss) in other._cells.items():
            cell = self._cells.get(name)
            if cell is None:
                self._cells[name] = [n, s, ss]
            else:
                cell[0] += n
                cell[1] += s
                cell[2] += ss
        return self


def mean_and_se(tally: Tally, name: str) -> tuple[float, float]:
    """Sample mean and standard error (sample std / sqrt(n)) of a variable."""
    cell = tally._cells.get(name)
    if cell is None or cell[0] < 2:
        raise ValueError(f"variable {name!r} needs at least 2 samples")
    n, s, ss = cell
    mean = s / n
    var = max(0.0, (ss - s * s / n) / (n - 1.0))
    return mean, math.sqrt(var / n)
