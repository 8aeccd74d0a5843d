"""Measure-preserving base systems as deterministic, seedable orbit drivers:
circle rotations, Bernoulli symbol streams and (perturbed) toral maps,
plus Birkhoff averaging.

Drivers are single-threaded stateful iterators. `step()` returns the
*pre-step* state and advances; `block(n)` returns the next n states as an
array (same stream as n calls to `step()`). Splitting a driver yields an
independent stream from a derived seed.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

PROBABILITY_TOL = 1e-12


class RotationDriver:
    """Circle rotation x -> x + alpha (mod 1).

    The phase is computed from the step counter as frac(x0 + n*alpha), so
    floating error does not accumulate over long orbits.
    """

    kind = "phase"

    def __init__(self, alpha: float, x0: float = 0.0):
        if not (math.isfinite(alpha) and math.isfinite(x0)):
            raise ValueError("alpha and x0 must be finite")
        self.alpha = alpha % 1.0
        self.x0 = x0 % 1.0
        self._n = 0

    def phase(self, n: int | None = None) -> float:
        """Phase after n steps (defaults to the current step counter)."""
        if n is None:
            n = self._n
        return (self.x0 + n * self.alpha) % 1.0

    def step(self) -> float:
        x = self.phase()
        self._n += 1
        return x

    def block(self, count: int) -> np.ndarray:
        ns = self._n + np.arange(count, dtype=float)
        self._n += count
        return (self.x0 + ns * self.alpha) % 1.0

    def advance(self, count: int) -> None:
        """Jump the step counter without evaluating intermediate phases."""
        self._n += count

    def clone(self) -> "RotationDriver":
        d = RotationDriver(self.alpha, self.x0)
        d._n = self._n
        return d


class BernoulliDriver:
    """I.i.d. symbols in {1..k} with law p, from a seeded PCG64 stream.

    Identical seeds give byte-identical symbol streams on every platform
    and regardless of how draws are batched.
    """

    kind = "symbol"

    def __init__(self, p: Sequence[float], seed: int):
        p = tuple(float(x) for x in p)
        if len(p) < 2:
            raise ValueError("alphabet size must be >= 2")
        if any(not (0.0 < x < 1.0) for x in p):
            raise ValueError("probabilities must lie in the open interval (0, 1)")
        if abs(sum(p) - 1.0) > PROBABILITY_TOL:
            raise ValueError(f"probabilities must sum to 1, got {sum(p)!r}")
        self.p = p
        self.k = len(p)
        self.seed = int(seed)
        self._cum = np.cumsum(np.asarray(p, dtype=float))
        self._cum[-1] = 1.0
        self._rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))

    @classmethod
    def uniform(cls, k: int, seed: int) -> "BernoulliDriver":
        return cls([1.0 / k] * k, seed)

    def step(self) -> int:
        return int(self.block(1)[0])

    def block(self, count: int) -> np.ndarray:
        u = self._rng.random(count)
        return (np.searchsorted(self._cum, u, side="right") + 1).astype(np.int64)

    def split(self, index: int) -> "BernoulliDriver":
        """Independent stream keyed by (seed, index)."""
        d = object.__new__(BernoulliDriver)
        d.p, d.k, d.seed, d._cum = self.p, self.k, self.seed, self._cum
        d._rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((self.seed, int(index))))
        )
        return d


class ToralDriver:
    """Torus map driver: linear f_A for an integer matrix A with det 1, or
    the standard shear perturbation
    g_eps(x, y) = (2x + y + eps*sin(2*pi*(x+y)), x + y)  (mod 1).
    """

    kind = "torus"

    def __init__(self, *, matrix=None, epsilon: float | None = None,
                 point: tuple[float, float] = (0.0, 0.0)):
        if (matrix is None) == (epsilon is None):
            raise ValueError("give exactly one of matrix= or epsilon=")
        if matrix is not None:
            a = np.asarray(matrix)
            if a.shape != (2, 2) or not np.all(a == np.round(a)):
                raise ValueError("matrix must be 2x2 with integer entries")
            if round(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]) != 1:
                raise ValueError("matrix must have determinant 1")
            self.matrix = a.astype(np.int64)
            self.epsilon = None
        else:
            self.matrix = None
            self.epsilon = float(epsilon)
        x, y = point
        self.point = (float(x) % 1.0, float(y) % 1.0)

    def _apply(self, x: float, y: float) -> tuple[float, float]:
        if self.matrix is not None:
            a = self.matrix
            return ((a[0, 0] * x + a[0, 1] * y) % 1.0,
                    (a[1, 0] * x + a[1, 1] * y) % 1.0)
        e = self.epsilon
        return ((2.0 * x + y + e * math.sin(2.0 * math.pi * (x + y))) % 1.0,
                (x + y) % 1.0)

    def step(self) -> tuple[float, float]:
        p = self.point
        self.point = self._apply(*p)
        return p

    def block(self, count: int) -> np.ndarray:
        out = np.empty((count, 2))
        x, y = self.point
        for i in range(count):
            out[i, 0], out[i, 1] = x, y
            x, y = self._apply(x, y)
        self.point = (x, y)
        return out

    def clone(self) -> "ToralDriver":
        if self.matrix is not None:
            return ToralDriver(matrix=self.matrix, point=self.point)
        return ToralDriver(epsilon=self.epsilon, point=self.point)


class ConstantDriver:
    """Trivial one-point base for constant cocycles."""

    kind = "trivial"

    def step(self):
        return None

    def block(self, count: int) -> np.ndarray:
        return np.zeros(count)

    def clone(self) -> "ConstantDriver":
        return ConstantDriver()


OrbitDriver = RotationDriver | BernoulliDriver | ToralDriver | ConstantDriver


def birkhoff_average(driver: OrbitDriver, observable: Callable, n: int,
                     block: int = 1 << 16) -> float:
    """Time average (1/n) * sum of observable over the first n orbit points.

    The observable receives whatever the driver produces per step: a phase,
    a symbol, or an (x, y) point.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    total = 0.0
    done = 0
    vec = getattr(observable, "vectorized", False)
    while done < n:
        m = min(block, n - done)
        pts = driver.block(m)
        if vec:
            total += float(np.sum(observable(pts)))
        elif getattr(driver, "kind", "") == "torus":
            total += sum(observable((p[0], p[1])) for p in pts)
        else:
            total += sum(observable(p) for p in pts)
        done += m
    return total / n
