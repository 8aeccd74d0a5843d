"""Cocycle families and overflow-safe product iteration.

A cocycle spec pairs with an orbit driver: the driver produces base points
(phases, symbols, torus points) and `generator` evaluates the matrix at a
point. Products accumulate left-to-right in orbit order (newest factor on
the left) with per-step renormalization, the log of the norm pushed into a
running scale so arbitrarily long products never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .dynamics import BernoulliDriver, ConstantDriver, RotationDriver, ToralDriver
from .errors import NumericalError
from .matrices import as_matrix, operator_norm

_SQRT6 = math.sqrt(6.0)

# Projective generators of the barycentric subdivision cocycle: the halving
# map of the first child and its composites with the S3 involutions
#   P1 = [[1,0],[1,-1]], P2 = [[0,1],[1,0]], P3 = [[-1,1],[0,1]],
# completed by the two 3-cycles P4 = P1.P2 and P5 = P2.P1.
# All six have |det| = 1.
_B = np.array([[2.0, 2.0], [0.0, 3.0]]) / _SQRT6
_P = [
    np.array([[1.0, 0.0], [1.0, -1.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]),
    np.array([[-1.0, 1.0], [0.0, 1.0]]),
]
_P.append(_P[0] @ _P[1])
_P.append(_P[1] @ _P[0])
_BARYCENTRIC = np.stack([_B] + [_B @ p for p in _P])
_BARYCENTRIC.setflags(write=False)


def barycentric_generators() -> np.ndarray:
    """The six PGL(2,R) generators (6, 2, 2), |det| = 1 each, in the fixed
    label order used throughout: child 1 is the halving map B, children
    2..6 compose B with P1..P5."""
    return _BARYCENTRIC


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Constant:
    """Constant cocycle: the same matrix at every base point."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _freeze(as_matrix(self.matrix)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class RandomProduct:
    """I.i.d. product of a finite set of invertible matrices, driven by a
    Bernoulli symbol stream (symbol j selects matrices[j-1])."""

    matrices: tuple

    def __post_init__(self):
        mats = tuple(_freeze(as_matrix(m)) for m in self.matrices)
        if len(mats) < 2:
            raise ValueError("need at least two matrices")
        d = mats[0].shape[0]
        for m in mats:
            if m.shape[0] != d:
                raise ValueError("matrices must share one dimension")
            if abs(np.linalg.det(m)) < 1e-300:
                raise ValueError("matrices must be invertible")
        object.__setattr__(self, "matrices", mats)

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]


@dataclass(frozen=True)
class Barycentric:
    """The six-generator barycentric subdivision cocycle over a fair
    six-sided die."""

    dim: int = field(default=2, init=False)


@dataclass(frozen=True)
class Schrodinger:
    """Transfer-matrix cocycle [[E - coupling*cos(2 pi x), -1], [1, 0]]
    over the circle rotation by alpha."""

    energy: float
    coupling: float = 2.0
    alpha: float = 0.0
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        for v in (self.energy, self.coupling, self.alpha):
            if not math.isfinite(v):
                raise ValueError("Schrodinger parameters must be finite")


@dataclass(frozen=True)
class ToralDerivative:
    """Derivative cocycle of the (perturbed) toral map
    g_eps(x,y) = (2x + y + eps*sin(2 pi (x+y)), x+y):
    [[2 + c, 1 + c], [1, 1]] with c = 2*pi*eps*cos(2 pi (x+y)); det = 1."""

    epsilon: float
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        if not math.isfinite(self.epsilon):
            raise ValueError("epsilon must be finite")


CocycleSpec = Union[Constant, RandomProduct, Barycentric, Schrodinger, ToralDerivative]


def schrodinger_matrix(energy: float, x: float, coupling: float = 2.0) -> np.ndarray:
    return np.array([[energy - coupling * math.cos(2.0 * math.pi * x), -1.0],
                     [1.0, 0.0]])


def generator(spec: CocycleSpec, basepoint) -> np.ndarray:
    """The generator matrix of a cocycle at one base point.

    The base point kind must match the family: a symbol for RandomProduct
    and Barycentric, a phase for Schrodinger, an (x, y) point for
    ToralDerivative, anything (ignored) for Constant.
    """
    if isinstance(spec, Constant):
        return spec.matrix
    if isinstance(spec, RandomProduct):
        j = _as_symbol(basepoint, len(spec.matrices))
        return spec.matrices[j - 1]
    if isinstance(spec, Barycentric):
        j = _as_symbol(basepoint, 6)
        return _BARYCENTRIC[j - 1]
    if isinstance(spec, Schrodinger):
        if not isinstance(basepoint, (int, float, np.floating)):
            raise ValueError(f"Schrodinger expects a phase, got {basepoint!r}")
        return schrodinger_matrix(spec.energy, float(basepoint), spec.coupling)
    if isinstance(spec, ToralDerivative):
        try:
            x, y = basepoint
        except (TypeError, ValueError):
            raise ValueError(f"ToralDerivative expects an (x, y) point, got {basepoint!r}")
        c = 2.0 * math.pi * spec.epsilon * math.cos(2.0 * math.pi * (float(x) + float(y)))
        return np.array([[2.0 + c, 1.0 + c], [1.0, 1.0]])
    raise TypeError(f"unknown cocycle spec {spec!r}")


def _as_symbol(basepoint, k: int) -> int:
    if isinstance(basepoint, (int, np.integer)):
        j = int(basepoint)
        if 1 <= j <= k:
            return j
    raise ValueError(f"expected a symbol in 1..{k}, got {basepoint!r}")


def generator_block(spec: CocycleSpec, points) -> np.ndarray:
    """Vectorized generator evaluation: (n, d, d) for n base points."""
    if isinstance(spec, Constant):
        n = len(points)
        return np.broadcast_to(spec.matrix, (n,) + spec.matrix.shape)
    if isinstance(spec, (RandomProduct, Barycentric)):
        mats = np.stack(spec.matrices) if isinstance(spec, RandomProduct) else _BARYCENTRIC
        syms = np.asarray(points, dtype=np.int64)
        if syms.min() < 1 or syms.max() > len(mats):
            raise ValueError("symbol out of range")
        return mats[syms - 1]
    if isinstance(spec, Schrodinger):
        xs = np.asarray(points, dtype=float)
        out = np.empty((len(xs), 2, 2))
        out[:, 0, 0] = spec.energy - spec.coupling * np.cos(2.0 * np.pi * xs)
        out[:, 0, 1] = -1.0
        out[:, 1, 0] = 1.0
        out[:, 1, 1] = 0.0
        return out
    if isinstance(spec, ToralDerivative):
        pts = np.asarray(points, dtype=float)
        c = 2.0 * np.pi * spec.epsilon * np.cos(2.0 * np.pi * (pts[:, 0] + pts[:, 1]))
        out = np.empty((len(pts), 2, 2))
        out[:, 0, 0] = 2.0 + c
        out[:, 0, 1] = 1.0 + c
        out[:, 1, 0] = 1.0
        out[:, 1, 1] = 1.0
        return out
    raise TypeError(f"unknown cocycle spec {spec!r}")


def driver_for(spec: CocycleSpec, seed: int = 0, start=None):
    """A fresh orbit driver matching the spec's base dynamics."""
    if isinstance(spec, Constant):
        return ConstantDriver()
    if isinstance(spec, RandomProduct):
        return BernoulliDriver.uniform(len(spec.matrices), seed)
    if isinstance(spec, Barycentric):
        return BernoulliDriver.uniform(6, seed)
    if isinstance(spec, Schrodinger):
        return RotationDriver(spec.alpha, 0.0 if start is None else start)
    if isinstance(spec, ToralDerivative):
        if start is None:
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
            start = tuple(rng.random(2))
        return ToralDriver(epsilon=spec.epsilon, point=start)
    raise TypeError(f"unknown cocycle spec {spec!r}")


@dataclass(frozen=True)
class ProductState:
    """Renormalized running product A^(n): `current` has spectral norm in
    [1/2, 2] and log_scale absorbs the rest, so
    log ||A^(n)|| = log_scale + log ||current||."""

    step: int
    current: np.ndarray
    log_scale: float

    @classmethod
    def identity(cls, dim: int = 2) -> "ProductState":
        return cls(0, np.eye(dim), 0.0)

    def log_norm(self) -> float:
        return self.log_scale + math.log(operator_norm(self.current))


def advance(state: ProductState, g) -> ProductState:
    """Left-multiply the running product by a new generator and renormalize."""
    g = as_matrix(g)
    if g.shape != state.current.shape:
        raise ValueError(f"dimension mismatch: {g.shape} vs {state.current.shape}")
    new = g @ state.current
    if not np.all(np.isfinite(new)):
        raise NumericalError(f"non-finite product at step {state.step + 1}")
    nrm = operator_norm(new)
    if not math.isfinite(nrm):
        raise NumericalError(f"product norm overflow at step {state.step + 1}")
    if nrm == 0.0:
        raise NumericalError(f"product collapsed to zero at step {state.step + 1}")
    return ProductState(state.step + 1, new / nrm, state.log_scale + math.log(nrm))


def row_vector_growth(symbols: Sequence[int], v0=(0.0, 1.0)) -> float:
    """log || v0 . A^(n) || for the barycentric cocycle along a symbol path.

    A^(n) multiplies newest-generator-on-the-left, so the row vector absorbs
    the factors right-to-left: iterate v <- v . A_s over the reversed path,
    renormalizing each step.
    """
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (2,) or not np.any(v0):
        raise ValueError("v0 must be a nonzero 2-vector")
    syms = np.asarray(symbols, dtype=np.int64)
    total = math.log(math.hypot(v0[0], v0[1]))
    if len(syms) == 0:
        return total
    if syms.min() < 1 or syms.max() > 6:
        raise ValueError("barycentric symbols lie in 1..6")
    v = v0 / math.hypot(v0[0], v0[1])
    x, y = float(v[0]), float(v[1])
    G = _BARYCENTRIC
    for s in syms[::-1]:
        m = G[s - 1]
        x, y = x * m[0, 0] + y * m[1, 0], x * m[0, 1] + y * m[1, 1]
        nv = math.hypot(x, y)
        total += math.log(nv)
        x /= nv
        y /= nv
    return total
