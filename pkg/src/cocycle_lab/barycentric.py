"""Random barycentric subdivision two ways: explicit plane geometry on
marked triangles, and the six-generator projective cocycle, cross-validated
pathwise.

Labeling rule. A subdivision child is the triangle (v, midpoint(v, w),
centroid) for an ordered pair of parent vertices (v, w); the six ordered
pairs enumerate the six children. Label j uses the pair CHILD_TABLE[j],
with vertices indexed a=0, b=1, c=2. This is the unique marking and order
for which the half-plane chart of child j is the image of the parent's
chart under the j-th projective generator, which is what ties the geometry
to the cocycle (see the chart-equivariance tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cocycles import barycentric_generators, row_vector_growth
from .dynamics import BernoulliDriver
from .errors import NumericalError
from .matrices import HalfPlanePoint, projective_apply

ASPECT_FLOOR = 1e-250
# Recenter-and-rescale cadence for coordinate paths. Rounding enters at the
# coordinate scale, not the triangle scale, so the cadence bounds the
# relative aspect error at roughly step_count * 1e-16 / aspect; every 4
# steps keeps 20-step oracle paths comfortably inside 1e-9.
RESCALE_EVERY = 4

# label -> (vertex index, second-vertex index) over (a, b, c) = (0, 1, 2)
CHILD_TABLE = {1: (0, 1), 2: (2, 1), 3: (0, 2), 4: (1, 0), 5: (1, 2), 6: (2, 0)}


@dataclass(frozen=True)
class Triangle:
    """A marked (ordered-vertex) triangle in the plane, vertices as complex
    numbers. Constructors reject degenerate (collinear) input."""

    a: complex
    b: complex
    c: complex

    def __post_init__(self):
        a, b, c = complex(self.a), complex(self.b), complex(self.c)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        for v in (a, b, c):
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValueError("triangle vertices must be finite")
        diam2 = max(abs(b - a), abs(c - b), abs(a - c)) ** 2
        if abs(_signed_area(a, b, c)) <= 1e-300 * diam2:
            raise ValueError("degenerate (collinear) triangle")

    @classmethod
    def from_points(cls, a, b, c) -> "Triangle":
        return cls(complex(*a) if isinstance(a, tuple) else complex(a),
                   complex(*b) if isinstance(b, tuple) else complex(b),
                   complex(*c) if isinstance(c, tuple) else complex(c))

    @classmethod
    def equilateral(cls) -> "Triangle":
        return cls(0.0, 1.0, complex(0.5, 0.5 * math.sqrt(3.0)))

    @property
    def vertices(self) -> tuple[complex, complex, complex]:
        return (self.a, self.b, self.c)


def _signed_area(a: complex, b: complex, c: complex) -> float:
    return 0.5 * ((b - a).conjugate() * (c - a)).imag


def signed_area(t: Triangle) -> float:
    return _signed_area(t.a, t.b, t.c)


def longest_side(t: Triangle) -> float:
    return max(abs(t.b - t.a), abs(t.c - t.b), abs(t.a - t.c))


def aspect_ratio(t: Triangle) -> float:
    """area / (longest side)^2; similarity-invariant, maximized by the
    equilateral triangle at sqrt(3)/4."""
    return abs(signed_area(t)) / longest_side(t) ** 2


def subdivide(t: Triangle, label: int) -> Triangle:
    """The labeled child of the barycentric subdivision, marked
    (vertex, edge midpoint, centroid) per CHILD_TABLE."""
    if label not in CHILD_TABLE:
        raise ValueError(f"label must be in 1..6, got {label!r}")
    vi, wi = CHILD_TABLE[label]
    verts = t.vertices
    v, w = verts[vi], verts[wi]
    g = (t.a + t.b + t.c) / 3.0
    try:
        return Triangle(v, (v + w) / 2.0, g)
    except ValueError:
        raise NumericalError(f"numerically degenerate child at label {label}")


def triangle_to_halfplane(t: Triangle) -> HalfPlanePoint:
    """Similarity-class chart: send a to 0, b to 1; c lands on z. An
    orientation-reversing marking is conjugated into the upper half plane."""
    z = (t.c - t.a) / (t.b - t.a)
    if z.imag == 0.0:
        raise NumericalError("degenerate triangle has no half-plane chart")
    if z.imag < 0.0:
        z = z.conjugate()
    return HalfPlanePoint(z.real, z.imag)


def halfplane_aspect(p: HalfPlanePoint) -> float:
    """Aspect ratio of the marked triangle (0, 1, z)."""
    L = max(1.0, math.hypot(p.re, p.im), math.hypot(p.re - 1.0, p.im))
    return p.im / (2.0 * L * L)


class SubdivisionPath:
    """Stateful coordinate-geometry subdivision path with a log-aspect trace.

    Vertices are rescaled to unit diameter every RESCALE_EVERY steps (aspect
    ratio is similarity-invariant, so the trace is unaffected); a path whose
    aspect falls below ASPECT_FLOOR aborts with NumericalError. For paths
    long enough to outrun double precision use chi_geometric, which evolves
    the similarity class instead of coordinates.
    """

    def __init__(self, seed: Triangle):
        self.seed = seed
        self.current = seed
        self.symbols: list[int] = []
        self.log_aspect_trace: list[float] = [math.log(aspect_ratio(seed))]

    @property
    def step_count(self) -> int:
        return len(self.symbols)

    def step(self, label: int) -> Triangle:
        child = subdivide(self.current, label)
        al = aspect_ratio(child)
        if al < ASPECT_FLOOR:
            raise NumericalError(f"aspect collapse at step {self.step_count + 1}")
        self.symbols.append(int(label))
        if len(self.symbols) % RESCALE_EVERY == 0:
            d = longest_side(child)
            g = (child.a + child.b + child.c) / 3.0
            child = Triangle((child.a - g) / d, (child.b - g) / d, (child.c - g) / d)
        self.current = child
        self.log_aspect_trace.append(math.log(al))
        return self.current

    def run(self, symbols) -> Triangle:
        for s in symbols:
            self.step(int(s))
        return self.current


# ---------------------------------------------------------------------------
# Needle-stable similarity-class engine.
#
# A marked triangle is kept as (0, 1, z) with z = x + i*e^s; s is the log of
# the imaginary part so shapes arbitrarily close to collinear stay exactly
# representable (coordinate geometry underflows once the aspect ratio drops
# below ~1e-308, which a typical path reaches within a few thousand steps).
# One step computes vertex / midpoint / centroid arithmetic on the split
# (real, scaled-imaginary) parts and re-marks the child by the similarity
# sending its first vertex to 0 and its midpoint vertex to 1.
# ---------------------------------------------------------------------------

_TABLE_RE_IC = tuple(CHILD_TABLE[j] for j in range(1, 7))


def _chart_step(x: float, s: float, label: int) -> tuple[float, float]:
    vi, wi = _TABLE_RE_IC[label - 1]
    res = (0.0, 1.0, x)
    ics = (0.0, 0.0, 1.0)
    vre, vic = res[vi], ics[vi]
    wre, wic = res[wi], ics[wi]
    A = (res[0] + res[1] + res[2]) / 3.0 - vre
    B = (ics[0] + ics[1] + ics[2]) / 3.0 - vic
    C = (vre + wre) / 2.0 - vre
    D = (vic + wic) / 2.0 - vic
    e2s = math.exp(2.0 * s) if s > -350.0 else 0.0
    den = C * C + D * D * e2s
    if den == 0.0:
        raise NumericalError("degenerate similarity class")
    xn = (A * C + B * D * e2s) / den
    imc = (B * C - A * D) / den
    if imc < 0.0:
        imc = -imc  # orientation flip: conjugate back into the upper half plane
    if imc == 0.0:
        raise NumericalError("similarity class collapsed onto the real axis")
    return xn, s + math.log(imc)


def _chart_log_aspect(x: float, s: float) -> float:
    es = math.exp(s) if s > -700.0 else 0.0
    L = max(1.0, math.hypot(x, es), math.hypot(x - 1.0, es))
    return s - math.log(2.0) - 2.0 * math.log(L)


def chart_state(t: Triangle) -> tuple[float, float]:
    """(x, s) similarity-class state of a triangle: chart z = x + i*e^s."""
    p = triangle_to_halfplane(t)
    return p.re, math.log(p.im)


def _chart_path(x: float, s: float, symbols, record_every: int = 0):
    trace = []
    k = 0
    for lab in symbols:
        x, s = _chart_step(x, s, int(lab))
        k += 1
        if record_every and k % record_every == 0:
            trace.append((k, _chart_log_aspect(x, s)))
    return x, s, trace


def chi_geometric(seed: Triangle, n: int, rng_seed: int,
                  record_every: int = 0):
    """Exponent estimate -(1/2n) log(alpha_n / alpha_0) from plane geometry
    along a fair-die subdivision path.

    Parameters
    ----------
    seed : Triangle
        Starting marked triangle.
    n : int
        Path length (>= 1).
    rng_seed : int
        Seed of the symbol stream; equal seeds give the same stream as
        chi_cocycle.
    record_every : int, optional
        If positive, also return a [(step, log aspect ratio)] trace.

    Returns
    -------
    float, or (float, trace) when record_every is given.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x, s = chart_state(seed)
    la0 = _chart_log_aspect(x, s)
    drv = BernoulliDriver.uniform(6, rng_seed)
    trace = []
    done = 0
    while done < n:
        m = min(1 << 20, n - done)
        syms = drv.block(m)
        if record_every:
            for lab in syms:
                x, s = _chart_step(x, s, int(lab))
                done += 1
                if done % record_every == 0:
                    trace.append((done, _chart_log_aspect(x, s)))
        else:
            x, s, _ = _chart_path(x, s, syms)
            done += m
    chi = -(_chart_log_aspect(x, s) - la0) / (2.0 * n)
    return (chi, trace) if record_every else chi


def chi_cocycle(n: int, rng_seed: int, v0=(0.0, 1.0)) -> float:
    """Exponent estimate (1/n) log ||(0,1) . A^(n)|| over a fair-die symbol
    stream (same stream as chi_geometric for equal seeds)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return row_vector_growth((), v0)
    syms = BernoulliDriver.uniform(6, rng_seed).block(n).astype(np.uint8)
    return row_vector_growth(syms, v0) / n


def cocycle_aspect(seed: Triangle, symbols) -> float:
    """Aspect ratio of the n-th triangle computed on the cocycle side: the
    projective generators drive the seed's chart point, no plane geometry."""
    gens = barycentric_generators()
    p = triangle_to_halfplane(seed)
    for lab in symbols:
        p = projective_apply(gens[int(lab) - 1], p)
    return halfplane_aspect(p)


def write_trace_csv(path, trace) -> None:
    """Write a [(step, log aspect ratio)] trace as CSV with a header row."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("step,log_aspect_ratio\n")
        for step, la in trace:
            fh.write(f"{int(step)},{float(la)!r}\n")
