"""Parameter-grid scans over (E, alpha): the Hofstadter butterfly raster,
per-slice Lebesgue-measure diagnostics, and bit-exact PGM rendering.

Raster geometry. Pixel (i, j) maps affinely to parameters: column i is
E_i = e_min + i*(e_max - e_min)/(W - 1) and row j is alpha_j = j/(H - 1).
Each Farey rational p/q with q <= q_max is classified by the band oracle
over the energy grid and painted into the nearest row; collisions merge by
logical OR (in-spectrum wins), rows no rational lands on stay out. PGM
output writes rows top-down from alpha = 1 so the image has alpha
increasing upward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .hyperbolicity import (THETA_DEFAULT, _growth_min_sequential,
                            slice_spectrum)

VERDICT_OUT = 0
VERDICT_IN = 1
VERDICT_INCONCLUSIVE = 2

_PGM_BYTES = {VERDICT_IN: 0, VERDICT_OUT: 255, VERDICT_INCONCLUSIVE: 128}


def farey_fractions(q_max: int) -> list[Fraction]:
    """All reduced p/q in [0, 1] with q <= q_max, ascending."""
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    out = {Fraction(0), Fraction(1)}
    for q in range(2, q_max + 1):
        for p in range(1, q):
            if math.gcd(p, q) == 1:
                out.add(Fraction(p, q))
    return sorted(out)


@dataclass(frozen=True)
class ButterflyRaster:
    e_min: float
    e_max: float
    width: int
    height: int
    verdicts: np.ndarray        # (height, width) int8, row j at alpha_j
    row_methods: tuple          # (alpha fraction as str, row index, method) per painted row

    def __post_init__(self):
        v = self.verdicts
        if v.shape != (self.height, self.width):
            raise ValueError("verdict grid does not match the raster size")

    @property
    def e_grid(self) -> np.ndarray:
        return np.linspace(self.e_min, self.e_max, self.width)

    @property
    def row_alphas(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.height)

    def row(self, j: int) -> np.ndarray:
        return self.verdicts[j]


def scan_butterfly(q_max: int = 30, width: int = 512, height: int = 512,
                   e_min: float = -4.0, e_max: float = 4.0,
                   coupling: float = 2.0, threads: int = 1,
                   parallel_map=None) -> ButterflyRaster:
    """Classify the (E, alpha) grid by the rational band oracle row by row.

    Deterministic for any thread count: rows are independent tasks and the
    merge is placement plus a commutative OR on row collisions.
    """
    if width < 2 or height < 2:
        raise ValueError("raster needs width, height >= 2")
    fracs = farey_fractions(q_max)
    e_grid = np.linspace(e_min, e_max, width)

    def classify(frac: Fraction) -> np.ndarray:
        return slice_spectrum((frac.numerator, frac.denominator), e_grid,
                              method="oracle", coupling=coupling)

    if parallel_map is None:
        masks = [classify(f) for f in fracs]
    else:
        masks = parallel_map(classify, fracs, threads)
    verdicts = np.full((height, width), VERDICT_OUT, dtype=np.int8)
    rows = []
    for frac, mask in zip(fracs, masks):
        for j in _nearest_rows(frac, height):
            verdicts[j] = np.where(mask, VERDICT_IN, verdicts[j])
            rows.append((f"{frac.numerator}/{frac.denominator}", j, "oracle"))
    return ButterflyRaster(float(e_min), float(e_max), width, height,
                           verdicts, tuple(rows))


def _nearest_rows(frac: Fraction, height: int) -> tuple[int, ...]:
    """Raster row(s) nearest to alpha = frac. A fraction exactly between
    two rows paints both, so the alpha -> 1 - alpha flip always maps
    painted rows onto painted rows."""
    pos = frac * (height - 1)
    if pos - math.floor(pos) == Fraction(1, 2):
        return (math.floor(pos), math.floor(pos) + 1)
    if frac <= Fraction(1, 2):
        return (math.floor(float(frac) * (height - 1) + 0.5),)
    return (height - 1 - math.floor(float(1 - frac) * (height - 1) + 0.5),)


@dataclass(frozen=True)
class MeasureReport:
    """Estimated Lebesgue measure of the in-spectrum set at increasing
    growth-test depth; finite-depth estimates only shrink as the test
    resolves more of the complement."""

    alpha: float
    resolutions: tuple          # n_max values
    measures: tuple
    nonincreasing: bool
    e_points: int
    e_span: tuple
    theta: float

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "resolutions": list(self.resolutions),
            "measures": list(self.measures),
            "nonincreasing": self.nonincreasing,
            "e_points": self.e_points,
            "e_span": list(self.e_span),
            "theta": self.theta,
        }


def measure_slice(alpha: float, resolutions=(64, 256, 1024),
                  e_min: float = -4.5, e_max: float = 4.5,
                  e_points: int = 2000, theta: float = THETA_DEFAULT,
                  phase_grid: int = 64, coupling: float = 2.0) -> MeasureReport:
    """Growth-test measure estimates of one frequency slice at each depth
    in `resolutions` (lengths of the window product)."""
    if len(resolutions) < 1:
        raise ValueError("need at least one resolution")
    e_grid = np.linspace(e_min, e_max, e_points)
    de = (e_max - e_min) / (e_points - 1)
    measures = []
    for n in resolutions:
        g = _growth_min_sequential(None, float(alpha) % 1.0, int(n), phase_grid,
                                   coupling, Es=e_grid)
        measures.append(float(np.sum(g < theta) * de))
    slack = de  # one grid cell of noise
    noninc = all(m2 <= m1 + slack for m1, m2 in zip(measures, measures[1:]))
    return MeasureReport(float(alpha), tuple(int(n) for n in resolutions),
                         tuple(measures), bool(noninc), e_points,
                         (float(e_min), float(e_max)), theta)


def pgm_bytes(raster: ButterflyRaster) -> bytes:
    """Binary 8-bit PGM (P5): in-spectrum black, out white, inconclusive
    mid-gray; rows written top-down from alpha = 1."""
    header = f"P5\n{raster.width} {raster.height}\n255\n".encode("ascii")
    lut = np.full(256, 255, dtype=np.uint8)
    for verdict, grey in _PGM_BYTES.items():
        lut[verdict] = grey
    img = lut[raster.verdicts[::-1].astype(np.uint8)]
    return header + img.tobytes()


def render_pgm(raster: ButterflyRaster, path) -> None:
    with open(path, "wb") as fh:
        fh.write(pgm_bytes(raster))


def symmetry_defect(raster: ButterflyRaster) -> tuple[float, float]:
    """Fraction of pixels whose verdict breaks the E -> -E and the
    alpha -> 1 - alpha symmetry."""
    v = raster.verdicts
    e_flip = float(np.mean(v != v[:, ::-1]))
    a_flip = float(np.mean(v != v[::-1, :]))
    return e_flip, a_flip
