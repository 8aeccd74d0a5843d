"""Uniform-hyperbolicity certification for SL(2) cocycles: invariant cone
families, uniform norm-growth tests, and the rational-frequency band oracle
|tr A^(q)| <= 2 that decides spectrum membership for the almost Mathieu
family.

Certificates are floating-point evidence with explicit margins, not
computer-assisted proof. "Inconclusive" always classifies as in-spectrum;
the spectrum is closed, so that is the safe side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cocycles import (Barycentric, CocycleSpec, Constant, RandomProduct,
                       Schrodinger, barycentric_generators)
from .errors import UsageError
from .matrices import operator_norm

THETA_DEFAULT = 0.05        # growth threshold for single-point certification
SLICE_THETA = 0.02          # threshold for slice classification (band-edge halo)
N_MAX_DEFAULT = 1 << 10
SLICE_N_MAX = 1 << 11
GRID_DEFAULT = 4096
CONE_GRID_DEFAULT = 256

CERTIFIED_HYPERBOLIC = "certified-hyperbolic"
CERTIFIED_BY_GROWTH = "certified-by-growth"
NOT_HYPERBOLIC = "not-hyperbolic-evidence"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class UHCertificate:
    verdict: str
    witness_n: int | None
    growth_constant: float
    grid_m: int
    theta: float
    margin: float = 0.0
    covered: bool = False      # margins cover between-grid-point behavior
    cone_field: "ConeField | None" = field(default=None, compare=False)

    @property
    def certified(self) -> bool:
        return self.verdict in (CERTIFIED_HYPERBOLIC, CERTIFIED_BY_GROWTH)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness_n": self.witness_n,
            "growth_constant": self.growth_constant,
            "grid_m": self.grid_m,
            "theta": self.theta,
            "margin": self.margin,
            "covered": self.covered,
        }


@dataclass(frozen=True)
class ConeField:
    """Angular cone pairs over a phase grid: intervals on the projective
    line as (center, half-width), unstable and stable at each grid point."""

    grid: tuple
    unstable: tuple            # (center, halfwidth) per grid point
    stable: tuple

    def __post_init__(self):
        for (cu, wu), (cs, ws) in zip(self.unstable, self.stable):
            if not (0.0 < wu <= math.pi / 2 and 0.0 < ws <= math.pi / 2):
                raise ValueError("cone widths must lie in (0, pi/2]")
            if _circ_dist(cu, cs) <= wu + ws:
                raise ValueError("stable and unstable cones must be disjoint")


# ---------------------------------------------------------------------------
# projective-line angle helpers (RP^1 = [0, pi))
# ---------------------------------------------------------------------------

def _circ_dist(a: float, b: float) -> float:
    d = abs(a - b) % math.pi
    return min(d, math.pi - d)


def _apply_angle(m, theta: float) -> float:
    c, s = math.cos(theta), math.sin(theta)
    x = m[0][0] * c + m[0][1] * s
    y = m[1][0] * c + m[1][1] * s
    return math.atan2(y, x) % math.pi


def _map_interval(m, center: float, hw: float) -> tuple[float, float]:
    """Image (center, halfwidth) of an angular interval under the projective
    action; projective maps are circle homeomorphisms, so the image is the
    arc spanned by the endpoint images containing the center image."""
    ic = _apply_angle(m, center)
    ia = _apply_angle(m, center - hw)
    ib = _apply_angle(m, center + hw)
    da = _signed_gap(ic, ia)
    db = _signed_gap(ic, ib)
    lo, hi = min(da, db, 0.0), max(da, db, 0.0)
    return (ic + (lo + hi) / 2.0) % math.pi, (hi - lo) / 2.0


def _signed_gap(ref: float, theta: float) -> float:
    """Signed angular offset of theta from ref in (-pi/2, pi/2]."""
    d = (theta - ref) % math.pi
    return d if d <= math.pi / 2 else d - math.pi


def _interval_inside(c1, w1, c2, w2) -> float:
    """Margin by which interval 1 sits inside interval 2 (>0 = strict)."""
    return (w2 - w1) - _circ_dist(c1, c2)


def _min_growth_on_cone(mats_logs, center: float, hw: float,
                        samples: int = 33) -> float:
    """min over sampled cone directions and given (matrix, logscale) pairs
    of log ||M v||."""
    best = math.inf
    thetas = [center + hw * (2.0 * i / (samples - 1) - 1.0) for i in range(samples)]
    for m, ls in mats_logs:
        for t in thetas:
            c, s = math.cos(t), math.sin(t)
            x = m[0][0] * c + m[0][1] * s
            y = m[1][0] * c + m[1][1] * s
            g = ls + 0.5 * math.log(x * x + y * y)
            if g < best:
                best = g
    return best


def _scaled_power(m, n: int) -> tuple[np.ndarray, float]:
    """(normalized M^n, log scale) by repeated squaring."""
    result = np.eye(2)
    log_r = 0.0
    base = np.asarray(m, dtype=float)
    log_b = 0.0
    k = n
    while k:
        if k & 1:
            result = base @ result
            nrm = float(np.linalg.norm(result))
            log_r += log_b + math.log(nrm)
            result /= nrm
        base = base @ base
        nrm = float(np.linalg.norm(base))
        log_b = 2.0 * log_b + math.log(nrm)
        base /= nrm
        k >>= 1
    return result, log_r


# ---------------------------------------------------------------------------
# cone certification
# ---------------------------------------------------------------------------

def cone_certify(spec: CocycleSpec, grid_m: int = CONE_GRID_DEFAULT,
                 n_max: int = N_MAX_DEFAULT,
                 theta: float = THETA_DEFAULT) -> UHCertificate:
    """Try to certify uniform hyperbolicity with an invariant cone family.

    Constant cocycles use eigendirection cones; finite random products are
    treated per symbol (the cone condition must hold for every generator);
    Schrodinger cocycles over a rotation use a phase-grid cone field seeded
    by window singular directions. Failure degrades to growth evidence.
    """
    if isinstance(spec, Constant):
        return _certify_constant(spec.matrix, n_max, theta)
    if isinstance(spec, (RandomProduct, Barycentric)):
        mats = list(spec.matrices) if isinstance(spec, RandomProduct) \
            else list(barycentric_generators())
        return _certify_per_symbol(mats, n_max, theta)
    if isinstance(spec, Schrodinger):
        return _certify_rotation(spec, grid_m, n_max, theta)
    raise UsageError(f"cone_certify does not handle base dynamics of {spec!r}")


def _growth_evidence(powers, n_max: int, theta: float, grid_m: int,
                     witness_pool=None) -> UHCertificate:
    """Fallback: decide between not-hyperbolic-evidence and inconclusive
    from norm growth at n_max/2 and n_max. `powers(n)` returns the min over
    the relevant family of (1/n) log ||word of length n||."""
    g_half = powers(max(1, n_max // 2))
    g_full = powers(n_max)
    if g_full >= theta:
        return UHCertificate(CERTIFIED_BY_GROWTH, n_max, g_full, grid_m, theta,
                             margin=g_full - theta)
    if g_full < theta / 4.0 and g_half < theta / 4.0:
        return UHCertificate(NOT_HYPERBOLIC, None, g_full, grid_m, theta)
    return UHCertificate(INCONCLUSIVE, None, g_full, grid_m, theta)


def _certify_constant(m, n_max: int, theta: float) -> UHCertificate:
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = tr * tr - 4.0 * det
    if disc > 0.0:
        sq = math.sqrt(disc)
        eigs = sorted(((tr + sq) / 2.0, (tr - sq) / 2.0), key=abs, reverse=True)
        u_dir = _eig_angle(m, eigs[0])
        s_dir = _eig_angle(m, eigs[1])
        gap = _circ_dist(u_dir, s_dir)
        minv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det
        n = 1
        while n <= n_max:
            pn, log_pn = _scaled_power(m, n)
            qn, log_qn = _scaled_power(minv, n)
            for frac in (0.45, 0.25, 0.1, 0.02):
                hw = gap * frac
                mu = _interval_inside(*_map_interval(m, u_dir, hw), u_dir, hw)
                ms = _interval_inside(*_map_interval(minv, s_dir, hw), s_dir, hw)
                if mu <= 0.0 or ms <= 0.0:
                    continue
                gu = _min_growth_on_cone([(pn, log_pn)], u_dir, hw)
                gs = _min_growth_on_cone([(qn, log_qn)], s_dir, hw)
                if gu >= math.log(2.0) and gs >= math.log(2.0):
                    cones = ConeField((0.0,), ((u_dir, hw),), ((s_dir, hw),))
                    return UHCertificate(CERTIFIED_HYPERBOLIC, n, gu / n, 1,
                                         theta, margin=min(mu, ms),
                                         covered=True, cone_field=cones)
            n *= 2
    return _growth_evidence(lambda n: _power_growth(m, n), n_max, theta, 1)


def _power_growth(m, n: int) -> float:
    pn, log_r = _scaled_power(m, n)
    return (log_r + math.log(operator_norm(pn))) / n


def _eig_angle(m, lam: float) -> float:
    a, b = m[0, 0] - lam, m[0, 1]
    c, d = m[1, 0], m[1, 1] - lam
    if abs(a) + abs(b) >= abs(c) + abs(d):
        vx, vy = (-b, a) if abs(a) + abs(b) > 1e-300 else (1.0, 0.0)
    else:
        vx, vy = (-d, c)
    return math.atan2(vy, vx) % math.pi


def _certify_per_symbol(mats, n_max: int, theta: float) -> UHCertificate:
    k = len(mats)
    dets = [m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0] for m in mats]
    invs = [np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / d
            for m, d in zip(mats, dets)]

    def hull_attractor(family):
        # iterate the interval hull of the family images; contraction to a
        # narrow stable interval yields a cone candidate
        cen, hw = _apply_angle(family[0], 0.3), 0.6
        for _ in range(200):
            pts = []
            for m in family:
                ic, ihw = _map_interval(m, cen, hw)
                pts.append((ic, ihw))
            ncen, nhw = _interval_hull(pts)
            if nhw > 0.49 * math.pi:
                return None
            if abs(nhw - hw) < 1e-12 and _circ_dist(ncen, cen) < 1e-12:
                return ncen, nhw
            cen, hw = ncen, nhw
        return cen, hw

    cu = hull_attractor(mats)
    cs = hull_attractor(invs)
    if cu is not None and cs is not None:
        ucen, uhw = cu
        scen, shw = cs
        uhw = min(uhw * 1.25 + 1e-6, math.pi / 2)
        shw = min(shw * 1.25 + 1e-6, math.pi / 2)
        margin = math.inf
        ok = _circ_dist(ucen, scen) > uhw + shw
        if ok:
            for m, mi in zip(mats, invs):
                margin = min(margin,
                             _interval_inside(*_map_interval(m, ucen, uhw), ucen, uhw),
                             _interval_inside(*_map_interval(mi, scen, shw), scen, shw))
                if margin <= 0.0:
                    ok = False
                    break
        if ok:
            n = 1
            while n <= min(n_max, 16) and k ** n <= 20000:
                words = _words(mats, n)
                iwords = _words(invs, n)
                gu = _min_growth_on_cone([(w, lw) for w, lw in words], ucen, uhw)
                gs = _min_growth_on_cone([(w, lw) for w, lw in iwords], scen, shw)
                if gu >= math.log(2.0) and gs >= math.log(2.0):
                    cones = ConeField((0.0,), ((ucen, uhw),), ((scen, shw),))
                    return UHCertificate(CERTIFIED_HYPERBOLIC, n, gu / n, k,
                                         theta, margin=margin, covered=True,
                                         cone_field=cones)
                n += 1
    # evidence fallback: generator powers and short words probe norm growth
    def min_word_growth(n):
        best = math.inf
        for m in mats:
            pn, lr = _scaled_power(m, n)
            best = min(best, (lr + math.log(operator_norm(pn))) / n)
        return best

    return _growth_evidence(min_word_growth, n_max, theta, k)


def _interval_hull(pts) -> tuple[float, float]:
    """Smallest interval on RP^1 containing the given (center, hw) arcs,
    anchored at the first arc."""
    ref = pts[0][0]
    lo, hi = 0.0, 0.0
    for c, hw in pts:
        off = _signed_gap(ref, c)
        lo = min(lo, off - hw)
        hi = max(hi, off + hw)
    return (ref + (lo + hi) / 2.0) % math.pi, (hi - lo) / 2.0


def _words(mats, n):
    """All (normalized word, log scale) products of length n."""
    out = [(np.eye(2), 0.0)]
    for _ in range(n):
        nxt = []
        for m in mats:
            for w, lw in out:
                v = m @ w
                nrm = float(np.linalg.norm(v))
                nxt.append((v / nrm, lw + math.log(nrm)))
        out = nxt
    return out


def _certify_rotation(spec: Schrodinger, grid_m: int, n_max: int,
                      theta: float) -> UHCertificate:
    alpha = spec.alpha % 1.0
    m = grid_m
    xs = np.arange(m) / m
    window = min(max(32, n_max // 4), 512)
    fw, _ = _orbit_products(spec, xs, window)                 # forward windows
    bw, _ = _orbit_products(spec, (xs - window * alpha) % 1.0, window)
    u_dir = np.empty(m)
    s_dir = np.empty(m)
    for j in range(m):
        uu, _, _ = np.linalg.svd(bw[j])
        u_dir[j] = math.atan2(uu[1, 0], uu[0, 0]) % math.pi
        _, _, vt2 = np.linalg.svd(fw[j])
        s_dir[j] = math.atan2(vt2[1, 1], vt2[1, 0]) % math.pi
    gaps = np.array([_circ_dist(u, s) for u, s in zip(u_dir, s_dir)])
    if gaps.min() < 1e-3:
        return _growth_evidence(
            lambda n: _growth_min_sequential(spec, alpha, n, min(m, 128)),
            n_max, theta, m)
    # grid Lipschitz slack: largest angular move of the field between
    # neighbouring grid points
    slack = max(_circ_dist(u_dir[j], u_dir[(j + 1) % m]) for j in range(m))
    n = 1
    while n <= min(n_max, window):
        ok = True
        worst_margin = math.inf
        worst_growth = math.inf
        step_prod, step_log = _orbit_products(spec, xs, n)
        for j in range(m):
            hw = 0.35 * gaps[j]
            tgt = int(round(((xs[j] + n * alpha) % 1.0) * m)) % m
            mu = _interval_inside(*_map_interval(step_prod[j], u_dir[j], hw),
                                  u_dir[tgt], 0.35 * gaps[tgt])
            if mu <= 0.0:
                ok = False
                break
            worst_margin = min(worst_margin, mu)
            g = _min_growth_on_cone([(step_prod[j], step_log[j])],
                                    u_dir[j], hw, samples=9)
            worst_growth = min(worst_growth, g)
        if ok and worst_growth >= math.log(2.0):
            covered = worst_margin > slack
            verdict = CERTIFIED_HYPERBOLIC if covered else CERTIFIED_BY_GROWTH
            cones = ConeField(tuple(xs),
                              tuple((u, 0.35 * g) for u, g in zip(u_dir, gaps)),
                              tuple((s, 0.35 * g) for s, g in zip(s_dir, gaps)))
            return UHCertificate(verdict, n, worst_growth / n, m, theta,
                                 margin=worst_margin, covered=covered,
                                 cone_field=cones)
        n *= 2
    return _growth_evidence(
        lambda nn: _growth_min_sequential(spec, alpha, nn, min(m, 128)),
        n_max, theta, m)


def _orbit_products(spec: Schrodinger, xs: np.ndarray, n: int):
    """(normalized A^(n)(x), log scale) for each phase in xs."""
    P = _amo_block(np.full(len(xs), spec.energy), xs, spec.coupling)
    logsc = np.zeros(len(xs))
    for k in range(1, n):
        P = np.matmul(_amo_block(np.full(len(xs), spec.energy),
                                 (xs + k * spec.alpha) % 1.0, spec.coupling), P)
        if k % 8 == 0:
            nrm = np.linalg.norm(P, axis=(1, 2))
            logsc += np.log(nrm)
            P /= nrm[:, None, None]
    return P, logsc


# ---------------------------------------------------------------------------
# growth tests and the band oracle
# ---------------------------------------------------------------------------

def _amo_block(Es, xs, coupling: float) -> np.ndarray:
    out = np.empty((len(xs), 2, 2))
    out[:, 0, 0] = Es - coupling * np.cos(2.0 * np.pi * xs)
    out[:, 0, 1] = -1.0
    out[:, 1, 0] = 1.0
    out[:, 1, 1] = 0.0
    return out


def _growth_min_sequential(spec_or_E, alpha, n: int, m: int,
                           coupling: float = 2.0, Es=None) -> float | np.ndarray:
    """min over an m-point phase grid of (1/n) log ||A^(n)(x)||; vectorized
    over an energy grid when Es is given."""
    if Es is None:
        if isinstance(spec_or_E, Schrodinger):
            Es_arr = np.array([spec_or_E.energy])
            coupling = spec_or_E.coupling
        else:
            Es_arr = np.array([float(spec_or_E)])
        single = True
    else:
        Es_arr = np.asarray(Es, dtype=float)
        single = False
    xs = np.arange(m) / m
    EE = np.repeat(Es_arr, m)
    XX = np.tile(xs, len(Es_arr))
    P = _amo_block(EE, XX, coupling)
    logsc = np.zeros(len(EE))
    for k in range(1, n):
        P = np.matmul(_amo_block(EE, (XX + k * alpha) % 1.0, coupling), P)
        if k % 16 == 0:
            nrm = np.linalg.norm(P, axis=(1, 2))
            logsc += np.log(nrm)
            P /= nrm[:, None, None]
    nrm = np.linalg.norm(P, axis=(1, 2))
    g = (logsc + np.log(nrm)).reshape(len(Es_arr), m).min(axis=1) / n
    return float(g[0]) if single else g


def uniform_growth_test(spec: Schrodinger, grid_m: int = GRID_DEFAULT,
                        n_max: int = N_MAX_DEFAULT,
                        theta: float = THETA_DEFAULT) -> UHCertificate:
    """Uniform norm-growth certification for one Schrodinger cocycle:
    certified-by-growth when the phase-grid minimum of (1/n) log ||A^(n)||
    reaches theta at n = n_max; not-hyperbolic-evidence when it stays below
    theta/4 as n doubles; otherwise inconclusive."""
    if not isinstance(spec, Schrodinger):
        raise UsageError("uniform_growth_test expects a Schrodinger spec")
    alpha = spec.alpha % 1.0
    g_half = _growth_min_sequential(spec, alpha, max(1, n_max // 2), grid_m)
    g_full = _growth_min_sequential(spec, alpha, n_max, grid_m)
    if g_full >= theta:
        return UHCertificate(CERTIFIED_BY_GROWTH, n_max, g_full, grid_m, theta,
                             margin=g_full - theta)
    if g_full < theta / 4.0 and g_half < theta / 4.0:
        return UHCertificate(NOT_HYPERBOLIC, None, g_full, grid_m, theta)
    return UHCertificate(INCONCLUSIVE, None, g_full, grid_m, theta)


def _oracle_min_trace(p: int, q: int, Es, m_x: int | None = None,
                      coupling: float = 2.0) -> np.ndarray:
    """min over the phase grid of |tr A^(q)(x)| for each energy."""
    Es = np.asarray(Es, dtype=float)
    m = m_x if m_x is not None else max(8 * q, 64)
    if m < 8 * q:
        raise ValueError(f"phase grid m_x = {m} under-resolves q = {q}: need >= {8 * q}")
    alpha = p / q
    xs = np.arange(m) / m
    EE = np.repeat(Es, m)
    XX = np.tile(xs, len(Es))
    P = _amo_block(EE, XX, coupling)
    for k in range(1, q):
        P = np.matmul(_amo_block(EE, (XX + k * alpha) % 1.0, coupling), P)
    tr = np.abs(P[:, 0, 0] + P[:, 1, 1]).reshape(len(Es), m)
    return tr.min(axis=1)


def band_oracle(p: int, q: int, E: float, m_x: int | None = None,
                coupling: float = 2.0) -> bool:
    """Spectrum membership at rational frequency p/q: true iff some phase
    has |tr A^(q)(x)| <= 2. The grid (>= 8q points, including 0) resolves
    the trace's single cosine harmonic in x."""
    p, q = int(p), int(q)
    if q < 1 or math.gcd(abs(p), q) != 1:
        raise ValueError("need coprime p, q with q >= 1")
    return bool(_oracle_min_trace(p, q, [float(E)], m_x, coupling)[0] <= 2.0)


def _growth_ladder_rational(p: int, q: int, Es, n_max: int, m: int,
                            coupling: float = 2.0):
    """Growth statistics over the doubling ladder n = q, 2q, 4q ... using
    matrix squaring of the period block; returns (n_final, g_final, g_prev)."""
    Es = np.asarray(Es, dtype=float)
    alpha = p / q
    xs = np.arange(m) / m
    EE = np.repeat(Es, m)
    XX = np.tile(xs, len(Es))
    P = _amo_block(EE, XX, coupling)
    for k in range(1, q):
        P = np.matmul(_amo_block(EE, (XX + k * alpha) % 1.0, coupling), P)
    logsc = np.zeros(len(EE))
    n = q
    g_prev = None
    nrm = np.linalg.norm(P, axis=(1, 2))
    g = (logsc + np.log(nrm)).reshape(len(Es), m).min(axis=1) / n
    while n * 2 <= n_max:
        logsc += np.log(nrm)
        P = P / nrm[:, None, None]
        P = np.matmul(P, P)
        logsc *= 2.0
        n *= 2
        nrm = np.linalg.norm(P, axis=(1, 2))
        g_prev = g
        g = (logsc + np.log(nrm)).reshape(len(Es), m).min(axis=1) / n
    if g_prev is None:
        g_prev = g
    return n, g, g_prev


def as_rational(alpha) -> tuple[int, int] | None:
    """(p, q) when alpha is an exact rational input, else None."""
    if isinstance(alpha, tuple) and len(alpha) == 2:
        p, q = int(alpha[0]), int(alpha[1])
        g = math.gcd(abs(p), q)
        return p // g, q // g
    if isinstance(alpha, Fraction):
        return int(alpha.numerator), int(alpha.denominator)
    if isinstance(alpha, int):
        return int(alpha) % 1, 1
    return None


def slice_spectrum(alpha, e_grid, method: str = "auto",
                   theta: float = SLICE_THETA, n_max: int = SLICE_N_MAX,
                   phase_grid: int | None = None,
                   coupling: float = 2.0) -> np.ndarray:
    """In-spectrum mask over an energy grid for one frequency row.

    The oracle method (rational alpha only, as a Fraction or (p, q) pair)
    uses the period-q trace criterion; the growth method classifies
    certified-by-growth as out and everything else, inconclusive included,
    as in. Rational growth rides the squaring ladder; irrational growth
    iterates a 64-phase grid sequentially.
    """
    e_grid = np.asarray(e_grid, dtype=float)
    pq = as_rational(alpha)
    if method == "auto":
        method = "oracle" if pq is not None else "growth"
    if method == "oracle":
        if pq is None:
            raise UsageError("oracle method requires a rational frequency (p, q)")
        p, q = pq
        return _oracle_min_trace(p, q, e_grid, phase_grid, coupling) <= 2.0
    if method != "growth":
        raise UsageError(f"unknown slice method {method!r}")
    if pq is not None:
        p, q = pq
        m = phase_grid if phase_grid is not None else max(8 * q, 64)
        _, g, _ = _growth_ladder_rational(p, q, e_grid, n_max, m, coupling)
        return g < theta
    m = phase_grid if phase_grid is not None else 64
    g = _growth_min_sequential(None, float(alpha) % 1.0, n_max, m,
                               coupling, Es=e_grid)
    return g < theta
