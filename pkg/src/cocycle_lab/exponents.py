"""Lyapunov exponent estimation: top exponent from renormalized norm
growth, the full spectrum by running QR, periodic-orbit exponents, and the
random-product positivity check (noncompactness + no invariant line set).

Confidence intervals use batch means over 100 consecutive segments of the
orbit, which needs no independence assumption beyond ergodic averaging.
Constant-generator specs are deterministic and report zero standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cocycles import (CocycleSpec, Constant, RandomProduct, Schrodinger,
                       ToralDerivative, driver_for, generator_block)
from .dynamics import BernoulliDriver, OrbitDriver
from .errors import NumericalError
from .matrices import operator_norm

BATCHES = 100
TRACE_POINTS = 100
NONCOMPACT_THRESHOLD = math.log(10.0)  # compact groups keep norms near 1
LINE_SET_TOL = 1e-8
CYCLE_TOL = 1e-9
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _spec_dim(spec: CocycleSpec) -> int:
    return spec.dim


def _is_deterministic(spec: CocycleSpec) -> bool:
    """Constant-generator specs: the estimate has no sampling variability."""
    return isinstance(spec, Constant) or (
        isinstance(spec, ToralDerivative) and spec.epsilon == 0.0)


@dataclass(frozen=True)
class ExponentReport:
    """Exponent estimates with multiplicities and convergence diagnostics.

    `trace` holds subsampled running estimates of the top exponent as
    (step, estimate) pairs; `stderr` is one batch-means standard error per
    reported exponent (zero for deterministic specs).
    """

    exponents: tuple
    multiplicities: tuple
    steps: int
    stderr: tuple
    trace: tuple
    full_spectrum: bool = field(default=False)

    def __post_init__(self):
        if len(self.exponents) != len(self.multiplicities) or \
                len(self.exponents) != len(self.stderr):
            raise ValueError("exponents, multiplicities and stderr must align")
        if any(e2 >= e1 for e1, e2 in zip(self.exponents, self.exponents[1:])):
            raise ValueError("exponents must be strictly descending")
        if any(m < 1 for m in self.multiplicities):
            raise ValueError("multiplicities must be positive")
        if any(s < 0.0 for s in self.stderr):
            raise ValueError("standard errors must be nonnegative")

    @property
    def top(self) -> float:
        return self.exponents[0]

    def to_dict(self) -> dict:
        return {
            "exponents": list(self.exponents),
            "multiplicities": list(self.multiplicities),
            "steps": self.steps,
            "stderr": list(self.stderr),
            "trace": [[s, v] for s, v in self.trace],
        }


def _segment_plan(n: int) -> tuple[int, int]:
    """(segment length, number of full segments) for the shared batch/trace
    grid; the remainder past the last boundary still feeds the estimate."""
    seg = max(1, n // BATCHES)
    return seg, min(BATCHES, n // seg)


def top_exponent(spec: CocycleSpec, driver: OrbitDriver, n: int,
                 norm: str = "spectral") -> ExponentReport:
    """Estimate the top Lyapunov exponent (1/n) log ||A^(n)||.

    Parameters
    ----------
    spec : CocycleSpec
    driver : OrbitDriver
        Base-dynamics driver matching the spec (see `driver_for`).
    n : int
        Orbit length; the renormalized product never overflows.
    norm : {"spectral", "frobenius"}
        Norm used when reading off the estimate; the limit is norm-free,
        the choice only moves the estimate by O(log d / n).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    read = operator_norm if norm == "spectral" else _fro
    if norm not in ("spectral", "frobenius"):
        raise ValueError(f"unknown norm {norm!r}")
    d = _spec_dim(spec)
    seg, nseg = _segment_plan(n)
    cur = np.eye(d)
    log_scale = 0.0
    done = 0
    checkpoints = []  # log ||A^(k)|| at k = seg, 2 seg, ...
    trace = []
    for k in range(nseg):
        cur, log_scale = _fold_segment(spec, driver, seg, cur, log_scale)
        done += seg
        ln = log_scale + math.log(read(cur))
        checkpoints.append(ln)
        trace.append((done, ln / done))
    if done < n:
        cur, log_scale = _fold_segment(spec, driver, n - done, cur, log_scale)
        done = n
    total = log_scale + math.log(read(cur))
    est = total / n
    if _is_deterministic(spec) or nseg < 2:
        err = 0.0
    else:
        incs = np.diff(np.concatenate([[0.0], checkpoints])) / seg
        err = float(np.std(incs, ddof=1) / math.sqrt(len(incs)))
    return ExponentReport((est,), (1,), n, (err,), tuple(trace))


def _fro(m) -> float:
    return float(np.linalg.norm(m))


def _fold_segment(spec, driver, steps, cur, log_scale, chunk=1 << 20, fold=16):
    """Advance the renormalized product by `steps` orbit points."""
    left = steps
    while left > 0:
        m = min(chunk, left)
        pts = driver.block(m)
        gens = generator_block(spec, pts)
        nb = m // fold
        if nb:
            blk = gens[: nb * fold].reshape(nb, fold, *gens.shape[1:])
            prod = blk[:, 0]
            for j in range(1, fold):
                prod = np.matmul(blk[:, j], prod)
            for i in range(nb):
                cur = prod[i] @ cur
                nrm = _fro(cur)
                if not math.isfinite(nrm) or nrm == 0.0:
                    raise NumericalError("product overflow or collapse")
                log_scale += math.log(nrm)
                cur = cur / nrm
        for g in gens[nb * fold:]:
            cur = g @ cur
            nrm = _fro(cur)
            if not math.isfinite(nrm) or nrm == 0.0:
                raise NumericalError("product overflow or collapse")
            log_scale += math.log(nrm)
            cur = cur / nrm
        left -= m
    return cur, log_scale


def spectrum_qr(spec: CocycleSpec, driver: OrbitDriver, n: int) -> ExponentReport:
    """Full Oseledets spectrum by running QR of the product.

    Exponent i is (1/n) * sum of log R_ii along the orbit, sorted
    descending; estimates closer than the statistical resolution 5/sqrt(n)
    merge into one exponent with a multiplicity.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = _spec_dim(spec)
    seg, nseg = _segment_plan(n)
    if d == 2:
        sums, checkpoints = _qr_engine_2x2(spec, driver, n, seg, nseg)
    else:
        sums, checkpoints = _qr_engine_dxd(spec, driver, n, seg, nseg, d)
    raw = sums / n  # descending not guaranteed per-index; sort below
    order = np.argsort(raw)[::-1]
    raw = raw[order]
    trace = tuple((int((k + 1) * seg), float(c[order[0]] / ((k + 1) * seg)))
                  for k, c in enumerate(checkpoints))
    if _is_deterministic(spec) or nseg < 2:
        errs = np.zeros(d)
    else:
        cp = np.stack(checkpoints)[:, order]  # (nseg, d) cumulative logs
        incs = np.diff(np.vstack([np.zeros(d), cp]), axis=0) / seg
        errs = np.std(incs, axis=0, ddof=1) / math.sqrt(len(incs))
    # merge within the resolution limit of the estimator
    tol = 5.0 / math.sqrt(n)
    exps, mults, merr = [], [], []
    i = 0
    while i < d:
        j = i
        while j + 1 < d and raw[i] - raw[j + 1] < tol:
            j += 1
        exps.append(float(np.mean(raw[i:j + 1])))
        mults.append(j - i + 1)
        merr.append(float(np.sqrt(np.mean(errs[i:j + 1] ** 2))))
        i = j + 1
    return ExponentReport(tuple(exps), tuple(mults), n, tuple(merr), trace,
                          full_spectrum=True)


def _qr_engine_2x2(spec, driver, n, seg, nseg):
    """Scalar Givens-QR chain for 2x2 cocycles."""
    q00, q01, q10, q11 = 1.0, 0.0, 0.0, 1.0
    l0 = l1 = 0.0
    hyp, log = math.hypot, math.log
    checkpoints = []
    done = 0
    boundary = seg
    while done < n:
        m = min(1 << 18, n - done)
        gens = generator_block(spec, driver.block(m)).reshape(m, 4).tolist()
        for a, b, c, dd in gens:
            m00 = a * q00 + b * q10
            m01 = a * q01 + b * q11
            m10 = c * q00 + dd * q10
            m11 = c * q01 + dd * q11
            r0 = hyp(m00, m10)
            if r0 == 0.0:
                raise NumericalError("rank collapse in QR chain")
            c0 = m00 / r0
            s0 = m10 / r0
            r1 = -s0 * m01 + c0 * m11
            if r1 < 0.0:
                q00, q01, q10, q11 = c0, -s0, s0, c0
                q01, q11 = -q01, -q11
                r1 = -r1
            else:
                q00, q01, q10, q11 = c0, -s0, s0, c0
            if r1 == 0.0:
                raise NumericalError("rank collapse in QR chain")
            l0 += log(r0)
            l1 += log(r1)
            done += 1
            if done == boundary and len(checkpoints) < nseg:
                checkpoints.append(np.array([l0, l1]))
                boundary += seg
    return np.array([l0, l1]), checkpoints


def _qr_engine_dxd(spec, driver, n, seg, nseg, d):
    q = np.eye(d)
    sums = np.zeros(d)
    checkpoints = []
    done = 0
    boundary = seg
    while done < n:
        m = min(1 << 16, n - done)
        gens = generator_block(spec, driver.block(m))
        for g in gens:
            q, r = np.linalg.qr(g @ q)
            diag = np.diag(r).copy()
            sign = np.where(diag < 0.0, -1.0, 1.0)
            q = q * sign[None, :]
            diag = np.abs(diag)
            if np.any(diag == 0.0):
                raise NumericalError("rank collapse in QR chain")
            sums += np.log(diag)
            done += 1
            if done == boundary and len(checkpoints) < nseg:
                checkpoints.append(sums.copy())
                boundary += seg
    return sums, checkpoints


def periodic_orbit_exponent(spec: ToralDerivative, cycle) -> float:
    """(1/q) log(spectral radius) of the derivative product around a
    verified invariant cycle of the perturbed toral map."""
    if not isinstance(spec, ToralDerivative):
        raise ValueError("periodic_orbit_exponent expects a ToralDerivative spec")
    pts = [(float(x) % 1.0, float(y) % 1.0) for x, y in cycle]
    q = len(pts)
    if q < 1:
        raise ValueError("cycle must be nonempty")
    eps = spec.epsilon
    for i, (x, y) in enumerate(pts):
        nx = (2.0 * x + y + eps * math.sin(2.0 * math.pi * (x + y))) % 1.0
        ny = (x + y) % 1.0
        tx, ty = pts[(i + 1) % q]
        if _mod_dist(nx, tx) > CYCLE_TOL or _mod_dist(ny, ty) > CYCLE_TOL:
            raise ValueError(f"cycle is not invariant at index {i}")
    prod = np.eye(2)
    for x, y in pts:
        c = 2.0 * math.pi * eps * math.cos(2.0 * math.pi * (x + y))
        prod = np.array([[2.0 + c, 1.0 + c], [1.0, 1.0]]) @ prod
    rho = max(abs(ev) for ev in np.linalg.eigvals(prod))
    return math.log(rho) / q


def _mod_dist(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


@dataclass(frozen=True)
class FurstenbergVerdict:
    """Numerical evidence for the random-product positivity criterion:
    noncompact generated group and no finite invariant set of lines imply a
    positive top exponent. Evidence, not proof."""

    noncompact: bool
    norm_growth: float          # max log ||word|| observed
    no_invariant_line_set: bool
    line_residual: float        # residual of the best candidate line set
    chi_plus: float
    chi_stderr: float
    steps: int
    depth: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "noncompact": self.noncompact,
            "norm_growth": self.norm_growth,
            "no_invariant_line_set": self.no_invariant_line_set,
            "line_residual": self.line_residual,
            "chi_plus": self.chi_plus,
            "chi_stderr": self.chi_stderr,
            "steps": self.steps,
            "depth": self.depth,
            "converged": self.converged,
        }


def furstenberg_check(matrices, p=None, n: int = 100_000, depth: int = 4,
                      seed: int = 0, chi_tol: float = 0.01) -> FurstenbergVerdict:
    """Check the positivity hypotheses for a random product of 2x2 matrices.

    (a) Noncompactness: the running product along random words must show a
        decade of norm growth (compact groups keep norms bounded).
    (b) Invariant lines: eigendirections of all words up to length `depth`
        are candidate lines; every candidate set of size <= 2 is tested for
        invariance under all generators.
    (c) chi_plus: top-exponent estimate with a batch-means CI.
    """
    mats = [np.asarray(m, dtype=float) for m in matrices]
    k = len(mats)
    if k < 1:
        raise ValueError("need at least one matrix")
    norm_mats = []
    for m in mats:
        det = abs(np.linalg.det(m))
        if det < 1e-300:
            raise ValueError("matrices must be invertible")
        norm_mats.append(m / math.sqrt(det))
    if p is None:
        p = [1.0 / k] * k
    # (a) growth of the running product, a few independent word streams
    growth = 0.0
    for path in range(4):
        drv = BernoulliDriver(p, seed).split(path) if k >= 2 else None
        cur = np.eye(2)
        log_scale = 0.0
        steps_left = max(64, n // 4)
        while steps_left > 0:
            mblk = min(4096, steps_left)
            syms = drv.block(mblk) if drv is not None else np.ones(mblk, dtype=int)
            for s_ in syms:
                cur = norm_mats[int(s_) - 1] @ cur
                nrm = _fro(cur)
                log_scale += math.log(nrm)
                cur /= nrm
                if log_scale > growth:
                    growth = log_scale
            if growth > NONCOMPACT_THRESHOLD * 4:
                break
            steps_left -= mblk
        if growth > NONCOMPACT_THRESHOLD * 4:
            break
    noncompact = growth > NONCOMPACT_THRESHOLD
    # (b) candidate lines from eigendirections of short words
    lines = _word_eigendirections(norm_mats, depth)
    best = math.inf
    for i in range(len(lines)):
        best = min(best, _line_set_residual(norm_mats, [lines[i]]))
        for j in range(i + 1, len(lines)):
            best = min(best, _line_set_residual(norm_mats, [lines[i], lines[j]]))
        if best <= LINE_SET_TOL:
            break
    no_lines = best > LINE_SET_TOL
    # (c) top exponent
    if k >= 2:
        spec = RandomProduct(tuple(norm_mats))
        rep = top_exponent(spec, BernoulliDriver(p, seed), n)
    else:
        rep = top_exponent(Constant(norm_mats[0]), driver_for(Constant(norm_mats[0])), n)
    return FurstenbergVerdict(
        noncompact=bool(noncompact),
        norm_growth=float(growth),
        no_invariant_line_set=bool(no_lines),
        line_residual=float(best),
        chi_plus=rep.top,
        chi_stderr=rep.stderr[0],
        steps=n,
        depth=depth,
        converged=bool(3.0 * rep.stderr[0] <= chi_tol),
    )


def _word_eigendirections(mats, depth) -> list[float]:
    """Angles (mod pi) of real eigendirections of all words up to `depth`."""
    words = [np.eye(2)]
    angles = []
    for _ in range(depth):
        words = [m @ w for m in mats for w in words]
        if len(words) > 100_000:
            raise ValueError("word enumeration too large; reduce depth")
        for w in words:
            tr = w[0, 0] + w[1, 1]
            det = w[0, 0] * w[1, 1] - w[0, 1] * w[1, 0]
            disc = tr * tr - 4.0 * det
            if disc < 0.0:
                continue
            sq = math.sqrt(disc)
            for lam in ((tr + sq) / 2.0, (tr - sq) / 2.0):
                # eigenvector of [[a-lam, b], [c, d-lam]]
                a, b = w[0, 0] - lam, w[0, 1]
                c, d = w[1, 0], w[1, 1] - lam
                if abs(a) + abs(b) >= abs(c) + abs(d):
                    vx, vy = (-b, a) if (abs(a) + abs(b)) > 1e-14 else (1.0, 0.0)
                else:
                    vx, vy = (-d, c)
                ang = math.atan2(vy, vx) % math.pi
                angles.append(ang)
    # dedupe by angle within 1e-6
    angles.sort()
    out = []
    for a in angles:
        if not out or min(abs(a - out[-1]), math.pi - abs(a - out[-1])) > 1e-6:
            out.append(a)
    if len(out) > 1 and math.pi - abs(out[-1] - out[0]) <= 1e-6:
        out.pop()
    return out


def _line_set_residual(mats, angles) -> float:
    """Max over generators and lines of the distance from the image line to
    the candidate set (sine of the angle gap)."""
    dirs = [np.array([math.cos(a), math.sin(a)]) for a in angles]
    worst = 0.0
    for m in mats:
        for v in dirs:
            w = m @ v
            w = w / math.hypot(w[0], w[1])
            best = min(abs(w[0] * u[1] - w[1] * u[0]) for u in dirs)
            worst = max(worst, best)
    return worst


def builtin_sl2_specs() -> dict:
    """The built-in SL(2) cocycles used by cross-checks: name -> (spec,
    driver factory taking a seed)."""

    def bern(k):
        return lambda seed: BernoulliDriver.uniform(k, seed)

    def rot(alpha):
        return lambda seed: driver_for(Schrodinger(0.0, alpha=alpha), seed)

    def toral(eps):
        return lambda seed: driver_for(ToralDerivative(eps), seed)

    return {
        "constant-hyperbolic": (Constant([[2.0, 1.0], [1.0, 1.0]]),
                                lambda seed: driver_for(Constant(np.eye(2)))),
        "constant-diagonal": (Constant([[3.0, 0.0], [0.0, 1.0 / 3.0]]),
                              lambda seed: driver_for(Constant(np.eye(2)))),
        "random-positive": (RandomProduct(([[2.0, 1.0], [1.0, 1.0]],
                                           [[1.0, 1.0], [1.0, 2.0]])), bern(2)),
        "schrodinger-inband": (Schrodinger(0.5, 2.0, GOLDEN), rot(GOLDEN)),
        "schrodinger-offband": (Schrodinger(3.0, 2.0, GOLDEN), rot(GOLDEN)),
        "toral-linear": (ToralDerivative(0.0), toral(0.0)),
        "toral-perturbed": (ToralDerivative(0.05), toral(0.05)),
    }
