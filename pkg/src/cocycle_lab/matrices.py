"""Fixed-size real matrix kernel: products, QR with a positive diagonal,
spectral norms, and the projective (Moebius) action on the upper half plane.

Matrices are plain float ndarrays of shape (d, d), d <= 16. All operations
are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

SL2_DET_TOL = 1e-12
MAX_DIM = 16


def as_matrix(m) -> np.ndarray:
    """Coerce to a square float matrix and validate it."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {a.shape[0]} exceeds supported maximum {MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def mat_mul(a, b) -> np.ndarray:
    """Matrix product with a dimension check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b


def qr_positive(m) -> tuple[np.ndarray, np.ndarray]:
    """QR factorization normalized so diag(R) >= 0.

    Unique for invertible input; rank deficiency shows up as zero diagonal
    entries of R rather than an error.
    """
    a = as_matrix(m)
    q, r = np.linalg.qr(a)
    sign = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    return q * sign[None, :], r * sign[:, None]


def operator_norm(m) -> float:
    """Spectral norm (largest singular value); closed form for 2x2."""
    a = as_matrix(m)
    if a.shape == (2, 2):
        return _opnorm2(float(a[0, 0]), float(a[0, 1]),
                        float(a[1, 0]), float(a[1, 1]))
    return float(np.linalg.norm(a, 2))


def _opnorm2(a: float, b: float, c: float, d: float) -> float:
    # sigma_max^2 = (f + sqrt(f^2 - 4 det^2)) / 2 with f the squared Frobenius norm
    scale = max(abs(a), abs(b), abs(c), abs(d))
    if scale == 0.0:
        return 0.0
    if scale > 1e150 or scale < 1e-150:  # keep f*f inside double range
        return scale * _opnorm2(a / scale, b / scale, c / scale, d / scale)
    f = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = f * f - 4.0 * det * det
    if disc < 0.0:  # roundoff on near-conformal matrices
        disc = 0.0
    return math.sqrt(0.5 * (f + math.sqrt(disc)))


def det2(m) -> float:
    a = as_matrix(m)
    if a.shape != (2, 2):
        raise ValueError("det2 expects a 2x2 matrix")
    return float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])


def check_sl2(m, tol: float = SL2_DET_TOL) -> np.ndarray:
    """Assert |det - 1| <= tol and return the matrix."""
    a = as_matrix(m)
    d = det2(a)
    if abs(d - 1.0) > tol:
        raise ValueError(f"matrix is not in SL(2): det = {d!r}")
    return a


@dataclass(frozen=True)
class HalfPlanePoint:
    """A point z = re + i*im of the open upper half plane (im > 0)."""

    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise ValueError("half-plane point must be finite")
        if self.im <= 0.0:
            raise ValueError(f"half-plane point needs im > 0, got im = {self.im!r}")

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)

    @classmethod
    def from_complex(cls, z: complex) -> "HalfPlanePoint":
        return cls(float(z.real), float(z.imag))


def projective_apply(m, p: HalfPlanePoint) -> HalfPlanePoint:
    """Projective action of an invertible 2x2 matrix on the upper half plane.

    det > 0 acts as the Moebius map (az+b)/(cz+d); det < 0 acts through the
    conjugate point, (a*conj(z)+b)/(c*conj(z)+d), which lands back in the
    upper half plane.
    """
    a = as_matrix(m)
    if a.shape != (2, 2):
        raise ValueError("projective_apply expects a 2x2 matrix")
    det = det2(a)
    if det == 0.0:
        raise ValueError("projective_apply requires det != 0")
    z = p.z if det > 0.0 else p.z.conjugate()
    den = a[1, 0] * z + a[1, 1]
    if den == 0:
        raise NumericalError("projective image at infinity")
    w = (a[0, 0] * z + a[0, 1]) / den
    if w.imag <= 0.0:
        raise NumericalError(f"projective image degenerated onto the real axis: {w!r}")
    return HalfPlanePoint(w.real, w.imag)
