"""Numerical laboratory for Lyapunov exponents of matrix cocycles over
measure-preserving systems: exponent estimators, uniform-hyperbolicity
certificates, random barycentric subdivision, and Hofstadter-butterfly
parameter scans."""

from .barycentric import (Triangle, SubdivisionPath, aspect_ratio,
                          chi_cocycle, chi_geometric, subdivide,
                          triangle_to_halfplane)
from .cocycles import (Barycentric, CocycleSpec, Constant, ProductState,
                       RandomProduct, Schrodinger, ToralDerivative, advance,
                       barycentric_generators, driver_for, generator,
                       row_vector_growth)
from .dynamics import (BernoulliDriver, RotationDriver, ToralDriver,
                       birkhoff_average)
from .errors import CocycleLabError, NumericalError, UsageError
from .exponents import (ExponentReport, FurstenbergVerdict, furstenberg_check,
                        periodic_orbit_exponent, spectrum_qr, top_exponent)
from .hyperbolicity import (ConeField, UHCertificate, band_oracle,
                            cone_certify, slice_spectrum, uniform_growth_test)
from .butterfly import (ButterflyRaster, farey_fractions, measure_slice,
                        render_pgm, scan_butterfly)
from .matrices import (HalfPlanePoint, mat_mul, operator_norm,
                       projective_apply, qr_positive)

__version__ = "0.1.0"
