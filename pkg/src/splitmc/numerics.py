"""Special functions and matrix/quadrature utilities used by the bound calculators.

Everything here is pure and safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import NonSymmetric, QuadratureFailure

# Dense eigendecomposition is used up to this size; power iteration beyond.
_DENSE_EIG_LIMIT = 2000

# Truncation target for the parabolic-cylinder integrand: tail mass below
# exp(-80) of the peak, comfortably under double-precision resolution.
_TAIL_LOG_DROP = 80.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the adaptive quadratures in this module."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


def _pc_log_integrand_peak(d: float, z: float) -> float:
    """Location of the maximum of -x*z - x^2/2 + (d-1)*log(x) on (0, inf)."""
    if d > 1.0:
        return 0.5 * (-z + math.sqrt(z * z + 4.0 * (d - 1.0)))
    # For d <= 1 the log term is non-increasing, so the exponential part rules.
    return max(-z, 1e-12)


def parabolic_cylinder_neg(d: float, z: float, spec: QuadratureSpec | None = None) -> float:
    """Parabolic cylinder function of negative order, D_{-d}(z), for d > 0.

    Evaluated from the integral representation
    exp(-z^2/4) / Gamma(d) * int_0^inf exp(-x*z - x^2/2) x^(d-1) dx,
    with the integrand rescaled by its peak so the quadrature runs in a
    well-conditioned range.
    """
    if d <= 0:
        raise ValueError("order parameter d must be positive")
    spec = spec or QuadratureSpec()

    x_peak = _pc_log_integrand_peak(d, z)

    def log_f(x):
        return -x * z - 0.5 * x * x + (d - 1.0) * math.log(x)

    if d < 1.0:
        # x^(d-1) has an integrable singularity at 0; hand the algebraic
        # endpoint weight to the quadrature and keep the smooth part only.
        shift = -x_peak * z - 0.5 * x_peak**2 if z < 0 else 0.0
        x_hi = max(x_peak, 1.0)
        while -x_hi * z - 0.5 * x_hi * x_hi - shift > -_TAIL_LOG_DROP:
            x_hi *= 2.0
            if x_hi > 1e12:
                raise QuadratureFailure("could not truncate parabolic cylinder integrand")
        value, abserr = integrate.quad(
            lambda x: math.exp(-x * z - 0.5 * x * x - shift), 0.0, x_hi,
            weight="alg", wvar=(d - 1.0, 0.0), limit=spec.max_subdivisions,
            epsabs=0.0, epsrel=min(spec.rel_tol, 1e-11),
        )
        g_max = shift
    else:
        g_max = log_f(x_peak)
        # Truncate where the integrand has dropped by _TAIL_LOG_DROP from peak.
        x_hi = x_peak + 1.0
        while log_f(x_hi) > g_max - _TAIL_LOG_DROP:
            x_hi *= 2.0
            if x_hi > 1e12:
                raise QuadratureFailure("could not truncate parabolic cylinder integrand")

        def f(x):
            if x <= 0.0:
                return 0.0
            return math.exp(log_f(x) - g_max)

        value, abserr = integrate.quad(
            f, 0.0, x_hi, points=[x_peak], limit=spec.max_subdivisions,
            epsabs=0.0, epsrel=min(spec.rel_tol, 1e-11),
        )
    if value <= 0.0 or abserr > spec.rel_tol * value:
        raise QuadratureFailure(
            f"parabolic cylinder quadrature missed tolerance: value={value}, err={abserr}"
        )
    log_result = -0.25 * z * z - gammaln(d) + g_max + math.log(value)
    return math.exp(log_result)


def parabolic_cylinder_ratio(d: float, z: float, spec: QuadratureSpec | None = None) -> float:
    """D_{-d}(z) / D_{-d}(-z), the contraction factor used by the Lipschitz TV bound.

    Equals 1 at z = 0 and lies in (0, 1] for z >= 0.
    """
    if z == 0.0:
        return 1.0
    return parabolic_cylinder_neg(d, z, spec) / parabolic_cylinder_neg(d, -z, spec)


def _require_symmetric(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise NonSymmetric("expected a square matrix")
    scale = 1.0 + np.abs(s).max(initial=0.0)
    if np.abs(s - s.T).max(initial=0.0) > 1e-10 * scale:
        raise NonSymmetric("matrix is not symmetric")
    return s


def lambda_extremes(s: np.ndarray) -> tuple[float, float]:
    """(lambda_min, lambda_max) of a symmetric matrix, to 1e-10 relative accuracy.

    Dense eigendecomposition up to 2000x2000; iterative Krylov extremes
    above that (plain power iteration stalls on clustered spectra).
    """
    s = _require_symmetric(s)
    n = s.shape[0]
    if n <= _DENSE_EIG_LIMIT:
        eigs = np.linalg.eigvalsh(s)
        return float(eigs[0]), float(eigs[-1])
    from scipy.sparse.linalg import eigsh

    v0 = np.full(n, 1.0 / math.sqrt(n))
    lam_max = float(eigsh(s, k=1, which="LA", tol=1e-12, v0=v0,
                          return_eigenvectors=False)[0])
    lam_min = float(eigsh(s, k=1, which="SA", tol=1e-12, v0=v0,
                          return_eigenvectors=False)[0])
    return lam_min, lam_max


def spectral_norm(s: np.ndarray) -> float:
    """Spectral norm of a symmetric matrix."""
    lo, hi = lambda_extremes(s)
    return max(abs(lo), abs(hi))


def cdf_l1_distance(f_cdf, g_cdf, support: tuple[float, float],
                    spec: QuadratureSpec | None = None, breakpoints=None) -> float:
    """L1 distance between two CDFs, int |F - G| dx.

    The integration window starts from `support` and is widened until both
    CDFs carry less than abs_tol mass outside it. Known discontinuities
    (e.g. the jumps of empirical CDFs) can be passed as breakpoints.
    """
    spec = spec or QuadratureSpec()
    lo, hi = float(support[0]), float(support[1])
    if not lo < hi:
        raise ValueError("support must be a nonempty interval")
    width = hi - lo
    for _ in range(200):
        if f_cdf(lo) + g_cdf(lo) <= spec.abs_tol:
            break
        lo -= width
        width = hi - lo
    else:
        raise QuadratureFailure("left tail never fell below abs_tol")
    for _ in range(200):
        if (1.0 - f_cdf(hi)) + (1.0 - g_cdf(hi)) <= spec.abs_tol:
            break
        hi += width
        width = hi - lo
    else:
        raise QuadratureFailure("right tail never fell below abs_tol")

    points = None
    if breakpoints is not None:
        points = sorted(p for p in breakpoints if lo < p < hi)
    value, abserr = integrate.quad(
        lambda x: abs(f_cdf(x) - g_cdf(x)), lo, hi, points=points,
        limit=max(spec.max_subdivisions, (len(points) + 1) * 2 if points else 0),
        epsabs=spec.abs_tol, epsrel=spec.rel_tol,
    )
    if abserr > max(spec.abs_tol, spec.rel_tol * max(value, 1e-300)) * 10.0:
        raise QuadratureFailure(
            f"cdf L1 quadrature missed tolerance: value={value}, err={abserr}"
        )
    return float(value)
