"""Scalar special functions used by the closed-form machinery.

Everything here is pure and thread-safe: log-gamma, exponentially scaled
half-integer modified Bessel functions, spherical Bessel functions, and the
sine-power complex-exponential integral

    G(p, q) = integral_0^pi sin(theta)^p e^{i q theta} dtheta.

Modified Bessel values are always carried in the scaled form e^{-kappa} I(kappa);
the raw values grow like e^{kappa} and overflow double precision near
kappa ~ 700, while the scaled ones stay bounded for the whole supported range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import gammaln, gammasgn

from .errors import DomainError

_LN2 = math.log(2.0)


def log_gamma(x: float) -> float:
    """Natural log of the Gamma function for x > 0."""
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


@dataclass(frozen=True)
class ScaledBesselSeq:
    """Sequence e^{-kappa} I_{n+1/2}(kappa) for n = 0..N.

    Entries are finite, non-negative and strictly decreasing in n for
    kappa > 0 (the decay that justifies truncating series over n).
    """

    kappa: float
    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise DomainError("scaled Bessel sequence must be finite and >= 0")
        if self.kappa > 0 and len(v) > 1:
            # strictly decreasing until underflow; zeros only in the tail
            pos = v > 0.0
            if np.any(pos[1:] & ~pos[:-1]) or not np.all(np.diff(v[pos]) < 0):
                raise DomainError("scaled Bessel sequence must decrease strictly in n")

    def __len__(self) -> int:
        return len(self.values)


def scaled_bessel_i_half(n_max: int, kappa: float) -> ScaledBesselSeq:
    """e^{-kappa} I_{n+1/2}(kappa) for n = 0..n_max.

    Computed by a downward ratio recurrence (Miller's method): the ratios
    r_nu = I_{nu+1}/I_nu satisfy r_nu = 1/(2(nu+1)/kappa + r_{nu+1}) and are
    seeded with 0 far above max(n_max, kappa), where the error contracts
    rapidly.  The n = 0 entry is the closed form
    sqrt(2/(pi kappa)) (1 - e^{-2 kappa})/2, and all ratios are < 1, so the
    sequence is monotone by construction.  Upward recurrence would be
    unstable for n beyond kappa.
    """
    if kappa < 0:
        raise DomainError(f"kappa must be >= 0, got {kappa}")
    if n_max < 0:
        raise DomainError(f"n_max must be >= 0, got {n_max}")
    if kappa == 0.0:
        return ScaledBesselSeq(kappa, np.zeros(n_max + 1))
    start = max(n_max, int(math.ceil(1.2 * kappa))) + 80
    ratios = np.empty(n_max + 1)
    rho = 0.0
    for n in range(start, -1, -1):
        rho = 1.0 / (2.0 * (n + 1.5) / kappa + rho)
        if n <= n_max:
            ratios[n] = rho
    values = np.empty(n_max + 1)
    values[0] = math.sqrt(2.0 / (math.pi * kappa)) * 0.5 * (-math.expm1(-2.0 * kappa))
    for n in range(n_max):
        values[n + 1] = values[n] * ratios[n]
    return ScaledBesselSeq(kappa, values)


def _sph_jn_series(ell: int, x: float) -> float:
    # ascending series, accurate for x^2 < ~2(2 ell + 3)
    if x == 0.0:
        return 1.0 if ell == 0 else 0.0
    # prefactor x^ell / (2 ell + 1)!! via logs; (2l+1)!! = (2l+1)! / (2^l l!)
    ln_pref = ell * math.log(x) - (math.lgamma(2 * ell + 2) - ell * _LN2 - math.lgamma(ell + 1))
    if ln_pref < -745.0:
        return 0.0
    y = 0.5 * x * x
    term = 1.0
    total = 1.0
    k = 1
    while True:
        term *= -y / (k * (2 * ell + 2 * k + 1))
        total += term
        if abs(term) < 1e-18 * abs(total) + 1e-300:
            break
        k += 1
    return math.exp(ln_pref) * total


def sph_jn_all(ell_max: int, x: float) -> np.ndarray:
    """Spherical Bessel j_0(x) .. j_{ell_max}(x) in one downward pass,
    normalized against whichever of the closed-form j_0, j_1 has the larger
    magnitude (the two never vanish together)."""
    return sph_jn_batch(ell_max, np.array([float(x)]))[0]


def _sph_jn_series_batch(ell_max: int, x: np.ndarray) -> np.ndarray:
    # ascending series over an (nx, L+1) grid; 12 terms cover x < 1 to 1e-18
    ells = np.arange(ell_max + 1)
    ratios = np.empty((len(x), ell_max + 1))
    ratios[:, 0] = 1.0
    ratios[:, 1:] = x[:, None] / (2.0 * ells[:-1] + 3.0)
    pref = np.cumprod(ratios, axis=1)
    y = -0.5 * x * x
    term = np.ones((len(x), ell_max + 1))
    total = np.ones((len(x), ell_max + 1))
    for k in range(1, 13):
        term = term * (y / k)[:, None] / (2 * ells + 2 * k + 1)
        total += term
    return pref * total


def _miller_pad(ell_max: int, x_max: float) -> int:
    # steps above max(l, x) before the seed error has contracted below ~1e-18.
    # Deep in the exponential zone (x well below the degrees) the per-step
    # contraction is bounded by (x / 2n)^2; near and beyond the turning point
    # (x ~ l or larger) the Airy-region width ~ (x/2)^(1/3) sets the scale.
    if x_max < 0.8 * ell_max:
        rho = min(0.25, (x_max / (2.0 * (ell_max + 1))) ** 2) if x_max > 0 else 1e-8
        return min(48, max(8, int(math.ceil(39.2 / -math.log(rho))))) + 4
    return 29 + int(math.ceil(12.5 * (max(x_max, 1.0) / 2.0) ** (1.0 / 3.0)))


@njit(cache=True)
def _miller_raw(x: np.ndarray, top: int, ell_max: int) -> np.ndarray:
    # downward recurrence columns with per-step rescaling; raw rows 0..ell_max
    raw = np.zeros((len(x), ell_max + 1))
    for j in range(len(x)):
        inv = 1.0 / x[j]
        yp = 0.0
        y = 1e-30
        for n in range(top, 0, -1):
            ym = (2 * n + 1) * inv * y - yp
            yp = y
            y = ym
            if n - 1 <= ell_max:
                raw[j, n - 1] = y
            if abs(y) > 1e250:
                y *= 1e-250
                yp *= 1e-250
                lo = n - 1 if n >= 1 else 0
                for ell in range(lo, ell_max + 1):
                    raw[j, ell] *= 1e-250
    return raw


def sph_jn_batch(ell_max: int, xs: np.ndarray) -> np.ndarray:
    """j_0..j_{ell_max} at many arguments at once, shape (len(xs), ell_max+1).

    Arguments below 1/2 use the vectorized ascending series; the rest share
    a compiled downward recurrence normalized per column against whichever
    of j_0, j_1 is larger.  Columns with x = 0 get the exact limit.
    """
    xs = np.asarray(xs, dtype=float)
    if np.any(xs < 0):
        raise DomainError("spherical Bessel arguments must be >= 0")
    out = np.zeros((len(xs), ell_max + 1))
    zero = xs == 0.0
    out[zero, 0] = 1.0
    small = (xs > 0.0) & (xs < 0.5)
    if np.any(small):
        out[small] = _sph_jn_series_batch(ell_max, xs[small])
    big = xs >= 0.5
    if not np.any(big):
        return out
    x = xs[big]
    j0 = np.sin(x) / x
    j1 = np.sin(x) / (x * x) - np.cos(x) / x
    vals = np.empty((len(x), ell_max + 1))
    vals[:, 0] = j0
    if ell_max >= 1:
        vals[:, 1] = j1
    if ell_max >= 2:
        x_max = float(np.max(x))
        top = int(max(ell_max, x_max)) + _miller_pad(ell_max, x_max)
        raw = _miller_raw(x, top, ell_max)
        use0 = np.abs(j0) >= np.abs(j1)
        with np.errstate(invalid="ignore", divide="ignore"):
            c = np.where(use0, j0 / raw[:, 0], j1 / raw[:, 1])
        vals[:, 2:] = raw[:, 2:] * c[:, None]
    out[big] = vals
    return out


def spherical_bessel_j(ell: int, x: float) -> float:
    """Spherical Bessel function of the first kind j_ell(x), x >= 0.

    Closed forms for ell in {0, 1} (series near 0 to dodge cancellation),
    downward recurrence with normalization otherwise; stable for x << ell.
    """
    if x < 0:
        raise DomainError(f"spherical Bessel argument must be >= 0, got {x}")
    if ell == 0:
        return 1.0 if x == 0.0 else math.sin(x) / x
    if ell == 1:
        if x == 0.0:
            return 0.0
        return _sph_jn_series(1, x) if x < 0.5 else math.sin(x) / (x * x) - math.cos(x) / x
    if x == 0.0:
        return 0.0
    if x * x < 0.1 * (2 * ell + 3):
        return _sph_jn_series(ell, x)
    return float(sph_jn_all(ell, x)[ell])


def _gamma_sign_negative(x: float) -> float:
    # sign of Gamma(x) for negative non-integer x: alternates per unit interval
    return 1.0 if math.floor(x) % 2 == 0 else -1.0


_I_POW = (1 + 0j, 1j, -1 + 0j, -1j)


def g_integral(p: int, q: int) -> complex:
    """Closed form of integral_0^pi sin(theta)^p e^{i q theta} dtheta.

    Equals pi e^{i q pi/2} Gamma(p+2) / (2^p (p+1) Gamma((p+q+2)/2)
    Gamma((p-q+2)/2)).  Where a Gamma argument is a non-positive integer the
    reciprocal is taken as exactly zero (the true integral vanishes there),
    so the result is exactly 0 rather than NaN.
    """
    if p < 0:
        raise DomainError(f"g_integral requires p >= 0, got {p}")
    aq = abs(q)  # the magnitude is even in q: conjugate symmetry is exact
    a2 = p + aq + 2  # 2*a
    b2 = p - aq + 2  # 2*b
    if b2 <= 0 and b2 % 2 == 0:
        return 0j
    ln = math.lgamma(p + 2) - p * _LN2 - math.log(p + 1)
    sign = 1.0
    for twice in (a2, b2):
        z = 0.5 * twice
        ln -= math.lgamma(z)
        if z < 0:
            sign *= _gamma_sign_negative(z)
    return math.pi * _I_POW[q % 4] * sign * math.exp(ln)


def g_row(p: int, q_max: int) -> np.ndarray:
    """Signed magnitudes M(p, q) = G(p, q) / (pi e^{i q pi/2}) for q = 0..q_max.

    Vectorized companion of :func:`g_integral` for building series kernels;
    M is even in q, so the non-negative half suffices.
    """
    if p < 0:
        raise DomainError(f"g_row requires p >= 0, got {p}")
    qs = np.arange(q_max + 1)
    a = 0.5 * (p + qs + 2)
    b = 0.5 * (p - qs + 2)
    pole = (b <= 0) & (np.abs(b - np.round(b)) < 1e-9)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ln = math.lgamma(p + 2) - p * _LN2 - math.log(p + 1) - gammaln(a) - gammaln(b)
        m = gammasgn(a) * gammasgn(b) * np.exp(ln)
    m[pole] = 0.0
    return m
