"""Fisher-Bingham five-parameter (FB5/Kent) distributions on the sphere.

Parameters, density evaluation, the normalization constant, extraction of
zyz Euler angles from the orientation frame, closed-form spherical-harmonic
coefficients of the standard (north-pole, axis-aligned) distribution,
rotation of those coefficients to arbitrary frames, and weighted mixtures.

Scaling convention
------------------
Both the normalization constant and every Bessel factor grow like e^{kappa},
which overflows doubles near kappa ~ 700 and loses accuracy well before.
All internal quantities therefore carry the factor e^{-kappa} removed; it
cancels exactly in every coefficient and density ratio, so results are
bit-for-bit those of the unscaled formulas.

Precision strategy for the coefficient engine
---------------------------------------------
The closed form couples the polar expansion of e^{kappa cos theta} to the
azimuthal Bessel series through sine-power Fourier integrals.  The summands
of that coupling reach magnitude ~ e^{beta} while the result is O(1), so
plain double arithmetic loses ~ beta/ln(10) digits to cancellation: fine for
small ovalness, hopeless for beta ~ 49.  The engine therefore has two
interchangeable paths:

* ``"double"`` -- vectorized numpy, accurate while e^{beta} * eps is small;
* ``"extended"`` -- the same sums accumulated in gmpy2 multiprecision
  floats with working precision scaled to beta, then rounded once at the
  end.

``"auto"`` (default) picks "extended" once beta exceeds 6, keeping absolute
coefficient errors near 1e-13 across the whole supported parameter range
(kappa <= 200, beta <= kappa/2).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import gmpy2
import numpy as np
from gmpy2 import mpfr

from . import sht
from .errors import ConstraintError, DomainError, InputError
from .sht import CoeffTable, Direction, EulerAngles, RotationMatrix, WignerPi2Table
from .specfun import g_row, scaled_bessel_i_half

KAPPA_MAX = 200.0
_EXTENDED_BETA_THRESHOLD = 6.0


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FB5Params:
    """Concentration kappa >= 0, ovalness 0 <= beta <= kappa/2, and the
    orthonormal orientation frame (mean, major axis, minor axis)."""

    kappa: float
    beta: float
    mu: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray

    def __post_init__(self):
        _check_concentration(self.kappa, self.beta)
        vecs = []
        for name in ("mu", "eta1", "eta2"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(3)
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ConstraintError(f"{name} must be unit length within 1e-12")
            vecs.append(v)
            object.__setattr__(self, name, v)
        for i in range(3):
            for j in range(i + 1, 3):
                if abs(np.dot(vecs[i], vecs[j])) > 1e-10:
                    raise ConstraintError("frame vectors must be pairwise orthogonal within 1e-10")

    @classmethod
    def standard(cls, kappa: float, beta: float) -> "FB5Params":
        """Canonical orientation: mean on +z, major axis +x, minor axis +y."""
        return cls(kappa, beta, np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]),
                   np.array([0.0, 1.0, 0.0]))

    @property
    def axis_matrix(self) -> np.ndarray:
        """A = eta1 eta1^T - eta2 eta2^T (symmetric, eigenvalues {+1, -1, 0})."""
        return np.outer(self.eta1, self.eta1) - np.outer(self.eta2, self.eta2)


def _check_concentration(kappa: float, beta: float) -> None:
    if not 0.0 <= kappa <= KAPPA_MAX:
        raise ConstraintError(f"kappa must lie in [0, {KAPPA_MAX}], got {kappa}")
    if not 0.0 <= beta <= kappa / 2.0 + 1e-12:
        raise ConstraintError(f"ovalness must satisfy 0 <= beta <= kappa/2, got beta={beta}, kappa={kappa}")


@dataclass(frozen=True)
class MixtureModel:
    """Convex combination of FB5 components: weights are positive and sum
    to 1 (the mixture is itself a unit-integral density)."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), p) for w, p in self.components)
        if len(comps) < 1:
            raise ConstraintError("mixture needs at least one component")
        if any(w <= 0 for w, _ in comps):
            raise ConstraintError("mixture weights must be positive")
        if abs(sum(w for w, _ in comps) - 1.0) > 1e-12:
            raise ConstraintError("mixture weights must sum to 1 within 1e-12")
        for _, p in comps:
            if not isinstance(p, FB5Params):
                raise ConstraintError("mixture components must be FB5Params")
        object.__setattr__(self, "components", comps)

    @classmethod
    def single(cls, params: FB5Params) -> "MixtureModel":
        return cls(((1.0, params),))


@dataclass(frozen=True)
class TruncationPolicy:
    """Series truncation levels: N for the concentration expansion, T for
    the ovalness expansion."""

    N: int
    T: int

    def __post_init__(self):
        if self.N < 24 or self.T < 12:
            raise ConstraintError("truncation policy needs N >= 24 and T >= 12")

    @classmethod
    def for_params(cls, kappa: float, beta: float) -> "TruncationPolicy":
        return cls(truncation_n(kappa), truncation_t(beta))


def truncation_n(kappa: float) -> int:
    """Truncation level for the e^{kappa cos theta} expansion: ceil(3 kappa/2 + 24)."""
    return int(math.ceil(1.5 * kappa + 24.0))


def truncation_t(beta: float) -> int:
    """Truncation level for the azimuthal Bessel series: ceil(36 beta/25 + 12)."""
    return int(math.ceil(36.0 * beta / 25.0 + 12.0))


# ---------------------------------------------------------------------------
# normalization constant (scaled)
# ---------------------------------------------------------------------------

def normalization_scaled(kappa: float, beta: float) -> float:
    """e^{-kappa} times the FB5 normalization constant.

    The constant is 2 pi sum_r [Gamma(r+1/2)/Gamma(r+1)] beta^{2r}
    (kappa/2)^{-2r-1/2} I_{2r+1/2}(kappa).  Each (kappa/2)^{-2r-1/2} I term
    is evaluated as the entire-function series
    sum_j (kappa^2/4)^j / (j! Gamma(j+2r+3/2)) in log space (removing the
    0/0 ambiguity at kappa -> 0), and the r series stops once a term drops
    below 1e-18 of the total.  All terms are positive: no cancellation.
    """
    _check_concentration(kappa, beta)
    ln_half_k_sq = 2.0 * math.log(kappa / 2.0) if kappa > 0 else None
    ln_beta = math.log(beta) if beta > 0 else None

    def q_scaled(r: int) -> float:
        if kappa == 0.0:
            return math.exp(-math.lgamma(2 * r + 1.5))
        total = 0.0
        j = 0
        while True:
            t = math.exp(j * ln_half_k_sq - math.lgamma(j + 1) - math.lgamma(j + 2 * r + 1.5) - kappa)
            total += t
            if j > kappa / 2.0 and t < total * 1e-19:
                return total
            j += 1

    total = 0.0
    r = 0
    while True:
        ln_w = math.lgamma(r + 0.5) - math.lgamma(r + 1.0)
        if r > 0:
            if ln_beta is None:
                break
            ln_w += 2.0 * r * ln_beta
        term = math.exp(ln_w) * q_scaled(r)
        total += term
        if r > 1 and term < total * 1e-18:
            break
        r += 1
        if r > 5000:  # unreachable for the supported parameter range
            raise DomainError("normalization series failed to converge")
    return 2.0 * math.pi * total


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

def standard_fb_pdf(direction: Direction, kappa: float, beta: float) -> float:
    """Density of the standard Fisher-Bingham distribution at a direction."""
    vals = standard_fb_pdf_grid(kappa, beta, np.array([direction.theta]), np.array([direction.phi]))
    return float(vals[0, 0])


def standard_fb_pdf_grid(kappa: float, beta: float, thetas: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """Standard FB density on a separable grid, shape (len(thetas), len(phis)).

    Evaluated as e^{kappa(cos theta - 1) + beta sin^2 theta cos 2 phi}
    divided by the scaled constant, so nothing overflows at large kappa.
    """
    _check_concentration(kappa, beta)
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    c = normalization_scaled(kappa, beta)
    x = np.cos(thetas)[:, None]
    s2 = np.maximum(0.0, 1.0 - x * x)
    expo = kappa * (x - 1.0) + beta * s2 * np.cos(2.0 * phis)[None, :]
    return np.exp(expo) / c


def fb5_pdf(direction: Direction, params: FB5Params) -> float:
    """FB5 density at a direction, from the exponential form with the
    orientation frame (identical to rotating into the standard frame)."""
    return float(fb5_pdf_xyz(params, direction.unit_vector[None, :])[0])


def fb5_pdf_xyz(params: FB5Params, xyz: np.ndarray) -> np.ndarray:
    """FB5 density at unit vectors given as an (n, 3) array."""
    xyz = np.asarray(xyz, dtype=float)
    c = normalization_scaled(params.kappa, params.beta)
    expo = (
        params.kappa * (xyz @ params.mu - 1.0)
        + params.beta * ((xyz @ params.eta1) ** 2 - (xyz @ params.eta2) ** 2)
    )
    return np.exp(expo) / c


def mixture_pdf_xyz(model: MixtureModel, xyz: np.ndarray) -> np.ndarray:
    """Mixture density at unit vectors given as an (n, 3) array."""
    xyz = np.asarray(xyz, dtype=float)
    total = np.zeros(len(xyz))
    for w, p in model.components:
        total += w * fb5_pdf_xyz(p, xyz)
    return total


# ---------------------------------------------------------------------------
# orientation frame <-> rotation <-> Euler angles
# ---------------------------------------------------------------------------

def frame_to_rotation(params: FB5Params) -> RotationMatrix:
    """Rotation with columns (major, minor, mean).

    A valid orthonormal triple can be left-handed; the density only sees the
    minor axis through its outer product, so its sign is flipped when needed
    to make the determinant +1.
    """
    r = np.column_stack([params.eta1, params.eta2, params.mu])
    if np.linalg.det(r) < 0:
        r = np.column_stack([params.eta1, -params.eta2, params.mu])
    return RotationMatrix(r)


def euler_from_rotation(rotation: RotationMatrix) -> EulerAngles:
    """zyz Euler angles of a proper rotation by four-quadrant extraction.

    vartheta = arccos(R33); varphi from (R13, R23), omega from (-R31, R32).
    At the gimbal degeneracy |R33| = 1 the split is non-unique; omega is set
    to 0 and varphi carries the whole z-rotation, which still reproduces the
    matrix exactly.
    """
    r = rotation.m
    r33 = min(1.0, max(-1.0, r[2, 2]))
    if 1.0 - abs(r33) < 1e-14:
        if r33 > 0:
            return EulerAngles(math.atan2(r[1, 0], r[0, 0]), 0.0, 0.0)
        return EulerAngles(math.atan2(-r[1, 0], -r[0, 0]), math.pi, 0.0)
    return EulerAngles(
        math.atan2(r[1, 2], r[0, 2]),
        math.acos(r33),
        math.atan2(r[2, 1], -r[2, 0]),
    )


# ---------------------------------------------------------------------------
# closed-form coefficients: shared assembly
# ---------------------------------------------------------------------------

def _assemble(L: int, table: WignerPi2Table, e_rows: dict, c_scaled: float) -> CoeffTable:
    """Contract the azimuthal kernels with Wigner-d column products.

    e_rows[m] is the complex array E_m(u'), u' = -L..L.  For even m,
    c_l^m = sqrt(pi (2l+1)) (-1)^{m/2} sum_{u'} d^l_{u',0} d^l_{u',m} E_m(u')
    divided by the scaled normalization constant; odd m vanish identically
    and negative m follow from conjugate symmetry.
    """
    values = np.zeros((L + 1) ** 2, dtype=complex)
    for ell in range(L + 1):
        blk = table.block(ell)
        d0 = blk[:, ell]
        base = ell * (ell + 1)
        for m in range(0, ell + 1, 2):
            w = d0 * blk[:, ell + m]
            e = e_rows[m][L - ell: L + ell + 1]
            v = math.sqrt(math.pi * (2 * ell + 1)) * (-1.0) ** ((m // 2) % 2) * np.dot(w, e) / c_scaled
            values[base + m] = v
            if m > 0:
                values[base - m] = np.conj(v)  # (-1)^m with even m
    return CoeffTable(L, values, real_origin=True)


def _exp_cos_fourier(kappa: float, N: int, table: WignerPi2Table) -> np.ndarray:
    """Fourier coefficients B(u), u = -N..N, of e^{kappa(cos theta - 1)}.

    Built from the scaled half-integer Bessel expansion coupled with the
    squared central Wigner-d column of each degree; identical (up to the
    degree-N truncation) to e^{-kappa} I_u(kappa).
    """
    b = np.zeros(2 * N + 1)
    if kappa == 0.0:
        b[N] = 1.0
        return b
    seq = scaled_bessel_i_half(N, kappa).values
    pref = math.sqrt(math.pi / (2.0 * kappa))
    for n in range(N + 1):
        col = table.block(n)[:, n]
        b[N - n: N + n + 1] += (2 * n + 1) * pref * seq[n] * col * col
    return b


_I_POW = (1 + 0j, 1j, -1 + 0j, -1j)


def _coeffs_double(kappa: float, beta: float, L: int, table: WignerPi2Table,
                   policy: TruncationPolicy, c_scaled: float) -> CoeffTable:
    N, T = policy.N, policy.T
    big_q = N + L
    b = _exp_cos_fourier(kappa, N, table)
    e_rows = {}
    qs = np.arange(-big_q, big_q + 1)
    phase = math.pi * np.power(1j, qs % 4)
    for m in range(0, L + 1, 2):
        k_half = np.zeros(big_q + 1)
        for t in range(T + 1):
            if beta > 0:
                ln_s = (2 * t + m / 2) * math.log(beta / 2.0) - math.lgamma(t + 1) - math.lgamma(t + m // 2 + 1)
                s_t = math.exp(ln_s)
            else:
                s_t = 1.0 if (t == 0 and m == 0) else 0.0
            if s_t == 0.0:
                continue
            k_half += s_t * g_row(4 * t + m + 1, big_q)
        k_full = np.concatenate([k_half[:0:-1], k_half]) * phase
        e_rows[m] = np.correlate(k_full, b.astype(complex), mode="valid")
    return _assemble(L, table, e_rows, c_scaled)


# -- extended-precision path -------------------------------------------------

def _scaled_besseli_int_mpfr(n_max: int, kappa: float) -> list:
    """e^{-kappa} I_u(kappa) for integer u = 0..n_max at the active gmpy2
    precision (positive series for I_0, downward ratio recurrence above)."""
    k = mpfr(kappa)
    x2 = (k / 2) ** 2
    eps = mpfr(2) ** (-gmpy2.get_context().precision - 10)
    term = mpfr(1)
    s = mpfr(1)
    j = 1
    while True:
        term = term * x2 / (j * j)
        s += term
        if j > kappa / 2.0 + 5 and term < s * eps:
            break
        j += 1
    out = [s * gmpy2.exp(-k)]
    start = n_max + 200 + int(1.2 * kappa)
    ratios = {}
    rho = mpfr(0)
    for u in range(start, -1, -1):
        rho = 1 / (2 * (u + 1) / k + rho)
        if u < n_max:
            ratios[u] = rho
    for u in range(n_max):
        out.append(out[-1] * ratios[u])
    return out


def _khat_row_mpfr(m: int, q_max: int, T: int, beta: float) -> list:
    """K_m(q) = sum_t s_t M(4t+m+1, q) for q = 0..q_max in gmpy2 floats.

    M is the signed magnitude of the sine-power Fourier integral; successive
    t values are linked by the exact integer ratio
    (p+1)(p+2)(p+3)(p+4) / [(p+q+2)(p+q+4)(p-q+2)(p-q+4)], so each chain
    needs one direct Gamma evaluation (restarted after the zero region of a
    pole, where M is exactly 0).
    """
    kb2 = mpfr(beta) / 2
    s0 = kb2 ** (m // 2) / gmpy2.gamma(m // 2 + 1)
    rows = []
    for q in range(q_max + 1):
        acc = mpfr(0)
        m_val = None
        s_t = s0
        for t in range(T + 1):
            p = 4 * t + m + 1
            if m_val is None:
                b2 = p - q + 2
                if not (b2 <= 0 and b2 % 2 == 0):
                    a = mpfr(p + q + 2) / 2
                    bb = mpfr(b2) / 2
                    m_val = gmpy2.gamma(p + 2) / (mpfr(2) ** p * (p + 1) * gmpy2.gamma(a) * gmpy2.gamma(bb))
            else:
                pp = p - 4
                num = (pp + 1) * (pp + 2) * (pp + 3) * (pp + 4)
                den = (pp + q + 2) * (pp + q + 4) * (pp - q + 2) * (pp - q + 4)
                m_val = m_val * num / den
            if m_val is not None:
                acc += s_t * m_val
            s_t = s_t * kb2 * kb2 / ((t + 1) * (t + m // 2 + 1))
        rows.append(acc)
    return rows


def _coeffs_extended(kappa: float, beta: float, L: int, table: WignerPi2Table,
                     policy: TruncationPolicy, c_scaled: float) -> CoeffTable:
    N, T = policy.N, policy.T
    big_q = N + L
    prec = 96 + int(math.ceil(1.5 * beta)) + 64
    e_rows = {}
    with gmpy2.context(precision=prec):
        b = _scaled_besseli_int_mpfr(N, kappa)
        for m in range(0, L + 1, 2):
            k_half = _khat_row_mpfr(m, big_q, T, beta)
            row = np.empty(2 * L + 1, dtype=complex)
            for up in range(L + 1):
                s_even = mpfr(0)
                s_odd = mpfr(0)
                for u in range(-N, N + 1):
                    v = b[abs(u)] * k_half[abs(u + up)]
                    if u % 2 == 0:
                        s_even += v if u % 4 == 0 else -v
                    else:
                        s_odd += v if (u - 1) % 4 == 0 else -v
                val = _I_POW[up % 4] * complex(float(s_even), float(s_odd)) * math.pi
                row[L + up] = val
                if up > 0:
                    row[L - up] = np.conj(val)
            e_rows[m] = row
    return _assemble(L, table, e_rows, c_scaled)


def standard_fb_coeffs(kappa: float, beta: float, L: int, table: WignerPi2Table,
                       policy: TruncationPolicy | None = None,
                       precision: str = "auto") -> CoeffTable:
    """Spherical-harmonic coefficients of the standard FB distribution.

    Evaluates the closed form for 0 <= m <= l <= L with the concentration
    series truncated at ``policy.N`` and the ovalness series at ``policy.T``
    (defaults from :func:`truncation_n` / :func:`truncation_t`).  Odd-m
    entries are exact zeros; negative m follow from conjugate symmetry.

    ``precision``: "auto" | "double" | "extended"; see the module docstring.
    The cost is O(L^2 N + L (N+L) T + L^3) after the one-off Wigner table.
    """
    _check_concentration(kappa, beta)
    if L < 0:
        raise DomainError("band-limit must be >= 0")
    if policy is None:
        policy = TruncationPolicy.for_params(kappa, beta)
    if table.L < max(L, policy.N):
        raise DomainError(
            f"Wigner table degree {table.L} is below max(L, N) = {max(L, policy.N)}"
        )
    if precision not in ("auto", "double", "extended"):
        raise DomainError(f"unknown precision mode {precision!r}")
    c_scaled = normalization_scaled(kappa, beta)
    use_extended = precision == "extended" or (
        precision == "auto" and beta > _EXTENDED_BETA_THRESHOLD
    )
    if use_extended:
        return _coeffs_extended(kappa, beta, L, table, policy, c_scaled)
    return _coeffs_double(kappa, beta, L, table, policy, c_scaled)


def fb5_coeffs(params: FB5Params, L: int, table: WignerPi2Table,
               policy: TruncationPolicy | None = None,
               precision: str = "auto") -> CoeffTable:
    """Coefficients of an arbitrarily oriented FB5 distribution: the
    standard-frame table rotated through the frame's Euler angles."""
    std = standard_fb_coeffs(params.kappa, params.beta, L, table, policy, precision)
    angles = euler_from_rotation(frame_to_rotation(params))
    return sht.rotate_coeffs(std, angles, table)


def mixture_coeffs(model: MixtureModel, L: int, table: WignerPi2Table,
                   precision: str = "auto") -> CoeffTable:
    """Coefficients of a mixture: the weighted sum of component tables,
    each component using its own truncation policy."""
    total = np.zeros((L + 1) ** 2, dtype=complex)
    for w, params in model.components:
        total += w * fb5_coeffs(params, L, table, precision=precision).values
    return CoeffTable(L, total, real_origin=True)


# ---------------------------------------------------------------------------
# JSON interface
# ---------------------------------------------------------------------------

def _orthonormalize(mu, eta1, eta2):
    mu = np.asarray(mu, dtype=float).reshape(3)
    eta1 = np.asarray(eta1, dtype=float).reshape(3)
    eta2 = np.asarray(eta2, dtype=float).reshape(3)
    n = np.linalg.norm(mu)
    if n == 0:
        raise ConstraintError("mean direction must be nonzero")
    mu_c = mu / n
    v1 = eta1 - (eta1 @ mu_c) * mu_c
    n1 = np.linalg.norm(v1)
    if n1 == 0:
        raise ConstraintError("major axis is parallel to the mean direction")
    e1_c = v1 / n1
    v2 = eta2 - (eta2 @ mu_c) * mu_c - (eta2 @ e1_c) * e1_c
    n2 = np.linalg.norm(v2)
    if n2 == 0:
        raise ConstraintError("minor axis is in the span of the mean and major axis")
    e2_c = v2 / n2
    drift = max(
        np.abs(mu_c - mu).max(), np.abs(e1_c - eta1).max(), np.abs(e2_c - eta2).max()
    )
    if drift > 1e-6:
        raise ConstraintError(
            f"frame vectors deviate from an orthonormal set by {drift:.3g} (> 1e-6)"
        )
    return mu_c, e1_c, e2_c


def mixture_from_dict(doc: dict) -> MixtureModel:
    """Build a mixture from the JSON document layout
    ``{"components": [{"weight", "kappa", "beta", "mu", "eta1", "eta2"}]}``.

    Vectors are Gram-Schmidt corrected when within 1e-6 of orthonormal and
    rejected otherwise.
    """
    try:
        raw = doc["components"]
        comps = []
        for c in raw:
            mu, e1, e2 = _orthonormalize(c["mu"], c["eta1"], c["eta2"])
            comps.append((float(c["weight"]), FB5Params(float(c["kappa"]), float(c["beta"]), mu, e1, e2)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConstraintError):
            raise
        raise InputError(f"malformed mixture document: {exc}") from exc
    return MixtureModel(tuple(comps))


def mixture_from_json(text: str) -> MixtureModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError("mixture document must be a JSON object")
    return mixture_from_dict(doc)


def mixture_to_dict(model: MixtureModel) -> dict:
    return {
        "components": [
            {
                "weight": w,
                "kappa": p.kappa,
                "beta": p.beta,
                "mu": list(p.mu),
                "eta1": list(p.eta1),
                "eta2": list(p.eta2),
            }
            for w, p in model.components
        ]
    }
