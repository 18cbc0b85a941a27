"""Spherical-harmonic infrastructure.

Directions on the 2-sphere, associated Legendre and spherical-harmonic
evaluation, Wigner-d tables at pi/2 built by recursion, rotation of
coefficient tables through Wigner-D matrices, and synthesis.

Conventions (used consistently everywhere):

* Condon-Shortley phase (-1)^m is inside the associated Legendre function.
* Y_l^m(theta, phi) = N_l^m P_l^m(cos theta) e^{i m phi} with
  N_l^m = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!), orthonormal on the sphere.
* zyz Euler angles (varphi, vartheta, omega): rotation matrix
  R = Rz(varphi) Ry(vartheta) Rz(omega).
* Wigner-d at a general angle comes from the pi/2 table through
  d^l_{m,n}(theta) = i^{n-m} sum_u d^l_{u,m}(pi/2) d^l_{u,n}(pi/2) e^{i u theta},
  keeping a single source of truth for d-values.

Coefficient tables are stored as a flat dense triangle indexed l(l+1)+m;
spectra of rotated distributions are not sparse in m, so dense wins.
All containers are immutable after construction and safe to share between
threads; every operation is a pure function.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import gammaln

from .errors import ConstraintError, DomainError, InputError

_SQRT4PI = math.sqrt(4.0 * math.pi)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Direction:
    """A point on the unit sphere: co-latitude theta in [0, pi], longitude
    phi in [0, 2 pi).  Out-of-range inputs are wrapped on construction."""

    theta: float
    phi: float

    def __post_init__(self):
        t = float(self.theta) % (2.0 * math.pi)
        p = float(self.phi)
        if t > math.pi:
            t = 2.0 * math.pi - t
            p += math.pi
        p %= 2.0 * math.pi
        object.__setattr__(self, "theta", t)
        object.__setattr__(self, "phi", p)

    @property
    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    @classmethod
    def from_vector(cls, v) -> "Direction":
        v = np.asarray(v, dtype=float)
        n = np.linalg.norm(v)
        if n == 0:
            raise DomainError("cannot build a Direction from the zero vector")
        v = v / n
        return cls(math.acos(min(1.0, max(-1.0, v[2]))), math.atan2(v[1], v[0]))


@dataclass(eq=False)
class CoeffTable:
    """Complex spherical-harmonic coefficients c_l^m for 0 <= l <= L, |m| <= l.

    Flat storage of (L+1)^2 entries at index l(l+1)+m.  ``real_origin``
    flags tables produced from real-valued functions, for which
    c_l^{-m} = (-1)^m conj(c_l^m) holds.
    """

    L: int
    values: np.ndarray
    real_origin: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != ((self.L + 1) ** 2,):
            raise DomainError(
                f"coefficient table for L={self.L} needs {(self.L + 1) ** 2} entries, "
                f"got shape {self.values.shape}"
            )

    @classmethod
    def zeros(cls, L: int, real_origin: bool = False) -> "CoeffTable":
        return cls(L, np.zeros((L + 1) ** 2, dtype=complex), real_origin)

    def entry(self, ell: int, m: int) -> complex:
        if not (0 <= ell <= self.L and abs(m) <= ell):
            raise DomainError(f"(ell={ell}, m={m}) outside table with L={self.L}")
        return complex(self.values[ell * (ell + 1) + m])

    def degree_slice(self, ell: int) -> np.ndarray:
        """Entries (ell, -ell..ell) as a view."""
        base = ell * (ell + 1)
        return self.values[base - ell: base + ell + 1]

    def degree_power(self, ell: int) -> float:
        return float(np.sum(np.abs(self.degree_slice(ell)) ** 2))

    def truncated(self, L_new: int) -> "CoeffTable":
        if L_new > self.L:
            raise DomainError("cannot truncate to a larger band-limit")
        return CoeffTable(L_new, self.values[: (L_new + 1) ** 2].copy(), self.real_origin)


@dataclass(frozen=True)
class EulerAngles:
    """zyz Euler angles: varphi, omega in [0, 2 pi), vartheta in [0, pi].

    Out-of-range middle angles are folded back with the exact identity
    Ry(-t) = Rz(pi) Ry(t) Rz(-pi), so any real triple normalizes to the
    canonical ranges without changing the rotation it denotes.
    """

    varphi: float
    vartheta: float
    omega: float

    def __post_init__(self):
        p = float(self.varphi)
        o = float(self.omega)
        t = float(self.vartheta) % (2.0 * math.pi)
        if t > math.pi:
            t = 2.0 * math.pi - t
            p += math.pi
            o += math.pi
        object.__setattr__(self, "varphi", p % (2.0 * math.pi))
        object.__setattr__(self, "omega", o % (2.0 * math.pi))
        object.__setattr__(self, "vartheta", t)


@dataclass(frozen=True)
class RotationMatrix:
    """Proper rotation: orthogonal 3x3 matrix with determinant +1."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.shape != (3, 3):
            raise ConstraintError("rotation matrix must be 3x3")
        if np.abs(m.T @ m - np.eye(3)).max() > 1e-12:
            raise ConstraintError("matrix is not orthogonal within 1e-12")
        if abs(np.linalg.det(m) - 1.0) > 1e-12:
            raise ConstraintError("matrix determinant is not +1 within 1e-12")
        object.__setattr__(self, "m", m)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.m @ np.asarray(v, dtype=float)

    def inverse(self) -> "RotationMatrix":
        return RotationMatrix(self.m.T.copy())


@dataclass(frozen=True)
class WignerPi2Table:
    """Wigner-d values d^l_{u,m}(pi/2) for all l <= L.

    ``block(l)`` is the (2l+1) x (2l+1) matrix indexed [u+l, m+l]; each block
    is orthogonal and obeys d^l_{u,m} = (-1)^{u-m} d^l_{m,u}.
    """

    L: int
    _blocks: tuple = field(repr=False)

    def block(self, ell: int) -> np.ndarray:
        if not 0 <= ell <= self.L:
            raise DomainError(f"degree {ell} outside table with L={self.L}")
        return self._blocks[ell]


# ---------------------------------------------------------------------------
# associated Legendre / spherical harmonics
# ---------------------------------------------------------------------------

def tri_index(ell: int, m: int) -> int:
    """Index of (ell, m >= 0) in the packed triangle layout."""
    return ell * (ell + 1) // 2 + m


def legendre_table(L: int, x: np.ndarray) -> np.ndarray:
    """Orthonormal associated Legendre functions for all 0 <= m <= l <= L.

    Returns an array of shape (T, len(x)) with T = (L+1)(L+2)/2, row
    tri_index(l, m) holding
    Pbar_l^m(x) = N_l^m P_l^m(x) (Condon-Shortley included), so that
    Y_l^m = Pbar_l^m(cos theta) e^{i m phi}.

    The normalization is folded into the recurrence itself; the classic
    factorial-ratio prefactor overflows around l ~ 150 and is never formed.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-15):
        raise DomainError("legendre argument must lie in [-1, 1]")
    x = np.clip(x, -1.0, 1.0)
    out = np.zeros((tri_index(L, L) + 1, len(x)))
    sx = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    out[0] = 1.0 / _SQRT4PI
    for m in range(L + 1):
        pm = out[tri_index(m, m)]
        if m + 1 <= L:
            out[tri_index(m + 1, m)] = math.sqrt(2 * m + 3) * x * pm
        for ell in range(m + 2, L + 1):
            a = math.sqrt((2 * ell + 1) / ((ell + m) * (ell - m)))
            b = math.sqrt(((ell - 1) ** 2 - m * m) / (2 * ell - 3))
            out[tri_index(ell, m)] = a * (
                math.sqrt(2 * ell - 1) * x * out[tri_index(ell - 1, m)]
                - b * out[tri_index(ell - 2, m)]
            )
        if m + 1 <= L:
            # sectorial seed for the next order, Condon-Shortley sign inside
            out[tri_index(m + 1, m + 1)] = -math.sqrt((2 * m + 3) / (2 * m + 2)) * sx * pm
    return out


def _norm_factor_log(ell: int, m: int) -> float:
    return 0.5 * (
        math.log((2 * ell + 1) / (4.0 * math.pi))
        + math.lgamma(ell - m + 1)
        - math.lgamma(ell + m + 1)
    )


def assoc_legendre(ell: int, m: int, x: float) -> float:
    """Associated Legendre P_l^m(x) with the Condon-Shortley factor (-1)^m.

    Evaluated through the normalized recurrence and unscaled at the end;
    values that exceed the double range (huge l and m together) overflow
    to inf.
    """
    if not 0 <= m <= ell:
        raise DomainError(f"need 0 <= m <= ell, got ell={ell}, m={m}")
    if abs(x) > 1.0:
        raise DomainError(f"assoc_legendre argument must lie in [-1, 1], got {x}")
    pbar = legendre_table(ell, np.array([x]))[tri_index(ell, m), 0]
    return float(pbar * math.exp(-_norm_factor_log(ell, m)))


def ylm(ell: int, m: int, direction: Direction) -> complex:
    """Orthonormal spherical harmonic Y_l^m at a direction."""
    if abs(m) > ell:
        raise DomainError(f"need |m| <= ell, got ell={ell}, m={m}")
    am = abs(m)
    pbar = legendre_table(ell, np.array([math.cos(direction.theta)]))[tri_index(ell, am), 0]
    v = pbar * complex(math.cos(m * direction.phi), math.sin(m * direction.phi))
    if m < 0 and am % 2 == 1:
        v = -v
    return v


# ---------------------------------------------------------------------------
# Wigner-d at pi/2
# ---------------------------------------------------------------------------

def wigner_pi2_table(L: int) -> WignerPi2Table:
    """All Wigner-d matrices at pi/2 up to degree L.

    Each block seeds its top row u = l from the closed form
    d^l_{l,m}(pi/2) = (-1)^{l-m} 2^{-l} sqrt((2l)!/((l+m)!(l-m)!)) (in log
    space) and fills rows downward with the three-term recurrence

        sqrt((l+u)(l-u+1)) d_{u-1,m} = 2 m d_{u,m} - sqrt((l-u)(l+u+1)) d_{u+1,m},

    which runs from the decaying edge toward the bulk and is stable to high
    degree.  Negative u and m come from the pi/2-specific symmetries
    d_{-u,m} = (-1)^{l-m} d_{u,m} and d_{u,-m} = (-1)^{l+u} d_{u,m}.
    """
    if L < 0:
        raise DomainError("table degree must be >= 0")
    blocks = []
    for ell in range(L + 1):
        size = 2 * ell + 1
        b = np.zeros((size, size))
        m = np.arange(ell + 1)
        ln_top = (
            0.5 * (math.lgamma(2 * ell + 1) - gammaln(ell + m + 1) - gammaln(ell - m + 1))
            - ell * math.log(2.0)
        )
        b[2 * ell, ell:] = (-1.0) ** ((ell - m) % 2) * np.exp(ln_top)
        for u in range(ell, 0, -1):
            c_lo = math.sqrt((ell + u) * (ell - u + 1))
            c_hi = math.sqrt((ell - u) * (ell + u + 1))
            upper = b[ell + u + 1, ell:] if u + 1 <= ell else 0.0
            b[ell + u - 1, ell:] = (2.0 * m * b[ell + u, ell:] - c_hi * upper) / c_lo
        sign_row = (-1.0) ** ((ell - m) % 2)
        for u in range(1, ell + 1):
            b[ell - u, ell:] = sign_row * b[ell + u, ell:]
        us = np.arange(-ell, ell + 1)
        sign_col = (-1.0) ** ((ell + us) % 2)
        for mm in range(1, ell + 1):
            b[:, ell - mm] = sign_col * b[:, ell + mm]
        b.setflags(write=False)
        blocks.append(b)
    return WignerPi2Table(L, tuple(blocks))


def wigner_d(ell: int, m: int, mprime: int, theta: float, table: WignerPi2Table) -> float:
    """Wigner-d d^l_{m,m'}(theta) from the pi/2 table via the exponential
    expansion; the sub-1e-12 imaginary residue is discarded."""
    if ell > table.L:
        raise DomainError(f"degree {ell} exceeds table band-limit {table.L}")
    if not (abs(m) <= ell and abs(mprime) <= ell):
        raise DomainError(f"need |m|,|m'| <= ell, got ({m}, {mprime}) at ell={ell}")
    blk = table.block(ell)
    u = np.arange(-ell, ell + 1)
    s = np.sum(blk[:, ell + m] * blk[:, ell + mprime] * np.exp(1j * u * theta))
    return float((_I_POW[(mprime - m) % 4] * s).real)


_I_POW = (1 + 0j, 1j, -1 + 0j, -1j)


# ---------------------------------------------------------------------------
# rotations
# ---------------------------------------------------------------------------

def rotation_matrix(angles: EulerAngles) -> RotationMatrix:
    """R = Rz(varphi) Ry(vartheta) Rz(omega)."""

    def rz(a):
        c, s = math.cos(a), math.sin(a)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    def ry(a):
        c, s = math.cos(a), math.sin(a)
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])

    return RotationMatrix(rz(angles.varphi) @ ry(angles.vartheta) @ rz(angles.omega))


def wigner_d_block(ell: int, theta: float, table: WignerPi2Table) -> np.ndarray:
    """Full real matrix d^l_{m,n}(theta), indexed [m+l, n+l]."""
    blk = table.block(ell)
    u = np.arange(-ell, ell + 1)
    phases = np.exp(1j * u * theta)
    core = (blk.T * phases) @ blk  # [m, n] = sum_u d_{u,m} e^{i u theta} d_{u,n}
    pref = np.power(1j, (u[None, :] - u[:, None]) % 4)
    return (pref * core).real


def rotate_coeffs(coeffs: CoeffTable, angles: EulerAngles, table: WignerPi2Table) -> CoeffTable:
    """Coefficients of the rotated function: out_l^m = sum_{m'}
    e^{-i m varphi} d^l_{m,m'}(vartheta) e^{-i m' omega} in_l^{m'}."""
    if coeffs.L > table.L:
        raise DomainError(
            f"coefficient band-limit {coeffs.L} exceeds Wigner table degree {table.L}"
        )
    out = np.empty_like(coeffs.values)
    for ell in range(coeffs.L + 1):
        u = np.arange(-ell, ell + 1)
        d = wigner_d_block(ell, angles.vartheta, table)
        dmat = (
            np.exp(-1j * u[:, None] * angles.varphi)
            * d
            * np.exp(-1j * u[None, :] * angles.omega)
        )
        base = ell * (ell + 1)
        out[base - ell: base + ell + 1] = dmat @ coeffs.values[base - ell: base + ell + 1]
    return CoeffTable(coeffs.L, out, coeffs.real_origin)


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------

def synthesize(coeffs: CoeffTable, direction: Direction) -> complex:
    """Pointwise sum over all stored degrees and orders of c_l^m Y_l^m."""
    L = coeffs.L
    p = legendre_table(L, np.array([math.cos(direction.theta)]))[:, 0]
    total = 0j
    for m in range(-L, L + 1):
        am = abs(m)
        g = 0.0
        for ell in range(am, L + 1):
            c = coeffs.values[ell * (ell + 1) + m]
            g += c * p[tri_index(ell, am)]
        if m < 0 and am % 2 == 1:
            g = -g
        total += g * complex(math.cos(m * direction.phi), math.sin(m * direction.phi))
    return complex(total)


@functools.lru_cache(maxsize=32)
def _legendre_coeffs(L: int):
    # x-independent recurrence coefficients for the packed triangle
    n = tri_index(L, L) + 1
    ca = np.zeros(n)
    cb = np.zeros(n)
    sect = np.zeros(L + 1)
    sub = np.zeros(L + 1)
    for m in range(L + 1):
        if m + 1 <= L:
            sect[m + 1] = -math.sqrt((2 * m + 3) / (2 * m + 2))
            sub[m] = math.sqrt(2 * m + 3)
        for ell in range(m + 2, L + 1):
            i = tri_index(ell, m)
            ca[i] = math.sqrt((2 * ell + 1) * (2 * ell - 1) / ((ell + m) * (ell - m)))
            cb[i] = math.sqrt(
                (2 * ell + 1) * ((ell - 1) ** 2 - m * m) / ((2 * ell - 3) * (ell + m) * (ell - m))
            )
    return ca, cb, sect, sub


@njit(cache=True)
def _legendre_col_kernel(L: int, x: float, ca: np.ndarray, cb: np.ndarray,
                         sect: np.ndarray, sub: np.ndarray, out: np.ndarray) -> None:
    sx = math.sqrt(max(0.0, 1.0 - x * x))
    pm = 1.0 / math.sqrt(4.0 * math.pi)
    out[0] = pm
    for m in range(L):
        i = m * (m + 1) // 2 + m + (m + 1)  # (m+1, m)
        prev = sub[m] * x * pm
        prev2 = pm
        out[i] = prev
        for ell in range(m + 2, L + 1):
            i += ell
            cur = ca[i] * x * prev - cb[i] * prev2
            out[i] = cur
            prev2 = prev
            prev = cur
        pm = sect[m + 1] * sx * pm
        out[(m + 1) * (m + 2) // 2 + (m + 1)] = pm


def legendre_col(L: int, x: float) -> np.ndarray:
    """Single-argument version of :func:`legendre_table` (compiled fast path)."""
    if abs(x) > 1.0 + 1e-15:
        raise DomainError("legendre argument must lie in [-1, 1]")
    x = min(1.0, max(-1.0, x))
    ca, cb, sect, sub = _legendre_coeffs(L)
    out = np.empty(tri_index(L, L) + 1)
    _legendre_col_kernel(L, x, ca, cb, sect, sub, out)
    return out


def ylm_row(L: int, direction: Direction) -> np.ndarray:
    """All Y_l^m at one direction as a flat (L+1)^2 vector indexed l(l+1)+m."""
    p = legendre_col(L, math.cos(direction.theta))
    idx, sign, ms = _flat_layout(L)
    phases = np.exp(1j * np.arange(-L, L + 1) * direction.phi)
    return p[idx] * sign * phases[ms + L]


@functools.lru_cache(maxsize=32)
def _flat_layout(L: int):
    # flat (l(l+1)+m) layout -> packed-triangle index, negative-m sign, order
    idx = np.empty((L + 1) ** 2, dtype=np.intp)
    sign = np.empty((L + 1) ** 2)
    ms = np.empty((L + 1) ** 2, dtype=np.intp)
    for ell in range(L + 1):
        base = ell * (ell + 1)
        for m in range(-ell, ell + 1):
            am = abs(m)
            idx[base + m] = tri_index(ell, am)
            sign[base + m] = -1.0 if (m < 0 and am % 2 == 1) else 1.0
            ms[base + m] = m
    return idx, sign, ms


def degree_starts(L: int) -> np.ndarray:
    """Start offsets of each degree block in the flat layout (l^2)."""
    return np.arange(L + 1) ** 2


def synthesize_points(coeffs: CoeffTable, thetas: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """Synthesis at an arbitrary list of directions (paired theta/phi arrays)."""
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    L = coeffs.L
    p = legendre_table(L, np.cos(thetas))  # (T, npts)
    out = np.zeros(len(thetas), dtype=complex)
    for m in range(-L, L + 1):
        am = abs(m)
        rows = np.array([tri_index(ell, am) for ell in range(am, L + 1)])
        cs = np.array([coeffs.values[ell * (ell + 1) + m] for ell in range(am, L + 1)])
        if m < 0 and am % 2 == 1:
            cs = -cs
        out += (cs @ p[rows]) * np.exp(1j * m * phis)
    return out


def synthesize_grid(coeffs: CoeffTable, thetas: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """Synthesis on a separable grid; returns shape (len(thetas), len(phis))."""
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    L = coeffs.L
    p = legendre_table(L, np.cos(thetas))  # (T, ntheta)
    gm = np.zeros((2 * L + 1, len(thetas)), dtype=complex)
    for m in range(-L, L + 1):
        am = abs(m)
        rows = np.array([tri_index(ell, am) for ell in range(am, L + 1)])
        cs = np.array([coeffs.values[ell * (ell + 1) + m] for ell in range(am, L + 1)])
        if m < 0 and am % 2 == 1:
            cs = -cs
        gm[m + L] = cs @ p[rows]
    phase = np.exp(1j * np.arange(-L, L + 1)[:, None] * phis[None, :])
    return gm.T @ phase


# ---------------------------------------------------------------------------
# CSV interface for coefficient tables
# ---------------------------------------------------------------------------

def write_coeffs_csv(table: CoeffTable, f) -> None:
    """Write `ell,m,re,im` rows, l ascending then m from -l to l, 17
    significant digits (lossless double round-trip)."""
    if isinstance(f, (str, bytes)):
        with open(f, "w", newline="") as fh:
            write_coeffs_csv(table, fh)
        return
    f.write("ell,m,re,im\n")
    for ell in range(table.L + 1):
        for m in range(-ell, ell + 1):
            v = table.values[ell * (ell + 1) + m]
            f.write(f"{ell},{m},{v.real:.17g},{v.imag:.17g}\n")


def read_coeffs_csv(f) -> CoeffTable:
    """Read the table format written by :func:`write_coeffs_csv`."""
    if isinstance(f, (str, bytes)):
        with open(f, "r", newline="") as fh:
            return read_coeffs_csv(fh)
    reader = csv.reader(f)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["ell", "m", "re", "im"]:
        raise InputError("coefficient CSV must start with header 'ell,m,re,im'")
    entries = {}
    for row in reader:
        if not row:
            continue
        try:
            ell, m = int(row[0]), int(row[1])
            entries[(ell, m)] = complex(float(row[2]), float(row[3]))
        except (ValueError, IndexError) as exc:
            raise InputError(f"bad coefficient CSV row {row!r}") from exc
    if not entries:
        raise InputError("coefficient CSV contains no rows")
    L = max(ell for ell, _ in entries)
    values = np.zeros((L + 1) ** 2, dtype=complex)
    for ell in range(L + 1):
        for m in range(-ell, ell + 1):
            if (ell, m) not in entries:
                raise InputError(f"coefficient CSV is missing entry (ell={ell}, m={m})")
            values[ell * (ell + 1) + m] = entries[(ell, m)]
    return CoeffTable(L, values)
