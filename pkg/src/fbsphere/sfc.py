"""Spatial fading correlation for antenna arrays.

Element geometries (uniform circular array, regular dodecahedral array,
custom position sets), steering phases, and the closed-form correlation

    rho(z_p - z_q) = 4 pi sum_l i^l j_l(k |z_p - z_q|)
                     sum_m h_l^m Y_l^m((z_p - z_q)/|z_p - z_q|)

for an angle-of-arrival density h given as a mixture of FB5 components.
Element indices are 1-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fb5, sht
from .errors import ConstraintError, DomainError
from .sht import CoeffTable, Direction, WignerPi2Table
from .specfun import sph_jn_all, sph_jn_batch

TWO_PI = 2.0 * math.pi
GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Antenna element positions in meters, indexed 1..M."""

    positions: np.ndarray
    label: str = ""

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] < 1:
            raise ConstraintError("geometry needs at least one 3-vector position")
        if not np.all(np.isfinite(p)):
            raise ConstraintError("element positions must be finite")
        object.__setattr__(self, "positions", p)

    @property
    def n_elements(self) -> int:
        return len(self.positions)

    def element(self, p: int) -> np.ndarray:
        if not 1 <= p <= self.n_elements:
            raise DomainError(f"element index {p} outside 1..{self.n_elements}")
        return self.positions[p - 1]


def uca_positions(m: int, radius: float) -> ArrayGeometry:
    """Uniform circular array in the horizontal plane:
    z_p = [R cos(2 pi p / M), R sin(2 pi p / M), 0], p = 1..M."""
    if m < 1:
        raise DomainError("element count must be >= 1")
    if radius < 0:
        raise DomainError("radius must be >= 0")
    p = np.arange(1, m + 1)
    ang = TWO_PI * p / m
    pos = np.column_stack([radius * np.cos(ang), radius * np.sin(ang), np.zeros(m)])
    return ArrayGeometry(pos, label=f"uca{m}")


def rda_positions(radius: float) -> ArrayGeometry:
    """The 20 vertices of a regular dodecahedron with circumradius R.

    Canonical golden-ratio vertex set {(+-1,+-1,+-1), (0,+-1/g,+-g),
    (+-1/g,+-g,0), (+-g,0,+-1/g)} scaled by R/sqrt(3), listed in that order
    with signs in lexicographic order.
    """
    if radius <= 0:
        raise DomainError("radius must be > 0")
    g = GOLDEN
    verts = []
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sz in (-1.0, 1.0):
                verts.append((sx, sy, sz))
    for s1 in (-1.0, 1.0):
        for s2 in (-1.0, 1.0):
            verts.append((0.0, s1 / g, s2 * g))
    for s1 in (-1.0, 1.0):
        for s2 in (-1.0, 1.0):
            verts.append((s1 / g, s2 * g, 0.0))
    for s1 in (-1.0, 1.0):
        for s2 in (-1.0, 1.0):
            verts.append((s1 * g, 0.0, s2 / g))
    pos = np.array(verts) * (radius / math.sqrt(3.0))
    return ArrayGeometry(pos, label="rda20")


def nearest_neighbor_pair(geometry: ArrayGeometry, p: int = 1) -> tuple[int, int]:
    """(p, q) with q the closest other element to p (1-based)."""
    z = geometry.element(p)
    d = np.linalg.norm(geometry.positions - z, axis=1)
    d[p - 1] = np.inf
    return p, int(np.argmin(d)) + 1


def steering_phase(z, direction: Direction, wavelength: float) -> complex:
    """Unit-modulus plane-wave phase e^{i k z . x} with k = 2 pi / wavelength."""
    if wavelength <= 0:
        raise DomainError("wavelength must be positive")
    z = np.asarray(z, dtype=float)
    return complex(np.exp(1j * (TWO_PI / wavelength) * float(z @ direction.unit_vector)))


@dataclass(frozen=True)
class SfcRequest:
    """Correlation query: mixture AoA model, 1-based element pair, carrier
    wavelength, optional degree cap for the series and tail tolerance."""

    model: fb5.MixtureModel
    p: int
    q: int
    wavelength: float
    L_sum: int | None = None
    tol: float = 1e-11

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ConstraintError("wavelength must be positive")
        if self.tol <= 0:
            raise ConstraintError("tolerance must be positive")


@dataclass(frozen=True)
class SfcCurve:
    """Correlation samples over a grid of normalized radii R/lambda."""

    r_over_lambda: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r_over_lambda, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if r.shape != v.shape or r.ndim != 1:
            raise ConstraintError("curve needs matching 1-d abscissa and values")
        if np.any(np.abs(v) > 1.0 + 1e-9):
            raise ConstraintError("correlation magnitudes must not exceed 1 + 1e-9")
        object.__setattr__(self, "r_over_lambda", r)
        object.__setattr__(self, "values", v)

    def write_csv(self, f) -> None:
        """Rows `r_over_lambda,re_rho,im_rho,abs_rho`, 17 significant digits."""
        if isinstance(f, (str, bytes)):
            with open(f, "w", newline="") as fh:
                self.write_csv(fh)
            return
        f.write("r_over_lambda,re_rho,im_rho,abs_rho\n")
        for r, v in zip(self.r_over_lambda, self.values):
            f.write(f"{r:.17g},{v.real:.17g},{v.imag:.17g},{abs(v):.17g}\n")


def ell_truncation(k_d: float, tol: float, coeffs: CoeffTable | None = None) -> int:
    """Series degree for the plane-wave expansion at phase radius k_d.

    Base level ceil(e k_d / 2) + 20 (spherical Bessel terms decay
    super-exponentially past l ~ e k_d / 2); when a coefficient table is
    given, the level is pushed further while the per-degree bound
    4 pi |j_l(k_d)| sum_m |h_l^m| still exceeds ``tol``.
    """
    if k_d < 0:
        raise DomainError("k_d must be >= 0")
    base = int(math.ceil(math.e * k_d / 2.0)) + 20
    if coeffs is None:
        return base
    level = min(base, coeffs.L)
    jl = sph_jn_all(coeffs.L, k_d)
    mags = np.add.reduceat(np.abs(coeffs.values), sht.degree_starts(coeffs.L))
    bounds = 4.0 * math.pi * np.abs(jl) * mags
    above = np.nonzero(bounds[level:] > tol)[0]
    if len(above):
        level = min(level + int(above[-1]) + 1, coeffs.L)
    return level


def _degree_sums(coeffs: CoeffTable, direction: Direction, L_sum: int) -> np.ndarray:
    """S_l = sum_m c_l^m Y_l^m(direction) for l = 0..L_sum."""
    y = sht.ylm_row(L_sum, direction)
    flat = coeffs.values[: (L_sum + 1) ** 2] * y
    return np.add.reduceat(flat, sht.degree_starts(L_sum))


def _series_eval(coeffs: CoeffTable, dz: np.ndarray, k: float, L_sum: int) -> complex:
    d = float(np.linalg.norm(dz))
    if d == 0.0:
        return 1.0 + 0j
    s = _degree_sums(coeffs, Direction.from_vector(dz), L_sum)
    jl = sph_jn_all(L_sum, k * d)
    il = np.power(1j, np.arange(L_sum + 1) % 4)
    return complex(4.0 * math.pi * np.sum(il * jl * s))


def sfc_closed_form(request: SfcRequest, geometry: ArrayGeometry,
                    coeffs: CoeffTable | None = None,
                    table: WignerPi2Table | None = None) -> complex:
    """Closed-form correlation between the requested element pair.

    Coincident elements give exactly 1.  The AoA coefficient table is
    computed from the mixture when not supplied; supplying one amortizes the
    cost across many queries (it does not depend on the geometry).
    """
    z_p = geometry.element(request.p)
    z_q = geometry.element(request.q)
    dz = z_p - z_q
    d = float(np.linalg.norm(dz))
    if d == 0.0:
        return 1.0 + 0j
    k = TWO_PI / request.wavelength
    if coeffs is None:
        L_guess = request.L_sum if request.L_sum is not None else ell_truncation(k * d, request.tol)
        coeffs = _mixture_coeffs_cached(request.model, L_guess, table)
    L_sum = request.L_sum if request.L_sum is not None else ell_truncation(k * d, request.tol, coeffs)
    L_sum = min(L_sum, coeffs.L)
    return _series_eval(coeffs, dz, k, L_sum)


def _mixture_coeffs_cached(model: fb5.MixtureModel, L: int,
                           table: WignerPi2Table | None) -> CoeffTable:
    if table is None or table.L < _table_degree_needed(model, L):
        table = sht.wigner_pi2_table(_table_degree_needed(model, L))
    return fb5.mixture_coeffs(model, L, table)


def _table_degree_needed(model: fb5.MixtureModel, L: int) -> int:
    n_max = max(fb5.truncation_n(p.kappa) for _, p in model.components)
    return max(L, n_max)


def sfc_curve(model: fb5.MixtureModel, family: str, pair: tuple[int, int],
              wavelength: float, r_over_lambda, *, elements: int = 16,
              tol: float = 1e-11, table: WignerPi2Table | None = None,
              custom_positions: np.ndarray | None = None) -> SfcCurve:
    """Correlation magnitude curve versus normalized array radius.

    ``family`` is "uca" (with ``elements``), "rda", or "custom" (positions
    scaled by R at each grid point).  The geometry is rebuilt at every
    radius; the AoA coefficients are computed once since they do not depend
    on the geometry.
    """
    grid = np.asarray(r_over_lambda, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise DomainError("radius grid must be a nonempty 1-d array")
    if np.any(np.diff(grid) < 0):
        raise DomainError("radius grid must be ascending")
    if np.any(grid < 0):
        raise DomainError("radii must be >= 0")

    def build(radius: float) -> ArrayGeometry:
        if family == "uca":
            return uca_positions(elements, radius)
        if family == "rda":
            return rda_positions(radius) if radius > 0 else ArrayGeometry(
                np.zeros((20, 3)), label="rda20")
        if family == "custom":
            if custom_positions is None:
                raise DomainError("custom family needs custom_positions")
            return ArrayGeometry(np.asarray(custom_positions, dtype=float) * radius,
                                 label="custom")
        raise DomainError(f"unknown geometry family {family!r}")

    # worst-case separation fixes the series degree and the table size
    k = TWO_PI / wavelength
    g_max = build((float(grid[-1]) if grid[-1] > 0 else 1.0) * wavelength)
    d_max = float(np.linalg.norm(g_max.element(pair[0]) - g_max.element(pair[1])))
    kd_max = k * d_max if grid[-1] > 0 else 0.0
    coeffs = _mixture_coeffs_cached(model, ell_truncation(kd_max, tol), table)
    separations = np.empty((len(grid), 3))
    for i, r in enumerate(grid):
        geom = build(float(r) * wavelength)
        separations[i] = geom.element(pair[0]) - geom.element(pair[1])
    values = curve_values(coeffs, separations, k, tol)
    return SfcCurve(grid, values)


def curve_values(coeffs: CoeffTable, separations: np.ndarray, k: float,
                 tol: float = 1e-11) -> np.ndarray:
    """Closed-form correlations for a batch of separation vectors.

    When all separations share one direction (arrays scaled by a common
    radius), the per-degree harmonic sums are computed once and the
    spherical Bessel factors are evaluated for the whole batch in a single
    vectorized recurrence.
    """
    separations = np.asarray(separations, dtype=float).reshape(-1, 3)
    dists = np.linalg.norm(separations, axis=1)
    values = np.empty(len(separations), dtype=complex)
    values[dists == 0.0] = 1.0
    live = np.nonzero(dists > 0.0)[0]
    if len(live) == 0:
        return values
    units = separations[live] / dists[live][:, None]
    L_sum = min(ell_truncation(float(k * dists.max()), tol, coeffs), coeffs.L)
    il = np.power(1j, np.arange(L_sum + 1) % 4)
    if np.abs(units - units[0]).max() < 1e-12:
        s = _degree_sums(coeffs, Direction.from_vector(units[0]), L_sum)
        jmat = sph_jn_batch(L_sum, k * dists[live])
        values[live] = 4.0 * math.pi * (jmat @ (il * s))
        return values
    for i in live:
        values[i] = _series_eval(coeffs, separations[i], k, L_sum)
    return values
