"""Brute-force numerical ground truth.

Sphere quadrature (Gauss-Legendre in cos theta times a uniform longitude
grid), a direct numeric spherical-harmonic transform, direct numeric
integration of the spatial-correlation integral, and the mean-square
spatial reconstruction error.  Everything here is deliberately independent
of the closed-form machinery it is used to check.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from . import fb5, sht
from .errors import DomainError
from .sht import CoeffTable, Direction, WignerPi2Table

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QuadratureRule:
    """Product quadrature on the sphere.

    Gauss-Legendre nodes/weights in cos(theta) crossed with an equispaced
    longitude grid; integrates spherical harmonics exactly (weights sum to
    4 pi) for every degree up to ``order``.
    """

    order: int
    thetas: np.ndarray      # (n_theta,)
    gl_weights: np.ndarray  # (n_theta,) Gauss-Legendre weights in x = cos theta
    phis: np.ndarray        # (n_phi,)

    @property
    def n_nodes(self) -> int:
        return len(self.thetas) * len(self.phis)

    @functools.cached_property
    def weights_flat(self) -> np.ndarray:
        w = self.gl_weights[:, None] * (TWO_PI / len(self.phis))
        return np.broadcast_to(w, (len(self.thetas), len(self.phis))).ravel().copy()

    @functools.cached_property
    def xyz_flat(self) -> np.ndarray:
        st = np.sin(self.thetas)[:, None]
        ct = np.cos(self.thetas)[:, None]
        x = st * np.cos(self.phis)[None, :]
        y = st * np.sin(self.phis)[None, :]
        z = np.broadcast_to(ct, x.shape)
        return np.column_stack([x.ravel(), y.ravel(), z.ravel()])

    def nodes(self):
        """Iterate (Direction, weight) pairs, theta-major order."""
        dphi = TWO_PI / len(self.phis)
        for th, gw in zip(self.thetas, self.gl_weights):
            for ph in self.phis:
                yield Direction(float(th), float(ph)), float(gw * dphi)


def quadrature_nodes(L: int) -> QuadratureRule:
    """Rule exact for integrands band-limited at degree 2L+1: L+1
    Gauss-Legendre colatitudes times 2L+2 equispaced longitudes."""
    if L < 0:
        raise DomainError("quadrature degree must be >= 0")
    x, w = roots_legendre(L + 1)
    thetas = np.arccos(x[::-1])
    return QuadratureRule(
        order=2 * L + 1,
        thetas=thetas,
        gl_weights=w[::-1].copy(),
        phis=TWO_PI * np.arange(2 * L + 2) / (2 * L + 2),
    )


def numeric_sht(f, L: int, rule: QuadratureRule, real_origin: bool = False) -> CoeffTable:
    """Projection coefficients sum_nodes f(x) conj(Y_l^m(x)) w by quadrature.

    ``f(thetas, phis)`` must accept the rule's coordinate vectors and return
    the sampled grid, shape (n_theta, n_phi).  The rule order should exceed
    2L plus the integrand's own effective band-limit.
    """
    n_phi = len(rule.phis)
    if n_phi <= 2 * L:
        raise DomainError("quadrature rule has too few longitudes for this band-limit")
    grid = np.asarray(f(rule.thetas, rule.phis), dtype=complex)
    if grid.shape != (len(rule.thetas), n_phi):
        raise DomainError(f"integrand grid has shape {grid.shape}, expected "
                          f"{(len(rule.thetas), n_phi)}")
    # azimuthal projection first: F_m(theta_i) = dphi sum_j f_ij e^{-i m phi_j}
    fm = np.fft.fft(grid, axis=1) * (TWO_PI / n_phi)
    p = sht.legendre_table(L, np.cos(rule.thetas))
    values = np.zeros((L + 1) ** 2, dtype=complex)
    for m in range(-L, L + 1):
        am = abs(m)
        col = fm[:, m % n_phi] * rule.gl_weights
        sign = -1.0 if (m < 0 and am % 2 == 1) else 1.0
        for ell in range(am, L + 1):
            values[ell * (ell + 1) + m] = sign * np.dot(p[sht.tri_index(ell, am)], col)
    return CoeffTable(L, values, real_origin)


def sfc_numeric(model: fb5.MixtureModel, z_p, z_q, wavelength: float,
                rule: QuadratureRule) -> complex:
    """Direct quadrature of the correlation integral
    int h(x) e^{i k (z_p - z_q) . x} ds(x).

    The rule must resolve the phase oscillation: order >= 2 k |z_p - z_q|
    plus the density's own band-limit, with margin.
    """
    if wavelength <= 0:
        raise DomainError("wavelength must be positive")
    dz = np.asarray(z_p, dtype=float) - np.asarray(z_q, dtype=float)
    xyz = rule.xyz_flat
    h = fb5.mixture_pdf_xyz(model, xyz)
    phase = np.exp(1j * (TWO_PI / wavelength) * (xyz @ dz))
    return complex(np.sum(h * phase * rule.weights_flat))


def equiangular_points(L: int) -> tuple[np.ndarray, np.ndarray]:
    """L x L equiangular evaluation grid: colatitudes pi(2i+1)/(2L),
    longitudes 2 pi j / L."""
    if L < 1:
        raise DomainError("grid size must be >= 1")
    thetas = math.pi * (2 * np.arange(L) + 1) / (2 * L)
    phis = TWO_PI * np.arange(L) / L
    return thetas, phis


def spatial_error(kappa: float, beta: float, L: int,
                  rule: QuadratureRule | None = None,
                  table: WignerPi2Table | None = None,
                  precision: str = "auto") -> float:
    """Mean squared reconstruction error of the standard FB density from its
    closed-form coefficients up to degree L, averaged over L^2 points.

    Points are the L x L equiangular grid by default; when a quadrature rule
    is supplied its first L^2 nodes are used instead (weights ignored).
    """
    policy = fb5.TruncationPolicy.for_params(kappa, beta)
    if table is None:
        table = sht.wigner_pi2_table(max(L, policy.N))
    coeffs = fb5.standard_fb_coeffs(kappa, beta, L, table, policy, precision)
    if rule is None:
        thetas, phis = equiangular_points(L)
        rec = sht.synthesize_grid(coeffs, thetas, phis)
        truth = fb5.standard_fb_pdf_grid(kappa, beta, thetas, phis)
        return float(np.mean(np.abs(truth - rec) ** 2))
    need = L * L
    if rule.n_nodes < need:
        raise DomainError(f"rule has {rule.n_nodes} nodes, spatial error needs {need}")
    n_phi = len(rule.phis)
    rows = (need + n_phi - 1) // n_phi
    thetas = rule.thetas[:rows]
    rec = sht.synthesize_grid(coeffs, thetas, rule.phis).ravel()[:need]
    truth = fb5.standard_fb_pdf_grid(kappa, beta, thetas, rule.phis).ravel()[:need]
    return float(np.mean(np.abs(truth - rec) ** 2))
