import io
import math

import numpy as np
import pytest

from fbsphere import fb5, oracle, sfc, sht
from fbsphere.errors import ConstraintError, DomainError
from fbsphere.sfc import (
    ArrayGeometry,
    SfcCurve,
    SfcRequest,
    curve_values,
    ell_truncation,
    nearest_neighbor_pair,
    rda_positions,
    sfc_closed_form,
    sfc_curve,
    steering_phase,
    uca_positions,
)
from fbsphere.specfun import spherical_bessel_j
from fbsphere.sht import Direction

RNG = np.random.default_rng(31)
GOLDEN = (1 + math.sqrt(5)) / 2


def uniform_model():
    return fb5.MixtureModel.single(fb5.FB5Params.standard(0.0, 0.0))


def concentrated_model():
    return fb5.MixtureModel.single(fb5.FB5Params.standard(10.0, 4.0))


class TestGeometries:
    def test_uca_last_element_on_x_axis(self):
        g = uca_positions(4, 1.0)
        assert np.abs(g.element(4) - np.array([1.0, 0.0, 0.0])).max() < 1e-15

    def test_uca_chord(self):
        g = uca_positions(16, 2.5)
        d = np.linalg.norm(g.element(2) - g.element(3))
        assert d == pytest.approx(2 * 2.5 * math.sin(math.pi / 16), rel=1e-14)

    def test_uca_radii(self):
        g = uca_positions(9, 3.3)
        assert np.abs(np.linalg.norm(g.positions, axis=1) - 3.3).max() < 1e-12

    def test_rda_vertex_count_and_radius(self):
        g = rda_positions(2.0)
        assert g.n_elements == 20
        assert np.abs(np.linalg.norm(g.positions, axis=1) - 2.0).max() < 1e-12

    def test_rda_nearest_neighbor_distance(self):
        g = rda_positions(1.0)
        _, q = nearest_neighbor_pair(g, 1)
        d = np.linalg.norm(g.element(1) - g.element(q))
        assert d == pytest.approx((math.sqrt(5) - 1) / math.sqrt(3), rel=1e-12)

    def test_rda_every_vertex_has_three_neighbors(self):
        g = rda_positions(1.0)
        edge = (math.sqrt(5) - 1) / math.sqrt(3)
        for p in range(1, 21):
            d = np.linalg.norm(g.positions - g.element(p), axis=1)
            assert np.sum(np.abs(d - edge) < 1e-9) == 3

    def test_geometry_validation(self):
        with pytest.raises(ConstraintError):
            ArrayGeometry(np.zeros((0, 3)))
        with pytest.raises(ConstraintError):
            ArrayGeometry(np.array([[np.inf, 0, 0]]))
        with pytest.raises(DomainError):
            uca_positions(4, 1.0).element(5)


class TestSteeringPhase:
    def test_origin(self):
        assert steering_phase(np.zeros(3), Direction(0.3, 0.4), 1.0) == 1.0 + 0j

    def test_half_wavelength(self):
        v = steering_phase(np.array([0.5, 0.0, 0.0]), Direction(math.pi / 2, 0.0), 1.0)
        assert v == pytest.approx(-1.0 + 0j, abs=1e-12)

    def test_unit_modulus(self):
        for _ in range(30):
            z = RNG.normal(size=3)
            d = Direction(RNG.uniform(0, math.pi), RNG.uniform(0, 2 * math.pi))
            assert abs(abs(steering_phase(z, d, 0.7)) - 1.0) < 1e-15


class TestClosedForm:
    def test_zero_separation_exact_one(self):
        g = uca_positions(8, 1.0)
        assert sfc_closed_form(SfcRequest(uniform_model(), 3, 3, 1.0), g) == 1.0 + 0j

    def test_uniform_equals_j0(self):
        model = uniform_model()
        for r in (0.1, 0.45, 1.2, 2.0):
            g = uca_positions(16, r)
            rho = sfc_closed_form(SfcRequest(model, 2, 3, 1.0), g)
            d = np.linalg.norm(g.element(2) - g.element(3))
            assert rho == pytest.approx(spherical_bessel_j(0, 2 * math.pi * d), abs=1e-10)

    def test_hermitian_symmetry(self):
        model = concentrated_model()
        g = rda_positions(0.9)
        a = sfc_closed_form(SfcRequest(model, 2, 7, 1.0), g)
        b = sfc_closed_form(SfcRequest(model, 7, 2, 1.0), g)
        assert a == pytest.approx(np.conj(b), abs=1e-12)

    def test_translation_invariance(self):
        model = concentrated_model()
        g = uca_positions(16, 1.1)
        shifted = ArrayGeometry(g.positions + np.array([3.0, -4.0, 5.0]))
        a = sfc_closed_form(SfcRequest(model, 2, 5, 1.0), g)
        b = sfc_closed_form(SfcRequest(model, 2, 5, 1.0), shifted)
        assert a == pytest.approx(b, abs=1e-12)

    def test_magnitude_bound(self):
        model = concentrated_model()
        for r in (0.05, 0.3, 0.9, 1.7):
            for pair in ((1, 2), (1, 9), (4, 16)):
                g = rda_positions(r) if pair[1] <= 20 else uca_positions(16, r)
                rho = sfc_closed_form(SfcRequest(model, pair[0], pair[1], 1.0), g)
                assert abs(rho) <= 1.0 + 1e-9

    @pytest.mark.parametrize("family", ["uca", "rda"])
    def test_against_numeric(self, family):
        model = concentrated_model()
        rule = oracle.quadrature_nodes(60)
        for r in (0.2, 0.8, 1.5):
            g = uca_positions(16, r) if family == "uca" else rda_positions(r)
            pair = (2, 3) if family == "uca" else (1, 9)
            closed = sfc_closed_form(SfcRequest(model, *pair, 1.0), g)
            numeric = oracle.sfc_numeric(model, g.element(pair[0]), g.element(pair[1]),
                                         1.0, rule)
            assert closed == pytest.approx(numeric, abs=1e-9)

    def test_out_of_range_pair(self):
        g = uca_positions(4, 1.0)
        with pytest.raises(DomainError):
            sfc_closed_form(SfcRequest(uniform_model(), 1, 5, 1.0), g)


class TestEllTruncation:
    def test_zero_phase_radius(self):
        assert ell_truncation(0.0, 1e-11) == 20

    def test_two_wavelengths(self):
        assert ell_truncation(4 * math.pi, 1e-11) >= 38

    def test_adaptive_tail_is_converged(self):
        model = concentrated_model()
        g = uca_positions(16, 1.9)
        req = SfcRequest(model, 2, 3, 1.0, tol=1e-11)
        base = sfc_closed_form(req, g)
        table = sht.wigner_pi2_table(max(60, fb5.truncation_n(10.0)))
        kd = 2 * math.pi * np.linalg.norm(g.element(2) - g.element(3))
        big = fb5.mixture_coeffs(model, 2 * ell_truncation(kd, 1e-11), table)
        more = sfc_closed_form(SfcRequest(model, 2, 3, 1.0, L_sum=big.L), g, coeffs=big)
        assert abs(base - more) < 1e-11


class TestCurve:
    def test_first_point_at_zero_radius(self):
        curve = sfc_curve(uniform_model(), "uca", (2, 3), 1.0, np.array([0.0, 0.5, 1.0]))
        assert curve.values[0] == 1.0 + 0j

    def test_uniform_curve_is_j0(self):
        grid = np.linspace(0.0, 2.0, 21)
        curve = sfc_curve(uniform_model(), "uca", (2, 3), 1.0, grid)
        chord = 2 * math.sin(math.pi / 16)
        for r, v in zip(curve.r_over_lambda, curve.values):
            expect = spherical_bessel_j(0, 2 * math.pi * chord * r)
            assert v == pytest.approx(expect, abs=1e-10)

    def test_uniform_peak_at_smallest_separation(self):
        grid = np.linspace(0.01, 2.0, 40)
        curve = sfc_curve(uniform_model(), "uca", (2, 3), 1.0, grid)
        mags = np.abs(curve.values)
        assert np.argmax(mags) == 0

    def test_rda_curve_bounded(self):
        grid = np.linspace(0.0, 1.5, 16)
        curve = sfc_curve(concentrated_model(), "rda", (1, 2), 1.0, grid)
        assert np.all(np.abs(curve.values) <= 1.0 + 1e-9)

    def test_custom_positions(self):
        pos = uca_positions(16, 1.0).positions
        grid = np.linspace(0.1, 1.0, 7)
        a = sfc_curve(concentrated_model(), "custom", (2, 3), 1.0, grid,
                      custom_positions=pos)
        b = sfc_curve(concentrated_model(), "uca", (2, 3), 1.0, grid)
        assert np.abs(a.values - b.values).max() < 1e-12

    def test_batch_matches_single_point_path(self):
        model = concentrated_model()
        g = uca_positions(16, 0.9)
        seps = np.array([g.element(2) - g.element(3),
                         g.element(2) - g.element(9),
                         [0.0, 0.0, 0.0]])
        table = sht.wigner_pi2_table(max(60, fb5.truncation_n(10.0)))
        coeffs = fb5.mixture_coeffs(model, 45, table)
        batch = curve_values(coeffs, seps, 2 * math.pi)
        assert batch[2] == 1.0 + 0j
        for i in (0, 1):
            single = sfc_closed_form(
                SfcRequest(model, 1, 2, 1.0),
                ArrayGeometry(np.array([seps[i], [0.0, 0.0, 0.0]])), coeffs=coeffs)
            assert batch[i] == pytest.approx(single, abs=5e-11)

    def test_grid_validation(self):
        with pytest.raises(DomainError):
            sfc_curve(uniform_model(), "uca", (1, 2), 1.0, np.array([1.0, 0.5]))
        with pytest.raises(DomainError):
            sfc_curve(uniform_model(), "nope", (1, 2), 1.0, np.array([0.5, 1.0]))

    def test_curve_csv(self):
        curve = SfcCurve(np.array([0.0, 1.0]), np.array([1.0 + 0j, 0.25 - 0.1j]))
        buf = io.StringIO()
        curve.write_csv(buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "r_over_lambda,re_rho,im_rho,abs_rho"
        assert len(lines) == 3
        assert float(lines[2].split(",")[3]) == pytest.approx(abs(0.25 - 0.1j), rel=1e-15)

    def test_curve_magnitude_validation(self):
        with pytest.raises(ConstraintError):
            SfcCurve(np.array([0.0]), np.array([1.5 + 0j]))
