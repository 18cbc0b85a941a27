import json
import math

import numpy as np
import pytest

from fbsphere import fb5, oracle, sht
from fbsphere.errors import ConstraintError, DomainError, InputError
from fbsphere.fb5 import (
    FB5Params,
    MixtureModel,
    TruncationPolicy,
    euler_from_rotation,
    fb5_coeffs,
    fb5_pdf,
    fb5_pdf_xyz,
    frame_to_rotation,
    mixture_coeffs,
    mixture_from_json,
    normalization_scaled,
    standard_fb_coeffs,
    standard_fb_pdf,
    standard_fb_pdf_grid,
    truncation_n,
    truncation_t,
)
from fbsphere.sht import Direction, EulerAngles, rotation_matrix, wigner_pi2_table

RNG = np.random.default_rng(2024)


@pytest.fixture(scope="module")
def table():
    return wigner_pi2_table(115)


def random_frame(kappa=10.0, beta=4.0, rng=RNG):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    return FB5Params(kappa, beta, q[:, 2], q[:, 0], q[:, 1])


class TestParams:
    def test_constraints(self):
        with pytest.raises(ConstraintError):
            FB5Params.standard(10.0, 5.1)  # beta > kappa/2
        with pytest.raises(ConstraintError):
            FB5Params.standard(-1.0, 0.0)
        with pytest.raises(ConstraintError):
            FB5Params.standard(201.0, 0.0)
        with pytest.raises(ConstraintError):
            FB5Params(10.0, 1.0, [0, 0, 1], [1, 0, 0], [1, 0, 0])  # not orthogonal

    def test_axis_matrix_eigenvalues(self):
        p = random_frame()
        w = np.linalg.eigvalsh(p.axis_matrix)
        assert np.allclose(sorted(w), [-1.0, 0.0, 1.0], atol=1e-12)

    def test_mixture_weights(self):
        p = FB5Params.standard(5.0, 1.0)
        with pytest.raises(ConstraintError):
            MixtureModel(((0.5, p), (0.6, p)))
        with pytest.raises(ConstraintError):
            MixtureModel(((-0.5, p), (1.5, p)))
        MixtureModel(((0.5, p), (0.5, p)))  # fine

    def test_policy_floor(self):
        with pytest.raises(ConstraintError):
            TruncationPolicy(20, 12)
        assert TruncationPolicy.for_params(0.0, 0.0) == TruncationPolicy(24, 12)


class TestNormalization:
    def test_uniform_limit(self):
        assert normalization_scaled(0.0, 0.0) == pytest.approx(4.0 * math.pi, rel=1e-12)

    def test_fisher_closed_form(self):
        # e^-k 4 pi sinh(k)/k = 2 pi (1 - e^-2k)/k
        expect = 2.0 * math.pi * (-math.expm1(-20.0)) / 10.0
        assert normalization_scaled(10.0, 0.0) == pytest.approx(expect, rel=1e-12)

    def test_against_quadrature(self):
        # frozen 2D Gauss-Legendre x uniform-phi quadrature of the
        # unnormalized density (converged to ~1e-13)
        assert normalization_scaled(25.0, 10.0) == pytest.approx(
            0.36059473453939339, rel=1e-10)
        assert normalization_scaled(100.0, 49.0) == pytest.approx(
            0.15769799515014055, rel=1e-10)

    def test_constraint(self):
        with pytest.raises(ConstraintError):
            normalization_scaled(10.0, 6.0)


class TestDensities:
    def test_uniform(self):
        for d in (Direction(0.3, 0.4), Direction(2.2, 5.1)):
            assert standard_fb_pdf(d, 0.0, 0.0) == pytest.approx(
                1.0 / (4.0 * math.pi), rel=1e-13)

    def test_azimuthal_period(self):
        for _ in range(20):
            th, ph = RNG.uniform(0, math.pi), RNG.uniform(0, math.pi)
            a = standard_fb_pdf(Direction(th, ph), 25.0, 10.0)
            b = standard_fb_pdf(Direction(th, ph + math.pi), 25.0, 10.0)
            assert a == pytest.approx(b, rel=1e-13)

    @pytest.mark.parametrize("kappa,beta", [(25.0, 10.0), (100.0, 49.0)])
    def test_unit_integral(self, kappa, beta):
        rule = oracle.quadrature_nodes(200)
        grid = standard_fb_pdf_grid(kappa, beta, rule.thetas, rule.phis)
        total = float(np.sum(grid.ravel() * rule.weights_flat))
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_fb5_identity_frame(self):
        p = FB5Params.standard(25.0, 10.0)
        for _ in range(20):
            d = Direction(RNG.uniform(0, math.pi), RNG.uniform(0, 2 * math.pi))
            assert fb5_pdf(d, p) == pytest.approx(standard_fb_pdf(d, 25.0, 10.0), rel=1e-13)

    def test_direct_equals_rotated_form(self):
        for _ in range(5):
            p = random_frame(kappa=25.0, beta=10.0)
            r = frame_to_rotation(p)
            n = 200
            thetas = np.arccos(RNG.uniform(-1, 1, n))
            phis = RNG.uniform(0, 2 * math.pi, n)
            st = np.sin(thetas)
            xyz = np.column_stack([st * np.cos(phis), st * np.sin(phis), np.cos(thetas)])
            direct = fb5_pdf_xyz(p, xyz)
            back = (r.m.T @ xyz.T).T  # standard-frame coordinates
            rotated = np.array([
                standard_fb_pdf(Direction.from_vector(v), 25.0, 10.0) for v in back
            ])
            assert np.abs(direct / rotated - 1.0).max() < 1e-12

    def test_mode_at_mean(self):
        p = FB5Params(100.0, 49.0, [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0])
        thetas = np.linspace(0.0, math.pi, 181)
        phis = np.linspace(0.0, 2 * math.pi, 360, endpoint=False)
        tg, pg = np.meshgrid(thetas, phis, indexing="ij")
        st = np.sin(tg)
        xyz = np.column_stack([(st * np.cos(pg)).ravel(), (st * np.sin(pg)).ravel(),
                               np.cos(tg).ravel()])
        vals = fb5_pdf_xyz(p, xyz)
        best = xyz[np.argmax(vals)]
        assert np.linalg.norm(best - p.mu) < 0.02


class TestFrames:
    def test_identity_frame(self):
        p = FB5Params.standard(10.0, 2.0)
        assert np.abs(frame_to_rotation(p).m - np.eye(3)).max() < 1e-15

    def test_left_handed_frame_flips_minor_axis(self):
        # columns (major, minor, mean) with det -1: the minor axis sign flips
        p = FB5Params(100.0, 49.0, [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0])
        r = frame_to_rotation(p)
        expect = np.column_stack([[1, 0, 0], [0, 0, -1], [0, 1, 0]])
        assert np.abs(r.m - expect).max() < 1e-15
        assert np.linalg.det(r.m) == pytest.approx(1.0, abs=1e-12)

    def test_right_handed_unchanged(self):
        for _ in range(10):
            p = random_frame()
            r = frame_to_rotation(p)
            raw = np.column_stack([p.eta1, p.eta2, p.mu])
            if np.linalg.det(raw) > 0:
                assert np.array_equal(r.m, raw)

    def test_flip_preserves_density(self):
        p = FB5Params(100.0, 49.0, [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0])
        flipped = FB5Params(100.0, 49.0, p.mu, p.eta1, -p.eta2)
        xyz = RNG.normal(size=(50, 3))
        xyz /= np.linalg.norm(xyz, axis=1)[:, None]
        assert np.allclose(fb5_pdf_xyz(p, xyz), fb5_pdf_xyz(flipped, xyz), rtol=1e-14)


class TestEuler:
    def test_identity(self):
        a = euler_from_rotation(sht.RotationMatrix(np.eye(3)))
        assert (a.varphi, a.vartheta, a.omega) == (0.0, 0.0, 0.0)

    def test_axis_permutation_frame(self):
        p = FB5Params(10.0, 2.0, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0])
        a = euler_from_rotation(frame_to_rotation(p))
        assert a.varphi == pytest.approx(0.0, abs=1e-15)
        assert a.vartheta == pytest.approx(math.pi / 2, rel=1e-15)
        assert a.omega == pytest.approx(math.pi / 2, rel=1e-15)

    def test_det_fixed_frame_angles(self):
        # after the minor-axis sign fix this frame decomposes with
        # omega = 3 pi/2 (the same density as omega = pi/2: the major axis
        # sign is immaterial); the rotation itself must round-trip exactly
        p = FB5Params(100.0, 49.0, [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0])
        r = frame_to_rotation(p)
        a = euler_from_rotation(r)
        assert a.varphi == pytest.approx(math.pi / 2, rel=1e-15)
        assert a.vartheta == pytest.approx(math.pi / 2, rel=1e-15)
        assert a.omega == pytest.approx(3 * math.pi / 2, rel=1e-15)
        assert np.abs(rotation_matrix(a).m - r.m).max() < 1e-15

    def test_quarter_turn_triple(self):
        a = euler_from_rotation(rotation_matrix(EulerAngles(
            math.pi / 2, math.pi / 2, math.pi / 2)))
        assert a.varphi == pytest.approx(math.pi / 2, rel=1e-12)
        assert a.vartheta == pytest.approx(math.pi / 2, rel=1e-12)
        assert a.omega == pytest.approx(math.pi / 2, rel=1e-12)

    def test_gimbal_north(self):
        a = euler_from_rotation(rotation_matrix(EulerAngles(1.0, 0.0, 0.5)))
        assert a.vartheta == 0.0
        assert a.omega == 0.0
        assert a.varphi == pytest.approx(1.5, rel=1e-12)

    def test_gimbal_south(self):
        src = EulerAngles(1.0, math.pi, 0.0)
        a = euler_from_rotation(rotation_matrix(src))
        assert np.abs(rotation_matrix(a).m - rotation_matrix(src).m).max() < 1e-12

    def test_roundtrip_random(self):
        worst = 0.0
        for _ in range(200):
            src = EulerAngles(RNG.uniform(0, 2 * math.pi),
                              math.acos(RNG.uniform(-1, 1)),
                              RNG.uniform(0, 2 * math.pi))
            if not 0.01 < src.vartheta < math.pi - 0.01:
                continue
            got = euler_from_rotation(rotation_matrix(src))
            for a, b, period in ((src.varphi, got.varphi, 2 * math.pi),
                                 (src.vartheta, got.vartheta, None),
                                 (src.omega, got.omega, 2 * math.pi)):
                d = abs(a - b)
                if period:
                    d = min(d, period - d)
                worst = max(worst, d)
        assert worst < 1e-10


class TestTruncationLevels:
    def test_examples(self):
        assert truncation_n(0.0) == 24
        assert truncation_n(100.0) == 174
        assert truncation_t(0.0) == 12
        assert truncation_t(49.0) == 83


def _numeric_coeffs(kappa, beta, L, degree):
    rule = oracle.quadrature_nodes(degree)
    return oracle.numeric_sht(
        lambda th, ph: standard_fb_pdf_grid(kappa, beta, th, ph), L, rule,
        real_origin=True)


class TestStandardCoeffs:
    def test_uniform_case(self, table):
        c = standard_fb_coeffs(0.0, 0.0, 8, table)
        assert c.entry(0, 0) == pytest.approx(1.0 / (2.0 * math.sqrt(math.pi)), rel=1e-13)
        rest = np.abs(c.values[1:])
        assert rest.max() < 1e-14

    def test_constant_entry_all_params(self, table):
        for kappa, beta in ((5.0, 2.0), (25.0, 10.0), (60.0, 4.0)):
            c = standard_fb_coeffs(kappa, beta, 4, table)
            assert c.entry(0, 0) == pytest.approx(
                1.0 / (2.0 * math.sqrt(math.pi)), rel=1e-12)

    def test_odd_m_exact_zero(self, table):
        c = standard_fb_coeffs(25.0, 10.0, 15, table)
        for ell in range(16):
            for m in range(-ell, ell + 1):
                if m % 2 != 0:
                    assert c.entry(ell, m) == 0j

    def test_imaginary_residue(self, table):
        c = standard_fb_coeffs(25.0, 10.0, 30, table)
        assert np.abs(c.values.imag).max() <= 1e-12

    def test_matches_oracle_double_path(self, table):
        c = standard_fb_coeffs(10.0, 4.0, 20, table, precision="double")
        n = _numeric_coeffs(10.0, 4.0, 20, 70)
        assert np.abs(c.values - n.values).max() < 1e-11

    def test_paths_agree(self, table):
        a = standard_fb_coeffs(10.0, 4.0, 16, table, precision="double")
        b = standard_fb_coeffs(10.0, 4.0, 16, table, precision="extended")
        assert np.abs(a.values - b.values).max() < 1e-12

    def test_matches_oracle_extended_path(self, table):
        c = standard_fb_coeffs(25.0, 10.0, 24, table)
        n = _numeric_coeffs(25.0, 10.0, 24, 90)
        assert np.abs(c.values - n.values).max() < 1e-11

    def test_truncation_margin_is_noise(self, table):
        policy = TruncationPolicy.for_params(10.0, 4.0)
        wide = TruncationPolicy(policy.N + 30, policy.T + 30)
        a = standard_fb_coeffs(10.0, 4.0, 12, table, policy)
        b = standard_fb_coeffs(10.0, 4.0, 12, table, wide)
        assert np.abs(a.values - b.values).max() < 1e-15

    def test_parseval(self, table):
        # sum |c|^2 equals the quadrature value of the density's squared
        # norm once L covers the spectrum
        kappa, beta, L = 25.0, 10.0, 80
        c = standard_fb_coeffs(kappa, beta, L, table)
        rule = oracle.quadrature_nodes(130)
        grid = standard_fb_pdf_grid(kappa, beta, rule.thetas, rule.phis)
        norm2 = float(np.sum(grid.ravel() ** 2 * rule.weights_flat))
        assert float(np.sum(np.abs(c.values) ** 2)) == pytest.approx(norm2, rel=1e-8)

    def test_table_too_small(self):
        small = wigner_pi2_table(10)
        with pytest.raises(DomainError):
            standard_fb_coeffs(25.0, 10.0, 8, small)  # needs N = 62


class TestFb5AndMixtures:
    def test_identity_frame_matches_standard(self, table):
        p = FB5Params.standard(10.0, 4.0)
        a = fb5_coeffs(p, 20, table)
        b = standard_fb_coeffs(10.0, 4.0, 20, table)
        assert np.abs(a.values - b.values).max() < 1e-13

    def test_synthesis_matches_density(self, table):
        p = random_frame(kappa=10.0, beta=4.0)
        c = fb5_coeffs(p, 40, table)
        thetas = np.arccos(RNG.uniform(-1, 1, 100))
        phis = RNG.uniform(0, 2 * math.pi, 100)
        synth = sht.synthesize_points(c, thetas, phis)
        st = np.sin(thetas)
        xyz = np.column_stack([st * np.cos(phis), st * np.sin(phis), np.cos(thetas)])
        assert np.abs(synth - fb5_pdf_xyz(p, xyz)).max() < 1e-10

    def test_degree_power_preserved(self, table):
        p = random_frame(kappa=10.0, beta=4.0)
        a = fb5_coeffs(p, 24, table)
        b = standard_fb_coeffs(10.0, 4.0, 24, table)
        for ell in range(25):
            pb = b.degree_power(ell)
            if pb > 1e-280:
                assert a.degree_power(ell) == pytest.approx(pb, rel=1e-12)

    def test_single_component_mixture(self, table):
        p = random_frame(kappa=10.0, beta=4.0)
        a = mixture_coeffs(MixtureModel.single(p), 16, table)
        b = fb5_coeffs(p, 16, table)
        assert np.abs(a.values - b.values).max() < 1e-15

    def test_two_component_against_oracle(self, table):
        p1 = FB5Params.standard(10.0, 4.0)
        p2 = random_frame(kappa=20.0, beta=5.0)
        model = MixtureModel(((0.3, p1), (0.7, p2)))
        c = mixture_coeffs(model, 24, table)
        assert c.entry(0, 0) == pytest.approx(1.0 / (2.0 * math.sqrt(math.pi)), rel=1e-12)
        rule = oracle.quadrature_nodes(100)

        def density(th, ph):
            tg, pg = np.meshgrid(th, ph, indexing="ij")
            st = np.sin(tg)
            xyz = np.column_stack([(st * np.cos(pg)).ravel(), (st * np.sin(pg)).ravel(),
                                   np.cos(tg).ravel()])
            return fb5.mixture_pdf_xyz(model, xyz).reshape(tg.shape)

        n = oracle.numeric_sht(density, 24, rule, real_origin=True)
        assert np.abs(c.values - n.values).max() < 1e-9


class TestMixtureJson:
    def doc(self, **overrides):
        base = {
            "components": [{
                "weight": 1.0, "kappa": 10.0, "beta": 4.0,
                "mu": [0.0, 0.0, 1.0], "eta1": [1.0, 0.0, 0.0], "eta2": [0.0, 1.0, 0.0],
            }]
        }
        base["components"][0].update(overrides)
        return json.dumps(base)

    def test_valid(self):
        m = mixture_from_json(self.doc())
        assert len(m.components) == 1

    def test_gram_schmidt_correction(self):
        m = mixture_from_json(self.doc(mu=[1e-8, 2e-8, 1.0 + 1e-8]))
        w, p = m.components[0]
        assert abs(np.linalg.norm(p.mu) - 1.0) < 1e-14
        assert abs(np.dot(p.mu, p.eta1)) < 1e-14

    def test_far_from_orthonormal_rejected(self):
        with pytest.raises(ConstraintError):
            mixture_from_json(self.doc(eta1=[1.0, 0.1, 0.0]))

    def test_malformed(self):
        with pytest.raises(InputError):
            mixture_from_json("{not json")
        with pytest.raises(InputError):
            mixture_from_json(json.dumps({"parts": []}))
        with pytest.raises(InputError):
            mixture_from_json(json.dumps({"components": [{"weight": 1.0}]}))
