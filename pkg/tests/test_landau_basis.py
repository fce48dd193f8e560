import math

import numpy as np
import pytest
from scipy import integrate, special

from landau_tails.landau_basis import (
    FieldConfig,
    LandauIndex,
    PlanePoint,
    basis_matrix,
    eigenfunction_norm,
    eigenfunction_values,
    eval_eigenfunction,
    magnetic_translate,
    matrix_elements,
    normalization_rule,
    translated_eigenfunction_values,
)
from landau_tails.quadrature import polar_rule


def phi_reference(b, q, k, x1, x2):
    """Independent evaluation through scipy's Laguerre polynomials (k >= q only)."""
    z = x1 + 1j * x2
    r2 = x1 * x1 + x2 * x2
    pref = math.sqrt(math.factorial(q) / (math.pi * math.factorial(k))) * (b / 2) ** ((k - q + 1) / 2)
    return pref * z ** (k - q) * special.eval_genlaguerre(q, k - q, b * r2 / 2) * np.exp(-b * r2 / 4)


class TestTypes:
    def test_field_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            FieldConfig(0.0)

    def test_level_energy_and_rho(self):
        cfg = FieldConfig(1.5)
        assert cfg.level_energy(3) == 9.0
        assert cfg.rho(2.0) == 3.0

    def test_index_rejects_negative(self):
        with pytest.raises(ValueError):
            LandauIndex(-1, 0)
        with pytest.raises(ValueError):
            LandauIndex(0, -2)


class TestEigenfunction:
    def test_origin_value(self):
        val = eval_eigenfunction(FieldConfig(2.0), LandauIndex(0, 0), PlanePoint(0.0, 0.0))
        assert val == pytest.approx(0.5641896, abs=1e-7)

    @pytest.mark.parametrize("q,k", [(0, 0), (0, 4), (1, 3), (2, 2), (3, 7)])
    def test_matches_reference(self, q, k):
        rng = np.random.default_rng(3)
        x1, x2 = rng.normal(scale=2.0, size=(2, 30))
        for b in (0.5, 1.0, 2.0):
            assert np.allclose(eigenfunction_values(b, q, k, x1, x2), phi_reference(b, q, k, x1, x2), rtol=1e-11, atol=1e-15)

    def test_k_below_q_regular_at_origin(self):
        # for k < q the z^{k-q} singularity cancels against the Laguerre sum
        assert eigenfunction_values(1.0, 2, 0, np.array([0.0]), np.array([0.0]))[0] == 0
        v = eigenfunction_values(1.0, 2, 0, np.array([1e-8]), np.array([0.0]))[0]
        assert np.isfinite(v) and abs(v) < 1e-7

    def test_modulus_radial_when_k_equals_q(self):
        th = np.linspace(0, 2 * np.pi, 9)
        vals = np.abs(eigenfunction_values(1.0, 2, 2, 1.3 * np.cos(th), 1.3 * np.sin(th)))
        assert np.ptp(vals) < 1e-14

    def test_finite_far_out(self):
        v = eigenfunction_values(1.0, 3, 50, np.array([1000.0, 0.0]), np.array([0.0, -999.0]))
        assert np.all(np.isfinite(v))

    @pytest.mark.parametrize("q,k", [(0, 0), (0, 3), (1, 2), (2, 5)])
    def test_normalization_adaptive_oracle(self, q, k):
        # radial reduction with adaptive quadrature on r <= 30
        f = lambda r: 2 * math.pi * r * abs(phi_reference(1.0, q, k, r, 0.0)) ** 2
        val, _ = integrate.quad(f, 0, 30, limit=200, epsabs=1e-13, epsrel=1e-12)
        assert val == pytest.approx(1.0, abs=1e-8)
        assert eigenfunction_norm(FieldConfig(1.0), LandauIndex(q, k)) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("q,k", [(2, 0), (3, 1), (5, 2)])
    def test_normalization_k_below_q(self, q, k):
        # no prefactor discrepancy for k < q
        assert eigenfunction_norm(FieldConfig(1.0), LandauIndex(q, k)) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
    def test_orthonormality(self, b):
        rule = polar_rule(math.sqrt(2 * 60 / b), 96)
        for q in range(3):
            phi = basis_matrix(b, q, range(9), rule.x1, rule.x2)
            gram = matrix_elements(phi, rule.w, np.ones_like(rule.w))
            assert np.abs(gram - np.eye(9)).max() <= 1e-6

    def test_distinct_levels_orthogonal(self):
        rule = normalization_rule(1.0, 2, 4)
        a = eigenfunction_values(1.0, 0, 2, rule.x1, rule.x2)
        c = eigenfunction_values(1.0, 1, 2, rule.x1, rule.x2)
        assert abs(rule.integrate(a * c.conj())) < 1e-10


class TestMagneticTranslation:
    cfg = FieldConfig(1.0)

    def test_identity(self):
        f = lambda x: complex(x.x1, x.x2 * x.x2)
        x = PlanePoint(0.4, -1.1)
        assert magnetic_translate(self.cfg, PlanePoint(0.0, 0.0), f, x) == f(x)

    def test_unimodular(self):
        f = lambda x: eval_eigenfunction(self.cfg, LandauIndex(1, 3), x)
        alpha, x = PlanePoint(1.3, -0.7), PlanePoint(0.2, 0.9)
        assert abs(magnetic_translate(self.cfg, alpha, f, x)) == pytest.approx(abs(f(x + alpha)), rel=1e-14)

    def test_inverse_composition(self):
        idx = LandauIndex(0, 2)
        alpha = PlanePoint(0.8, -1.9)
        base = lambda x: eval_eigenfunction(self.cfg, idx, x)
        there = lambda x: magnetic_translate(self.cfg, alpha, base, x)
        rng = np.random.default_rng(11)
        for x1, x2 in rng.normal(size=(20, 2)):
            x = PlanePoint(x1, x2)
            assert magnetic_translate(self.cfg, -alpha, there, x) == pytest.approx(base(x), abs=1e-12)

    @pytest.mark.parametrize("q", [0, 1, 2])
    def test_translate_stays_in_level(self, q):
        # U_a phi_{q,k} lies in the q-th Landau level: its overlaps with level q exhaust the norm
        rule = polar_rule(math.sqrt(2 * 120), 240)
        alpha = (0.9, -0.6)
        f = translated_eigenfunction_values(1.0, q, 3, alpha, rule.x1, rule.x2)
        phi = basis_matrix(1.0, q, range(60), rule.x1, rule.x2)
        overlaps = (phi.conj() * rule.w) @ f
        assert np.sum(np.abs(overlaps) ** 2) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("gamma", [(1.0, 0.0), (-1.5, 1.2), (0.0, 2.0)])
    def test_shifted_disk_matrix_identity(self, gamma):
        # <1_{D(gamma, eps)} phi_k, phi_j> = <1_{D(0, eps)} U_gamma phi_k, U_gamma phi_j>
        eps, q, K = 0.8, 1, 6
        r_out = math.sqrt(2 * 60)
        rule_g = polar_rule(r_out, 128, center=gamma, radial_breaks=[eps])
        inside = (np.hypot(rule_g.x1 - gamma[0], rule_g.x2 - gamma[1]) <= eps).astype(float)
        direct = matrix_elements(basis_matrix(1.0, q, range(K), rule_g.x1, rule_g.x2), rule_g.w, inside)
        rule_0 = polar_rule(r_out, 128, radial_breaks=[eps])
        inside0 = (np.hypot(rule_0.x1, rule_0.x2) <= eps).astype(float)
        moved = np.stack([translated_eigenfunction_values(1.0, q, k, gamma, rule_0.x1, rule_0.x2) for k in range(K)])
        assert np.abs(direct - matrix_elements(moved, rule_0.w, inside0)).max() <= 1e-6
