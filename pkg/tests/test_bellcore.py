import json
from fractions import Fraction

import numpy as np
import pytest

from conftest import random_density, random_settings
from tribell import bellcore, qstate
from tribell.bellcore import (
    BellInequality,
    BlochVector,
    CorrelatorTerm,
    MeasurementSettings,
    builtin,
    correlator,
    evaluate,
    inequality_from_json,
    inequality_to_json,
    lhv_bound,
    observable,
)
from tribell.errors import DomainError

PI = np.pi
R2 = np.sqrt(2)

X = BlochVector(1.0, 0.0, 0.0)
Y = BlochVector(0.0, 1.0, 0.0)
Z = BlochVector(0.0, 0.0, 1.0)

# equatorial CHSH-style phases reaching the GHZ Svetlichny maximum
MERMIN_SETTINGS = MeasurementSettings(
    a0=BlochVector(R2 / 2, R2 / 2, 0.0), a1=BlochVector(-R2 / 2, R2 / 2, 0.0),
    b0=Y, b1=X, c0=X, c1=Y,
)


def zzz_settings():
    return MeasurementSettings(a0=Z, a1=Z, b0=Z, b1=Z, c0=Z, c1=Z)


class TestBlochVector:
    def test_non_unit_rejected(self):
        with pytest.raises(DomainError):
            BlochVector(1.0, 1.0, 0.0)

    def test_spherical_roundtrip(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            az, pol = rng.uniform(0, PI), rng.uniform(0, 2 * PI)
            v = BlochVector.from_spherical(az, pol)
            az2, pol2 = v.spherical()
            v2 = BlochVector.from_spherical(az2, pol2)
            np.testing.assert_allclose(v.as_array(), v2.as_array(), atol=1e-10)

    def test_settings_spherical_sync(self):
        rng = np.random.default_rng(4)
        s = random_settings(rng)
        s2 = MeasurementSettings.from_spherical(s.spherical())
        np.testing.assert_allclose(s.as_array(), s2.as_array(), atol=1e-10)


class TestObservable:
    def test_sigma_z(self):
        np.testing.assert_allclose(observable(Z), np.diag([1.0, -1.0]), atol=0)

    def test_sigma_x(self):
        np.testing.assert_allclose(observable(X), np.array([[0, 1], [1, 0]]), atol=0)

    def test_xz_plane_combination(self):
        # c0 of the I96 construction at theta = pi/4: alpha = 45 degrees
        c = np.cos(PI / 4)
        v = BlochVector(-c, 0.0, c)
        want = c * np.diag([1.0, -1.0]) - c * np.array([[0, 1], [1, 0]])
        np.testing.assert_allclose(observable(v), want, atol=1e-15)

    def test_eigenvalues_pm1(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            v = random_settings(rng).a0
            np.testing.assert_allclose(np.linalg.eigvalsh(observable(v)), [-1, 1], atol=1e-12)


class TestCorrelator:
    def test_ghz_single_party_zero(self):
        rho = qstate.to_density(qstate.make_gghz(PI / 4))
        assert correlator(rho, zzz_settings(), CorrelatorTerm(None, None, 0)) == pytest.approx(
            0.0, abs=1e-12
        )

    @pytest.mark.parametrize("theta", [0.0, 0.2, PI / 4])
    def test_gghz_zz_marginal_is_one(self, theta):
        rho = qstate.to_density(qstate.make_gghz(theta))
        assert correlator(rho, zzz_settings(), CorrelatorTerm(0, 0, None)) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_ghz_xxx(self):
        rho = qstate.to_density(qstate.make_gghz(PI / 4))
        s = MeasurementSettings(a0=X, a1=X, b0=X, b1=X, c0=X, c1=X)
        assert correlator(rho, s, CorrelatorTerm(0, 0, 0)) == pytest.approx(1.0, abs=1e-12)

    def test_bounded(self, builtins):
        rng = np.random.default_rng(11)
        for _ in range(30):
            rho = random_density(rng)
            s = random_settings(rng)
            for ineq in builtins:
                for term, _ in ineq.terms:
                    assert abs(correlator(rho, s, term)) <= 1 + 1e-10


class TestBuiltins:
    def test_term_counts_and_normalizations(self):
        expect = {"I185": (8, Fraction(1, 4)), "I96": (11, Fraction(1, 6)),
                  "I99": (5, Fraction(1, 3)), "I10": (19, Fraction(1, 6))}
        for name, (n_terms, norm) in expect.items():
            ineq = builtin(name)
            assert len(ineq.terms) == n_terms
            assert ineq.normalization == norm

    def test_i185_all_three_party_unit_coefficients(self):
        for term, coeff in builtin("I185").terms:
            assert None not in (term.a, term.b, term.c)
            assert abs(coeff) == 1

    def test_i99_exact_terms(self):
        want = {
            CorrelatorTerm(1, 1, None): Fraction(1),
            CorrelatorTerm(None, 1, 0): Fraction(1),
            CorrelatorTerm(1, None, 1): Fraction(1),
            CorrelatorTerm(0, 0, 0): Fraction(1),
            CorrelatorTerm(0, 0, 1): Fraction(-1),
        }
        assert builtin("I99").coefficients() == want

    def test_i10_marked_coefficients(self):
        coeffs = builtin("I10").coefficients()
        assert coeffs[CorrelatorTerm(1, None, None)] == Fraction(-2)
        assert coeffs[CorrelatorTerm(1, 0, 0)] == Fraction(2)
        assert coeffs[CorrelatorTerm(1, 1, 1)] == Fraction(2)

    def test_unknown_name(self):
        with pytest.raises(LookupError):
            builtin("I2")

    def test_lhv_bounds_are_one(self, builtins):
        for ineq in builtins:
            assert lhv_bound(ineq) == pytest.approx(1.0, abs=1e-12)


class TestEvaluate:
    def test_svetlichny_ghz_sqrt2(self):
        rho = qstate.to_density(qstate.make_gghz(PI / 4))
        assert evaluate(rho, builtin("I185"), MERMIN_SETTINGS) == pytest.approx(R2, abs=1e-12)

    def test_traceless_on_maximally_mixed(self, builtins):
        rho = qstate.DensityMatrix3Q(np.eye(8) / 8)
        rng = np.random.default_rng(13)
        for ineq in builtins:
            for _ in range(5):
                assert evaluate(rho, ineq, random_settings(rng)) == pytest.approx(0.0, abs=1e-12)

    def test_i96_optimal_settings_value(self):
        from tribell.closedform import i96_optimal_settings

        rho = qstate.to_density(qstate.make_gghz(PI / 4))
        val = evaluate(rho, builtin("I96"), i96_optimal_settings(PI / 4))
        assert val == pytest.approx((1 + 2 * R2) / 3, abs=1e-12)
        assert val == pytest.approx(1.27614, abs=5e-6)

    def test_linearity_in_state(self, builtins):
        rng = np.random.default_rng(17)
        r1, r2 = random_density(rng), random_density(rng)
        s = random_settings(rng)
        for ineq in builtins:
            for p in (0.0, 0.3, 0.8, 1.0):
                mix = qstate.DensityMatrix3Q(p * r1.entries + (1 - p) * r2.entries)
                want = p * evaluate(r1, ineq, s) + (1 - p) * evaluate(r2, ineq, s)
                assert evaluate(mix, ineq, s) == pytest.approx(want, abs=1e-12)

    def test_depolarization_scales_value(self, builtins):
        rng = np.random.default_rng(19)
        psi = qstate.make_ms(0.9)
        pure = qstate.to_density(psi)
        for ineq in builtins:
            s = random_settings(rng)
            base = evaluate(pure, ineq, s)
            for p in (0.0, 0.25, 0.7, 1.0):
                got = evaluate(qstate.depolarize(psi, p), ineq, s)
                assert got == pytest.approx(p * base, abs=1e-12)

    def test_i96_ab_swap_symmetry(self):
        rng = np.random.default_rng(23)
        ineq = builtin("I96")
        for theta in (0.1, 0.5, PI / 4):
            rho = qstate.to_density(qstate.make_gghz(theta))
            s = random_settings(rng)
            swapped = MeasurementSettings(a0=s.b0, a1=s.b1, b0=s.a0, b1=s.a1, c0=s.c0, c1=s.c1)
            assert evaluate(rho, ineq, s) == pytest.approx(
                evaluate(rho, ineq, swapped), abs=1e-12
            )


class TestSchema:
    def test_roundtrip(self, builtins):
        for ineq in builtins:
            back = inequality_from_json(inequality_to_json(ineq))
            assert back == ineq

    def test_malformed_document(self):
        with pytest.raises(DomainError):
            inequality_from_json(json.dumps({"name": "x", "terms": []}))

    def test_bad_bound_rejected(self):
        doc = json.loads(inequality_to_json(builtin("I99")))
        doc["terms"][0]["coeff"] = [3, 1]  # breaks the normalized LHV bound
        with pytest.raises(DomainError):
            inequality_from_json(json.dumps(doc))

    def test_empty_terms_rejected(self):
        with pytest.raises(DomainError):
            BellInequality(name="empty", terms=(), normalization=Fraction(1))

    def test_term_requires_a_party(self):
        with pytest.raises(DomainError):
            CorrelatorTerm(None, None, None)

    def test_load_inequality_file(self, tmp_path, builtins):
        path = tmp_path / "ineq.json"
        path.write_text(inequality_to_json(builtins[0]))
        assert bellcore.load_inequality(path) == builtins[0]
