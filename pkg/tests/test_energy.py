import math

import numpy as np
import pytest

from maxslope.energy import (
    EnergySpec,
    certify_well_posedness,
    custom_smooth,
    eval_many,
    evaluate,
    exact_slope,
    gamma_limit,
    gradient,
    nearest_stable_critical_point,
    quadratic,
    wiggly,
)
from maxslope.errors import (
    CapabilityAbsentError,
    CertificateFailure,
    ConfigError,
    EvaluationError,
)

from conftest import finite_difference_gradient, pt


class TestEval:
    def test_quadratic_minimum(self, quad_1d):
        assert evaluate(quad_1d, 1.0, pt(0.0)) == 0.0

    def test_quadratic_value(self, quad_1d):
        # 0.5 * 1 * 2^2
        assert evaluate(quad_1d, 1.0, pt(2.0)) == 2.0

    def test_wiggly_at_origin(self, wiggly_1d):
        # 0.5 x^2 + eps cos(x/eps) at x = 0 gives eps
        assert math.isclose(evaluate(wiggly_1d, 0.1, pt(0.0)), 0.1)

    def test_perturbed_value(self, perturbed_1d):
        assert math.isclose(evaluate(perturbed_1d, 0.1, pt(1.0)), 0.6)

    def test_eps_must_be_positive(self, quad_1d):
        with pytest.raises(ValueError):
            evaluate(quad_1d, 0.0, pt(1.0))

    def test_quadratic_needs_positive_weights(self, line):
        with pytest.raises(ValueError):
            quadratic(line, [0.0], [0.0])

    def test_wiggly_needs_positive_amplitude(self, quad_1d):
        with pytest.raises(ValueError):
            wiggly(quad_1d, amplitude_scale=0.0)


class TestGradient:
    def test_quadratic(self, quad_1d):
        assert gradient(quad_1d, 1.0, pt(2.0)).coords == (2.0,)

    def test_wiggly_at_origin(self, wiggly_1d):
        # x - sin(x/eps) vanishes at 0
        assert gradient(wiggly_1d, 0.1, pt(0.0)).coords == (0.0,)

    def test_quadratic_2d_at_minimum(self, plane):
        spec = quadratic(plane, [4.0, 1.0], [1.0, 0.0])
        assert gradient(spec, 1.0, pt(1.0, 0.0)).coords == (0.0, 0.0)

    @pytest.mark.parametrize("case", ["quad2d", "wiggly", "custom"])
    def test_matches_finite_differences(self, case, plane, line):
        if case == "quad2d":
            spec, eps, dim = quadratic(plane, [4.0, 1.5], [0.5, -1.0]), 1.0, 2
        elif case == "wiggly":
            spec, eps, dim = wiggly(quadratic(line, [1.0], [0.0])), 0.5, 1
        else:
            spec, eps, dim = custom_smooth(line, "x^4 - x^2 + eps*sin(x)"), 0.3, 1
        rng = np.random.default_rng(7)
        X = rng.uniform(-2.0, 2.0, size=(100, dim))
        for x in X:
            g = gradient(spec, eps, pt(*x)).array
            fd = finite_difference_gradient(spec, eps, x)
            scale = max(1.0, float(np.linalg.norm(fd)))
            assert np.linalg.norm(g - fd) <= 1e-6 * scale


class TestGammaLimit:
    def test_quadratic_is_its_own_limit(self, quad_1d):
        assert gamma_limit(quad_1d) is quad_1d

    def test_wiggly_limit_is_base(self, quad_1d, wiggly_1d):
        limit = gamma_limit(wiggly_1d)
        assert limit == quad_1d
        # pointwise convergence cross-check
        for x in (-1.3, 0.0, 0.7, 2.0):
            gaps = [abs(evaluate(wiggly_1d, e, pt(x)) - evaluate(limit, e, pt(x)))
                    for e in (1e-1, 1e-2, 1e-3)]
            assert all(b < a or a == 0.0 for a, b in zip(gaps, gaps[1:]))
            assert gaps[-1] <= 1e-3

    def test_perturbed_limit_is_base(self, quad_1d, perturbed_1d):
        assert gamma_limit(perturbed_1d) == quad_1d

    def test_custom_has_no_declared_limit(self, line):
        with pytest.raises(CapabilityAbsentError):
            gamma_limit(custom_smooth(line, "x^2"))

    def test_wiggly_uniform_envelope(self, wiggly_1d):
        rng = np.random.default_rng(3)
        X = rng.uniform(-5, 5, size=(200, 1))
        limit = gamma_limit(wiggly_1d)
        for eps in (0.3, 0.05, 0.007):
            gap = np.abs(eval_many(wiggly_1d, eps, X) - eval_many(limit, eps, X))
            assert gap.max() <= wiggly_1d.amplitude_scale * eps + 1e-15


class TestContinuitySampling:
    def test_small_moves_small_change(self, wiggly_1d):
        rng = np.random.default_rng(11)
        xs = rng.uniform(-2, 2, 50)
        for eps in (0.5, 0.05):
            changes = []
            for h in (1e-2, 1e-4, 1e-6):
                changes.append(max(
                    abs(evaluate(wiggly_1d, eps, pt(x + h))
                        - evaluate(wiggly_1d, eps, pt(x))) for x in xs))
            assert changes[0] > changes[1] > changes[2]
            assert changes[-1] < 1e-4


class TestExactSlope:
    def test_quadratic(self, quad_1d):
        assert exact_slope(quad_1d, 1.0, pt(2.0)) == 2.0

    def test_weighted_metric_dual_norm(self, weighted_plane):
        spec = quadratic(weighted_plane, [1.0, 1.0], [0.0, 0.0])
        # gradient (2, 0); metric weight 4 on the first axis -> slope 1
        assert math.isclose(exact_slope(spec, 1.0, pt(2.0, 0.0)), 1.0)

    def test_perturbed_kink_minimal_subgradient(self, perturbed_1d):
        # at x = 0 the subgradient interval [-eps, eps] contains 0
        assert exact_slope(perturbed_1d, 0.5, pt(0.0)) == 0.0

    def test_perturbed_away_from_kink(self, perturbed_1d):
        assert math.isclose(exact_slope(perturbed_1d, 0.1, pt(1.0)), 1.1)


class TestCertificate:
    def test_quadratic_nonnegative(self, quad_1d):
        cert = certify_well_posedness(quad_1d, [1.0], 200)
        assert cert.tau_star == 1.0
        assert cert.c_star >= 0.0
        assert cert.checked_eps_grid == (1.0,)

    def test_wiggly_amplitude_bound(self, wiggly_1d):
        cert = certify_well_posedness(wiggly_1d, [1e-1, 1e-2, 1e-3], 200)
        assert cert.c_star >= -1.0  # energy bounded below by -eps >= -1

    def test_linear_energy_fails_for_large_tau_star(self, line):
        spec = custom_smooth(line, "-x")
        with pytest.raises(CertificateFailure) as exc_info:
            certify_well_posedness(spec, [1.0], 200, tau_star=2.0)
        eps, witness = exc_info.value.witness
        assert eps == 1.0
        assert abs(witness.coords[0]) >= 100.0

    def test_empty_grid_rejected(self, quad_1d):
        with pytest.raises(ValueError):
            certify_well_posedness(quad_1d, [], 100)


class TestCustomExpressions:
    def test_parse_error(self, line):
        with pytest.raises(ConfigError):
            custom_smooth(line, "x +* 2")

    def test_unknown_symbol(self, line):
        with pytest.raises(ConfigError):
            custom_smooth(line, "x + y")

    def test_caret_power(self, line):
        spec = custom_smooth(line, "x^2 / 2")
        assert evaluate(spec, 1.0, pt(3.0)) == 4.5

    @pytest.mark.filterwarnings("ignore:overflow encountered")
    def test_nonfinite_value_reported(self, line):
        spec = custom_smooth(line, "exp(1000*x)")
        with pytest.raises(EvaluationError):
            evaluate(spec, 1.0, pt(10.0))

    def test_custom_requires_1d(self, plane):
        with pytest.raises(ValueError):
            custom_smooth(plane, "x^2")

    def test_roundtrip_dict(self, line, wiggly_1d):
        d = wiggly_1d.to_dict()
        assert EnergySpec.from_dict(d, line) == wiggly_1d


class TestCriticalPoints:
    def test_wiggly_trap_is_stationary(self, wiggly_1d):
        trap = nearest_stable_critical_point(wiggly_1d, 0.1, pt(0.5))
        x = trap.coords[0]
        assert abs(x - math.sin(x / 0.1)) < 1e-10
        assert abs(x - 0.5) < 4 * math.pi * 0.1

    def test_quadratic_min_found(self, quad_1d):
        trap = nearest_stable_critical_point(quad_1d, 1.0, pt(0.3))
        assert abs(trap.coords[0]) < 1e-12
