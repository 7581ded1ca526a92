import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qualinet.npt import (
    ArithmeticIndicator,
    NptError,
    ParentLink,
    PartitionedIndicator,
    RankedScale,
    TNormalSpec,
    build_indicator_npt,
    build_ranked_npt,
    default_state_labels,
    discretize_tnormal,
    effective_level,
    std_normal_cdf,
)

from .oracles import normal_cdf_by_quadrature, tnormal_masses_by_quadrature

EFFORT_BOUNDS = (3.9, 11.7375, 19.575, 27.4125, 35.25, 43.0875, 50.925, 58.7625, 66.6)


class TestStdNormalCdf:
    def test_zero_is_half(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_tabulated_point(self):
        # Frozen from the quadrature oracle: Phi(2.2361) = 0.9873274.
        assert std_normal_cdf(2.2361) == pytest.approx(0.9873274, abs=1e-6)
        assert abs(std_normal_cdf(2.2361) - 0.98730) <= 1e-4

    @pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 1.96, 3.3, 7.5])
    def test_symmetry(self, x):
        assert std_normal_cdf(-x) == pytest.approx(1.0 - std_normal_cdf(x), abs=1e-15)

    @pytest.mark.parametrize("x", [-4.0, -1.5, -0.2, 0.0, 0.7, 2.2, 5.0])
    def test_against_quadrature(self, x):
        assert std_normal_cdf(x) == pytest.approx(normal_cdf_by_quadrature(x), abs=1.5e-7)


class TestDiscretizeTnormal:
    def test_symmetric_three_states(self):
        probs = discretize_tnormal(TNormalSpec(0.5, 0.05), (0, 1 / 3, 2 / 3, 1))
        assert probs[0] == pytest.approx(probs[2], abs=1e-12)
        # Frozen from the quadrature oracle.
        assert probs == pytest.approx([0.220955, 0.558090, 0.220955], abs=1e-3)
        oracle = tnormal_masses_by_quadrature(0.5, 0.05, (0, 1 / 3, 2 / 3, 1))
        assert probs == pytest.approx(oracle, abs=1e-6)

    def test_concentration_on_high_midpoint(self):
        probs = discretize_tnormal(TNormalSpec(5 / 6, 1e-6), (0, 1 / 3, 2 / 3, 1))
        assert probs[2] == pytest.approx(1.0, abs=1e-9)
        assert probs[0] == pytest.approx(0.0, abs=1e-9)
        assert probs[1] == pytest.approx(0.0, abs=1e-9)

    def test_flat_limit_is_uniform(self):
        probs = discretize_tnormal(TNormalSpec(0.5, 1e6), (0, 0.25, 0.5, 0.75, 1))
        for p in probs:
            assert p == pytest.approx(0.25, abs=1e-3)

    def test_sums_to_one(self):
        probs = discretize_tnormal(TNormalSpec(0.21, 0.037), (0, 1 / 3, 2 / 3, 1))
        assert math.fsum(probs) == pytest.approx(1.0, abs=1e-15)

    def test_degenerate_normalizer_falls_back_to_nearest_interval(self):
        probs = discretize_tnormal(TNormalSpec(50.0, 1e-8), (0, 1 / 3, 2 / 3, 1))
        assert probs == [0.0, 0.0, 1.0]
        probs = discretize_tnormal(TNormalSpec(-50.0, 1e-8), (0, 1 / 3, 2 / 3, 1))
        assert probs == [1.0, 0.0, 0.0]

    def test_rejects_bad_inputs(self):
        with pytest.raises(NptError):
            TNormalSpec(0.5, 0.0)
        with pytest.raises(NptError):
            TNormalSpec(0.5, -1.0)
        with pytest.raises(NptError):
            discretize_tnormal(TNormalSpec(0.5, 0.1), (0, 0.5))  # does not span [0, 1]
        with pytest.raises(NptError):
            discretize_tnormal(TNormalSpec(0.5, 0.1), (0, 0.7, 0.3, 1))

    @given(
        mu=st.floats(0, 1),
        var=st.floats(1e-4, 100.0),
        k=st.integers(2, 7),
    )
    @settings(max_examples=120, deadline=None)
    def test_reflection_symmetry(self, mu, var, k):
        bounds = tuple(i / k for i in range(k + 1))
        left = discretize_tnormal(TNormalSpec(mu, var), bounds)
        right = discretize_tnormal(TNormalSpec(1.0 - mu, var), bounds)
        for a, b in zip(left, reversed(right)):
            assert a == pytest.approx(b, abs=1e-12)

    @given(
        mu=st.floats(0, 1),
        var=st.sampled_from([1e-4, 0.01, 0.05, 0.5, 10.0]),
        k=st.integers(2, 7),
    )
    @settings(max_examples=120, deadline=None)
    def test_matches_quadrature_oracle(self, mu, var, k):
        bounds = tuple(i / k for i in range(k + 1))
        probs = discretize_tnormal(TNormalSpec(mu, var), bounds)
        oracle = tnormal_masses_by_quadrature(mu, var, bounds)
        for a, b in zip(probs, oracle):
            assert a == pytest.approx(b, abs=1e-6)


class TestEffectiveLevel:
    def test_two_signed_parents(self):
        scale = RankedScale.of(3)
        mu = effective_level(
            (2, 2),
            (ParentLink(2.0), ParentLink(1.0, negative=True)),
            (scale, scale),
        )
        assert mu == pytest.approx(11 / 18, abs=1e-15)

    def test_single_positive_parent_is_identity(self):
        scale = RankedScale.of(5)
        for state in range(5):
            mu = effective_level((state,), (ParentLink(),), (scale,))
            assert mu == pytest.approx(scale.midpoint(state), abs=1e-15)

    def test_all_medium_is_half_regardless_of_weights_and_signs(self):
        scale = RankedScale.of(3)
        mu = effective_level(
            (1, 1, 1),
            (ParentLink(3.0), ParentLink(0.5, negative=True), ParentLink(7.0)),
            (scale, scale, scale),
        )
        assert mu == pytest.approx(0.5, abs=1e-15)

    def test_mixed_cardinalities(self):
        mu = effective_level(
            (1, 0),
            (ParentLink(), ParentLink()),
            (RankedScale.of(2), RankedScale.of(3)),
        )
        assert mu == pytest.approx((0.75 + 1 / 6) / 2, abs=1e-15)


class TestBuildRankedNpt:
    def test_near_deterministic_positive_parent_is_identity_like(self):
        scale = RankedScale.of(3)
        columns = build_ranked_npt((scale,), (ParentLink(),), 1e-6, scale)
        for state, column in enumerate(columns):
            assert column[state] >= 1.0 - 1e-9

    def test_near_deterministic_negative_parent_is_anti_diagonal(self):
        scale = RankedScale.of(3)
        columns = build_ranked_npt((scale,), (ParentLink(negative=True),), 1e-6, scale)
        for state, column in enumerate(columns):
            assert column[2 - state] >= 1.0 - 1e-9

    def test_two_parents_give_nine_normalized_columns(self):
        scale = RankedScale.of(3)
        columns = build_ranked_npt(
            (scale, scale), (ParentLink(), ParentLink(2.0)), 0.05, scale
        )
        assert len(columns) == 9
        for column in columns:
            assert math.fsum(column) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("variance", [0.003, 0.05, 0.4])
    @pytest.mark.parametrize("k", [2, 3, 5])
    def test_single_parent_monotonicity(self, variance, k):
        # Higher parent state must first-order dominate for a positive link
        # and be dominated for a negative link.
        scale = RankedScale.of(k)
        for negative in (False, True):
            columns = build_ranked_npt((scale,), (ParentLink(negative=negative),), variance, scale)
            for lower, higher in zip(columns, columns[1:]):
                cdf_low = cdf_high = 0.0
                for s in range(k):
                    cdf_low += lower[s]
                    cdf_high += higher[s]
                    if negative:
                        assert cdf_high >= cdf_low - 1e-12
                    else:
                        assert cdf_high <= cdf_low + 1e-12


class TestBuildIndicatorNpt:
    def test_arithmetic_anchor_mean(self):
        # mean = 40 - 25.2 * level anchors the middle level at 27.4; the
        # truncation to [3.9, 66.6] pulls the realized column mean up to
        # 28.146 (frozen from the quadrature oracle).
        expr = ArithmeticIndicator(intercept=40.0, slope=-25.2, variance=146.0)
        columns = build_indicator_npt(expr, RankedScale.of(3), EFFORT_BOUNDS)
        mids = [(a + b) / 2 for a, b in zip(EFFORT_BOUNDS, EFFORT_BOUNDS[1:])]
        mean = math.fsum(p * x for p, x in zip(columns[1], mids))
        assert mean == pytest.approx(28.1463, abs=1e-3)
        assert abs(mean - 27.4) <= 2.0
        oracle = tnormal_masses_by_quadrature(27.4, 146.0, EFFORT_BOUNDS)
        assert columns[1] == pytest.approx(oracle, abs=1e-6)

    def test_partitioned_identical_columns_make_indicator_independent(self):
        expr = PartitionedIndicator(((10.0, 4.0),) * 3)
        columns = build_indicator_npt(expr, RankedScale.of(3), (0, 8, 16, 24))
        assert columns[0] == columns[1] == columns[2]

    def test_zero_slope_gives_identical_columns(self):
        expr = ArithmeticIndicator(intercept=12.0, slope=0.0, variance=9.0)
        columns = build_indicator_npt(expr, RankedScale.of(4), (0, 10, 20, 30))
        assert all(column == columns[0] for column in columns)

    def test_partitioned_entry_count_must_match_parent_states(self):
        expr = PartitionedIndicator(((10.0, 4.0), (20.0, 4.0)))
        with pytest.raises(NptError):
            build_indicator_npt(expr, RankedScale.of(3), (0, 8, 16, 24))


class TestRankedScale:
    def test_midpoints_and_boundaries(self):
        scale = RankedScale.of(3)
        assert scale.boundaries() == (0, 1 / 3, 2 / 3, 1)
        assert scale.midpoints() == (1 / 6, 0.5, 5 / 6)

    def test_default_labels(self):
        assert default_state_labels(2) == ("low", "high")
        assert default_state_labels(3) == ("low", "medium", "high")
        assert default_state_labels(5) == ("very_low", "low", "medium", "high", "very_high")
        assert default_state_labels(4) == ("level_1", "level_2", "level_3", "level_4")
        with pytest.raises(NptError):
            default_state_labels(1)
