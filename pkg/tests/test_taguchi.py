import math

import pytest
from hypothesis import given, strategies as st

from weldlab.taguchi import (
    DegenerateFactorError,
    check_design,
    diagnostics_to_json_dict,
    factor_levels,
    optimal_combination,
    response_table,
    response_table_rows,
    sn_larger_is_better,
    sn_nominal_is_best,
    sn_ratio,
    sn_smaller_is_better,
)

from conftest import l9_dataset, make_dataset


class TestSnLargerIsBetter:
    def test_table_value(self):
        assert sn_larger_is_better([65.8]) == pytest.approx(36.3646, abs=1e-3)

    def test_unity(self):
        assert sn_larger_is_better([1.0]) == 0.0

    def test_ten(self):
        assert sn_larger_is_better([10.0]) == pytest.approx(20.0, abs=1e-12)

    def test_single_replicate_is_20log10(self):
        for v in (0.5, 3.7, 120.0):
            assert sn_larger_is_better([v]) == pytest.approx(
                20 * math.log10(v), abs=1e-9
            )

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            sn_larger_is_better([5.0, -1.0])
        with pytest.raises(ValueError):
            sn_larger_is_better([0.0])

    def test_multi_replicate_formula(self):
        y = [2.0, 4.0]
        expected = -10 * math.log10((1 / 4 + 1 / 16) / 2)
        assert sn_larger_is_better(y) == pytest.approx(expected, rel=1e-12)

    @given(
        st.floats(min_value=0.1, max_value=1e4),
        st.floats(min_value=0.01, max_value=10.0),
    )
    def test_strictly_increasing(self, y, delta):
        assert sn_larger_is_better([y + delta]) > sn_larger_is_better([y])

    @given(
        st.floats(min_value=0.1, max_value=1e3),
        st.floats(min_value=1.0001, max_value=100.0),
    )
    def test_scaling_shifts_by_constant(self, y, c):
        shift = sn_larger_is_better([c * y]) - sn_larger_is_better([y])
        assert shift == pytest.approx(20 * math.log10(c), rel=1e-9, abs=1e-9)


class TestOtherCriteria:
    def test_smaller_is_better(self):
        assert sn_smaller_is_better([10.0]) == pytest.approx(-20.0, abs=1e-12)

    def test_nominal_needs_replicates(self):
        with pytest.raises(ValueError):
            sn_nominal_is_best([5.0])

    def test_nominal_value(self):
        # mean 10, sample var 2
        y = [9.0, 10.0, 11.0]
        assert sn_nominal_is_best(y) == pytest.approx(10 * math.log10(100.0), abs=1e-9)

    def test_nominal_zero_variance(self):
        with pytest.raises(ValueError):
            sn_nominal_is_best([5.0, 5.0])

    def test_dispatch(self):
        assert sn_ratio([10.0], "larger") == pytest.approx(20.0)
        with pytest.raises(ValueError):
            sn_ratio([10.0], "bogus")


class TestResponseTable:
    def test_rpm_level_means(self, builtin):
        t = response_table(builtin)
        rpm = t.raw[0]
        assert rpm.factor == "rpm"
        assert rpm.means[1] == pytest.approx(69.4667, abs=1e-3)

    def test_all_level_means(self, builtin):
        t = response_table(builtin)
        expected = {
            "rpm": (66.3267, 69.4667, 61.1333),
            "traverse_mm_min": (62.8, 65.3933, 68.7333),
            "plan_depth_mm": (68.2, 63.5267, 65.2),
        }
        for eff in t.raw:
            for got, want in zip(eff.means, expected[eff.factor]):
                assert got == pytest.approx(want, abs=1e-3)

    def test_deltas_and_ranks(self, builtin):
        t = response_table(builtin)
        deltas = {e.factor: e.delta for e in t.raw}
        assert deltas["rpm"] == pytest.approx(8.3333, abs=1e-3)
        assert deltas["traverse_mm_min"] == pytest.approx(5.9333, abs=1e-3)
        assert deltas["plan_depth_mm"] == pytest.approx(4.6733, abs=1e-3)
        ranks = {e.factor: e.rank for e in t.raw}
        assert ranks == {"rpm": 1, "traverse_mm_min": 2, "plan_depth_mm": 3}

    def test_ranks_are_permutation(self, builtin):
        t = response_table(builtin)
        assert sorted(e.rank for e in t.s_n) == [1, 2, 3]
        assert all(e.delta >= 0 for e in t.raw + t.s_n)

    def test_constant_response(self):
        d = make_dataset(
            [(800, 40, 0.1, 7.0), (800, 50, 0.2, 7.0), (900, 40, 0.2, 7.0),
             (900, 50, 0.1, 7.0)]
        )
        t = response_table(d)
        for eff in t.raw:
            assert all(m == pytest.approx(7.0) for m in eff.means)
            assert eff.delta == pytest.approx(0.0)

    def test_weighted_level_means_recover_grand_mean(self, builtin):
        t = response_table(builtin)
        y = builtin.responses()
        for fi, eff in enumerate(t.raw):
            total = 0.0
            for lv, mean in zip(eff.levels, eff.means):
                count = sum(1 for r in builtin.runs if r.factors()[fi] == lv)
                total += count * mean
            assert total / len(builtin) == pytest.approx(y.mean(), abs=1e-9)

    def test_degenerate_factor_rejected(self):
        d = make_dataset([(800, 40, 0.1, 5.0), (800, 50, 0.2, 6.0)])
        with pytest.raises(DegenerateFactorError, match="rpm"):
            response_table(d)

    def test_rows_flatten(self, builtin):
        rows = response_table_rows(response_table(builtin))
        assert len(rows) == 9  # 3 factors x 3 levels
        assert {r["factor"] for r in rows} == set(builtin.factor_names)

    def test_factor_levels_helper(self, builtin):
        fl = factor_levels(builtin)
        assert fl[0].levels == (800.0, 1000.0, 1200.0)
        assert all(len(f.levels) == 3 for f in fl)


class TestOptimalCombination:
    def test_builtin_raw_basis(self, builtin):
        best = optimal_combination(response_table(builtin), basis="raw")
        assert [c.level_value for c in best] == [1000.0, 60.0, 0.1]
        assert [c.level_index for c in best] == [2, 3, 1]

    def test_constant_ties_to_level_one(self):
        d = make_dataset(
            [(800, 40, 0.1, 7.0), (800, 50, 0.2, 7.0), (900, 40, 0.2, 7.0),
             (900, 50, 0.1, 7.0)]
        )
        best = optimal_combination(response_table(d))
        assert [c.level_index for c in best] == [1, 1, 1]

    def test_dominant_level_wins(self):
        d = make_dataset(
            [(800, 40, 0.1, 1.0), (800, 50, 0.2, 1.0), (900, 40, 0.2, 9.0),
             (900, 50, 0.1, 9.0)]
        )
        best = optimal_combination(response_table(d))
        assert best[0].level_value == 900.0

    def test_affine_invariance_raw(self, builtin):
        base = optimal_combination(response_table(builtin), basis="raw")
        scaled = make_dataset(
            [(r.rpm, r.traverse, r.depth, 3.5 * r.hardness + 11.0)
             for r in builtin.runs]
        )
        after = optimal_combination(response_table(scaled), basis="raw")
        assert [c.level_index for c in base] == [c.level_index for c in after]

    def test_scale_invariance_sn(self, builtin):
        base = optimal_combination(response_table(builtin), basis="s_n")
        scaled = make_dataset(
            [(r.rpm, r.traverse, r.depth, 7.0 * r.hardness) for r in builtin.runs]
        )
        after = optimal_combination(response_table(scaled), basis="s_n")
        assert [c.level_index for c in base] == [c.level_index for c in after]

    def test_bad_basis(self, builtin):
        with pytest.raises(ValueError):
            optimal_combination(response_table(builtin), basis="median")


class TestCheckDesign:
    def test_builtin_balanced(self, builtin):
        diag = check_design(builtin)
        assert all(diag.balanced.values())

    def test_builtin_traverse_depth_not_orthogonal(self, builtin):
        diag = check_design(builtin)
        assert diag.orthogonal_pairs[("rpm", "traverse_mm_min")]
        assert diag.orthogonal_pairs[("rpm", "plan_depth_mm")]
        assert not diag.orthogonal_pairs[("traverse_mm_min", "plan_depth_mm")]
        assert diag.non_orthogonal_pairs() == (
            ("traverse_mm_min", "plan_depth_mm"),
        )

    def test_l9_restriction_fully_orthogonal(self):
        diag = check_design(l9_dataset())
        assert all(diag.balanced.values())
        assert diag.all_orthogonal

    def test_orthogonality_implies_balance(self):
        # property over a few constructed designs
        for d in (l9_dataset(),):
            diag = check_design(d)
            for (a, b), ok in diag.orthogonal_pairs.items():
                if ok:
                    assert diag.balanced[a] and diag.balanced[b]

    def test_unbalanced_detected(self):
        d = make_dataset(
            [(800, 40, 0.1, 5.0), (800, 50, 0.2, 6.0), (900, 40, 0.1, 7.0)]
        )
        diag = check_design(d)
        assert not diag.balanced["traverse_mm_min"]

    def test_json_dict_shape(self, builtin):
        j = diagnostics_to_json_dict(check_design(builtin))
        assert j["balanced"]["rpm"] is True
        assert j["orthogonal_pairs"]["traverse_mm_min*plan_depth_mm"] is False
        assert j["all_orthogonal"] is False
