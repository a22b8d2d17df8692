import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrfk.couplings import (CouplingSpec, check_h1, check_h3, check_h4,
                            check_h5, evaluate, evaluate_many, evaluate_norm,
                            lattice_points, log_j_radial)


@pytest.fixture(scope="module")
def families():
    return {
        "power_law": CouplingSpec.power_law(2.0, 1),
        "log_power": CouplingSpec.log_power(1),
        "exp_log_poly": CouplingSpec.exp_log_poly([0.0, 1.0], 1.0, 1.5, 1),
    }


class TestEvaluate:
    def test_power_law_values(self):
        spec = CouplingSpec.power_law(2.0, 1)
        assert evaluate(spec, (4,)) == pytest.approx(1 / 16)
        assert evaluate(spec, (-4,)) == pytest.approx(1 / 16)

    def test_log_power_values(self):
        spec = CouplingSpec.log_power(2)
        r = math.sqrt(8)
        assert evaluate(spec, (2, 2)) == pytest.approx(
            math.exp(-math.log(r) ** 2))

    def test_exp_log_poly_values(self):
        spec = CouplingSpec.exp_log_poly([1.0, 1.0], 2.0, 1.0, 1)
        # p(r) = 1 + r, J = exp(-2 log(1+r))
        assert evaluate(spec, (3,)) == pytest.approx(math.exp(-2 * math.log(4)))

    def test_self_edge_rejected(self, families):
        for spec in families.values():
            with pytest.raises(ValueError):
                evaluate(spec, (0,))

    def test_table_lookup_and_miss(self):
        spec = CouplingSpec.from_table({(1,): 0.5, (-1,): 0.5, (2,): 0.1}, 1)
        assert evaluate(spec, (2,)) == 0.1
        with pytest.raises(ValueError):
            evaluate(spec, (3,))

    def test_from_function_tabulates(self):
        spec = CouplingSpec.from_function(lambda r: math.exp(-r), 3, 1)
        assert evaluate(spec, (2,)) == pytest.approx(math.exp(-2))

    def test_vectorized_matches_scalar(self, families):
        xs = np.array([[1], [2], [-3], [7]])
        for spec in families.values():
            got = evaluate_many(spec, xs)
            want = [evaluate(spec, x) for x in xs]
            assert np.allclose(got, want, rtol=1e-13)

    def test_constructor_validation(self):
        with pytest.raises(ValueError):
            CouplingSpec.power_law(1.0, 1)  # c <= d not summable
        with pytest.raises(ValueError):
            CouplingSpec.exp_log_poly([1.0], 1.0, 1.0, 1)
        with pytest.raises(ValueError):
            CouplingSpec.from_table({(1,): -1.0}, 1)
        with pytest.raises(ValueError):
            CouplingSpec.from_table({(1, 0): 1.0}, 1)

    @given(st.floats(1.5, 6.0), st.integers(1, 1000))
    @settings(max_examples=60, deadline=None)
    def test_power_law_monotone_radial(self, c, r):
        spec = CouplingSpec.power_law(c, 1)
        assert evaluate_norm(spec, r) >= evaluate_norm(spec, r + 1)


class TestLogRadial:
    def test_agrees_with_direct_evaluation(self, families):
        for spec in families.values():
            for r in (2.0, 10.0, 123.0):
                assert log_j_radial(spec, math.log(r)) == pytest.approx(
                    math.log(evaluate_norm(spec, r)), rel=1e-10)

    def test_stable_far_beyond_float_range(self, families):
        # e^500 is far beyond representable J; the log form must still work
        for spec in families.values():
            val = log_j_radial(spec, 500.0)
            assert math.isfinite(val) and val < -100

    def test_table_has_no_radial_form(self):
        spec = CouplingSpec.from_table({(1,): 0.5, (-1,): 0.5}, 1)
        with pytest.raises(ValueError):
            log_j_radial(spec, 1.0)


class TestLatticePoints:
    def test_excludes_origin(self):
        pts = lattice_points(2, 1.5)
        assert (0, 0) not in pts
        assert (1, 0) in pts and (1, 1) in pts

    def test_count_1d(self):
        assert len(lattice_points(1, 5)) == 10


class TestH1:
    def test_radial_families_have_c_one(self, families):
        # radially non-increasing families satisfy H1 with the minimal c = 1
        for spec in families.values():
            rep = check_h1(spec, 50)
            assert rep.verdict == "pass"
            assert rep.witness["c"] == pytest.approx(1.0)

    def test_rough_table_needs_larger_c(self):
        entries = {(1,): 1.0, (-1,): 1.0, (2,): 0.1, (-2,): 0.1,
                   (3,): 0.4, (-3,): 0.4}
        rep = check_h1(CouplingSpec.from_table(entries, 1), 3)
        # J(3) = 0.4 > J(2) = 0.1 forces c >= 4
        assert rep.witness["c"] == pytest.approx(4.0)


class TestH3:
    def test_summable_families_pass(self, families):
        for spec in families.values():
            rep = check_h3(spec, 200)
            assert rep.verdict == "pass"
            assert math.isfinite(rep.witness["tail_bound"])

    def test_power_law_sum_value(self):
        # sum_{x != 0} |x|^-2 = 2 * pi^2 / 6 in 1D
        rep = check_h3(CouplingSpec.power_law(2.0, 1), 20000)
        total = rep.witness["partial_sum"] + rep.witness["tail_bound"]
        assert rep.witness["partial_sum"] < math.pi ** 2 / 3 < total * 1.001

    def test_non_log_convex_is_inconclusive(self):
        spec = CouplingSpec.exp_log_poly([0.0, 1.0], 1.0, 0.5, 1)
        assert check_h3(spec, 50).verdict == "inconclusive"


class TestH4:
    def test_radial_families_pass_at_moderate_x(self, families):
        probes = [(16,), (32,), (64,)]
        for spec in families.values():
            rep = check_h4(spec, probes, [0.5])
            assert rep.verdict == "pass", rep.witness

    def test_jump_table_fails(self):
        entries = {}
        for x in lattice_points(1, 40):
            r = abs(x[0])
            entries[x] = 1.0 if r <= 20 else 1e-8
        spec = CouplingSpec.from_table(entries, 1)
        rep = check_h4(spec, [(20,)], [0.1])
        assert rep.verdict == "fail"
        assert "violation" in rep.witness

    def test_epsilon_validation(self, families):
        with pytest.raises(ValueError):
            check_h4(families["power_law"], [(8,)], [1.5])
        with pytest.raises(ValueError):
            check_h4(families["power_law"], [], [0.5])


class TestH5:
    def test_builtin_families_pass(self, families):
        alphas = {"power_law": 0.6, "log_power": 0.5, "exp_log_poly": 0.5}
        for name, spec in families.items():
            rep = check_h5(spec, 0.5, alphas[name], 200)
            assert rep.verdict == "pass", (name, rep.witness)
            peak = rep.witness["log_c1_peak"]
            assert peak["log_c1_at_probe_end"] < peak["log_c1"]

    def test_power_law_needs_summable_alpha(self):
        # alpha * c <= d leaves sum J^alpha divergent, so H5 must fail
        spec = CouplingSpec.power_law(2.0, 1)
        rep = check_h5(spec, 0.5, 0.4, 200)
        assert rep.verdict == "fail"

    def test_stretched_exponential_fails(self):
        spec = CouplingSpec.from_function(
            lambda r: math.exp(-math.sqrt(r)), 1000, 1)
        rep = check_h5(spec, 0.5, 0.5, 1000)
        assert rep.verdict == "fail"
        assert rep.witness["C1"] > rep.witness["cap"]

    def test_log_power_constant_is_huge_but_certified(self):
        # the scanned lattice constant is astronomically large, yet the
        # radial profile peaks and decays, so the verdict is pass
        rep = check_h5(CouplingSpec.log_power(1), 0.5, 0.5, 300)
        assert rep.verdict == "pass"
        assert rep.witness["log_c1_peak"]["log_c1"] > 100.0

    def test_parameter_validation(self, families):
        with pytest.raises(ValueError):
            check_h5(families["power_law"], 1.5, 0.5, 100)
        with pytest.raises(ValueError):
            check_h5(families["power_law"], 0.5, 0.5, 1)
