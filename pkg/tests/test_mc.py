import json
import math

import numpy as np
import pytest
from scipy.stats import binom

from rmtlab.ensembles import deformed_goe, rng_stream, spiked_population
from rmtlab.errors import ParameterError, PlanError
from rmtlab.limits import Theorem
from rmtlab.mc import (
    ExperimentPlan,
    chi_square_tail_check,
    convergence_sweep,
    interlaces,
    interlacing_audit,
    limit_center,
    run_tail,
    wilson_interval,
)


def exact_coverage(n, p, lo_hi):
    ks = np.arange(n + 1)
    inside = np.array([lo <= p <= hi for lo, hi in (lo_hi(k, n) for k in ks)])
    return float(np.sum(binom.pmf(ks[inside], n, p)))


class TestWilson:
    @pytest.mark.parametrize("k, n", [(0, 10), (5, 10), (10, 10), (3, 1000), (500, 1000)])
    def test_contains_phat_and_in_unit(self, k, n):
        lo, hi = wilson_interval(k, n)
        assert 0 <= lo <= k / n <= hi <= 1

    @pytest.mark.parametrize("n, p", [(50, 0.1), (100, 0.5), (200, 0.02), (1000, 0.3), (30, 0.8)])
    def test_coverage_against_exact_binomial(self, n, p):
        assert exact_coverage(n, p, wilson_interval) >= 0.92

    def test_known_value(self):
        lo, hi = wilson_interval(0, 100)
        assert lo == 0.0
        assert hi == pytest.approx(3.8415 / (100 + 3.8415), rel=1e-4)

    def test_no_trials(self):
        with pytest.raises(ParameterError):
            wilson_interval(0, 0)


class TestPlan:
    def test_roundtrip(self):
        plan = ExperimentPlan(spiked_population(400, 100, (4.0,), seed=3), Theorem.T2I, (0.3, 0.6), 50, delta=1 / 3, name="x")
        assert ExperimentPlan.from_dict(json.loads(json.dumps(plan.to_dict()))) == plan

    @pytest.mark.parametrize(
        "spec, theorem, grid",
        [
            (deformed_goe(50), Theorem.T2I, (0.1,)),
            (spiked_population(50, 10), Theorem.T1I, (0.1,)),
            (deformed_goe(50), Theorem.T1I, (0.2, 0.1)),
            (spiked_population(400, 100, (4.0,)), Theorem.T2I, (0.1,)),
        ],
    )
    def test_invalid(self, spec, theorem, grid):
        with pytest.raises(PlanError):
            run_tail(ExperimentPlan(spec, theorem, grid, 10, delta=1 / 3))


class TestRunTail:
    def test_t0_null_is_vacuous(self):
        rep = run_tail(ExperimentPlan(deformed_goe(200, seed=1), Theorem.T1I, (0.0,), 200))
        row = rep.rows[0]
        assert row.bound_rhs == 1.0 and row.vacuous and row.dominated
        assert rep.checked_rows() == []

    def test_t2i_null_no_hits(self):
        rep = run_tail(ExperimentPlan(spiked_population(400, 100, seed=2), Theorem.T2I, (0.3,), 2000))
        assert rep.rows[0].hits == 0
        assert rep.rows[0].bound_rhs == pytest.approx(math.exp(-18))
        assert rep.all_dominated

    def test_thread_invariance(self):
        plan = ExperimentPlan(deformed_goe(60, (2.0,), seed=4), Theorem.T1II, (0.0, 0.5), 60)
        a, b = run_tail(plan, threads=1), run_tail(plan, threads=3)
        assert a.to_json() == b.to_json()
        assert a.excluded_B_failures + a.replicates_used == 60

    def test_csv(self):
        rep = run_tail(ExperimentPlan(deformed_goe(50, seed=1), Theorem.T1I, (0.0, 0.3), 30))
        lines = rep.to_csv().splitlines()
        assert lines[0] == "t,emp,lo95,hi95,bound,dominated"
        assert len(lines) == 3

    def test_goe_median(self):
        eigs = [r.median_eig for r in convergence_sweep(lambda n: deformed_goe(n, (2.0,), seed=8), [500], 100).rows]
        assert abs(eigs[0] - 2.5) <= 0.1


class TestSweep:
    def test_centers(self):
        assert limit_center(deformed_goe(10, (2.0,))) == 2.5
        assert limit_center(deformed_goe(10, (0.5,))) == 2.0
        assert limit_center(spiked_population(1000, 251, (0.25,)), smallest=True) == pytest.approx(1 / 6)
        assert limit_center(spiked_population(1000, 500)) == pytest.approx((1 + math.sqrt(0.5)) ** 2)

    def test_subcritical_shrinks(self):
        res = convergence_sweep(lambda n: deformed_goe(n, (0.5,), seed=1), [50, 400], 60)
        assert res.rows[1].median_dev < res.rows[0].median_dev
        assert res.rows[0].center == 2.0

    def test_ascending(self):
        with pytest.raises(ParameterError):
            convergence_sweep(lambda n: deformed_goe(n), [20, 10], 2)


class TestAudits:
    def test_chi_square(self):
        rows = chi_square_tail_check(np.ones(100) / 100, [0.0, 0.5, 1, 2, 4], 20_000, rng_stream(0, 7))
        assert rows[0].bound == 1.0
        assert all(r.dominated for r in rows)

    def test_chi_square_single_weight(self):
        rows = chi_square_tail_check([1.0], [0.5, 1.0, 2.0], 20_000, rng_stream(1, 7))
        assert all(r.dominated for r in rows)

    def test_chi_square_weights(self):
        with pytest.raises(ParameterError):
            chi_square_tail_check([1.0, -1.0], [1.0], 10, rng_stream(0, 7))

    def test_interlacing_small(self):
        assert interlacing_audit(100, 2, rng_stream(0, 8)) == 0

    def test_interlacing_diagonal(self):
        assert interlaces(np.diag([3.0, 1.0, 2.0]), 1, tol=0.0)

    def test_interlacing_n(self):
        with pytest.raises(ParameterError):
            interlacing_audit(1, 1, rng_stream(0, 8))
