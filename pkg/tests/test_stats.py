import math

import numpy as np
import pytest

from poolsim.branching import GwParams, sample_total_progeny_batch
from poolsim.field import Annulus
from poolsim.stats import (
    StatReport,
    cascade_tail_fit,
    entered_count_estimate,
    exp_lln_check,
    fit_loglog_slope,
    free_field_snapshots,
    growth_exponent_fit,
    hazard_estimate,
    hitting_prob_estimate,
    kurtz_test,
    poisson_structure_checks,
    refill_density_estimate,
    volume_deviation_scan,
)
from poolsim.streams import RngStream
from poolsim.trajectory import Trajectory, TrajectoryEvent

R0 = 1.0 / math.sqrt(math.pi)


def _power_law_trajectory(exponent, horizon, dt=0.1):
    # synthetic cadlag trajectory with radius = t^exponent on a grid,
    # carried by mass-free events (mass fields are placeholders)
    times = np.arange(0.0, horizon + dt / 2, dt)
    events = []
    mass = 1
    for t in times:
        r = float(max(t, dt / 10) ** exponent) if t > 0 else dt / 10
        events.append(
            TrajectoryEvent(time=float(t), kind="arrival" if t > 0 else "initial-cascade",
                            mass_after=mass, radius_after=r)
        )
    return Trajectory(events=events, metadata={"horizon": horizon, "synthetic": True})


class TestStatReport:
    def test_verdict_validation(self):
        with pytest.raises(ValueError):
            StatReport("x", 1.0, 0.0, 2.0, 1, "maybe")

    def test_ci_ordering_enforced(self):
        with pytest.raises(ValueError):
            StatReport("x", 5.0, 0.0, 2.0, 1, "pass")

    def test_to_dict_json_safe(self):
        import json

        rep = StatReport("x", 1.0, 0.5, 1.5, 10, "pass",
                         details={"arr": np.arange(3), "f": np.float64(2.5)})
        json.dumps(rep.to_dict())


class TestPoissonStructureChecks:
    def test_poisson_counts_pass(self):
        gen = np.random.default_rng(0)
        counts = gen.poisson(10.0, size=(5000, 3))
        checks = poisson_structure_checks(counts, np.full(3, 10.0), np.zeros(3))
        assert checks["all_ok"]

    def test_duplicated_columns_fail_correlation(self):
        gen = np.random.default_rng(1)
        col = gen.poisson(10.0, size=5000)
        counts = np.column_stack((col, col, gen.poisson(10.0, size=5000)))
        checks = poisson_structure_checks(counts, np.full(3, 10.0), np.zeros(3))
        assert not checks["corr_ok"]
        assert not checks["all_ok"]

    def test_clustered_pairs_fail_dispersion(self):
        # pairs arriving together double the variance: Fano ~ 2
        gen = np.random.default_rng(2)
        counts = (2 * gen.poisson(5.0, size=(5000, 2))).astype(float)
        checks = poisson_structure_checks(counts, np.full(2, 10.0), np.zeros(2))
        assert not checks["fano_ok"]


class TestKurtz:
    def test_unconditioned_field_at_t_zero(self):
        # t=0: plain PPP, retention is total, Fano near 1
        report = kurtz_test(1.0, R0, 0.0, [Annulus(1, 2), Annulus(2, 3)],
                            10_000, RngStream(20), fano_band=(0.95, 1.05))
        assert report.verdict == "pass"
        assert report.details["retention_rate"] == 1.0

    def test_replica_floor_enforced(self):
        with pytest.raises(ValueError, match="replicas"):
            kurtz_test(1.0, R0, 0.0, [Annulus(1, 2)], 500, RngStream(21))

    def test_annuli_validation(self):
        with pytest.raises(ValueError, match="outside"):
            kurtz_test(1.0, 1.5, 0.0, [Annulus(1, 2)], 1000, RngStream(22))
        with pytest.raises(ValueError, match="disjoint"):
            kurtz_test(1.0, R0, 0.0, [Annulus(1, 2.5), Annulus(2, 3)], 1000, RngStream(22))

    def test_deterministic(self):
        a = kurtz_test(1.0, R0, 0.5, [Annulus(1, 2)], 1000, RngStream(23))
        b = kurtz_test(1.0, R0, 0.5, [Annulus(1, 2)], 1000, RngStream(23))
        assert a.to_dict() == b.to_dict()

    @pytest.mark.slow
    def test_frozen_pool_conditional_structure(self):
        # acceptance-scale run lives in test_acceptance; this covers the
        # retention machinery at a lighter load
        report = kurtz_test(1.0, R0, 1.0, [Annulus(1, 2), Annulus(2, 3), Annulus(3, 4)],
                            2000, RngStream(24))
        assert report.verdict == "pass"
        assert report.details["retained"] >= 2000


class TestHazard:
    def test_zero_intensity_inconclusive(self):
        report = hazard_estimate(2.0, 200, RngStream(30), intensity=0.0)
        assert report.verdict == "inconclusive"
        assert report.estimate == 0.0

    def test_radius_floor(self):
        with pytest.raises(ValueError, match="R"):
            hazard_estimate(0.3, 100, RngStream(31))

    def test_rate_grows_with_radius(self):
        r2 = hazard_estimate(2.0, 1000, RngStream(32))
        r4 = hazard_estimate(4.0, 1000, RngStream(33))
        gap = r4.details["rate"] - r2.details["rate"]
        se = math.hypot(r4.details["rate_se"], r2.details["rate_se"])
        assert gap > 3 * se

    def test_censoring_robustness(self):
        # doubling the censor window moves the estimate by < 2 combined SE
        a = hazard_estimate(2.0, 1500, RngStream(34), t_max=1.5)
        b = hazard_estimate(2.0, 1500, RngStream(35), t_max=3.0)
        se = math.hypot(a.details["rate_se"], b.details["rate_se"])
        assert abs(a.details["rate"] - b.details["rate"]) < 2 * se

    def test_exponential_domination_ks(self):
        report = hazard_estimate(4.0, 1500, RngStream(36))
        assert report.verdict == "pass"
        assert report.details["ks_d_plus"] <= report.details["ks_tol"]


class TestRefill:
    def test_vacuum_at_time_zero(self):
        report = refill_density_estimate(1.0, 5.0, 0.0, Annulus(0, 1), 300, RngStream(40))
        assert report.estimate == 0.0
        assert report.verdict == "fail"  # density 0 < 0.9 threshold

    def test_far_probe_undisturbed(self):
        # probe far beyond the vacuum's reach: density ratio = 1 +- 3 SE
        t = 4.0
        far = 5.0 + math.sqrt(t) * 10
        report = refill_density_estimate(1.0, 5.0, t, Annulus(far, far + 1.0),
                                         800, RngStream(41))
        half_width = (report.ci_high - report.ci_low) / 2
        assert abs(report.estimate - 1.0) <= 3 * half_width / 1.96 * 1.96 + 1e-9
        assert abs(report.estimate - 1.0) <= 3 * half_width

    @pytest.mark.slow
    def test_central_refill_after_vacuum(self):
        report = refill_density_estimate(1.0, 5.0, 175.0, Annulus(0, 1),
                                         3000, RngStream(42))
        assert report.estimate >= 0.9
        assert report.verdict == "pass"


class TestHitting:
    def test_precondition(self):
        with pytest.raises(ValueError, match="x_radius"):
            hitting_prob_estimate(0.3, 100.0, 100, RngStream(50))

    def test_probability_grows_with_horizon(self):
        a = hitting_prob_estimate(5.0, 100.0, 20_000, RngStream(51))
        b = hitting_prob_estimate(5.0, 10_000.0, 20_000, RngStream(52))
        se = math.hypot(a.details["se"], b.details["se"])
        assert b.estimate - a.estimate > 3 * se

    @pytest.mark.slow
    def test_scaled_probability_order_of_magnitude(self):
        k = 10_000.0
        x = math.sqrt(k) / math.log(k)
        report = hitting_prob_estimate(x, k, 100_000, RngStream(53))
        assert 0.2 <= report.details["p_log_k"] <= 5.0
        assert report.verdict == "pass"


class TestEntered:
    def test_replica_floor(self):
        with pytest.raises(ValueError, match="replicas"):
            entered_count_estimate(1.0, 10.0, 50, RngStream(60))

    def test_k_zero_counts_initial_ball(self):
        report = entered_count_estimate(1.0, 0.0, 400, RngStream(61))
        # area of B(r0) is 1, so the mean count is lam * 1
        assert report.estimate == pytest.approx(1.0, abs=0.2)

    def test_mean_grows_with_horizon(self):
        a = entered_count_estimate(1.0, 25.0, 150, RngStream(62))
        b = entered_count_estimate(1.0, 50.0, 150, RngStream(63))
        se = math.hypot(a.ci_high - a.estimate, b.ci_high - b.estimate) / 1.96
        assert b.estimate - a.estimate > 3 * se

    @pytest.mark.slow
    def test_poisson_dispersion_at_k100(self):
        report = entered_count_estimate(1.0, 100.0, 1000, RngStream(64))
        assert 0.85 <= report.details["fano"] <= 1.15
        assert report.estimate > report.details["polylog_floor"]
        assert report.verdict == "pass"


class TestGrowthFit:
    def test_sqrt_power_law(self):
        traj = _power_law_trajectory(0.5, 600.0)
        report = growth_exponent_fit(traj, 50.0, 500.0)
        assert report.estimate == pytest.approx(0.5, abs=0.001)

    def test_linear_power_law(self):
        traj = _power_law_trajectory(1.0, 600.0)
        report = growth_exponent_fit(traj, 50.0, 500.0)
        assert report.estimate == pytest.approx(1.0, abs=0.001)

    def test_window_must_be_covered(self):
        traj = _power_law_trajectory(0.5, 100.0)
        with pytest.raises(ValueError, match="cover"):
            growth_exponent_fit(traj, 50.0, 500.0)
        with pytest.raises(ValueError):
            growth_exponent_fit(traj, 0.0, 50.0)

    def test_verdict_against_expected_range(self):
        traj = _power_law_trajectory(0.5, 600.0)
        assert growth_exponent_fit(traj, 50, 500, expected_range=(0.4, 0.6)).verdict == "pass"
        assert growth_exponent_fit(traj, 50, 500, expected_range=(0.6, 0.8)).verdict == "fail"


class TestCascadeTailFit:
    def test_constant_samples_inconclusive(self):
        report = cascade_tail_fit(np.ones(20_000))
        assert report.verdict == "inconclusive"

    def test_sample_floor(self):
        with pytest.raises(ValueError, match="1e4"):
            cascade_tail_fit(np.ones(100))

    def test_critical_borel_tail(self):
        totals, _ = sample_total_progeny_batch(GwParams(1.0, 1.0), 10**6, 100_000,
                                               RngStream(70))
        report = cascade_tail_fit(totals, expected=-0.5, tol=0.1)
        assert report.verdict == "pass"

    def test_subcritical_tail_steeper_than_one(self):
        totals, _ = sample_total_progeny_batch(GwParams(0.5, 0.5), 10**6, 100_000,
                                               RngStream(71))
        report = cascade_tail_fit(totals)
        assert report.estimate < -1.0


class TestExpLln:
    def test_unknown_rule(self):
        with pytest.raises(ValueError, match="weight rule"):
            exp_lln_check("harmonic", 10, RngStream(80))

    def test_deterministic_fixture_is_exactly_one(self):
        report = exp_lln_check("inverse-sqrt", 1000, None, exponentials=np.ones(1000))
        assert report.estimate == pytest.approx(1.0, abs=1e-12)

    def test_single_term_is_unit_exponential(self):
        vals = [exp_lln_check("inverse-sqrt", 1, RngStream(81, i)).estimate
                for i in range(10_000)]
        assert abs(np.mean(vals) - 1.0) < 0.03

    def test_large_n_concentrates(self):
        report = exp_lln_check("inverse-sqrt", 1_000_000, RngStream(82))
        assert 0.99 <= report.estimate <= 1.01
        assert report.verdict == "pass"

    def test_ci_narrows_with_n(self):
        w1 = exp_lln_check("inverse-sqrt", 10_000, RngStream(83))
        w4 = exp_lln_check("inverse-sqrt", 40_000, RngStream(84))
        width1 = w1.ci_high - w1.ci_low
        width4 = w4.ci_high - w4.ci_low
        assert width4 <= 0.6 * width1


class TestVolumeScan:
    def test_no_violation_on_nominal_counts(self):
        times = np.arange(5.0)
        counts = np.full((3, 5), int(math.pi * 900))
        report = volume_deviation_scan(times, counts, R=30.0, delta=0.5)
        assert report.verdict == "pass"
        assert report.details["n_violations"] == 0

    def test_zero_count_flagged_at_its_time(self):
        times = np.arange(3.0)
        counts = np.array([[2827, 0, 2827]])
        report = volume_deviation_scan(times, counts, R=30.0, delta=0.5)
        assert report.verdict == "fail"
        assert report.details["violation_times"] == [1.0]

    def test_threshold_scales_with_lam(self):
        times = np.arange(2.0)
        counts = np.array([[1400, 1400]])
        assert volume_deviation_scan(times, counts, 30.0, 0.5, lam=0.5).verdict == "pass"
        assert volume_deviation_scan(times, counts, 30.0, 0.5, lam=1.0).verdict == "fail"

    @pytest.mark.slow
    def test_free_field_never_abnormally_empty(self):
        times, counts = free_field_snapshots(1.0, 30.0, np.arange(0.0, 101.0, 1.0),
                                             100, RngStream(85))
        report = volume_deviation_scan(times, counts, R=30.0, delta=0.5)
        assert report.verdict == "pass"


def test_fit_loglog_slope_exact_power():
    t = np.geomspace(1, 100, 30)
    slope, se = fit_loglog_slope(t, 3.0 * t**0.7)
    assert slope == pytest.approx(0.7, abs=1e-12)
    assert se == pytest.approx(0.0, abs=1e-10)


class TestEstimatorDeterminism:
    def test_hazard_deterministic(self):
        a = hazard_estimate(2.0, 300, RngStream(900))
        b = hazard_estimate(2.0, 300, RngStream(900))
        assert a.to_dict() == b.to_dict()

    def test_refill_deterministic(self):
        a = refill_density_estimate(1.0, 3.0, 5.0, Annulus(0, 1), 200, RngStream(901))
        b = refill_density_estimate(1.0, 3.0, 5.0, Annulus(0, 1), 200, RngStream(901))
        assert a.to_dict() == b.to_dict()

    def test_entered_deterministic(self):
        a = entered_count_estimate(1.0, 5.0, 150, RngStream(902))
        b = entered_count_estimate(1.0, 5.0, 150, RngStream(902))
        assert a.to_dict() == b.to_dict()
