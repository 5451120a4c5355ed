#include <random>

#include <gtest/gtest.h>

#include "support/random_network.hpp"

using namespace mplf;
using namespace mplf::testing;

namespace {

struct SinglePhase {
    NetworkModel model = single_phase_model();
    ZeroLoadProfile w = zero_load_voltage(model);
    BasePoint base = BasePoint::zero_load(model, w);
};

} // namespace

TEST(FeasibleInterval, ZeroReferenceIsUnbounded) {
    SinglePhase p;
    IntervalOptions opts;
    opts.kappa_bound = 10.0;
    const FeasibleInterval iv = feasible_interval(p.model, p.w, p.base, single_phase_injection(0.0), CertificateKind::closed_form, opts);
    EXPECT_TRUE(iv.max_unbounded);
    EXPECT_TRUE(iv.min_unbounded);
    EXPECT_EQ(iv.kappa_max, 10.0);
    EXPECT_EQ(iv.kappa_min, -10.0);
}

TEST(FeasibleInterval, SinglePhaseClosedForm) {
    SinglePhase p;
    IntervalOptions opts;
    const FeasibleInterval iv = feasible_interval(p.model, p.w, p.base, single_phase_injection(-0.1), CertificateKind::closed_form, opts);
    EXPECT_NEAR(iv.kappa_max, 2.5, opts.tol_kappa);
    EXPECT_LE(iv.kappa_max, 2.5);
    EXPECT_NEAR(iv.kappa_min, -2.5, opts.tol_kappa);
    EXPECT_FALSE(iv.bracketed);
    EXPECT_TRUE(iv.center_passes);
}

TEST(FeasibleInterval, SinglePhaseRadiusScan) {
    SinglePhase p;
    const FeasibleInterval iv = feasible_interval(p.model, p.w, p.base, single_phase_injection(-0.1), CertificateKind::radius_scan);
    // Self-mapping allows 0.1 kappa <= 1/4; contraction at rho = 1/2 is borderline, so the grid stops just short.
    EXPECT_LE(iv.kappa_max, 2.5);
    EXPECT_GT(iv.kappa_max, 2.45);
    EXPECT_TRUE(iv.bracketed);
}

TEST(FeasibleInterval, ClosedFormMonotoneFromZeroLoad) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        RandomCase c = random_certified_case(rng);
        const BasePoint base = BasePoint::zero_load(c.model, c.profile);
        const FeasibleInterval iv = feasible_interval(c.model, c.profile, base, c.s, CertificateKind::closed_form);
        for (double k = 0.0; k < 1.5 * iv.kappa_max; k += iv.kappa_max / 20.0) {
            const bool pass = certify_closed_form(c.model, c.profile, base, k * c.s).satisfied;
            EXPECT_EQ(pass, k <= iv.kappa_max + 1e-3) << "kappa " << k;
        }
        EXPECT_GE(iv.kappa_max, 1.0);
    }
}

TEST(RecenteredInterval, AtZeroReproducesFeasibleInterval) {
    std::mt19937_64 rng(2);
    RandomCase c = random_certified_case(rng);
    const FeasibleInterval a = feasible_interval(c.model, c.profile, BasePoint::zero_load(c.model, c.profile), c.s,
                                                 CertificateKind::radius_scan);
    const RecenteredInterval b = recentered_interval(c.model, c.profile, c.s, 0.0, CertificateKind::radius_scan);
    EXPECT_EQ(a.kappa_min, b.interval.kappa_min);
    EXPECT_EQ(a.kappa_max, b.interval.kappa_max);
}

TEST(RecenteredInterval, ContainsBase) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        RandomCase c = random_certified_case(rng);
        for (CertificateKind kind : {CertificateKind::closed_form, CertificateKind::radius_scan}) {
            const RecenteredInterval r = recentered_interval(c.model, c.profile, c.s, 1.0, kind);
            EXPECT_TRUE(r.interval.center_passes);
            EXPECT_GE(r.interval.kappa_max, 1.0);
            EXPECT_LE(r.interval.kappa_min, 1.0);
            EXPECT_TRUE(r.interval.bracketed);
        }
    }
}

TEST(RecenteredInterval, PropagatesNonConvergence) {
    SinglePhase p;
    EXPECT_THROW(recentered_interval(p.model, p.w, single_phase_injection(-0.1), 3.0, CertificateKind::closed_form),
                 NonConvergenceError);
}

TEST(LinearErrorSweep, InterpolationPoints) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        RandomCase c = random_certified_case(rng);
        const std::vector<double> grid = kappa_grid(-1.5, 1.5, 31);
        const ContinuationResult r = linear_error_sweep(c.model, c.profile, c.s, 1.0, grid);
        ASSERT_EQ(r.kappas.size(), 31u);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            ASSERT_TRUE(r.fot_errors[k].has_value()) << r.failures[k];
            if (std::abs(grid[k] - 1.0) < 1e-12) {
                EXPECT_LT(*r.fot_errors[k], 1e-9);
                EXPECT_LT(*r.fpl_errors[k], 1e-9);
            }
            if (std::abs(grid[k]) < 1e-12) EXPECT_LT(*r.fpl_errors[k], 1e-12);
        }
    }
}

TEST(LinearErrorSweep, FotErrorQuadraticNearBase) {
    std::mt19937_64 rng(5);
    RandomCase c = random_certified_case(rng, 5, 0.3, 0.6);
    const std::vector<double> grid{1.1, 1.01, 1.001};
    const ContinuationResult r = linear_error_sweep(c.model, c.profile, c.s, 1.0, grid);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double ratio = *r.fot_errors[k] / *r.fot_errors[k + 1];
        EXPECT_GT(ratio, 30.0); // roughly 100 for a quadratic error
    }
}

TEST(LinearErrorSweep, RecordsFailuresAndContinues) {
    SinglePhase p;
    const std::vector<double> grid = kappa_grid(0.0, 4.0, 9);
    const ContinuationResult r = linear_error_sweep(p.model, p.w, single_phase_injection(-0.1), 1.0, grid);
    // Beyond kappa = 2.5 the single-phase case has no solution.
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (grid[k] <= 2.0) EXPECT_TRUE(r.solutions[k].has_value());
        if (grid[k] >= 3.0) {
            EXPECT_FALSE(r.solutions[k].has_value());
            EXPECT_FALSE(r.failures[k].empty());
        }
    }
}

TEST(LinearErrorSweep, ParallelSegmentsAgree) {
    std::mt19937_64 rng(6);
    RandomCase c = random_certified_case(rng);
    const std::vector<double> grid = kappa_grid(-1.5, 1.5, 21);
    SweepOptions one, three;
    three.jobs = 3;
    const ContinuationResult a = linear_error_sweep(c.model, c.profile, c.s, 1.0, grid, one);
    const ContinuationResult b = linear_error_sweep(c.model, c.profile, c.s, 1.0, grid, three);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        ASSERT_TRUE(a.fot_errors[k] && b.fot_errors[k]);
        EXPECT_NEAR(*a.fot_errors[k], *b.fot_errors[k], 1e-9);
        EXPECT_NEAR(*a.fpl_errors[k], *b.fpl_errors[k], 1e-9);
        EXPECT_EQ(a.certificates[k].satisfied, b.certificates[k].satisfied);
    }
}

TEST(KappaGrid, Endpoints) {
    const std::vector<double> g = kappa_grid(-1.5, 1.5, 61);
    ASSERT_EQ(g.size(), 61u);
    EXPECT_EQ(g.front(), -1.5);
    EXPECT_EQ(g.back(), 1.5);
    EXPECT_NEAR(g[30], 0.0, 1e-15);
    EXPECT_THROW(kappa_grid(1.0, -1.0, 3), ModelError);
}
