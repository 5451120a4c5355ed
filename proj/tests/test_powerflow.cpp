#include <random>

#include <gtest/gtest.h>

#include "support/random_network.hpp"

using namespace mplf;
using namespace mplf::testing;

TEST(Residual, ZeroLoadPointIsExact) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const NetworkSpecs specs = random_network_specs(rng);
        const NetworkModel m = assemble_network(specs.buses, specs.lines, specs.slack);
        const ZeroLoadProfile w = zero_load_voltage(m);
        EXPECT_LT(inf_norm(power_flow_residual(m, w, w.w, InjectionSet::zero(m))), 1e-10);
    }
}

TEST(Residual, ScaledZeroLoadVoltageIsNotASolution) {
    const NetworkModel m = single_phase_model();
    const ZeroLoadProfile w = zero_load_voltage(m);
    EXPECT_GT(inf_norm(power_flow_residual(m, w, CVector(1.1 * w.w), InjectionSet::zero(m))), 1e-3);
}

TEST(Residual, MatchesDirectFormula) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        RandomCase c = random_certified_case(rng);
        const CVector v = c.profile.w * Complex(0.97, 0.01);
        EXPECT_NEAR(inf_norm(power_flow_residual(c.model, c.profile, v, c.s)), reference_residual(c.model, c.s, v), 1e-12);
    }
}

TEST(Residual, CollapsedDeltaVoltageRejected) {
    std::vector<BusSpec> buses{{"1", PhaseSet::from_string("ab"), {PhasePair::ab}}};
    const NetworkModel m = assemble_network(
        buses, {{"0", "1", PhaseSet::from_string("ab"), CMatrix::Identity(2, 2), {}, {}}},
        {"0", PhaseSet::abc(), balanced_slack_voltage()});
    const ZeroLoadProfile w = zero_load_voltage(m);
    InjectionSet s = InjectionSet::zero(m);
    s.s_delta(0) = -0.1;
    CVector v(2);
    v << 0.5, 0.5;
    EXPECT_THROW(power_flow_residual(m, w, v, s), DegenerateVoltageError);
    EXPECT_THROW(fixed_point_map(m, w, s, v), DegenerateVoltageError);
    // Without a delta load the collapsed pair is harmless.
    EXPECT_NO_THROW(fixed_point_map(m, w, InjectionSet::zero(m), v));
}

TEST(FixedPointMap, ZeroInjectionReturnsW) {
    std::mt19937_64 rng(4);
    RandomCase c = random_certified_case(rng);
    const CVector v = 0.9 * c.profile.w;
    EXPECT_LT(inf_norm(CVector(fixed_point_map(c.model, c.profile, InjectionSet::zero(c.model), v) - c.profile.w)), 1e-15);
}

TEST(FixedPointMap, SinglePhaseValue) {
    const NetworkModel m = single_phase_model();
    const ZeroLoadProfile w = zero_load_voltage(m);
    const CVector g = fixed_point_map(m, w, single_phase_injection(-0.1), CVector::Ones(1));
    EXPECT_NEAR(g(0).real(), 0.9, 1e-15);
    EXPECT_NEAR(g(0).imag(), 0.0, 1e-15);
}

TEST(FixedPointMap, TwoPhaseDeltaBusMatchesSubstitution) {
    // Bus {a,b} with a single ab delta load; y = diag(2, 3) plus mutual 0.5, v0 balanced.
    CMatrix y(2, 2);
    y << Complex(2.0, -4.0), Complex(-0.5, 1.0), Complex(-0.5, 1.0), Complex(3.0, -5.0);
    std::vector<BusSpec> buses{{"1", PhaseSet::from_string("ab"), {PhasePair::ab}}};
    const NetworkModel m = assemble_network(buses, {{"0", "1", PhaseSet::from_string("ab"), y, {}, {}}},
                                            {"0", PhaseSet::abc(), balanced_slack_voltage()});
    const ZeroLoadProfile w = zero_load_voltage(m);
    InjectionSet s = InjectionSet::zero(m);
    s.s_delta(0) = Complex(-0.3, -0.1);
    CVector v(2);
    v << std::polar(0.98, -0.02), std::polar(0.97, -2.12);

    // Hand substitution: YLL = y, YL0 = -y on phases a,b; w = (v0_a, v0_b); H = [1, -1].
    const CVector v0 = balanced_slack_voltage();
    const Complex d = std::conj(v(0) - v(1));
    const Complex idelta = std::conj(s.s_delta(0)) / d;
    CVector rhs(2);
    rhs << idelta, -idelta;
    CVector expected = v0.head(2) + CMatrix(y.inverse()) * rhs;

    const CVector g = fixed_point_map(m, w, s, v);
    EXPECT_LT(inf_norm(CVector(g - expected)), 1e-14);
    EXPECT_LT(inf_norm(CVector(g - reference_fixed_point_map(m, s, v))), 1e-14);
}

TEST(FixedPointMap, RandomNetworksMatchDenseFormula) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        RandomCase c = random_certified_case(rng);
        const CVector v = c.profile.w * Complex(0.95, -0.02);
        EXPECT_LT(inf_norm(CVector(fixed_point_map(c.model, c.profile, c.s, v) - reference_fixed_point_map(c.model, c.s, v))),
                  1e-12);
    }
}

TEST(SolveFixedPoint, ZeroInjectionConvergesInOneStep) {
    std::mt19937_64 rng(7);
    RandomCase c = random_certified_case(rng);
    const SolveResult r = solve_fixed_point(c.model, c.profile, InjectionSet::zero(c.model));
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_LT(inf_norm(CVector(r.v - c.profile.w)), 1e-15);
}

TEST(SolveFixedPoint, SinglePhaseMatchesQuadratic) {
    const NetworkModel m = single_phase_model();
    const ZeroLoadProfile w = zero_load_voltage(m);
    const SolveResult r = solve_fixed_point(m, w, single_phase_injection(-0.1));
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.v(0).real(), quadratic_solution(-0.1), 1e-9);
    EXPECT_NEAR(r.v(0).real(), 0.8872983346, 1e-9);
    EXPECT_NEAR(r.v(0).imag(), 0.0, 1e-12);
    EXPECT_LE(r.residual_inf, 1e-10);
    EXPECT_LT(r.contraction_estimate, 1.0);
}

TEST(SolveFixedPoint, BeyondLoadabilityDoesNotConverge) {
    const NetworkModel m = single_phase_model();
    const ZeroLoadProfile w = zero_load_voltage(m);
    try {
        solve_fixed_point(m, w, single_phase_injection(-0.3));
        FAIL() << "expected NonConvergenceError";
    } catch (const NonConvergenceError& e) {
        EXPECT_EQ(e.step_norms().size(), 1000u);
        EXPECT_EQ(e.last_iterate().size(), 1);
    }
}

TEST(SolveFixedPoint, CurrentsFollowFromVoltages) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        RandomCase c = random_certified_case(rng);
        const SolveResult r = solve_fixed_point(c.model, c.profile, c.s);
        ASSERT_TRUE(r.converged);
        EXPECT_LT(inf_norm(CVector(r.i - (c.model.yl0() * c.model.v0() + c.model.yll() * r.v))), 1e-14);
        const CVector hv = dense_h(c.model) * r.v;
        for (Index k = 0; k < hv.size(); ++k) EXPECT_LT(std::abs(r.i_delta(k) - std::conj(c.s.s_delta(k) / hv(k))), 1e-12);
    }
}

TEST(SolveFixedPoint, ConvergedSolutionIsAFixedPoint) {
    std::mt19937_64 rng(9);
    const FixedPointOptions opts;
    for (int trial = 0; trial < 50; ++trial) {
        RandomCase c = random_certified_case(rng);
        const SolveResult r = solve_fixed_point(c.model, c.profile, c.s, std::nullopt, opts);
        ASSERT_TRUE(r.converged);
        EXPECT_LE(r.residual_inf, opts.tol_residual);
        EXPECT_LE(inf_norm(CVector(fixed_point_map(c.model, c.profile, c.s, r.v) - r.v)), 10.0 * opts.tol_step);
        EXPECT_LE(reference_residual(c.model, c.s, r.v), opts.tol_residual);
    }
}

TEST(SolveFixedPoint, InvalidOptionsRejected) {
    const NetworkModel m = single_phase_model();
    const ZeroLoadProfile w = zero_load_voltage(m);
    FixedPointOptions opts;
    opts.tol_step = 0.0;
    EXPECT_THROW(solve_fixed_point(m, w, single_phase_injection(-0.1), std::nullopt, opts), ModelError);
}

TEST(SolveFixedPoint, WrongInjectionLengthRejected) {
    const NetworkModel m = single_phase_model();
    const ZeroLoadProfile w = zero_load_voltage(m);
    EXPECT_THROW(solve_fixed_point(m, w, InjectionSet{CVector::Zero(2), CVector(0)}), ModelError);
}

TEST(SolveFixedPoint, SlackPowerBalance) {
    // Power drawn from the slack equals the PQ injections taken out plus losses in the lines,
    // which is the real part of sum_j v_j conj(i_j) over all nodes.
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        RandomCase c = random_certified_case(rng);
        const SolveResult r = solve_fixed_point(c.model, c.profile, c.s);
        const CVector i0 = c.model.y00() * c.model.v0() + c.model.y0l() * r.v;
        const Complex slack_power = (c.model.v0().array() * i0.conjugate().array()).sum();
        const Complex pq_power = (r.v.array() * r.i.conjugate().array()).sum();
        const Complex injected = c.s.s_wye.sum() + c.s.s_delta.sum();
        EXPECT_LT(std::abs(pq_power - injected), 1e-8);
        // Total complex power into the network is absorbed by the branches.
        CVector all_v(c.model.v0().size() + r.v.size());
        all_v << c.model.v0(), r.v;
        CMatrix y(all_v.size(), all_v.size());
        y << c.model.y00(), c.model.y0l(), c.model.yl0(), c.model.yll();
        const Complex absorbed = (all_v.array() * (y * all_v).conjugate().array()).sum();
        EXPECT_LT(std::abs(slack_power + pq_power - absorbed), 1e-10);
    }
}

TEST(NewtonOracle, SinglePhase) {
    const NetworkModel m = single_phase_model();
    const ZeroLoadProfile w = zero_load_voltage(m);
    const SolveResult r = oracle::newton_oracle(m, w, single_phase_injection(-0.1), w.w);
    EXPECT_NEAR(r.v(0).real(), 0.8872983346, 1e-9);
}

TEST(NewtonOracle, ZeroInjectionReturnsW) {
    std::mt19937_64 rng(12);
    RandomCase c = random_certified_case(rng);
    const SolveResult r = oracle::newton_oracle(c.model, c.profile, InjectionSet::zero(c.model), c.profile.w);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_LT(inf_norm(CVector(r.v - c.profile.w)), 1e-14);
}

TEST(NewtonOracle, AgreesWithFixedPointOnMixedThreeBus) {
    std::mt19937_64 rng(13);
    int mixed = 0;
    for (int trial = 0; trial < 40; ++trial) {
        NetworkSpecs specs = random_network_specs(rng, 3);
        const NetworkModel m = assemble_network(specs.buses, specs.lines, specs.slack);
        if (m.delta_count() == 0) continue;
        ++mixed;
        const ZeroLoadProfile w = zero_load_voltage(m);
        const InjectionSet s = scale_to_xi(m, w, random_injections(rng, m), 0.2);
        const SolveResult a = solve_fixed_point(m, w, s);
        const SolveResult b = oracle::newton_oracle(m, w, s, w.w);
        EXPECT_LT(inf_norm(CVector(a.v - b.v)), 1e-8);
        EXPECT_LT(inf_norm(CVector(a.i_delta - b.i_delta)), 1e-8);
    }
    EXPECT_GT(mixed, 5);
}

TEST(NewtonOracle, BeyondLoadabilityFails) {
    const NetworkModel m = single_phase_model();
    const ZeroLoadProfile w = zero_load_voltage(m);
    EXPECT_THROW(oracle::newton_oracle(m, w, single_phase_injection(-0.3), w.w), Error);
}
