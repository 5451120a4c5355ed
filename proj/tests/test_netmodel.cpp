#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "support/random_network.hpp"

using namespace mplf;
using namespace mplf::testing;

namespace {

PhaseIndexMap one_bus_index(PhaseSet phases, std::vector<PhasePair> pairs) {
    return PhaseIndexMap({{"b", phases, std::move(pairs)}}, "s", PhaseSet::abc());
}

} // namespace

TEST(ConnectionMatrix, FullDeltaBusGivesGammaBlock) {
    const ConnectionMatrix h = build_connection_matrix(one_bus_index(PhaseSet::abc(), {PhasePair::ab, PhasePair::bc, PhasePair::ca}));
    Eigen::MatrixXi gamma(3, 3);
    gamma << 1, -1, 0, 0, 1, -1, -1, 0, 1;
    EXPECT_EQ(h.H, gamma);
    EXPECT_EQ(h.L, gamma.cwiseAbs());
}

TEST(ConnectionMatrix, DeclarationOrderDoesNotMatter) {
    const ConnectionMatrix h = build_connection_matrix(one_bus_index(PhaseSet::abc(), {PhasePair::ca, PhasePair::ab}));
    Eigen::MatrixXi expected(2, 3);
    expected << 1, -1, 0, -1, 0, 1;
    EXPECT_EQ(h.H, expected);
}

TEST(ConnectionMatrix, TwoPhaseBusReducedRow) {
    const ConnectionMatrix h = build_connection_matrix(one_bus_index(PhaseSet{Phase::a, Phase::b}, {PhasePair::ab}));
    Eigen::MatrixXi expected(1, 2);
    expected << 1, -1;
    EXPECT_EQ(h.H, expected);
}

TEST(ConnectionMatrix, NoDeltaConnectionsGivesEmptyMatrix) {
    const ConnectionMatrix h = build_connection_matrix(one_bus_index(PhaseSet::abc(), {}));
    EXPECT_EQ(h.H.rows(), 0);
    EXPECT_EQ(h.L.rows(), 0);
    EXPECT_EQ(h.H.cols(), 3);
}

TEST(ConnectionMatrix, MissingPhaseRejected) {
    EXPECT_THROW(one_bus_index(PhaseSet{Phase::a, Phase::b}, {PhasePair::bc}), ModelError);
}

TEST(ConnectionMatrix, RowsHaveOnePlusOneMinusAndSumToZero) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const NetworkSpecs specs = random_network_specs(rng);
        const NetworkModel model = assemble_network(specs.buses, specs.lines, specs.slack);
        const Eigen::MatrixXi& h = model.connections().H;
        for (Index r = 0; r < h.rows(); ++r) {
            EXPECT_EQ((h.row(r).array() == 1).count(), 1);
            EXPECT_EQ((h.row(r).array() == -1).count(), 1);
            EXPECT_EQ((h.row(r).array() == 0).count(), h.cols() - 2);
        }
        EXPECT_EQ(h * Eigen::VectorXi::Ones(h.cols()), Eigen::VectorXi::Zero(h.rows()));
    }
}

TEST(PhaseIndexMap, ContiguousBijection) {
    PhaseIndexMap index({{"x", PhaseSet::from_string("ac"), {PhasePair::ca}}, {"y", PhaseSet::abc(), {PhasePair::bc}}},
                        "s", PhaseSet::abc());
    EXPECT_EQ(index.phase_count(), 5);
    EXPECT_EQ(*index.phase_index("x", Phase::a), 0);
    EXPECT_EQ(*index.phase_index("x", Phase::c), 1);
    EXPECT_FALSE(index.phase_index("x", Phase::b).has_value());
    EXPECT_EQ(*index.phase_index("y", Phase::c), 4);
    EXPECT_EQ(*index.delta_index("x", PhasePair::ca), 0);
    EXPECT_EQ(*index.delta_index("y", PhasePair::bc), 1);
    for (Index k = 0; k < index.phase_count(); ++k) {
        const PhaseEntry& e = index.phases()[static_cast<std::size_t>(k)];
        EXPECT_EQ(*index.phase_index(e.bus, e.phase), k);
    }
}

TEST(PhaseIndexMap, DuplicateBusRejected) {
    EXPECT_THROW(PhaseIndexMap({{"x", PhaseSet::abc(), {}}, {"x", PhaseSet::abc(), {}}}, "s", PhaseSet::abc()),
                 ModelError);
}

TEST(AssembleNetwork, SinglePhaseTwoBus) {
    const NetworkModel m = single_phase_model();
    EXPECT_EQ(m.yll()(0, 0), Complex(1.0, 0.0));
    EXPECT_EQ(m.yl0()(0, 0), Complex(-1.0, 0.0));
    EXPECT_EQ(m.y00()(0, 0), Complex(1.0, 0.0));
    EXPECT_EQ(m.y0l()(0, 0), Complex(-1.0, 0.0));
}

TEST(AssembleNetwork, ParallelLinesDoubleAdmittance) {
    std::mt19937_64 rng(3);
    const CMatrix y = random_series_admittance(rng, 3);
    std::vector<BusSpec> buses{{"1", PhaseSet::abc(), {}}};
    const SlackSpec slack{"0", PhaseSet::abc(), balanced_slack_voltage()};
    const NetworkModel one = assemble_network(buses, {{"0", "1", PhaseSet::abc(), y, {}, {}}}, slack);
    const NetworkModel two =
        assemble_network(buses, {{"0", "1", PhaseSet::abc(), y, {}, {}}, {"1", "0", PhaseSet::abc(), y, {}, {}}}, slack);
    EXPECT_LT((two.yll() - 2.0 * one.yll()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((two.yl0() - 2.0 * one.yl0()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AssembleNetwork, ZeroAdmittanceIsolatesBus) {
    std::vector<BusSpec> buses{{"1", PhaseSet{Phase::a}, {}}, {"2", PhaseSet{Phase::a}, {}}};
    CMatrix one(1, 1), zero(1, 1);
    one << 1.0;
    zero << 0.0;
    const SlackSpec slack{"0", PhaseSet{Phase::a}, CVector::Ones(1)};
    EXPECT_THROW(assemble_network(buses, {{"0", "1", PhaseSet{Phase::a}, one, {}, {}}, {"1", "2", PhaseSet{Phase::a}, zero, {}, {}}},
                                  slack),
                 ModelError);
}

TEST(AssembleNetwork, ShuntOnlyConnectionDoesNotCount) {
    std::vector<BusSpec> buses{{"1", PhaseSet{Phase::a}, {}}};
    CMatrix zero(1, 1), sh(1, 1);
    zero << 0.0;
    sh << Complex(0.0, 1.0);
    const SlackSpec slack{"0", PhaseSet{Phase::a}, CVector::Ones(1)};
    EXPECT_THROW(assemble_network(buses, {{"0", "1", PhaseSet{Phase::a}, zero, sh, sh}}, slack), ModelError);
}

TEST(AssembleNetwork, AsymmetricBlockRejected) {
    CMatrix y(2, 2);
    y << 1.0, 0.2, 0.1, 1.0;
    std::vector<BusSpec> buses{{"1", PhaseSet::from_string("ab"), {}}};
    const SlackSpec slack{"0", PhaseSet::abc(), balanced_slack_voltage()};
    EXPECT_THROW(assemble_network(buses, {{"0", "1", PhaseSet::from_string("ab"), y, {}, {}}}, slack), ModelError);
}

TEST(AssembleNetwork, LinePhaseMissingAtEndpointRejected) {
    CMatrix y = CMatrix::Identity(2, 2);
    std::vector<BusSpec> buses{{"1", PhaseSet{Phase::a}, {}}};
    const SlackSpec slack{"0", PhaseSet::abc(), balanced_slack_voltage()};
    EXPECT_THROW(assemble_network(buses, {{"0", "1", PhaseSet::from_string("ab"), y, {}, {}}}, slack), ModelError);
}

TEST(AssembleNetwork, UnknownBusRejected) {
    CMatrix y = CMatrix::Identity(1, 1);
    std::vector<BusSpec> buses{{"1", PhaseSet{Phase::a}, {}}};
    const SlackSpec slack{"0", PhaseSet{Phase::a}, CVector::Ones(1)};
    EXPECT_THROW(assemble_network(buses, {{"0", "1", PhaseSet{Phase::a}, y, {}, {}}, {"1", "9", PhaseSet{Phase::a}, y, {}, {}}},
                                  slack),
                 ModelError);
}

TEST(AssembleNetwork, SingularLoadBlockRejected) {
    // Shunts cancel the series admittance on the load side: YLL = y - y = 0.
    CMatrix y(1, 1), neg(1, 1);
    y << 1.0;
    neg << -1.0;
    std::vector<BusSpec> buses{{"1", PhaseSet{Phase::a}, {}}};
    const SlackSpec slack{"0", PhaseSet{Phase::a}, CVector::Ones(1)};
    EXPECT_THROW(assemble_network(buses, {{"0", "1", PhaseSet{Phase::a}, y, {}, neg}}, slack), SingularModelError);
}

TEST(AssembleNetwork, FullMatrixSymmetric) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const NetworkSpecs specs = random_network_specs(rng);
        const NetworkModel m = assemble_network(specs.buses, specs.lines, specs.slack);
        EXPECT_LT((m.yll() - m.yll().transpose()).cwiseAbs().maxCoeff(), 1e-12 * m.yll().cwiseAbs().maxCoeff());
        EXPECT_LT((m.yl0() - m.y0l().transpose()).cwiseAbs().maxCoeff(), 1e-12 * m.yll().cwiseAbs().maxCoeff());
    }
}

TEST(ZeroLoadVoltage, SinglePhase) {
    const NetworkModel m = single_phase_model();
    const ZeroLoadProfile w = zero_load_voltage(m);
    EXPECT_NEAR(std::abs(w.w(0) - 1.0), 0.0, 1e-15);
    EXPECT_TRUE(w.W_inverse_available);
}

TEST(ZeroLoadVoltage, BalancedLineReplicatesSlack) {
    std::mt19937_64 rng(9);
    std::vector<BusSpec> buses{{"1", PhaseSet::abc(), {PhasePair::ab}}, {"2", PhaseSet::abc(), {}}};
    const SlackSpec slack{"0", PhaseSet::abc(), balanced_slack_voltage()};
    const NetworkModel m = assemble_network(
        buses, {{"0", "1", PhaseSet::abc(), random_series_admittance(rng, 3), {}, {}},
                {"1", "2", PhaseSet::abc(), random_series_admittance(rng, 3), {}, {}}},
        slack);
    const ZeroLoadProfile w = zero_load_voltage(m);
    for (Index k = 0; k < 6; ++k) EXPECT_LT(std::abs(w.w(k) - slack.voltages(k % 3)), 1e-12);
    EXPECT_NEAR(w.Lw(0), 2.0, 1e-12);
}

TEST(ZeroLoadVoltage, SinglePhaseChain) {
    CMatrix y(1, 1);
    y << 1.0;
    std::vector<BusSpec> buses{{"1", PhaseSet{Phase::a}, {}}, {"2", PhaseSet{Phase::a}, {}}};
    const NetworkModel m = assemble_network(
        buses, {{"0", "1", PhaseSet{Phase::a}, y, {}, {}}, {"1", "2", PhaseSet{Phase::a}, y, {}, {}}},
        {"0", PhaseSet{Phase::a}, CVector::Ones(1)});
    const ZeroLoadProfile w = zero_load_voltage(m);
    EXPECT_LT(std::abs(w.w(0) - 1.0), 1e-14);
    EXPECT_LT(std::abs(w.w(1) - 1.0), 1e-14);
}

TEST(ZeroLoadVoltage, ResidualAndPositivity) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const NetworkSpecs specs = random_network_specs(rng);
        const NetworkModel m = assemble_network(specs.buses, specs.lines, specs.slack);
        const ZeroLoadProfile w = zero_load_voltage(m);
        EXPECT_LE(inf_norm(CVector(m.yll() * w.w + m.yl0() * m.v0())), 1e-10);
        EXPECT_GT(w.w_abs.minCoeff(), 0.0);
        if (w.Lw.size() > 0) EXPECT_GT(w.Lw.minCoeff(), 0.0);
    }
}

TEST(ZeroLoadVoltage, VanishingEntryRejected) {
    // Zero slack voltage makes w vanish everywhere.
    CMatrix y(1, 1);
    y << 1.0;
    const NetworkModel m = assemble_network({{"1", PhaseSet{Phase::a}, {}}}, {{"0", "1", PhaseSet{Phase::a}, y, {}, {}}},
                                            {"0", PhaseSet{Phase::a}, CVector::Zero(1)});
    EXPECT_THROW(zero_load_voltage(m), DegenerateProfileError);
}

TEST(NetworkModel, PermutationEquivariance) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        RandomCase c = random_certified_case(rng);
        NetworkSpecs shuffled = c.specs;
        std::shuffle(shuffled.buses.begin(), shuffled.buses.end(), rng);
        std::shuffle(shuffled.lines.begin(), shuffled.lines.end(), rng);
        const NetworkModel m2 = assemble_network(shuffled.buses, shuffled.lines, shuffled.slack);
        const ZeroLoadProfile w2 = zero_load_voltage(m2);

        // Map every index of the original model to the permuted model.
        const PhaseIndexMap& i1 = c.model.index();
        const PhaseIndexMap& i2 = m2.index();
        std::vector<Index> pp, pd;
        for (const PhaseEntry& e : i1.phases()) pp.push_back(*i2.phase_index(e.bus, e.phase));
        for (const DeltaEntry& e : i1.deltas()) pd.push_back(*i2.delta_index(e.bus, e.pair));

        InjectionSet s2 = InjectionSet::zero(m2);
        for (std::size_t k = 0; k < pp.size(); ++k) s2.s_wye(pp[k]) = c.s.s_wye(static_cast<Index>(k));
        for (std::size_t k = 0; k < pd.size(); ++k) s2.s_delta(pd[k]) = c.s.s_delta(static_cast<Index>(k));

        const SolveResult r1 = solve_fixed_point(c.model, c.profile, c.s);
        const SolveResult r2 = solve_fixed_point(m2, w2, s2);
        for (std::size_t a = 0; a < pp.size(); ++a) {
            EXPECT_LT(std::abs(c.profile.w(static_cast<Index>(a)) - w2.w(pp[a])), 1e-12);
            EXPECT_LT(std::abs(r1.v(static_cast<Index>(a)) - r2.v(pp[a])), 1e-9);
            for (std::size_t b = 0; b < pp.size(); ++b)
                EXPECT_LT(std::abs(c.model.yll()(static_cast<Index>(a), static_cast<Index>(b)) - m2.yll()(pp[a], pp[b])), 1e-12);
        }
        for (std::size_t k = 0; k < pd.size(); ++k)
            for (std::size_t a = 0; a < pp.size(); ++a)
                EXPECT_EQ(c.model.connections().H(static_cast<Index>(k), static_cast<Index>(a)), m2.connections().H(pd[k], pp[a]));
    }
}
