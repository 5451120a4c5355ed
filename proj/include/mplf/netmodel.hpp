#pragma once

// Multiphase network model: phase bookkeeping, nodal admittance assembly,
// the phase-to-phase connection matrix and the zero-load voltage profile.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/LU>

#include "mplf/types.hpp"

namespace mplf {

/********************************************************************************
 * Phases and phase pairs. Canonical order is a < b < c and ab, bc, ca.
 *******************************************************************************/

enum class Phase : std::uint8_t { a = 0, b = 1, c = 2 };

inline constexpr std::array<Phase, 3> all_phases{Phase::a, Phase::b, Phase::c};

inline char to_char(Phase p) { return static_cast<char>('a' + static_cast<int>(p)); }

inline Phase phase_from_char(char ch) {
    switch (ch) {
    case 'a': case 'A': return Phase::a;
    case 'b': case 'B': return Phase::b;
    case 'c': case 'C': return Phase::c;
    default: throw ModelError(std::string("unknown phase '") + ch + "'");
    }
}

enum class PhasePair : std::uint8_t { ab = 0, bc = 1, ca = 2 };

inline constexpr std::array<PhasePair, 3> all_pairs{PhasePair::ab, PhasePair::bc, PhasePair::ca};

/// Phase that receives the +1 entry in the connection matrix.
inline Phase first_phase(PhasePair p) {
    constexpr std::array<Phase, 3> first{Phase::a, Phase::b, Phase::c};
    return first[static_cast<int>(p)];
}

inline Phase second_phase(PhasePair p) {
    constexpr std::array<Phase, 3> second{Phase::b, Phase::c, Phase::a};
    return second[static_cast<int>(p)];
}

inline std::string to_string(PhasePair p) { return {to_char(first_phase(p)), to_char(second_phase(p))}; }

inline PhasePair pair_from_string(std::string_view s) {
    if (s.size() == 2) {
        const Phase x = phase_from_char(s[0]);
        const Phase y = phase_from_char(s[1]);
        for (PhasePair p : all_pairs) {
            if ((first_phase(p) == x && second_phase(p) == y) || (first_phase(p) == y && second_phase(p) == x))
                return p;
        }
    }
    throw ModelError("unknown phase pair '" + std::string(s) + "'");
}

class PhaseSet {
public:
    constexpr PhaseSet() = default;
    PhaseSet(std::initializer_list<Phase> phases) {
        for (Phase p : phases) insert(p);
    }

    static PhaseSet from_string(std::string_view s) {
        PhaseSet out;
        for (char ch : s) {
            const Phase p = phase_from_char(ch);
            if (out.contains(p)) throw ModelError("duplicate phase in '" + std::string(s) + "'");
            out.insert(p);
        }
        return out;
    }

    static PhaseSet abc() { return {Phase::a, Phase::b, Phase::c}; }

    void insert(Phase p) { bits_ |= bit(p); }
    bool contains(Phase p) const { return (bits_ & bit(p)) != 0; }
    bool contains(PhasePair p) const { return contains(first_phase(p)) && contains(second_phase(p)); }
    bool empty() const { return bits_ == 0; }
    int size() const { return (bits_ & 1) + ((bits_ >> 1) & 1) + ((bits_ >> 2) & 1); }
    bool is_subset_of(PhaseSet other) const { return (bits_ & ~other.bits_) == 0; }

    std::vector<Phase> list() const {
        std::vector<Phase> out;
        for (Phase p : all_phases)
            if (contains(p)) out.push_back(p);
        return out;
    }

    std::string to_string() const {
        std::string out;
        for (Phase p : list()) out.push_back(to_char(p));
        return out;
    }

    friend bool operator==(PhaseSet, PhaseSet) = default;

private:
    static constexpr std::uint8_t bit(Phase p) { return static_cast<std::uint8_t>(1u << static_cast<int>(p)); }
    std::uint8_t bits_ = 0;
};

/********************************************************************************
 * Input description handed to assemble_network.
 *******************************************************************************/

struct BusSpec {
    std::string id;
    PhaseSet phases;
    std::vector<PhasePair> delta_connections;
};

/// Pi-model branch. All blocks are k x k over `phases` in canonical order.
struct LineSpec {
    std::string from;
    std::string to;
    PhaseSet phases;
    CMatrix series_admittance;
    std::optional<CMatrix> shunt_from;
    std::optional<CMatrix> shunt_to;
};

struct SlackSpec {
    std::string id;
    PhaseSet phases;
    CVector voltages;
};

/********************************************************************************
 * Index bookkeeping.
 *******************************************************************************/

struct PhaseEntry {
    std::string bus;
    Phase phase;
};

struct DeltaEntry {
    std::string bus;
    PhasePair pair;
};

/// Bijection between (bus, phase) / (bus, pair) labels and vector positions.
class PhaseIndexMap {
public:
    PhaseIndexMap() = default;

    /// Lays out PQ buses in the given order; phases and pairs in canonical order within a bus.
    PhaseIndexMap(const std::vector<BusSpec>& pq_buses, std::string slack_id, PhaseSet slack_phases)
        : slack_id_(std::move(slack_id)), slack_phases_(slack_phases) {
        for (const BusSpec& bus : pq_buses) {
            if (bus_lookup_.count(bus.id) != 0 || bus.id == slack_id_)
                throw ModelError("duplicate bus id '" + bus.id + "'");
            if (bus.phases.empty()) throw ModelError("bus '" + bus.id + "' has no phases");
            bus_lookup_[bus.id] = bus_ids_.size();
            bus_ids_.push_back(bus.id);
            phases_per_bus_.push_back(bus.phases);
            for (Phase p : bus.phases.list()) {
                phase_lookup_[{bus.id, p}] = static_cast<Index>(phases_.size());
                phases_.push_back({bus.id, p});
            }
            std::array<bool, 3> seen{};
            for (PhasePair pair : bus.delta_connections) {
                if (!bus.phases.contains(pair))
                    throw ModelError("delta connection " + to_string(pair) + " at bus '" + bus.id +
                                     "' references a missing phase");
                if (seen[static_cast<int>(pair)])
                    throw ModelError("duplicate delta connection " + to_string(pair) + " at bus '" + bus.id + "'");
                seen[static_cast<int>(pair)] = true;
            }
            for (PhasePair pair : all_pairs) {
                if (!seen[static_cast<int>(pair)]) continue;
                delta_lookup_[{bus.id, pair}] = static_cast<Index>(deltas_.size());
                deltas_.push_back({bus.id, pair});
            }
        }
        for (Phase p : slack_phases_.list()) slack_entries_.push_back({slack_id_, p});
    }

    Index phase_count() const { return static_cast<Index>(phases_.size()); }
    Index delta_count() const { return static_cast<Index>(deltas_.size()); }
    Index slack_phase_count() const { return static_cast<Index>(slack_entries_.size()); }
    std::size_t bus_count() const { return bus_ids_.size(); }

    const std::vector<std::string>& bus_ids() const { return bus_ids_; }
    const std::vector<PhaseSet>& phases_per_bus() const { return phases_per_bus_; }
    const std::vector<PhaseEntry>& phases() const { return phases_; }
    const std::vector<DeltaEntry>& deltas() const { return deltas_; }
    const std::vector<PhaseEntry>& slack_entries() const { return slack_entries_; }
    const std::string& slack_id() const { return slack_id_; }
    PhaseSet slack_phases() const { return slack_phases_; }

    bool has_bus(const std::string& id) const { return bus_lookup_.count(id) != 0; }

    std::optional<Index> phase_index(const std::string& bus, Phase p) const {
        auto it = phase_lookup_.find({bus, p});
        if (it == phase_lookup_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<Index> delta_index(const std::string& bus, PhasePair p) const {
        auto it = delta_lookup_.find({bus, p});
        if (it == delta_lookup_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<Index> slack_index(Phase p) const {
        for (std::size_t k = 0; k < slack_entries_.size(); ++k)
            if (slack_entries_[k].phase == p) return static_cast<Index>(k);
        return std::nullopt;
    }

private:
    std::string slack_id_;
    PhaseSet slack_phases_;
    std::vector<std::string> bus_ids_;
    std::vector<PhaseSet> phases_per_bus_;
    std::vector<PhaseEntry> phases_;
    std::vector<DeltaEntry> deltas_;
    std::vector<PhaseEntry> slack_entries_;
    std::map<std::string, std::size_t> bus_lookup_;
    std::map<std::pair<std::string, Phase>, Index> phase_lookup_;
    std::map<std::pair<std::string, PhasePair>, Index> delta_lookup_;
};

/********************************************************************************
 * Connection matrix H (N_delta x N_phases) and L = |H|.
 *******************************************************************************/

struct ConnectionMatrix {
    Eigen::MatrixXi H;
    Eigen::MatrixXi L;
    /// Column of the +1 and of the -1 entry, one pair per row.
    std::vector<std::pair<Index, Index>> rows;

    Index delta_count() const { return static_cast<Index>(rows.size()); }

    CVector apply(const CVector& v) const {
        CVector out(delta_count());
        for (Index k = 0; k < delta_count(); ++k) out(k) = v(rows[k].first) - v(rows[k].second);
        return out;
    }

    CVector apply_transpose(const CVector& x, Index phase_count) const {
        CVector out = CVector::Zero(phase_count);
        for (Index k = 0; k < delta_count(); ++k) {
            out(rows[k].first) += x(k);
            out(rows[k].second) -= x(k);
        }
        return out;
    }

    RVector apply_abs(const RVector& x) const {
        RVector out(delta_count());
        for (Index k = 0; k < delta_count(); ++k) out(k) = x(rows[k].first) + x(rows[k].second);
        return out;
    }

    CMatrix dense() const { return H.cast<Complex>(); }
};

inline ConnectionMatrix build_connection_matrix(const PhaseIndexMap& index) {
    ConnectionMatrix out;
    const Index n = index.phase_count();
    const Index m = index.delta_count();
    out.H = Eigen::MatrixXi::Zero(m, n);
    out.rows.reserve(static_cast<std::size_t>(m));
    for (Index k = 0; k < m; ++k) {
        const DeltaEntry& d = index.deltas()[static_cast<std::size_t>(k)];
        auto plus = index.phase_index(d.bus, first_phase(d.pair));
        auto minus = index.phase_index(d.bus, second_phase(d.pair));
        if (!plus || !minus)
            throw ModelError("delta connection " + to_string(d.pair) + " at bus '" + d.bus +
                             "' references a missing phase");
        out.H(k, *plus) = 1;
        out.H(k, *minus) = -1;
        out.rows.emplace_back(*plus, *minus);
    }
    out.L = out.H.cwiseAbs();
    return out;
}

/********************************************************************************
 * NetworkModel
 *******************************************************************************/

/// Partitioned admittance of a network with one slack bus. Immutable once built.
class NetworkModel {
public:
    static constexpr double symmetry_tolerance = 1e-12;

    NetworkModel(CMatrix y00, CMatrix y0l, CMatrix yl0, CMatrix yll, CVector v0, PhaseIndexMap index)
        : y00_(std::move(y00)), y0l_(std::move(y0l)), yl0_(std::move(yl0)), yll_(std::move(yll)),
          v0_(std::move(v0)), index_(std::move(index)) {
        const Index n = index_.phase_count();
        const Index s = index_.slack_phase_count();
        if (n == 0) throw ModelError("network has no PQ phases");
        if (y00_.rows() != s || y00_.cols() != s || y0l_.rows() != s || y0l_.cols() != n || yl0_.rows() != n ||
            yl0_.cols() != s || yll_.rows() != n || yll_.cols() != n || v0_.size() != s)
            throw ModelError("admittance block dimensions do not match the phase index");

        CMatrix full(s + n, s + n);
        full << y00_, y0l_, yl0_, yll_;
        const double scale = std::max(full.cwiseAbs().maxCoeff(), 1e-300);
        if ((full - full.transpose()).cwiseAbs().maxCoeff() > symmetry_tolerance * scale)
            throw ModelError("admittance matrix is not symmetric");

        connections_ = build_connection_matrix(index_);

        lu_.compute(yll_);
        rcond_ = lu_.rcond();
        if (!(rcond_ > 1e3 * std::numeric_limits<double>::epsilon()))
            throw SingularModelError("load-to-load admittance block is singular (rcond = " + std::to_string(rcond_) + ")");
        yll_inverse_ = lu_.inverse();
    }

    const CMatrix& y00() const { return y00_; }
    const CMatrix& y0l() const { return y0l_; }
    const CMatrix& yl0() const { return yl0_; }
    const CMatrix& yll() const { return yll_; }
    const CVector& v0() const { return v0_; }
    const PhaseIndexMap& index() const { return index_; }
    const ConnectionMatrix& connections() const { return connections_; }

    Index phase_count() const { return index_.phase_count(); }
    Index delta_count() const { return index_.delta_count(); }

    /// Reciprocal condition estimate of the factorized load block.
    double yll_rcond() const { return rcond_; }
    const CMatrix& yll_inverse() const { return yll_inverse_; }

    CVector solve_yll(const CVector& rhs) const {
        CVector x = lu_.solve(rhs);
        x += lu_.solve(rhs - yll_ * x); // one refinement step
        return x;
    }

    /// Net phase currents i = YL0 v0 + YLL v.
    CVector currents(const CVector& v) const { return yl0_ * v0_ + yll_ * v; }

private:
    CMatrix y00_, y0l_, yl0_, yll_;
    CVector v0_;
    PhaseIndexMap index_;
    ConnectionMatrix connections_;
    Eigen::PartialPivLU<CMatrix> lu_;
    CMatrix yll_inverse_;
    double rcond_ = 0.0;
};

namespace detail {

inline bool block_is_symmetric(const CMatrix& m) {
    const double scale = m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= NetworkModel::symmetry_tolerance * std::max(scale, 1e-300);
}

} // namespace detail

/// Standard nodal assembly from pi-model branches.
inline NetworkModel assemble_network(const std::vector<BusSpec>& buses, const std::vector<LineSpec>& lines,
                                     const SlackSpec& slack) {
    if (slack.id.empty()) throw ModelError("slack bus id is empty");
    if (slack.phases.empty()) throw ModelError("slack bus has no phases");
    if (slack.voltages.size() != slack.phases.size())
        throw ModelError("slack bus has " + std::to_string(slack.phases.size()) + " phases but " +
                         std::to_string(slack.voltages.size()) + " voltages");

    std::vector<BusSpec> pq;
    for (const BusSpec& b : buses) {
        if (b.id == slack.id) {
            if (!(b.phases == slack.phases))
                throw ModelError("slack bus '" + slack.id + "' phases disagree with its bus entry");
            if (!b.delta_connections.empty())
                throw ModelError("slack bus '" + slack.id + "' cannot carry delta connections");
            continue;
        }
        pq.push_back(b);
    }
    PhaseIndexMap index(pq, slack.id, slack.phases);
    const Index s = index.slack_phase_count();
    const Index n = index.phase_count();
    const Index total = s + n;

    // Node numbering: slack phases first, then PQ phases.
    auto node_of = [&](const std::string& bus, Phase p) -> std::optional<Index> {
        if (bus == slack.id) {
            auto k = index.slack_index(p);
            if (!k) return std::nullopt;
            return *k;
        }
        auto k = index.phase_index(bus, p);
        if (!k) return std::nullopt;
        return s + *k;
    };

    CMatrix y = CMatrix::Zero(total, total);
    std::vector<std::vector<Index>> adjacency(static_cast<std::size_t>(total));

    for (std::size_t li = 0; li < lines.size(); ++li) {
        const LineSpec& line = lines[li];
        const std::string where = "line " + std::to_string(li) + " (" + line.from + " -> " + line.to + ")";
        if (line.from == line.to) throw ModelError(where + ": both ends on the same bus");
        if (line.from != slack.id && !index.has_bus(line.from)) throw ModelError(where + ": unknown bus '" + line.from + "'");
        if (line.to != slack.id && !index.has_bus(line.to)) throw ModelError(where + ": unknown bus '" + line.to + "'");
        const std::vector<Phase> ph = line.phases.list();
        const Index k = static_cast<Index>(ph.size());
        if (k == 0) throw ModelError(where + ": no phases");
        auto check_block = [&](const CMatrix& m, const char* name) {
            if (m.rows() != k || m.cols() != k)
                throw ModelError(where + ": " + name + " must be " + std::to_string(k) + "x" + std::to_string(k));
            if (!m.allFinite()) throw ModelError(where + ": " + name + " has non-finite entries");
            if (!detail::block_is_symmetric(m)) throw ModelError(where + ": " + name + " is not symmetric");
        };
        check_block(line.series_admittance, "series_admittance");
        if (line.shunt_from) check_block(*line.shunt_from, "shunt_from");
        if (line.shunt_to) check_block(*line.shunt_to, "shunt_to");

        std::vector<Index> from_nodes, to_nodes;
        for (Phase p : ph) {
            auto f = node_of(line.from, p);
            auto t = node_of(line.to, p);
            if (!f || !t) throw ModelError(where + ": phase " + std::string(1, to_char(p)) + " missing at an endpoint");
            from_nodes.push_back(*f);
            to_nodes.push_back(*t);
        }
        for (Index r = 0; r < k; ++r) {
            for (Index c = 0; c < k; ++c) {
                const Complex ys = line.series_admittance(r, c);
                y(from_nodes[r], from_nodes[c]) += ys;
                y(to_nodes[r], to_nodes[c]) += ys;
                y(from_nodes[r], to_nodes[c]) -= ys;
                y(to_nodes[r], from_nodes[c]) -= ys;
                if (line.shunt_from) y(from_nodes[r], from_nodes[c]) += (*line.shunt_from)(r, c);
                if (line.shunt_to) y(to_nodes[r], to_nodes[c]) += (*line.shunt_to)(r, c);
                if (ys != Complex(0.0, 0.0)) {
                    adjacency[from_nodes[r]].push_back(to_nodes[c]);
                    adjacency[to_nodes[c]].push_back(from_nodes[r]);
                    if (r != c) {
                        adjacency[from_nodes[r]].push_back(from_nodes[c]);
                        adjacency[to_nodes[r]].push_back(to_nodes[c]);
                    }
                }
            }
        }
    }

    // Every PQ phase must be reachable from the slack through nonzero series coupling.
    std::vector<bool> reached(static_cast<std::size_t>(total), false);
    std::queue<Index> frontier;
    for (Index k = 0; k < s; ++k) {
        reached[k] = true;
        frontier.push(k);
    }
    while (!frontier.empty()) {
        const Index u = frontier.front();
        frontier.pop();
        for (Index nb : adjacency[u]) {
            if (!reached[nb]) {
                reached[nb] = true;
                frontier.push(nb);
            }
        }
    }
    for (Index k = 0; k < n; ++k) {
        if (!reached[s + k]) {
            const PhaseEntry& e = index.phases()[static_cast<std::size_t>(k)];
            throw ModelError("bus '" + e.bus + "' phase " + std::string(1, to_char(e.phase)) +
                             " is not connected to the slack bus");
        }
    }

    return NetworkModel(y.topLeftCorner(s, s), y.topRightCorner(s, n), y.bottomLeftCorner(n, s),
                        y.bottomRightCorner(n, n), slack.voltages, std::move(index));
}

/********************************************************************************
 * Zero-load profile
 *******************************************************************************/

struct ZeroLoadProfile {
    CVector w;
    bool W_inverse_available = false;
    RVector w_abs;
    /// L|w|, one entry per delta connection.
    RVector Lw;
};

inline ZeroLoadProfile zero_load_voltage(const NetworkModel& model) {
    ZeroLoadProfile out;
    const CVector rhs = -(model.yl0() * model.v0());
    out.w = model.solve_yll(rhs);
    const double residual = inf_norm(CVector(model.yll() * out.w - rhs));
    if (residual > 1e-10 * std::max(1.0, inf_norm(rhs)))
        throw SingularModelError("zero-load solve residual " + std::to_string(residual) + " exceeds tolerance");
    out.w_abs = out.w.cwiseAbs();
    for (Index j = 0; j < out.w_abs.size(); ++j) {
        if (!(out.w_abs(j) > 0.0)) {
            const PhaseEntry& e = model.index().phases()[static_cast<std::size_t>(j)];
            throw DegenerateProfileError("zero-load voltage vanishes at bus '" + e.bus + "' phase " +
                                         std::string(1, to_char(e.phase)));
        }
    }
    out.Lw = model.connections().apply_abs(out.w_abs);
    for (Index k = 0; k < out.Lw.size(); ++k) {
        if (!(out.Lw(k) > 0.0)) throw DegenerateProfileError("L|w| vanishes at delta connection " + std::to_string(k));
    }
    out.W_inverse_available = true;
    return out;
}

} // namespace mplf
