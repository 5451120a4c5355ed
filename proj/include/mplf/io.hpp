#pragma once

// JSON documents for networks, injections and result artifacts; CSV for sweeps.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mplf/analysis.hpp"

namespace mplf::io {

using nlohmann::json;

/********************************************************************************
 * Reading helpers
 *******************************************************************************/

namespace detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) { throw ParseError(path + ": " + msg); }

inline const json& field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path, std::string("missing field '") + key + "'");
    return *it;
}

inline double number(const json& j, const std::string& path) {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

inline std::string identifier(const json& j, const std::string& path) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    fail(path, "expected a string or integer id");
}

inline Complex complex(const json& j, const std::string& path) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2) return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
    if (!j.is_object()) fail(path, "expected {\"re\", \"im\"}");
    const double re = number(field(j, "re", path), path + ".re");
    const double im = j.contains("im") ? number(j["im"], path + ".im") : 0.0;
    return {re, im};
}

inline CVector complex_vector(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array");
    CVector out(static_cast<Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) out(static_cast<Index>(k)) = complex(j[k], path + "[" + std::to_string(k) + "]");
    return out;
}

inline RVector real_vector(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array");
    RVector out(static_cast<Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) out(static_cast<Index>(k)) = number(j[k], path + "[" + std::to_string(k) + "]");
    return out;
}

/// Square k x k block given row-major, either flat (k*k entries) or as k rows.
inline CMatrix complex_block(const json& j, Index k, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array");
    CMatrix out(k, k);
    const bool nested_scalar = k == 1 && j.size() == 1 && j[0].is_array() && j[0].size() == 1;
    if (static_cast<Index>(j.size()) == k * k && !nested_scalar) {
        for (Index r = 0; r < k; ++r)
            for (Index c = 0; c < k; ++c)
                out(r, c) = complex(j[static_cast<std::size_t>(r * k + c)], path + "[" + std::to_string(r * k + c) + "]");
        return out;
    }
    if (static_cast<Index>(j.size()) != k) fail(path, "expected " + std::to_string(k) + "x" + std::to_string(k) + " block");
    for (Index r = 0; r < k; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        const std::string rp = path + "[" + std::to_string(r) + "]";
        if (!row.is_array() || static_cast<Index>(row.size()) != k) fail(rp, "expected a row of " + std::to_string(k));
        for (Index c = 0; c < k; ++c) out(r, c) = complex(row[static_cast<std::size_t>(c)], rp + "[" + std::to_string(c) + "]");
    }
    return out;
}

inline PhaseSet phase_set(const json& j, const std::string& path) {
    try {
        if (j.is_string()) return PhaseSet::from_string(j.get<std::string>());
        if (j.is_array()) {
            std::string s;
            for (const json& e : j) {
                if (!e.is_string() || e.get<std::string>().size() != 1) fail(path, "expected phase letters");
                s += e.get<std::string>();
            }
            return PhaseSet::from_string(s);
        }
    } catch (const ModelError& e) {
        fail(path, e.what());
    }
    fail(path, "expected a phase string such as \"abc\"");
}

inline json parse_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(source + ": " + e.what());
    }
}

} // namespace detail

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path + ": cannot write file");
    out << text;
}

/********************************************************************************
 * Complex / matrix encoding
 *******************************************************************************/

inline json to_json(Complex z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json to_json(const CVector& v) {
    json out = json::array();
    for (Index k = 0; k < v.size(); ++k) out.push_back(to_json(v(k)));
    return out;
}

inline json to_json(const RVector& v) {
    json out = json::array();
    for (Index k = 0; k < v.size(); ++k) out.push_back(finite_or_null(v(k)));
    return out;
}

inline json to_json(const CMatrix& m) {
    json data = json::array();
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) data.push_back(to_json(m(r, c)));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline json to_json(const RMatrix& m) {
    json data = json::array();
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline CMatrix complex_matrix_from_json(const json& j, const std::string& path) {
    const Index r = detail::field(j, "rows", path).get<Index>();
    const Index c = detail::field(j, "cols", path).get<Index>();
    const json& data = detail::field(j, "data", path);
    if (!data.is_array() || static_cast<Index>(data.size()) != r * c) detail::fail(path, "data size mismatch");
    CMatrix out(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index k = 0; k < c; ++k) out(i, k) = detail::complex(data[static_cast<std::size_t>(i * c + k)], path + ".data");
    return out;
}

inline RMatrix real_matrix_from_json(const json& j, const std::string& path) {
    const Index r = detail::field(j, "rows", path).get<Index>();
    const Index c = detail::field(j, "cols", path).get<Index>();
    const json& data = detail::field(j, "data", path);
    if (!data.is_array() || static_cast<Index>(data.size()) != r * c) detail::fail(path, "data size mismatch");
    RMatrix out(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index k = 0; k < c; ++k) out(i, k) = detail::number(data[static_cast<std::size_t>(i * c + k)], path + ".data");
    return out;
}

/********************************************************************************
 * Network document
 *******************************************************************************/

struct NetworkDocument {
    std::vector<BusSpec> buses;
    std::vector<LineSpec> lines;
    SlackSpec slack;
};

inline NetworkDocument network_document_from_json(const json& doc) {
    using detail::field;
    using detail::fail;
    NetworkDocument out;
    if (!doc.is_object()) fail("network", "expected an object");

    const json& buses = field(doc, "buses", "network");
    if (!buses.is_array()) fail("buses", "expected an array");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const std::string path = "buses[" + std::to_string(i) + "]";
        BusSpec bus;
        bus.id = detail::identifier(field(buses[i], "id", path), path + ".id");
        bus.phases = detail::phase_set(field(buses[i], "phases", path), path + ".phases");
        if (buses[i].contains("delta_connections")) {
            const json& dc = buses[i]["delta_connections"];
            if (!dc.is_array()) fail(path + ".delta_connections", "expected an array");
            for (std::size_t k = 0; k < dc.size(); ++k) {
                const std::string p = path + ".delta_connections[" + std::to_string(k) + "]";
                if (!dc[k].is_string()) fail(p, "expected a phase pair such as \"ab\"");
                try {
                    bus.delta_connections.push_back(pair_from_string(dc[k].get<std::string>()));
                } catch (const ModelError& e) {
                    fail(p, e.what());
                }
            }
        }
        out.buses.push_back(std::move(bus));
    }

    const json& slack = field(doc, "slack", "network");
    if (slack.is_array()) throw ModelError("slack: multiple slack buses are not supported");
    out.slack.id = detail::identifier(field(slack, "id", "slack"), "slack.id");
    out.slack.voltages = detail::complex_vector(field(slack, "voltages", "slack"), "slack.voltages");
    if (slack.contains("phases")) {
        out.slack.phases = detail::phase_set(slack["phases"], "slack.phases");
    } else {
        bool found = false;
        for (const BusSpec& b : out.buses) {
            if (b.id == out.slack.id) {
                out.slack.phases = b.phases;
                found = true;
            }
        }
        if (!found) {
            const Index k = out.slack.voltages.size();
            if (k < 1 || k > 3) fail("slack.voltages", "expected 1 to 3 voltages");
            out.slack.phases = PhaseSet::from_string(std::string("abc").substr(0, static_cast<std::size_t>(k)));
        }
    }

    const json& lines = field(doc, "lines", "network");
    if (!lines.is_array()) fail("lines", "expected an array");
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string path = "lines[" + std::to_string(i) + "]";
        const json& l = lines[i];
        LineSpec line;
        line.from = detail::identifier(field(l, "from", path), path + ".from");
        line.to = detail::identifier(field(l, "to", path), path + ".to");
        line.phases = detail::phase_set(field(l, "phases", path), path + ".phases");
        const Index k = line.phases.size();
        line.series_admittance = detail::complex_block(field(l, "series_admittance", path), k, path + ".series_admittance");
        if (l.contains("shunt_from") && !l["shunt_from"].is_null())
            line.shunt_from = detail::complex_block(l["shunt_from"], k, path + ".shunt_from");
        if (l.contains("shunt_to") && !l["shunt_to"].is_null())
            line.shunt_to = detail::complex_block(l["shunt_to"], k, path + ".shunt_to");
        out.lines.push_back(std::move(line));
    }
    return out;
}

inline NetworkModel network_from_json(const json& doc) {
    const NetworkDocument d = network_document_from_json(doc);
    return assemble_network(d.buses, d.lines, d.slack);
}

inline NetworkModel load_network(const std::string& path) {
    const json doc = detail::parse_text(read_file(path), path);
    try {
        return network_from_json(doc);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

/********************************************************************************
 * Injection document
 *******************************************************************************/

inline InjectionSet injections_from_json(const NetworkModel& model, const json& doc) {
    using detail::field;
    using detail::fail;
    if (!doc.is_object()) fail("injections", "expected an object");
    InjectionSet out = InjectionSet::zero(model);
    const PhaseIndexMap& index = model.index();
    std::set<Index> seen_wye, seen_delta;
    if (doc.contains("wye")) {
        const json& wye = doc["wye"];
        if (!wye.is_array()) fail("wye", "expected an array");
        for (std::size_t i = 0; i < wye.size(); ++i) {
            const std::string path = "wye[" + std::to_string(i) + "]";
            const std::string bus = detail::identifier(field(wye[i], "bus", path), path + ".bus");
            const json& ph = field(wye[i], "phase", path);
            if (!ph.is_string() || ph.get<std::string>().size() != 1) fail(path + ".phase", "expected a phase letter");
            Phase p;
            try {
                p = phase_from_char(ph.get<std::string>()[0]);
            } catch (const ModelError& e) {
                fail(path + ".phase", e.what());
            }
            auto k = index.phase_index(bus, p);
            if (!k) fail(path, "bus '" + bus + "' has no PQ phase " + ph.get<std::string>());
            if (!seen_wye.insert(*k).second) fail(path, "duplicate entry");
            const double re = detail::number(field(wye[i], "re", path), path + ".re");
            const double im = wye[i].contains("im") ? detail::number(wye[i]["im"], path + ".im") : 0.0;
            out.s_wye(*k) = {re, im};
        }
    }
    if (doc.contains("delta")) {
        const json& delta = doc["delta"];
        if (!delta.is_array()) fail("delta", "expected an array");
        for (std::size_t i = 0; i < delta.size(); ++i) {
            const std::string path = "delta[" + std::to_string(i) + "]";
            const std::string bus = detail::identifier(field(delta[i], "bus", path), path + ".bus");
            const json& pr = field(delta[i], "pair", path);
            if (!pr.is_string()) fail(path + ".pair", "expected a phase pair");
            PhasePair p;
            try {
                p = pair_from_string(pr.get<std::string>());
            } catch (const ModelError& e) {
                fail(path + ".pair", e.what());
            }
            auto k = index.delta_index(bus, p);
            if (!k) fail(path, "bus '" + bus + "' has no delta connection " + pr.get<std::string>());
            if (!seen_delta.insert(*k).second) fail(path, "duplicate entry");
            const double re = detail::number(field(delta[i], "re", path), path + ".re");
            const double im = delta[i].contains("im") ? detail::number(delta[i]["im"], path + ".im") : 0.0;
            out.s_delta(*k) = {re, im};
        }
    }
    if (!out.s_wye.allFinite() || !out.s_delta.allFinite()) fail("injections", "non-finite value");
    return out;
}

inline InjectionSet load_injections(const NetworkModel& model, const std::string& path) {
    const json doc = detail::parse_text(read_file(path), path);
    try {
        return injections_from_json(model, doc);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline json to_json(const NetworkModel& model, const InjectionSet& inj) {
    json wye = json::array();
    for (Index k = 0; k < inj.s_wye.size(); ++k) {
        if (inj.s_wye(k) == Complex(0.0, 0.0)) continue;
        const PhaseEntry& e = model.index().phases()[static_cast<std::size_t>(k)];
        wye.push_back({{"bus", e.bus}, {"phase", std::string(1, to_char(e.phase))}, {"re", inj.s_wye(k).real()},
                       {"im", inj.s_wye(k).imag()}});
    }
    json delta = json::array();
    for (Index k = 0; k < inj.s_delta.size(); ++k) {
        if (inj.s_delta(k) == Complex(0.0, 0.0)) continue;
        const DeltaEntry& e = model.index().deltas()[static_cast<std::size_t>(k)];
        delta.push_back({{"bus", e.bus}, {"pair", to_string(e.pair)}, {"re", inj.s_delta(k).real()},
                         {"im", inj.s_delta(k).imag()}});
    }
    return {{"wye", wye}, {"delta", delta}};
}

/********************************************************************************
 * Result artifacts
 *******************************************************************************/

inline json labelled_phases(const NetworkModel& model, const CVector& v) {
    json out = json::array();
    for (Index k = 0; k < v.size(); ++k) {
        const PhaseEntry& e = model.index().phases()[static_cast<std::size_t>(k)];
        out.push_back({{"bus", e.bus}, {"phase", std::string(1, to_char(e.phase))}, {"re", v(k).real()},
                       {"im", v(k).imag()}, {"abs", std::abs(v(k))}});
    }
    return out;
}

inline json labelled_deltas(const NetworkModel& model, const CVector& x) {
    json out = json::array();
    for (Index k = 0; k < x.size(); ++k) {
        const DeltaEntry& e = model.index().deltas()[static_cast<std::size_t>(k)];
        out.push_back({{"bus", e.bus}, {"pair", to_string(e.pair)}, {"re", x(k).real()}, {"im", x(k).imag()}});
    }
    return out;
}

namespace detail {

inline CVector labelled_values(const json& arr, const std::string& path) {
    if (!arr.is_array()) fail(path, "expected an array");
    CVector out(static_cast<Index>(arr.size()));
    for (std::size_t k = 0; k < arr.size(); ++k) out(static_cast<Index>(k)) = complex(arr[k], path + "[" + std::to_string(k) + "]");
    return out;
}

} // namespace detail

inline json to_json(const NetworkModel& model, const SolveResult& r) {
    return {{"converged", r.converged},
            {"iterations", r.iterations},
            {"residual_inf", r.residual_inf},
            {"contraction_estimate", r.contraction_estimate},
            {"step_norms", r.step_norms},
            {"v", labelled_phases(model, r.v)},
            {"i_delta", labelled_deltas(model, r.i_delta)},
            {"i", labelled_phases(model, r.i)}};
}

inline SolveResult solve_result_from_json(const json& j) {
    using detail::field;
    SolveResult r;
    r.converged = field(j, "converged", "solve").get<bool>();
    r.iterations = field(j, "iterations", "solve").get<int>();
    r.residual_inf = detail::number(field(j, "residual_inf", "solve"), "solve.residual_inf");
    r.contraction_estimate = detail::number(field(j, "contraction_estimate", "solve"), "solve.contraction_estimate");
    r.step_norms = field(j, "step_norms", "solve").get<std::vector<double>>();
    r.v = detail::labelled_values(field(j, "v", "solve"), "solve.v");
    r.i_delta = detail::labelled_values(field(j, "i_delta", "solve"), "solve.i_delta");
    r.i = detail::labelled_values(field(j, "i", "solve"), "solve.i");
    return r;
}

inline json to_json(const XiQuantities& x) {
    return {{"xi_wye", x.xi_wye}, {"xi_delta", x.xi_delta}, {"xi_total", x.xi_total}};
}

inline XiQuantities xi_from_json(const json& j, const std::string& path) {
    return {detail::number(detail::field(j, "xi_wye", path), path), detail::number(detail::field(j, "xi_delta", path), path),
            detail::number(detail::field(j, "xi_total", path), path)};
}

inline json optional_number(const std::optional<double>& x) { return x ? finite_or_null(*x) : json(nullptr); }

inline std::optional<double> optional_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

inline json to_json(const NetworkModel& model, const Certificate& c) {
    json conditions = json::array();
    for (const ConditionCheck& k : c.conditions)
        conditions.push_back({{"name", k.name}, {"lhs", finite_or_null(k.lhs)}, {"rhs", finite_or_null(k.rhs)}, {"passed", k.passed}});
    return {{"kind", to_string(c.kind)},
            {"satisfied", c.satisfied},
            {"rho_used", c.rho_used},
            {"rho_dagger", optional_number(c.rho_dagger)},
            {"rho_max", optional_number(c.rho_max)},
            {"q", optional_number(c.q)},
            {"scan_points", c.scan_points},
            {"alpha", finite_or_null(c.margins.alpha)},
            {"beta", finite_or_null(c.margins.beta)},
            {"gamma", finite_or_null(c.margins.gamma)},
            {"xi_base", to_json(c.xi_base)},
            {"xi_difference", to_json(c.xi_difference)},
            {"xi_target", to_json(c.xi_target)},
            {"conditions", conditions},
            {"ball", {{"description", "|v_j - v_hat_j| <= rho * |w_j|"}, {"rho", c.rho_dagger ? *c.rho_dagger : c.rho_used}}},
            {"base", {{"v_hat", labelled_phases(model, c.base.v_hat)}, {"s_hat", to_json(model, c.base.s_hat)}}}};
}

inline Certificate certificate_from_json(const NetworkModel& model, const json& j) {
    using detail::field;
    Certificate c;
    const std::string kind = field(j, "kind", "certificate").get<std::string>();
    if (kind != "radius_scan" && kind != "closed_form") detail::fail("certificate.kind", "unknown kind '" + kind + "'");
    c.kind = kind == "radius_scan" ? CertificateKind::radius_scan : CertificateKind::closed_form;
    c.satisfied = field(j, "satisfied", "certificate").get<bool>();
    c.rho_used = detail::number(field(j, "rho_used", "certificate"), "certificate.rho_used");
    c.rho_dagger = optional_from_json(field(j, "rho_dagger", "certificate"));
    c.rho_max = optional_from_json(field(j, "rho_max", "certificate"));
    c.q = optional_from_json(field(j, "q", "certificate"));
    c.scan_points = field(j, "scan_points", "certificate").get<int>();
    c.margins.alpha = detail::number(field(j, "alpha", "certificate"), "certificate.alpha");
    c.margins.beta = detail::number(field(j, "beta", "certificate"), "certificate.beta");
    c.margins.gamma = detail::number(field(j, "gamma", "certificate"), "certificate.gamma");
    c.xi_base = xi_from_json(field(j, "xi_base", "certificate"), "certificate.xi_base");
    c.xi_difference = xi_from_json(field(j, "xi_difference", "certificate"), "certificate.xi_difference");
    c.xi_target = xi_from_json(field(j, "xi_target", "certificate"), "certificate.xi_target");
    for (const json& k : field(j, "conditions", "certificate"))
        c.conditions.push_back({k.at("name").get<std::string>(), detail::number(k.at("lhs"), "lhs"),
                                detail::number(k.at("rhs"), "rhs"), k.at("passed").get<bool>()});
    const json& base = field(j, "base", "certificate");
    c.base.v_hat = detail::labelled_values(field(base, "v_hat", "certificate.base"), "certificate.base.v_hat");
    c.base.s_hat = injections_from_json(model, field(base, "s_hat", "certificate.base"));
    return c;
}

inline json to_json(const LinearModel& lm) {
    return {{"kind", to_string(lm.kind)}, {"M_wye", to_json(lm.M_wye)}, {"M_delta", to_json(lm.M_delta)},
            {"a", to_json(lm.a)},         {"K_wye", to_json(lm.K_wye)}, {"K_delta", to_json(lm.K_delta)},
            {"b", to_json(lm.b)},         {"v_hat", to_json(lm.v_hat)}, {"x_hat", to_json(lm.x_hat)}};
}

inline LinearModel linear_model_from_json(const json& j) {
    using detail::field;
    LinearModel lm;
    const std::string kind = field(j, "kind", "linear_model").get<std::string>();
    if (kind != "fot" && kind != "fpl") detail::fail("linear_model.kind", "unknown kind '" + kind + "'");
    lm.kind = kind == "fot" ? LinearKind::fot : LinearKind::fpl;
    lm.M_wye = complex_matrix_from_json(field(j, "M_wye", "linear_model"), "linear_model.M_wye");
    lm.M_delta = complex_matrix_from_json(field(j, "M_delta", "linear_model"), "linear_model.M_delta");
    lm.a = detail::complex_vector(field(j, "a", "linear_model"), "linear_model.a");
    lm.K_wye = real_matrix_from_json(field(j, "K_wye", "linear_model"), "linear_model.K_wye");
    lm.K_delta = real_matrix_from_json(field(j, "K_delta", "linear_model"), "linear_model.K_delta");
    lm.b = detail::real_vector(field(j, "b", "linear_model"), "linear_model.b");
    lm.v_hat = detail::complex_vector(field(j, "v_hat", "linear_model"), "linear_model.v_hat");
    lm.x_hat = detail::real_vector(field(j, "x_hat", "linear_model"), "linear_model.x_hat");
    return lm;
}

inline json to_json(const FeasibleInterval& iv) {
    return {{"kind", to_string(iv.kind)},
            {"center", iv.center},
            {"kappa_min", iv.kappa_min},
            {"kappa_max", iv.kappa_max},
            {"min_unbounded", iv.min_unbounded},
            {"max_unbounded", iv.max_unbounded},
            {"center_passes", iv.center_passes},
            {"bracketed", iv.bracketed}};
}

inline FeasibleInterval interval_from_json(const json& j) {
    FeasibleInterval iv;
    const std::string kind = j.at("kind").get<std::string>();
    iv.kind = kind == "radius_scan" ? CertificateKind::radius_scan : CertificateKind::closed_form;
    iv.center = j.at("center").get<double>();
    iv.kappa_min = j.at("kappa_min").get<double>();
    iv.kappa_max = j.at("kappa_max").get<double>();
    iv.min_unbounded = j.at("min_unbounded").get<bool>();
    iv.max_unbounded = j.at("max_unbounded").get<bool>();
    iv.center_passes = j.at("center_passes").get<bool>();
    iv.bracketed = j.at("bracketed").get<bool>();
    return iv;
}

/********************************************************************************
 * Sweep CSV
 *******************************************************************************/

namespace detail {

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

} // namespace detail

inline std::string sweep_csv(const ContinuationResult& r) {
    std::string out = "kappa,cert_pass,rho_ddagger,rho_dagger,solver_iters,fot_err,fpl_err\n";
    for (std::size_t k = 0; k < r.kappas.size(); ++k) {
        const Certificate& cf = r.closed_form[k];
        out += detail::fmt(r.kappas[k]);
        out += ',';
        out += r.certificates[k].satisfied ? "1" : "0";
        out += ',';
        out += cf.conditions.empty() || !cf.conditions[0].passed ? std::string() : detail::fmt(cf.rho_used);
        out += ',';
        out += detail::fmt(cf.rho_dagger);
        out += ',';
        out += r.solutions[k] ? std::to_string(r.solutions[k]->iterations) : std::string();
        out += ',';
        out += detail::fmt(r.fot_errors[k]);
        out += ',';
        out += detail::fmt(r.fpl_errors[k]);
        out += '\n';
    }
    return out;
}

} // namespace mplf::io
