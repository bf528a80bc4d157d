#pragma once

#include "reluflow/criteria.hpp"
#include "reluflow/deep.hpp"
#include "reluflow/flow.hpp"
#include "reluflow/landscape.hpp"

#include "json.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace reluflow {

using Json = nlohmann::ordered_json;

/// Round-trip decimal form used in every CSV and JSON artifact.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline Json to_json(const Vector& v) {
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Json to_json(const std::vector<Index>& v) {
    Json a = Json::array();
    for (Index i : v) a.push_back(i);
    return a;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StructuralError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StructuralError("cannot write '" + path + "'");
    out << content;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace detail {

inline double number(const Json& j, const char* what) {
    if (!j.is_number()) throw StructuralError(std::string(what) + " must be a number");
    return j.get<double>();
}

inline Json parse(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw StructuralError(std::string("malformed JSON: ") + e.what());
    }
}

}  // namespace detail

inline Dataset dataset_from_json(const Json& j) {
    if (!j.is_object()) throw StructuralError("dataset must be a JSON object");
    for (const char* key : {"d", "n", "x", "y"}) {
        if (!j.contains(key)) throw StructuralError(std::string("dataset is missing '") + key + "'");
    }
    const auto d = j["d"].get<long long>();
    const auto n = j["n"].get<long long>();
    if (d < 1 || n < 1) throw StructuralError("dataset needs d >= 1 and n >= 1");
    const Json& xs = j["x"];
    const Json& ys = j["y"];
    if (!xs.is_array() || static_cast<long long>(xs.size()) != n) {
        throw StructuralError("'x' must hold n columns");
    }
    if (!ys.is_array() || static_cast<long long>(ys.size()) != n) {
        throw StructuralError("'y' must hold n labels");
    }
    Matrix x(d, n);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        const Json& col = xs[static_cast<std::size_t>(i)];
        if (!col.is_array() || static_cast<long long>(col.size()) != d) {
            throw StructuralError("column " + std::to_string(i) + " must have length d");
        }
        for (Index k = 0; k < d; ++k) x(k, i) = detail::number(col[static_cast<std::size_t>(k)], "input");
        y(i) = detail::number(ys[static_cast<std::size_t>(i)], "label");
    }
    AssumptionSet declared;
    if (j.contains("assumptions")) {
        for (const auto& a : j["assumptions"]) declared.insert(assumption_from_string(a.get<std::string>()));
    }
    return Dataset(x, y, declared);
}

inline Dataset parse_dataset(const std::string& text) { return dataset_from_json(detail::parse(text)); }
inline Dataset load_dataset(const std::string& path) { return parse_dataset(read_file(path)); }

inline Json dataset_to_json(const Dataset& ds) {
    Json j;
    j["d"] = ds.d();
    j["n"] = ds.n();
    Json xs = Json::array();
    for (Index i = 0; i < ds.n(); ++i) xs.push_back(to_json(Vector(ds.input(i))));
    j["x"] = xs;
    j["y"] = to_json(ds.y());
    Json as = Json::array();
    for (auto a : ds.declared().list()) as.push_back(std::string(to_string(a)));
    j["assumptions"] = as;
    return j;
}

/// `{"weights": [[[row], ...], ...]}`, layer 1 first.
inline DeepNet net_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("weights") || !j["weights"].is_array()) {
        throw StructuralError("network JSON needs a 'weights' array");
    }
    std::vector<Matrix> ws;
    for (const auto& layer : j["weights"]) {
        if (!layer.is_array() || layer.empty()) throw StructuralError("weight matrix must be a nonempty array");
        const std::size_t rows = layer.size();
        const std::size_t cols = layer[0].size();
        Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
        for (std::size_t r = 0; r < rows; ++r) {
            if (!layer[r].is_array() || layer[r].size() != cols) throw StructuralError("ragged weight matrix");
            for (std::size_t c = 0; c < cols; ++c) {
                m(static_cast<Index>(r), static_cast<Index>(c)) = detail::number(layer[r][c], "weight");
            }
        }
        ws.push_back(std::move(m));
    }
    return DeepNet(std::move(ws));
}

inline DeepNet parse_net(const std::string& text) { return net_from_json(detail::parse(text)); }

inline Json net_to_json(const DeepNet& net) {
    Json layers = Json::array();
    for (const auto& w : net.weights()) {
        Json m = Json::array();
        for (Index r = 0; r < w.rows(); ++r) m.push_back(to_json(Vector(w.row(r).transpose())));
        layers.push_back(m);
    }
    Json j;
    j["weights"] = layers;
    return j;
}

/// t, w_1..w_d, loss, norm, g, pattern. The pattern column is the segment's
/// pattern, so event rows carry the pattern of the segment they start.
inline std::string trajectory_csv(const Trajectory& tr, int samples_per_segment = 50) {
    std::ostringstream out;
    out << "t";
    for (Index k = 0; k < tr.ds.d(); ++k) out << ",w_" << (k + 1);
    out << ",loss,norm,g,pattern\n";
    for (const auto& s : norm_profile(tr, samples_per_segment)) {
        const Vector w = tr.point_at(s.t);
        out << fmt(s.t);
        for (Index k = 0; k < w.size(); ++k) out << ',' << fmt(w(k));
        out << ',' << fmt(s.loss) << ',' << fmt(s.norm) << ',' << fmt(s.g) << ','
            << tr.segment_at(s.t).pattern.str() << '\n';
    }
    return out.str();
}

inline std::string events_jsonl(const Trajectory& tr) {
    std::string out;
    for (const auto& e : tr.events) {
        Json j;
        j["t"] = e.t;
        j["index"] = e.index;
        j["kind"] = to_string(e.kind);
        j["point"] = to_json(e.point);
        out += j.dump() + "\n";
    }
    return out;
}

inline Json trajectory_summary(const Trajectory& tr) {
    Json j;
    j["linear"] = tr.linear;
    j["terminal"] = to_string(tr.terminal);
    j["terminal_point"] = to_json(tr.terminal_point);
    j["terminal_pattern"] = tr.segments.back().pattern.str();
    j["loss"] = tr.linear ? linear_loss(tr.ds, tr.terminal_point) : loss(tr.ds, tr.terminal_point);
    j["limit_on_boundary"] = tr.limit_on_boundary;
    j["gradient_norm"] = tr.gradient_norm;
    j["segments"] = tr.segments.size();
    j["events"] = tr.events.size();
    j["end_time"] = tr.end_time();
    j["revisited"] = to_json(revisit_report(tr).revisited);
    return j;
}

inline std::string census_jsonl(const MinimaCensus& census) {
    std::string out;
    for (std::size_t k = 0; k < census.minima.size(); ++k) {
        const auto& m = census.minima[k];
        Json j;
        j["pattern"] = m.pattern.str();
        j["point"] = to_json(m.point);
        j["loss"] = m.loss;
        j["support"] = to_json(m.pattern.active());
        j["contained"] = m.contained;
        j["rank"] = m.rank;
        j["margin"] = m.margin;
        j["global"] = static_cast<Index>(k) == census.global_index;
        out += j.dump() + "\n";
    }
    return out;
}

/// Per-index no-deactivation flags, per-minimum exclusion flags and the
/// B-condition values at every non-sliding crossing of the flow from w0.
/// w_gm is only used when the data can be interpolated.
inline Json certificate_json(const Dataset& ds, const Vector& w0, const MinimaCensus& census,
                             const Trajectory& tr) {
    Json j;
    j["w0"] = to_json(w0);
    const Vector w_gm = least_squares(ds);
    const bool interpolating = loss(ds, w_gm) <= 1e-10;
    j["interpolating"] = interpolating;
    if (interpolating) {
        j["w_gm"] = to_json(w_gm);
        Json nd = Json::array();
        for (Index i = 0; i < ds.n(); ++i) {
            Json e;
            e["index"] = i;
            const bool active = ds.input(i).dot(w0) >= 0.0;
            e["active"] = active;
            e["certified"] = active && no_deactivation_certificate(ds, w0, w_gm, i);
            nd.push_back(e);
        }
        j["no_deactivation"] = nd;
        Json ex = Json::array();
        for (const auto& e : exclusion_report(ds, w0, w_gm, census).entries) {
            Json r;
            r["pattern"] = census.minima[static_cast<std::size_t>(e.minimum)].pattern.str();
            r["vacuous"] = e.vacuous;
            r["lhs"] = e.vacuous ? Json() : Json(e.active_lhs);
            r["literal_lhs"] = e.vacuous ? Json() : Json(e.literal_lhs);
            r["rhs"] = e.rhs;
            r["excluded"] = e.excluded;
            r["excluded_literal"] = e.excluded_literal;
            ex.push_back(r);
        }
        j["exclusion"] = ex;
    }
    Json cr = Json::array();
    for (std::size_t k = 0; k < tr.events.size(); ++k) {
        const auto& e = tr.events[k];
        Json r;
        r["t"] = e.t;
        r["index"] = e.index;
        r["kind"] = to_string(e.kind);
        if (e.kind == EventKind::Sliding) {
            r["skipped"] = "sliding";
        } else {
            try {
                const auto b = check_B_conditions(crossing_context(tr, k));
                r["b1"] = b.b1;
                r["b1_lhs"] = b.b1_lhs;
                r["b1_rhs"] = b.b1_rhs;
                r["b2"] = b.b2;
                r["b2_lhs"] = b.b2_lhs;
                r["b2_rhs"] = b.b2_rhs;
                r["b3"] = b.b3;
                r["b4"] = b.b4;
                r["b4_value"] = b.b4_value;
            } catch (const PreconditionError&) {
                r["skipped"] = "sliding";
            }
        }
        cr.push_back(r);
    }
    j["crossings"] = cr;
    return j;
}

}  // namespace reluflow
