#pragma once

#include "reluflow/io.hpp"
#include "reluflow/rng.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace reluflow {

enum class ExpectKind {
    EventSequence,       // exact (index, kind) sequence, or a subsequence when `contains`
    NoRevisit,
    TerminalAtPattern,   // terminal within tol of the pattern's piece minimizer set
    TerminalAtLeastSquares,
    TerminalMatchesLinear,
    TerminalIsGlobal,    // census global minimum
    TerminalIsLocal,     // a census minimum other than the global one
    DistinctTerminals,   // runs `run` and `other` end further than tol apart
    LinearAtMinNorm,     // linear terminal within tol of H^+ q
    CoincideBeforeEvent, // ReLU and linear flows agree up to the first event
    LossMonotone,
    GdMatchesEvents,     // only evaluated with the gd engine
};

struct Expectation {
    ExpectKind kind = ExpectKind::NoRevisit;
    std::size_t run = 0;
    std::size_t other = 0;
    std::vector<std::pair<Index, EventKind>> events;
    bool contains = false;
    std::string pattern;
    double tol = 1e-6;

    std::string describe() const {
        std::string r = "run " + std::to_string(run) + ": ";
        auto seq = [&] {
            std::string s;
            for (const auto& [i, k] : events) s += (s.empty() ? "" : ", ") + to_string(k) + " " + std::to_string(i);
            return s.empty() ? std::string("none") : s;
        };
        switch (kind) {
            case ExpectKind::EventSequence:
                return r + (contains ? "events contain [" : "events are [") + seq() + "]";
            case ExpectKind::NoRevisit: return r + "no datum reactivated";
            case ExpectKind::TerminalAtPattern: return r + "terminal at pattern-" + pattern + " minimizer";
            case ExpectKind::TerminalAtLeastSquares: return r + "terminal at all-data least squares";
            case ExpectKind::TerminalMatchesLinear: return r + "ReLU terminal equals linear terminal";
            case ExpectKind::TerminalIsGlobal: return r + "terminal at census global minimum";
            case ExpectKind::TerminalIsLocal: return r + "terminal at a census local minimum";
            case ExpectKind::DistinctTerminals:
                return "runs " + std::to_string(run) + " and " + std::to_string(other) + " end apart";
            case ExpectKind::LinearAtMinNorm: return r + "linear terminal at H^+ q";
            case ExpectKind::CoincideBeforeEvent: return r + "ReLU and linear coincide before first event";
            case ExpectKind::LossMonotone: return r + "loss nonincreasing";
            case ExpectKind::GdMatchesEvents: return r + "gradient descent events match exact flow";
        }
        return r;
    }
};

struct Scenario {
    std::string name;
    std::string description;
    Dataset dataset;
    std::vector<Vector> initializations;
    FlowConfig config;
    std::vector<Expectation> expectations;
};

enum class Engine { Exact, Gd };

struct ScenarioOptions {
    Engine engine = Engine::Exact;
    double lr = 0.005;
    long iters = 20000;
    int samples = 50;  // per segment in the trajectory CSV
};

struct ExpectationResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ScenarioResult {
    std::string name;
    MinimaCensus census;
    std::vector<Trajectory> relu;
    std::vector<Trajectory> linear;
    std::vector<GdRun> gd;
    std::vector<ExpectationResult> results;
    std::vector<std::pair<std::string, std::string>> artifacts;  // file name, content

    bool passed() const {
        for (const auto& r : results) {
            if (!r.passed) return false;
        }
        return true;
    }
};

inline constexpr std::uint64_t kDefaultScenarioSeed = 7;

/// Data as printed: row k of each matrix literal is coordinate k of all inputs.
inline Dataset builtin_dataset(const std::string& name) {
    if (name == "example-5-1") {
        Matrix x(2, 5);
        x << 0.8858, 0.4338, 0.6739, 0.0221, 0.2322,
             0.0244, 0.8852, 0.0399, 0.4778, 0.8717;
        Vector y(5);
        y << 0.6111, 0.9397, 1.8694, 2.7104, 1.3089;
        return Dataset(x, y, AssumptionSet::all());
    }
    if (name == "example-5-2") {
        Matrix x(3, 3);
        x << 1, 1, 2,
             0, 2, 0,
             2, 0, 0;
        Vector y(3);
        y << 0.05, 6, 0.5;
        return Dataset(x, y, AssumptionSet::all());
    }
    if (name == "example-5-3") {
        Matrix x(3, 4);
        x << 1, 1, 1, 0,
             0, 2, 0, 1,
             1, 1, 2, 0;
        Vector y(4);
        y << 0.1, 0.2, 4, 0.1;
        return Dataset(x, y, AssumptionSet::all());
    }
    throw StructuralError("unknown scenario '" + name + "'");
}

inline std::vector<std::string> builtin_scenarios() { return {"example-5-1", "example-5-2", "example-5-3"}; }

/// File name under data/ and the FNV-1a hash of its bytes.
inline std::pair<std::string, std::uint64_t> fixture_pin(const std::string& name) {
    if (name == "example-5-1") return {"example_5_1.json", 0x545731f636297d85ull};
    if (name == "example-5-2") return {"example_5_2.json", 0xfd6dac59f5bc20bfull};
    if (name == "example-5-3") return {"example_5_3.json", 0x78d52819471b10acull};
    throw StructuralError("unknown scenario '" + name + "'");
}

/// Canonical file content for a built-in dataset.
inline std::string fixture_text(const std::string& name) {
    return dataset_to_json(builtin_dataset(name)).dump(2) + "\n";
}

struct FixtureCheck {
    bool hash_ok = false;
    bool data_ok = false;
    std::uint64_t hash = 0;
    bool ok() const { return hash_ok && data_ok; }
};

inline FixtureCheck check_fixture(const std::string& name, const std::string& data_dir) {
    const auto [file, pin] = fixture_pin(name);
    const std::string text = read_file(data_dir + "/" + file);
    FixtureCheck c;
    c.hash = fnv1a(text);
    c.hash_ok = c.hash == pin;
    const Dataset a = parse_dataset(text);
    const Dataset b = builtin_dataset(name);
    c.data_ok = a.d() == b.d() && a.n() == b.n() && a.x() == b.x() && a.y() == b.y();
    return c;
}

/// 1e-4 times a uniform draw from the unit cube.
inline Vector small_cube_start(std::uint64_t seed, Index d) {
    Rng rng(seed);
    return 1e-4 * rng.uniform_vector(d, 0.0, 1.0);
}

inline Vector vector_of(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double a : v) out(i++) = a;
    return out;
}

inline Scenario builtin_scenario(const std::string& name, std::uint64_t seed = kDefaultScenarioSeed) {
    Scenario s;
    s.name = name;
    s.dataset = builtin_dataset(name);
    auto expect = [&](ExpectKind k, std::size_t run = 0) -> Expectation& {
        Expectation e;
        e.kind = k;
        e.run = run;
        s.expectations.push_back(e);
        return s.expectations.back();
    };
    if (name == "example-5-2") {
        s.description = "3 data in R^3 from a 1e-4 uniform cube start; x_1 deactivates once and the flow "
                        "stops at the pattern-011 minimizer instead of the interpolating one.";
        s.initializations = {small_cube_start(seed, 3)};
        expect(ExpectKind::EventSequence).events = {{0, EventKind::Deactivation}};
        expect(ExpectKind::NoRevisit);
        auto& p = expect(ExpectKind::TerminalAtPattern);
        p.pattern = "011";
        expect(ExpectKind::LinearAtMinNorm).tol = 1e-8;
        expect(ExpectKind::CoincideBeforeEvent).tol = 1e-8;
        expect(ExpectKind::LossMonotone);
        expect(ExpectKind::GdMatchesEvents);
    } else if (name == "example-5-3") {
        s.description = "4 data in R^3 from a 1e-4 uniform cube start; x_4 deactivates and later "
                        "reactivates, and the ReLU flow ends where the linear flow ends.";
        s.initializations = {small_cube_start(seed, 3)};
        auto& e = expect(ExpectKind::EventSequence);
        e.events = {{3, EventKind::Deactivation}, {3, EventKind::Activation}};
        e.contains = true;
        expect(ExpectKind::TerminalMatchesLinear);
        expect(ExpectKind::TerminalAtLeastSquares);
        expect(ExpectKind::LossMonotone);
        expect(ExpectKind::GdMatchesEvents);
    } else if (name == "example-5-1") {
        s.description = "5 data in R^2 from (1e-4, 1e-4), (0, 8) and (0, 45). The printed start (0, 45) "
                        "lies well outside the plotted window; it is used as printed.";
        s.initializations = {vector_of({1e-4, 1e-4}), vector_of({0.0, 8.0}), vector_of({0.0, 45.0})};
        expect(ExpectKind::TerminalIsGlobal, 0);
        expect(ExpectKind::TerminalIsLocal, 1);
        expect(ExpectKind::TerminalIsLocal, 2);
        auto& d = expect(ExpectKind::DistinctTerminals, 1);
        d.other = 2;
        for (std::size_t r = 0; r < 3; ++r) expect(ExpectKind::LossMonotone, r);
        for (std::size_t r = 0; r < 3; ++r) expect(ExpectKind::GdMatchesEvents, r);
    } else {
        throw StructuralError("unknown scenario '" + name + "'");
    }
    return s;
}

namespace detail {

inline std::string vec_str(const Vector& v) {
    std::string s = "(";
    for (Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v(i));
    return s + ")";
}

inline ExpectationResult evaluate(const Expectation& e, const Scenario& s, const ScenarioResult& r,
                                  const ScenarioOptions& opt) {
    ExpectationResult out;
    out.name = e.describe();
    if (e.run >= r.relu.size() || (e.kind == ExpectKind::DistinctTerminals && e.other >= r.relu.size())) {
        out.detail = "no such run";
        return out;
    }
    const Trajectory& tr = r.relu[e.run];
    const Trajectory& lin = r.linear[e.run];
    const Dataset& ds = s.dataset;
    auto near = [&](const Vector& target, const char* what) {
        const double gap = (tr.terminal_point - target).norm();
        out.passed = gap <= e.tol;
        out.detail = "terminal " + vec_str(tr.terminal_point) + ", " + what + " " + vec_str(target) +
                     ", gap " + fmt(gap);
    };
    auto seq_str = [](const std::vector<FlowEvent>& ev) {
        std::string str;
        for (const auto& x : ev) str += (str.empty() ? "" : ", ") + to_string(x.kind) + " " + std::to_string(x.index);
        return "[" + str + "]";
    };
    switch (e.kind) {
        case ExpectKind::EventSequence: {
            std::size_t k = 0;
            if (e.contains) {
                for (const auto& ev : tr.events) {
                    if (k < e.events.size() && ev.index == e.events[k].first && ev.kind == e.events[k].second) ++k;
                }
                out.passed = k == e.events.size();
            } else {
                out.passed = tr.events.size() == e.events.size();
                for (; out.passed && k < e.events.size(); ++k) {
                    out.passed = tr.events[k].index == e.events[k].first && tr.events[k].kind == e.events[k].second;
                }
            }
            out.detail = "observed " + seq_str(tr.events);
            break;
        }
        case ExpectKind::NoRevisit: {
            const auto rep = revisit_report(tr);
            out.passed = rep.empty();
            out.detail = std::to_string(rep.revisited.size()) + " revisited";
            break;
        }
        case ExpectKind::TerminalAtPattern: {
            const ActivationPattern p = ActivationPattern::from_string(e.pattern);
            const auto vm = piece_minimizer(ds, p);
            Vector diff = tr.terminal_point - vm.point;
            if (vm.null_basis.cols() > 0) diff -= vm.null_basis * (vm.null_basis.transpose() * diff);
            out.passed = diff.norm() <= e.tol;
            out.detail = "terminal " + vec_str(tr.terminal_point) + ", pattern minimizer " + vec_str(vm.point) +
                         ", gap " + fmt(diff.norm());
            break;
        }
        case ExpectKind::TerminalAtLeastSquares: near(least_squares(ds), "least squares"); break;
        case ExpectKind::TerminalMatchesLinear: near(lin.terminal_point, "linear"); break;
        case ExpectKind::TerminalIsGlobal:
        case ExpectKind::TerminalIsLocal: {
            const Index hit = r.census.match(tr.terminal_point, e.tol);
            const bool global = hit >= 0 && hit == r.census.global_index;
            out.passed = e.kind == ExpectKind::TerminalIsGlobal ? global : (hit >= 0 && !global);
            out.detail = "terminal " + vec_str(tr.terminal_point) + " pattern " + tr.segments.back().pattern.str();
            out.detail += hit >= 0 ? ", census entry " + r.census.minima[static_cast<std::size_t>(hit)].pattern.str()
                                   : std::string(", no census entry");
            if (r.census.global_index >= 0) out.detail += ", census global " + r.census.global().pattern.str();
            break;
        }
        case ExpectKind::DistinctTerminals: {
            const double gap = (tr.terminal_point - r.relu[e.other].terminal_point).norm();
            out.passed = gap > e.tol;
            out.detail = "gap " + fmt(gap);
            break;
        }
        case ExpectKind::LinearAtMinNorm: {
            const Vector target = pseudo_solve(gram_spectrum(ds.x(), ds.d()), ds.moment());
            const double gap = (lin.terminal_point - target).norm();
            out.passed = gap <= e.tol;
            out.detail = "linear terminal " + vec_str(lin.terminal_point) + ", gap " + fmt(gap);
            break;
        }
        case ExpectKind::CoincideBeforeEvent: {
            const double t_end = tr.events.empty() ? tr.end_time() : tr.events.front().t;
            double worst = 0.0;
            if (std::isfinite(t_end)) {
                for (int k = 0; k <= 200; ++k) {
                    const double t = t_end * k / 200.0;
                    worst = std::max(worst, (tr.point_at(t) - lin.point_at(t)).norm());
                }
            }
            out.passed = worst <= e.tol && std::isfinite(t_end);
            out.detail = "max gap " + fmt(worst) + " on [0, " + fmt(t_end) + "]";
            break;
        }
        case ExpectKind::LossMonotone: {
            const auto prof = norm_profile(tr, 100);
            double worst = 0.0;
            for (std::size_t k = 1; k < prof.size(); ++k) {
                const double rise = prof[k].loss - prof[k - 1].loss;
                worst = std::max(worst, rise / std::max(1.0, prof[k - 1].loss));
            }
            out.passed = worst <= 1e-12;
            out.detail = "largest relative rise " + fmt(worst);
            break;
        }
        case ExpectKind::GdMatchesEvents: {
            if (opt.engine != Engine::Gd) {
                out.passed = true;
                out.detail = "skipped (exact engine)";
                break;
            }
            const auto& g = r.gd[e.run];
            bool same = !g.diverged && g.events.size() == tr.events.size();
            for (std::size_t k = 0; same && k < g.events.size(); ++k) {
                same = g.events[k].index == tr.events[k].index && g.events[k].kind == tr.events[k].kind;
            }
            out.passed = same;
            out.detail = "gd " + seq_str(g.events) + ", exact " + seq_str(tr.events) + ", final gap " +
                         fmt((g.final_point - tr.terminal_point).norm());
            break;
        }
    }
    return out;
}

inline std::string gd_csv(const Dataset& ds, const GdRun& run) {
    std::ostringstream out;
    out << "t";
    for (Index k = 0; k < ds.d(); ++k) out << ",w_" << (k + 1);
    out << ",loss,norm,g,pattern\n";
    for (const auto& [t, w] : run.samples) {
        out << fmt(t);
        for (Index k = 0; k < w.size(); ++k) out << ',' << fmt(w(k));
        out << ',' << fmt(loss(ds, w)) << ',' << fmt(w.norm()) << ',' << fmt(g_value(ds, w)) << ','
            << pattern_of(ds, w).str() << '\n';
    }
    return out.str();
}

}  // namespace detail

/// Runs every initialization with the exact ReLU and linear flows (plus
/// gradient descent with the gd engine), evaluates the expectations and
/// collects the artifacts. Nothing is written to disk here.
inline ScenarioResult run_scenario(const Scenario& s, const ScenarioOptions& opt = {}) {
    ScenarioResult r;
    r.name = s.name;
    r.census = minima_census(s.dataset);
    r.artifacts.emplace_back("dataset.json", dataset_to_json(s.dataset).dump(2) + "\n");
    r.artifacts.emplace_back("census.jsonl", census_jsonl(r.census));
    for (std::size_t k = 0; k < s.initializations.size(); ++k) {
        const Vector& w0 = s.initializations[k];
        r.relu.push_back(simulate_flow(s.dataset, w0, s.config));
        r.linear.push_back(simulate_linear_flow(s.dataset, w0, s.config));
        const std::string tag = "run" + std::to_string(k);
        r.artifacts.emplace_back(tag + "_trajectory.csv", trajectory_csv(r.relu.back(), opt.samples));
        r.artifacts.emplace_back(tag + "_events.jsonl", events_jsonl(r.relu.back()));
        r.artifacts.emplace_back(tag + "_linear.csv", trajectory_csv(r.linear.back(), opt.samples));
        r.artifacts.emplace_back(tag + "_certificate.json",
                                 certificate_json(s.dataset, w0, r.census, r.relu.back()).dump(2) + "\n");
        if (opt.engine == Engine::Gd) {
            const long every = std::max(1L, opt.iters / 500);
            r.gd.push_back(simulate_gd(s.dataset, w0, opt.lr, opt.iters, every));
            r.artifacts.emplace_back(tag + "_gd.csv", detail::gd_csv(s.dataset, r.gd.back()));
        }
    }
    for (const auto& e : s.expectations) r.results.push_back(detail::evaluate(e, s, r, opt));

    Json summary;
    summary["scenario"] = s.name;
    summary["description"] = s.description;
    summary["engine"] = opt.engine == Engine::Gd ? "gd" : "exact";
    Json runs = Json::array();
    for (std::size_t k = 0; k < r.relu.size(); ++k) {
        Json run;
        run["w0"] = to_json(s.initializations[k]);
        run["relu"] = trajectory_summary(r.relu[k]);
        run["linear"] = trajectory_summary(r.linear[k]);
        runs.push_back(run);
    }
    summary["runs"] = runs;
    Json ex = Json::array();
    for (const auto& res : r.results) {
        Json e;
        e["expectation"] = res.name;
        e["passed"] = res.passed;
        e["detail"] = res.detail;
        ex.push_back(e);
    }
    summary["expectations"] = ex;
    summary["passed"] = r.passed();
    r.artifacts.emplace_back("summary.json", summary.dump(2) + "\n");
    return r;
}

}  // namespace reluflow
