#pragma once

#include "reluflow/generators.hpp"
#include "reluflow/io.hpp"

#include <functional>
#include <string>
#include <vector>

namespace reluflow {

struct TrialResult {
    int trial = 0;
    bool passed = false;
    std::string detail;  // failure description; empty on pass
    Json artifact;       // reproduction data for failures
};

struct CampaignReport {
    std::string id;
    std::uint64_t seed = 0;
    std::vector<TrialResult> trials;

    int passes() const {
        int p = 0;
        for (const auto& t : trials) p += t.passed;
        return p;
    }
    bool passed() const { return passes() == static_cast<int>(trials.size()); }

    Json to_json_report() const {
        Json j;
        j["campaign"] = id;
        j["seed"] = seed;
        j["trials"] = trials.size();
        j["passes"] = passes();
        Json fails = Json::array();
        for (const auto& t : trials) {
            if (t.passed) continue;
            Json f;
            f["trial"] = t.trial;
            f["detail"] = t.detail;
            f["artifact"] = t.artifact;
            fails.push_back(f);
        }
        j["failures"] = fails;
        return j;
    }
};

inline const std::vector<std::string>& campaign_ids() {
    static const std::vector<std::string> ids{"d2-global-convergence", "no-deactivation",
                                              "bad-min-exclusion",     "crossing-bound",
                                              "norm-monotone-linear",  "census-orderings",
                                              "backprop-equivalence"};
    return ids;
}

namespace campaign_detail {

inline Json dataset_artifact(const Dataset& ds, const Vector* w0 = nullptr) {
    Json j;
    j["dataset"] = dataset_to_json(ds);
    if (w0) j["w0"] = to_json(*w0);
    return j;
}

inline double max_gap(const Trajectory& a, const Trajectory& b, int samples = 200) {
    double te = std::max(a.end_time(), b.end_time());
    if (!std::isfinite(te)) {
        const double la = a.segments.back().lambda_min_positive();
        const double lb = b.segments.back().lambda_min_positive();
        const double lmin = std::min(la > 0 ? la : 1.0, lb > 0 ? lb : 1.0);
        double last = 0.0;
        for (const auto& s : a.segments) last = std::max(last, std::isfinite(s.t_end) ? s.t_end : s.t_start);
        te = last + 25.0 / lmin;
    }
    double worst = 0.0;
    for (int k = 0; k <= samples; ++k) {
        const double t = te * k / samples;
        worst = std::max(worst, (a.point_at(t) - b.point_at(t)).norm());
    }
    return std::max(worst, (a.terminal_point - b.terminal_point).norm());
}

inline bool positive_descent(const Dataset& ds, const Vector& w0) {
    return ((-gradient(ds, w0)).array() > 0.0).all();
}

inline TrialResult d2_global(Rng& rng) {
    TrialResult r;
    Dataset ds;
    Vector w0;
    for (;;) {
        const Index n = 2 + rng.integer(0, 6);
        ds = gen::a123(rng, 2, n);
        w0 = small_norm_scale(ds) * rng.unit_vector(2);
        if (positive_descent(ds, w0)) break;
    }
    const auto tr = simulate_flow(ds, w0);
    const auto census = minima_census(ds);
    std::string why;
    if (tr.terminal != TerminalKind::Converged) why += "terminal " + to_string(tr.terminal) + "; ";
    const double gap = (tr.terminal_point - census.global().point).norm();
    if (census.match(tr.terminal_point, 1e-6) != census.global_index) {
        why += "terminal pattern " + tr.segments.back().pattern.str() + " misses census global " +
               census.global().pattern.str() + " (gap " + fmt(gap) + "); ";
    }
    const auto prof = norm_profile(tr, 40);
    for (std::size_t k = 1; k < prof.size(); ++k) {
        if (prof[k].t > prof[k - 1].t && !(prof[k].norm - prof[k - 1].norm > -1e-9)) {
            why += "norm decreased at t=" + fmt(prof[k].t) + "; ";
            break;
        }
    }
    if (!revisit_report(tr).empty()) why += "datum revisited; ";
    r.passed = why.empty();
    r.detail = why;
    if (!r.passed) r.artifact = dataset_artifact(ds, &w0);
    return r;
}

inline TrialResult no_deactivation(Rng& rng) {
    TrialResult r;
    const Index n = 3 + rng.integer(0, 3);
    const auto g = gen::realizable(rng, 3, n);
    const Vector w0 = g.w_gm + rng.uniform(0.1, 2.0) * g.w_gm.norm() * rng.unit_vector(3);
    const auto tr = simulate_flow(g.ds, w0);
    std::string why;
    bool all = true;
    for (Index j = 0; j < n; ++j) {
        if (g.ds.input(j).dot(w0) <= 0.0 || !no_deactivation_certificate(g.ds, w0, g.w_gm, j)) {
            all = false;
            continue;
        }
        for (const auto& e : tr.events) {
            if (e.index == j && e.kind == EventKind::Deactivation) {
                why += "certified datum " + std::to_string(j) + " deactivated at t=" + fmt(e.t) + "; ";
            }
        }
    }
    if (all) {
        const double gap = max_gap(tr, simulate_linear_flow(g.ds, w0));
        if (gap > 1e-8) why += "all certified but ReLU and linear differ by " + fmt(gap) + "; ";
    }
    r.passed = why.empty();
    r.detail = why;
    if (!r.passed) r.artifact = dataset_artifact(g.ds, &w0);
    return r;
}

inline TrialResult bad_min(Rng& rng) {
    TrialResult r;
    const Index n = 4 + rng.integer(0, 2);
    const auto g = gen::realizable(rng, 3, n);
    const Vector w0 = g.w_gm + rng.uniform(0.2, 2.0) * g.w_gm.norm() * rng.unit_vector(3);
    const auto census = minima_census(g.ds);
    const auto tr = simulate_flow(g.ds, w0);
    const Index hit = census.match(tr.terminal_point, 1e-6);
    for (const auto& e : exclusion_report(g.ds, w0, g.w_gm, census).entries) {
        if (e.minimum == hit && e.excluded) {
            r.detail = "terminal at excluded minimum " + census.minima[static_cast<std::size_t>(hit)].pattern.str();
        }
    }
    r.passed = r.detail.empty();
    if (!r.passed) r.artifact = dataset_artifact(g.ds, &w0);
    return r;
}

inline TrialResult crossing(Rng& rng) {
    TrialResult r;
    const Index d = 1 + rng.integer(0, 3);
    const auto ds = gen::signed_data(rng, d, d + rng.integer(0, 3));
    const Vector w0 = 3.0 * rng.normal_vector(d);
    const auto tr = simulate_linear_flow(ds, w0);
    const Vector v = rng.normal_vector(d);
    const auto& s = tr.segments[0];
    const double horizon = s.lambda_min_positive() > 0 ? 25.0 / s.lambda_min_positive() : 1.0;
    const double c = v.dot(tr.point_at(horizon * rng.uniform(0.0, 0.3)));
    const Index count = count_hyperplane_crossings(tr, v, c);
    if (count > d) r.detail = std::to_string(count) + " crossings in dimension " + std::to_string(d) + "; ";
    const auto relu_ds = gen::a123(rng, d, d + rng.integer(0, 3));
    const Vector u0 = rng.normal_vector(d);
    const auto relu = simulate_flow(relu_ds, u0);
    if (!relu.root_bound_held) {
        r.detail += "root count " + std::to_string(relu.max_roots) + " above its bound; ";
    }
    r.passed = r.detail.empty();
    if (!r.passed) {
        r.artifact = dataset_artifact(ds, &w0);
        r.artifact["direction"] = to_json(v);
        r.artifact["offset"] = c;
    }
    return r;
}

inline TrialResult norm_linear(Rng& rng) {
    TrialResult r;
    const Index d = 1 + rng.integer(0, 3);
    const Index n = 1 + rng.integer(0, 7);
    const auto ds = gen::a123(rng, d, n);
    const Vector zero = Vector::Zero(d);
    const auto lin = simulate_linear_flow(ds, zero);
    const Vector target = least_squares(ds);
    std::string why;
    const double gap = (lin.terminal_point - target).norm();
    if (gap > 1e-8) why += "terminal misses H^+ q by " + fmt(gap) + "; ";
    const auto prof = norm_profile(lin, 200);
    for (std::size_t k = 1; k < prof.size(); ++k) {
        if (prof[k].norm < prof[k - 1].norm - 1e-12 * std::max(1.0, prof[k - 1].norm)) {
            why += "linear norm decreased at t=" + fmt(prof[k].t) + "; ";
            break;
        }
    }
    const Vector w0 = rng.normal_vector(d);
    const auto relu = simulate_flow(ds, w0);
    const auto lin2 = simulate_linear_flow(ds, w0);
    for (const auto* tr : {&lin, &relu, &lin2}) {
        const auto p = norm_profile(*tr, 60);
        for (std::size_t k = 1; k < p.size(); ++k) {
            if (p[k].loss > p[k - 1].loss + 1e-12 * std::max(1.0, p[k - 1].loss)) {
                why += std::string(tr->linear ? "linear" : "ReLU") + " loss increased at t=" + fmt(p[k].t) + "; ";
                break;
            }
        }
    }
    r.passed = why.empty();
    r.detail = why;
    if (!r.passed) r.artifact = dataset_artifact(ds, &w0);
    return r;
}

inline TrialResult census_orderings(Rng& rng) {
    TrialResult r;
    const Index d = 1 + rng.integer(0, 2);
    const Index n = d + rng.integer(0, static_cast<int>(8 - d));
    const auto ds = gen::a123(rng, d, n);
    const auto census = minima_census(ds);
    std::string why;
    for (const auto& pr : compare_support_losses(census).pairs) {
        if (pr.holds) continue;
        why += "nested pair " + census.minima[static_cast<std::size_t>(pr.larger)].pattern.str() + " > " +
               census.minima[static_cast<std::size_t>(pr.smaller)].pattern.str() + " has margin " +
               fmt(pr.margin) + "; ";
    }
    if (!relu_vs_linear_gap(ds, census).holds) why += "ReLU global loss above linear least squares; ";
    if (static_cast<double>(census.minima.size()) > partition_bound(static_cast<int>(n), static_cast<int>(d))) {
        why += "census larger than the partition bound; ";
    }
    for (const auto& m : census.minima) {
        const Vector s = ds.x().transpose() * m.witness;
        for (Index i = 0; i < n; ++i) {
            const bool bad = m.pattern[i] ? s(i) < 1e-9 * ds.input(i).norm() * m.witness.norm() : s(i) > 0.0;
            if (bad) {
                why += "minimum " + m.pattern.str() + " within margin of boundary " + std::to_string(i) + "; ";
                break;
            }
        }
    }
    r.passed = why.empty();
    r.detail = why;
    if (!r.passed) r.artifact = dataset_artifact(ds);
    return r;
}

// Reverse-mode chain rule written against the raw weights, separate from the
// label construction it is compared with.
inline std::vector<Matrix> chain_rule(const DeepNet& net, const Vector& x, const Vector& y) {
    std::vector<Vector> inputs, pre;
    Vector h = x;
    for (Index m = 1; m <= net.depth(); ++m) {
        inputs.push_back(h);
        const Vector z = net.weight(m) * h;
        pre.push_back(z);
        h = m < net.depth() ? Vector(z.cwiseMax(0.0)) : z;
    }
    std::vector<Matrix> g(static_cast<std::size_t>(net.depth()));
    Vector back = h - y;
    for (Index m = net.depth(); m >= 1; --m) {
        g[static_cast<std::size_t>(m - 1)] = back * inputs[static_cast<std::size_t>(m - 1)].transpose();
        if (m == 1) break;
        Vector up = net.weight(m).transpose() * back;
        const Vector& z = pre[static_cast<std::size_t>(m - 2)];
        for (Index i = 0; i < up.size(); ++i) up(i) = z(i) > 0.0 ? up(i) : 0.0;
        back = up;
    }
    return g;
}

inline TrialResult backprop(Rng& rng) {
    TrialResult r;
    std::vector<Index> dims;
    const int depth = 1 + rng.integer(0, 3);
    for (int k = 0; k <= depth; ++k) dims.push_back(1 + rng.integer(0, 7));
    const auto net = gen::net(rng, dims);
    const Vector x = rng.normal_vector(net.input_dim());
    const Vector y = rng.normal_vector(net.output_dim());
    const auto ours = network_gradient(net, x, y);
    const auto oracle = chain_rule(net, x, y);
    for (std::size_t m = 0; m < ours.size(); ++m) {
        const double err = (ours[m] - oracle[m]).cwiseAbs().maxCoeff();
        if (err > 1e-10) r.detail += "layer " + std::to_string(m + 1) + " differs by " + fmt(err) + "; ";
    }
    r.passed = r.detail.empty();
    if (!r.passed) {
        r.artifact = net_to_json(net);
        r.artifact["x"] = to_json(x);
        r.artifact["y"] = to_json(y);
    }
    return r;
}

}  // namespace campaign_detail

/// Deterministic for a fixed (id, seed, trials); trial k always follows the
/// same draws regardless of earlier outcomes.
inline CampaignReport run_campaign(const std::string& id, std::uint64_t seed, int trials) {
    using Fn = std::function<TrialResult(Rng&)>;
    Fn fn;
    if (id == "d2-global-convergence") fn = campaign_detail::d2_global;
    else if (id == "no-deactivation") fn = campaign_detail::no_deactivation;
    else if (id == "bad-min-exclusion") fn = campaign_detail::bad_min;
    else if (id == "crossing-bound") fn = campaign_detail::crossing;
    else if (id == "norm-monotone-linear") fn = campaign_detail::norm_linear;
    else if (id == "census-orderings") fn = campaign_detail::census_orderings;
    else if (id == "backprop-equivalence") fn = campaign_detail::backprop;
    else throw StructuralError("unknown campaign '" + id + "'");
    if (trials < 0) throw PreconditionError("trial count must be nonnegative");

    CampaignReport rep;
    rep.id = id;
    rep.seed = seed;
    Rng master(seed);
    for (int k = 0; k < trials; ++k) {
        Rng rng(master.next_seed());
        TrialResult t;
        try {
            t = fn(rng);
        } catch (const Error& e) {
            t.passed = false;
            t.detail = std::string("error: ") + e.what();
        }
        t.trial = k;
        rep.trials.push_back(std::move(t));
    }
    return rep;
}

}  // namespace reluflow
