#include "reluflow/reluflow.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

using namespace reluflow;

namespace {

struct Options {
    std::string dataset;
    std::string net;
    std::string w0;
    std::string x;
    std::string y;
    std::uint64_t seed = kDefaultScenarioSeed;
    std::optional<double> tol;
    std::optional<double> t_max;
    std::string out;
    std::string engine = "exact";
    double lr = 0.005;
    long iters = 20000;
    int trials = 100;
    int samples = 50;
    std::string target;  // reproduce / campaign id
};

Vector parse_vector(const std::string& text, const char* what) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            vals.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw StructuralError(std::string("bad number '") + item + "' in " + what);
        }
    }
    if (vals.empty()) throw StructuralError(std::string(what) + " is empty");
    Vector v(static_cast<Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) v(static_cast<Index>(i)) = vals[i];
    return v;
}

std::string out_dir(const Options& o) {
    if (const char* env = std::getenv("RELUFLOW_OUT"); env && *env) return env;
    return o.out;
}

void emit(const Options& o, const std::string& name, const std::string& content) {
    const std::string dir = out_dir(o);
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    write_file(dir + "/" + name, content);
}

FlowConfig flow_config(const Options& o) {
    FlowConfig c;
    if (o.tol) c.event_tol = *o.tol;
    if (o.t_max) c.t_max = *o.t_max;
    c.check();
    return c;
}

Dataset need_dataset(const Options& o) {
    if (o.dataset.empty()) throw StructuralError("--dataset is required");
    return load_dataset(o.dataset);
}

Vector start_point(const Options& o, const Dataset& ds) {
    if (!o.w0.empty()) return parse_vector(o.w0, "--w0");
    return small_cube_start(o.seed, ds.d());
}

int cmd_validate(const Options& o) {
    const Dataset ds = need_dataset(o);
    const AssumptionSet req = ds.declared().empty() ? AssumptionSet::all() : ds.declared();
    const auto rep = validate_dataset(ds, req);
    Json j;
    j["d"] = ds.d();
    j["n"] = ds.n();
    j["rank"] = rep.rank;
    Json checks = Json::array();
    for (const auto& c : rep.checks) {
        Json e;
        e["assumption"] = std::string(to_string(c.assumption));
        e["required"] = c.required;
        e["passed"] = c.passed;
        e["offending"] = to_json(c.offending);
        checks.push_back(e);
    }
    j["checks"] = checks;
    j["passed"] = rep.passed;
    std::cout << j.dump(2) << "\n";
    emit(o, "validation.json", j.dump(2) + "\n");
    return rep.passed ? 0 : 1;
}

int cmd_landscape(const Options& o) {
    const Dataset ds = need_dataset(o);
    const auto census = minima_census(ds);
    const auto order = compare_support_losses(census);
    const auto gap = relu_vs_linear_gap(ds, census);
    Json j;
    j["partitions"] = census.partition_count;
    j["partition_bound"] = partition_bound(static_cast<int>(ds.n()), static_cast<int>(ds.d()));
    j["minima"] = census.minima.size();
    j["global"] = census.global_index >= 0 ? Json(census.global().pattern.str()) : Json();
    j["stationary_cone"] = census.stationary_cone;
    j["relu_global_loss"] = gap.relu_global_loss;
    j["linear_loss"] = gap.linear_global_loss;
    j["nested_pairs"] = order.pairs.size();
    int bad = 0;
    for (const auto& p : order.pairs) bad += !p.holds;
    j["nested_pairs_out_of_order"] = bad;
    std::cout << census_jsonl(census) << j.dump() << "\n";
    emit(o, "census.jsonl", census_jsonl(census));
    emit(o, "landscape.json", j.dump(2) + "\n");
    return 0;
}

int cmd_flow(const Options& o, bool linear) {
    const Dataset ds = need_dataset(o);
    const Vector w0 = start_point(o, ds);
    if (w0.size() != ds.d()) throw StructuralError("--w0 has the wrong dimension");
    const FlowConfig cfg = flow_config(o);
    if (o.engine == "gd") {
        if (linear) throw StructuralError("--engine gd applies to the ReLU flow only");
        const auto run = simulate_gd(ds, w0, o.lr, o.iters, std::max(1L, o.iters / 500));
        Json j;
        j["engine"] = "gd";
        j["lr"] = o.lr;
        j["iters"] = o.iters;
        j["final_point"] = to_json(run.final_point);
        j["final_pattern"] = pattern_of(ds, run.final_point).str();
        j["loss"] = loss(ds, run.final_point);
        j["diverged"] = run.diverged;
        Trajectory shell;
        shell.events = run.events;
        std::cout << j.dump(2) << "\n";
        emit(o, "events.jsonl", events_jsonl(shell));
        emit(o, "trajectory.csv", detail::gd_csv(ds, run));
        emit(o, "summary.json", j.dump(2) + "\n");
        return run.diverged ? 1 : 0;
    }
    if (o.engine != "exact") throw StructuralError("--engine must be exact or gd");
    const auto tr = linear ? simulate_linear_flow(ds, w0, cfg) : simulate_flow(ds, w0, cfg);
    Json j = trajectory_summary(tr);
    j["w0"] = to_json(w0);
    std::cout << j.dump(2) << "\n";
    emit(o, "trajectory.csv", trajectory_csv(tr, o.samples));
    emit(o, "events.jsonl", events_jsonl(tr));
    emit(o, "summary.json", j.dump(2) + "\n");
    return 0;
}

int cmd_criteria(const Options& o) {
    const Dataset ds = need_dataset(o);
    const Vector w0 = start_point(o, ds);
    if (w0.size() != ds.d()) throw StructuralError("--w0 has the wrong dimension");
    const auto census = minima_census(ds);
    const auto tr = simulate_flow(ds, w0, flow_config(o));
    Json j = certificate_json(ds, w0, census, tr);
    Json alphas = Json::array();
    for (Index i = 0; i < ds.n(); ++i) {
        Json a;
        a["index"] = i;
        try {
            const auto t = alpha_threshold(ds, w0, i);
            a["alpha"] = t.alpha;
            a["reversed"] = t.reversed;
        } catch (const Error& e) {
            a["alpha"] = Json();
            a["reason"] = e.what();
        }
        alphas.push_back(a);
    }
    j["alpha_star"] = alphas;
    std::cout << j.dump(2) << "\n";
    emit(o, "certificate.json", j.dump(2) + "\n");
    return 0;
}

int cmd_backprop(const Options& o) {
    if (o.net.empty()) throw StructuralError("--net is required");
    const DeepNet net = parse_net(read_file(o.net));
    const Vector x = parse_vector(o.x, "--x");
    const Vector y = parse_vector(o.y, "--y");
    const auto probs = backprop_labels(net, x, y);
    Json layers = Json::array();
    for (const auto& p : probs) {
        Json l;
        l["layer"] = p.layer;
        l["linear"] = p.linear;
        l["input"] = to_json(p.input);
        l["output"] = to_json(p.output);
        l["label"] = to_json(p.label);
        l["delta"] = to_json(p.delta);
        l["labels_positive"] = (p.label.array() > 0.0).all();
        l["inputs_nonnegative"] = (p.input.array() >= 0.0).all();
        layers.push_back(l);
    }
    Json j;
    j["loss"] = network_loss(net, x, y);
    j["layers"] = layers;
    std::cout << j.dump(2) << "\n";
    emit(o, "backprop.json", j.dump(2) + "\n");
    return 0;
}

int cmd_reproduce(const Options& o) {
    const Scenario s = builtin_scenario(o.target, o.seed);
    Scenario run = s;
    run.config = flow_config(o);
    ScenarioOptions opt;
    if (o.engine == "gd") {
        opt.engine = Engine::Gd;
    } else if (o.engine != "exact") {
        throw StructuralError("--engine must be exact or gd");
    }
    opt.lr = o.lr;
    opt.iters = o.iters;
    opt.samples = o.samples;
    const auto res = run_scenario(run, opt);
    for (const auto& [name, content] : res.artifacts) emit(o, name, content);
    for (const auto& r : res.results) {
        std::cout << (r.passed ? "ok   " : "FAIL ") << r.name << " -- " << r.detail << "\n";
    }
    std::cout << s.name << ": " << (res.passed() ? "all expectations hold" : "expectation failure") << "\n";
    return res.passed() ? 0 : 1;
}

int cmd_campaign(const Options& o) {
    const auto rep = run_campaign(o.target, o.seed, o.trials);
    const Json j = rep.to_json_report();
    emit(o, "campaign.json", j.dump(2) + "\n");
    std::string trials;
    for (const auto& t : rep.trials) {
        Json l;
        l["trial"] = t.trial;
        l["passed"] = t.passed;
        if (!t.passed) l["detail"] = t.detail;
        trials += l.dump() + "\n";
    }
    emit(o, "trials.jsonl", trials);
    std::cout << rep.id << ": " << rep.passes() << "/" << rep.trials.size() << " trials passed (seed "
              << rep.seed << ")\n";
    for (const auto& t : rep.trials) {
        if (!t.passed) std::cout << "  trial " << t.trial << ": " << t.detail << "\n";
    }
    return rep.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact gradient flow of a single ReLU neuron"};
    app.require_subcommand(1);
    Options o;

    auto data_flag = [&](CLI::App* c) { c->add_option("--dataset", o.dataset, "dataset JSON file"); };
    auto flow_flags = [&](CLI::App* c) {
        c->add_option("--w0", o.w0, "initial weight, comma separated (default: 1e-4 cube draw)");
        c->add_option("--seed", o.seed, "seed for the default initial weight");
        c->add_option("--tol", o.tol, "event tolerance");
        c->add_option("--t-max", o.t_max, "time horizon");
        c->add_option("--samples", o.samples, "trajectory samples per segment")->check(CLI::Range(2, 100000));
    };
    auto engine_flags = [&](CLI::App* c) {
        c->add_option("--engine", o.engine, "exact or gd")->check(CLI::IsMember({"exact", "gd"}));
        c->add_option("--lr", o.lr, "gradient descent step")->check(CLI::PositiveNumber);
        c->add_option("--iters", o.iters, "gradient descent iterations")->check(CLI::NonNegativeNumber);
    };
    app.add_option("--out", o.out, "artifact directory (RELUFLOW_OUT overrides)");

    auto* validate = app.add_subcommand("validate", "check a dataset against its declared assumptions");
    data_flag(validate);
    auto* landscape = app.add_subcommand("landscape", "enumerate partitions and local minima");
    data_flag(landscape);
    auto* flow = app.add_subcommand("flow", "simulate the ReLU gradient flow");
    data_flag(flow);
    flow_flags(flow);
    engine_flags(flow);
    auto* lflow = app.add_subcommand("linear-flow", "simulate the linear-network gradient flow");
    data_flag(lflow);
    flow_flags(lflow);
    auto* criteria = app.add_subcommand("criteria", "certificates at an initial weight");
    data_flag(criteria);
    flow_flags(criteria);
    auto* backprop = app.add_subcommand("backprop", "per-layer problems of a deep network");
    backprop->add_option("--net", o.net, "network JSON file");
    backprop->add_option("--x", o.x, "input, comma separated")->required();
    backprop->add_option("--y", o.y, "label, comma separated")->required();
    auto* reproduce = app.add_subcommand("reproduce", "run a built-in scenario");
    reproduce->add_option("scenario", o.target, "example-5-1, example-5-2 or example-5-3")->required();
    flow_flags(reproduce);
    engine_flags(reproduce);
    auto* campaign = app.add_subcommand("campaign", "run a randomized property campaign");
    campaign->add_option("id", o.target, "campaign id")->required();
    campaign->add_option("--seed", o.seed, "campaign seed");
    campaign->add_option("--trials", o.trials, "number of trials")->check(CLI::NonNegativeNumber);
    for (auto* c : app.get_subcommands({})) c->add_option("--out", o.out, "artifact directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(o);
        if (landscape->parsed()) return cmd_landscape(o);
        if (flow->parsed()) return cmd_flow(o, false);
        if (lflow->parsed()) return cmd_flow(o, true);
        if (criteria->parsed()) return cmd_criteria(o);
        if (backprop->parsed()) return cmd_backprop(o);
        if (reproduce->parsed()) return cmd_reproduce(o);
        if (campaign->parsed()) return cmd_campaign(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
