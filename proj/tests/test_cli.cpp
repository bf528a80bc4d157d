#include "reluflow/campaign.hpp"
#include "reluflow/scenario.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

using namespace reluflow;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string out;
};

Run cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + RELUFLOW_CLI + std::string(" ") + args + " 2>&1";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf{};
    std::size_t got;
    while ((got = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), got);
    const int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("reluflow_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string data(const std::string& file) { return std::string(RELUFLOW_DATA_DIR) + "/" + file; }

void same_tree(const fs::path& a, const fs::path& b) {
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        const fs::path other = b / e.path().filename();
        ASSERT_TRUE(fs::exists(other)) << other;
        EXPECT_EQ(read_file(e.path().string()), read_file(other.string())) << e.path().filename();
        ++files;
    }
    EXPECT_GT(files, 0u);
    EXPECT_EQ(files, static_cast<std::size_t>(std::distance(fs::directory_iterator(b), fs::directory_iterator())));
}

}  // namespace

TEST(Fixtures, HashPinnedAndEqualToBuiltins) {
    for (const auto& name : builtin_scenarios()) {
        const auto c = check_fixture(name, RELUFLOW_DATA_DIR);
        EXPECT_TRUE(c.hash_ok) << name << " hash " << std::hex << c.hash;
        EXPECT_TRUE(c.data_ok) << name;
    }
}

TEST(Fixtures, PrintedValuesSpotCheck) {
    const Dataset a = load_dataset(data("example_5_1.json"));
    EXPECT_EQ(a.x()(0, 0), 0.8858);
    EXPECT_EQ(a.x()(1, 4), 0.8717);
    EXPECT_EQ(a.y()(3), 2.7104);
    const Dataset b = load_dataset(data("example_5_2.json"));
    EXPECT_EQ(b.x()(2, 0), 2.0);
    EXPECT_EQ(b.x()(0, 2), 2.0);
    EXPECT_EQ(b.y()(1), 6.0);
    const Dataset c = load_dataset(data("example_5_3.json"));
    EXPECT_EQ(c.x()(1, 3), 1.0);
    EXPECT_EQ(c.y()(2), 4.0);
}

TEST(Io, DatasetRoundTrip) {
    Rng rng(3);
    const Dataset ds(rng.normal_matrix(3, 5), rng.normal_vector(5), {Assumption::A3});
    const Dataset back = parse_dataset(dataset_to_json(ds).dump());
    EXPECT_EQ(back.x(), ds.x());
    EXPECT_EQ(back.y(), ds.y());
    EXPECT_EQ(back.declared(), ds.declared());
}

TEST(Io, MalformedDatasetsRejected) {
    EXPECT_THROW(parse_dataset("{"), StructuralError);
    EXPECT_THROW(parse_dataset(R"({"d":2,"n":1,"x":[[1]],"y":[1]})"), StructuralError);
    EXPECT_THROW(parse_dataset(R"({"d":1,"n":2,"x":[[1],[2]],"y":[1]})"), StructuralError);
    EXPECT_THROW(parse_dataset(R"({"d":1,"n":1,"x":[[1]],"y":[1],"assumptions":["A4"]})"), StructuralError);
    EXPECT_THROW(parse_dataset(R"({"d":1,"n":1,"x":[["a"]],"y":[1]})"), StructuralError);
}

TEST(Io, NetRoundTripRowMajor) {
    const DeepNet net = parse_net(R"({"weights": [[[1, 2, 3], [4, 5, 6]], [[7, 8]]]})");
    EXPECT_EQ(net.depth(), 2);
    EXPECT_EQ(net.input_dim(), 3);
    EXPECT_EQ(net.weight(1)(1, 0), 4.0);
    EXPECT_EQ(net.weight(2)(0, 1), 8.0);
    EXPECT_EQ(net_to_json(net).dump(), R"({"weights":[[[1.0,2.0,3.0],[4.0,5.0,6.0]],[[7.0,8.0]]]})");
    EXPECT_THROW(parse_net(R"({"weights": [[[1, 2], [3]]]})"), StructuralError);
    EXPECT_THROW(parse_net(R"({"weights": [[[1, 2]], [[1, 2, 3]]]})"), StructuralError);
}

TEST(Cli, UnknownSubcommandFails) {
    EXPECT_NE(cli("frobnicate").status, 0);
    EXPECT_NE(cli("").status, 0);
}

TEST(Cli, ValidatePrintedData) {
    const auto r = cli("validate --dataset " + data("example_5_2.json"));
    EXPECT_EQ(r.status, 0) << r.out;
    const Json j = Json::parse(r.out);
    EXPECT_TRUE(j["passed"].get<bool>());
    EXPECT_EQ(j["rank"].get<int>(), 3);
}

TEST(Cli, ValidateReportsViolations) {
    const fs::path dir = scratch("validate");
    fs::create_directories(dir);
    const std::string f = (dir / "bad.json").string();
    write_file(f, R"({"d":2,"n":2,"x":[[1,0],[0,-1]],"y":[1,-2],"assumptions":["A1","A2","A3"]})");
    const auto r = cli("validate --dataset " + f);
    EXPECT_EQ(r.status, 1);
    const Json j = Json::parse(r.out);
    EXPECT_FALSE(j["checks"][0]["passed"].get<bool>());
    EXPECT_EQ(j["checks"][0]["offending"][0].get<int>(), 1);
    EXPECT_EQ(j["checks"][1]["offending"][0].get<int>(), 1);
    EXPECT_TRUE(j["checks"][2]["passed"].get<bool>());
}

TEST(Cli, BadInputsExitTwo) {
    EXPECT_EQ(cli("validate --dataset /nonexistent.json").status, 2);
    EXPECT_EQ(cli("flow --dataset " + data("example_5_2.json") + " --w0 1,2").status, 2);
    EXPECT_EQ(cli("flow --dataset " + data("example_5_2.json") + " --w0 1,x,2").status, 2);
    EXPECT_EQ(cli("reproduce example-9-9").status, 2);
}

TEST(Cli, FlowWritesDocumentedArtifacts) {
    const fs::path dir = scratch("flow");
    const auto r = cli("flow --dataset " + data("example_5_2.json") + " --out " + dir.string());
    ASSERT_EQ(r.status, 0) << r.out;
    const std::string csv = read_file((dir / "trajectory.csv").string());
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,w_1,w_2,w_3,loss,norm,g,pattern");
    const std::string ev = read_file((dir / "events.jsonl").string());
    const Json e = Json::parse(ev.substr(0, ev.find('\n')));
    EXPECT_EQ(e["kind"].get<std::string>(), "deactivation");
    EXPECT_EQ(e["index"].get<int>(), 0);
    EXPECT_EQ(e["point"].size(), 3u);
    EXPECT_GT(e["t"].get<double>(), 0.0);
    const Json s = Json::parse(r.out);
    EXPECT_EQ(s["terminal_pattern"].get<std::string>(), "011");
}

TEST(Cli, LinearFlowFromZeroIsMinimumNorm) {
    const auto r = cli("linear-flow --dataset " + data("example_5_3.json") + " --w0 0,0,0");
    ASSERT_EQ(r.status, 0) << r.out;
    const Json s = Json::parse(r.out);
    const Dataset ds = load_dataset(data("example_5_3.json"));
    const Vector ls = ds.x().transpose().colPivHouseholderQr().solve(ds.y());
    for (Index k = 0; k < 3; ++k) EXPECT_NEAR(s["terminal_point"][k].get<double>(), ls(k), 1e-8);
}

TEST(Cli, GdEngineFlow) {
    const fs::path dir = scratch("gd");
    const auto r = cli("flow --engine gd --lr 0.005 --iters 20000 --dataset " + data("example_5_2.json") +
                       " --out " + dir.string());
    ASSERT_EQ(r.status, 0) << r.out;
    const Json s = Json::parse(r.out);
    EXPECT_EQ(s["final_pattern"].get<std::string>(), "011");
    EXPECT_TRUE(fs::exists(dir / "trajectory.csv"));
    EXPECT_NE(cli("flow --engine rk4 --dataset " + data("example_5_2.json")).status, 0);
}

TEST(Cli, CriteriaReport) {
    const fs::path dir = scratch("criteria");
    const auto r = cli("criteria --dataset " + data("example_5_2.json") + " --out " + dir.string());
    ASSERT_EQ(r.status, 0) << r.out;
    const Json c = Json::parse(read_file((dir / "certificate.json").string()));
    EXPECT_TRUE(c["interpolating"].get<bool>());
    EXPECT_EQ(c["no_deactivation"].size(), 3u);
    EXPECT_EQ(c["crossings"].size(), 1u);
    EXPECT_FALSE(c["crossings"][0]["b3"].get<bool>());
    const double b4 = c["crossings"][0]["b4_value"].get<double>();
    EXPECT_NEAR(b4, 0.05, 1e-9);
    EXPECT_EQ(c["alpha_star"].size(), 3u);
}

TEST(Cli, BackpropLabels) {
    const fs::path dir = scratch("backprop");
    fs::create_directories(dir);
    const std::string f = (dir / "net.json").string();
    write_file(f, R"({"weights": [[[1, 0], [0, -1]], [[2, 3]]]})");
    const auto r = cli("backprop --net " + f + " --x 1,1 --y 0.5");
    ASSERT_EQ(r.status, 0) << r.out;
    const Json j = Json::parse(r.out);
    // Hidden output (1, 0); network output 2; delta 1.5 at the top, masked (3, 0) below.
    EXPECT_DOUBLE_EQ(j["loss"].get<double>(), 0.5 * 1.5 * 1.5);
    EXPECT_DOUBLE_EQ(j["layers"][1]["delta"][0].get<double>(), 1.5);
    EXPECT_DOUBLE_EQ(j["layers"][0]["delta"][0].get<double>(), 3.0);
    EXPECT_DOUBLE_EQ(j["layers"][0]["delta"][1].get<double>(), 0.0);
    EXPECT_DOUBLE_EQ(j["layers"][0]["label"][0].get<double>(), -2.0);
}

TEST(Reproduce, Example52) {
    const auto r = cli("reproduce example-5-2");
    EXPECT_EQ(r.status, 0) << r.out;
}

TEST(Reproduce, Example53) {
    const auto r = cli("reproduce example-5-3");
    EXPECT_EQ(r.status, 0) << r.out;
}

TEST(Reproduce, Example51) {
    const auto r = cli("reproduce example-5-1");
    EXPECT_EQ(r.status, 0) << r.out;
}

TEST(Reproduce, GdEngineAgreesOnEventSequences) {
    for (const auto& name : builtin_scenarios()) {
        const auto r = cli("reproduce " + name + " --engine gd --lr 0.005 --iters 40000");
        EXPECT_EQ(r.out.find("FAIL run 0: gradient"), std::string::npos) << r.out;
        EXPECT_EQ(r.out.find("FAIL run 1: gradient"), std::string::npos) << r.out;
        EXPECT_EQ(r.out.find("FAIL run 2: gradient"), std::string::npos) << r.out;
    }
}

TEST(Reproducibility, ScenarioArtifactsByteIdentical) {
    const fs::path a = scratch("rep_a"), b = scratch("rep_b");
    for (const auto& name : builtin_scenarios()) {
        cli("reproduce " + name + " --out " + a.string());
        cli("reproduce " + name + " --out " + b.string());
        same_tree(a, b);
    }
}

TEST(Reproducibility, SeededFlowAndCampaignByteIdentical) {
    const fs::path a = scratch("seed_a"), b = scratch("seed_b");
    for (const auto& dir : {a, b}) {
        cli("flow --seed 11 --dataset " + data("example_5_3.json") + " --out " + dir.string());
        cli("campaign no-deactivation --seed 5 --trials 20 --out " + dir.string());
    }
    same_tree(a, b);
    const fs::path c = scratch("seed_c");
    cli("flow --seed 12 --dataset " + data("example_5_3.json") + " --out " + c.string());
    EXPECT_NE(read_file((a / "trajectory.csv").string()), read_file((c / "trajectory.csv").string()));
}

TEST(Cli, EnvironmentOverridesOut) {
    const fs::path env = scratch("env"), flag = scratch("flag");
    const auto r = cli("flow --dataset " + data("example_5_2.json") + " --out " + flag.string(),
                       "RELUFLOW_OUT=" + env.string());
    ASSERT_EQ(r.status, 0);
    EXPECT_TRUE(fs::exists(env / "trajectory.csv"));
    EXPECT_FALSE(fs::exists(flag));
}

TEST(Campaign, ZeroTrialsIsEmptyAndSucceeds) {
    for (const auto& id : campaign_ids()) {
        const auto rep = run_campaign(id, 1, 0);
        EXPECT_TRUE(rep.trials.empty());
        EXPECT_TRUE(rep.passed());
    }
    const fs::path dir = scratch("zero");
    EXPECT_EQ(cli("campaign crossing-bound --trials 0 --out " + dir.string()).status, 0);
    const Json j = Json::parse(read_file((dir / "campaign.json").string()));
    EXPECT_EQ(j["trials"].get<int>(), 0);
    EXPECT_TRUE(j["failures"].empty());
}

TEST(Campaign, UnknownIdIsAnError) {
    EXPECT_THROW(run_campaign("no-such-campaign", 1, 5), StructuralError);
    EXPECT_EQ(cli("campaign no-such-campaign").status, 2);
}

TEST(Campaign, DeterministicUnderSeed) {
    const auto a = run_campaign("census-orderings", 9, 15);
    const auto b = run_campaign("census-orderings", 9, 15);
    EXPECT_EQ(a.to_json_report().dump(), b.to_json_report().dump());
}

TEST(Campaign, CrossingBound500) {
    const auto rep = run_campaign("crossing-bound", 7, 500);
    EXPECT_EQ(rep.passes(), 500) << rep.to_json_report().dump(2);
}

TEST(Campaign, PlanarGlobalConvergence200) {
    const auto rep = run_campaign("d2-global-convergence", 7, 200);
    EXPECT_EQ(rep.passes(), 200) << rep.passes() << " of 200; first failure: "
                                 << (rep.passed() ? "" : rep.to_json_report()["failures"][0]["detail"].get<std::string>());
}

TEST(Campaign, RemainingCampaignsPass) {
    for (const std::string id : {"no-deactivation", "bad-min-exclusion", "norm-monotone-linear", "backprop-equivalence"}) {
        const auto rep = run_campaign(id, 7, 100);
        EXPECT_TRUE(rep.passed()) << id << ": " << rep.to_json_report().dump(2);
    }
}

TEST(Campaign, FailuresCarryReproductionData) {
    const auto rep = run_campaign("census-orderings", 7, 100);
    for (const auto& t : rep.trials) {
        if (t.passed) continue;
        EXPECT_FALSE(t.detail.empty());
        const Dataset ds = dataset_from_json(t.artifact["dataset"]);
        EXPECT_FALSE(compare_support_losses(minima_census(ds)).holds);
    }
}
