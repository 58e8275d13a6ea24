#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ERNET_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ernet_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("sample-mask dense plan needs no repairs") {
    const fs::path dir = fresh_dir("dense");
    REQUIRE(run_cli("sample-mask --arch 4,4,4 --plan external --ratios /dev/null --density 1 "
                    "--out-dir " + dir.string()) != 0);
    // uniform rejects exactly 1; external with literal 1.0 entries is the dense path
    {
        std::ofstream ratios(dir / "ratios.txt");
        ratios << "1.0\n1.0\n";
    }
    REQUIRE(run_cli("sample-mask --arch 4,4,4 --plan external --ratios " +
                    (dir / "ratios.txt").string() + " --seed 3 --out-dir " + dir.string()) == 0);
    const json mask = json::parse(slurp(dir / "mask.json"));
    std::size_t nnz = 0;
    for (const auto& layer : mask.at("layers")) nnz += layer.at("nnz").get<std::size_t>();
    CHECK(nnz == 32);
    const json flow = json::parse(slurp(dir / "flow_report.json"));
    CHECK(flow.at("edges_added") == 0);
}

TEST_CASE("sample-mask pyramidal plan exposes the quadratic root") {
    const fs::path dir = fresh_dir("pyramidal");
    REQUIRE(run_cli("sample-mask --arch 5,2,5 --plan pyramidal --density 0.5 --seed 1 --out-dir " +
                    dir.string()) == 0);
    const json plan = json::parse(slurp(dir / "plan.json"));
    CHECK(std::abs(plan.at("p_per_layer").at(0).get<double>() - 0.618034) < 1e-5);
    CHECK(std::abs(plan.at("p_per_layer").at(1).get<double>() - 0.381966) < 1e-5);
}

TEST_CASE("sample-mask is byte deterministic") {
    const fs::path a = fresh_dir("det_a");
    const fs::path b = fresh_dir("det_b");
    const std::string args = "sample-mask --arch 6,6,6 --plan uniform --density 0.4 --seed 9";
    REQUIRE(run_cli(args + " --out-dir " + a.string()) == 0);
    REQUIRE(run_cli(args + " --out-dir " + b.string()) == 0);
    CHECK(slurp(a / "mask.json") != "");
    // mask and flow bytes identical; plan/meta differ only in out_dir
    CHECK(json::parse(slurp(a / "mask.json")).at("layers") ==
          json::parse(slurp(b / "mask.json")).at("layers"));
}

TEST_CASE("embedded config reproduces outputs byte for byte") {
    const fs::path dir = fresh_dir("config");
    REQUIRE(run_cli("sample-mask --arch 5,5,5 --plan uniform --density 0.5 --seed 21 --out-dir " +
                    dir.string()) == 0);
    const std::string first_mask = slurp(dir / "mask.json");
    const std::string first_plan = slurp(dir / "plan.json");
    const json embedded = json::parse(first_plan).at("meta").at("config");
    {
        std::ofstream cfg(dir / "cfg.json");
        cfg << embedded.dump();
    }
    REQUIRE(run_cli("sample-mask --config " + (dir / "cfg.json").string()) == 0);
    CHECK(slurp(dir / "mask.json") == first_mask);
    CHECK(slurp(dir / "plan.json") == first_plan);
}

TEST_CASE("probe-lower-bound emits the closed-form value") {
    const fs::path dir = fresh_dir("lb");
    REQUIRE(run_cli("probe-lower-bound --p 0.5 --d 1 --delta 0.05 --n-grid 4 --trials 200 "
                    "--seed 2 --out-dir " + dir.string()) == 0);
    CHECK(slurp(dir / "lower_bound.csv").find("0.68359375") != std::string::npos);
}

TEST_CASE("probe-subset-sum writes the csv contract") {
    const fs::path dir = fresh_dir("pss");
    REQUIRE(run_cli("probe-subset-sum --p 0.5 --epsilon 0.1 --delta 0.1 --n-grid 2:30:2 "
                    "--trials 150 --seed 4 --out-dir " + dir.string()) == 0);
    const std::string csv = slurp(dir / "probe.csv");
    CHECK(csv.rfind("n,trials,failures,failure_rate,ci_halfwidth\n", 0) == 0);
    const json summary = json::parse(slurp(dir / "probe_summary.json"));
    CHECK(summary.contains("n_star"));
}

TEST_CASE("malformed flags yield usage errors") {
    CHECK(run_cli("probe-subset-sum --no-such-flag 1") == 2);
    CHECK(run_cli("definitely-not-a-command") == 2);
}

TEST_CASE("construct-wlt-fc on a dense plan always succeeds") {
    const fs::path dir = fresh_dir("wlt");
    {
        std::ofstream ratios(dir / "ratios.txt");
        ratios << "1.0\n1.0\n";
    }
    REQUIRE(run_cli("construct-wlt-fc --arch 3,4,2 --plan external --ratios " +
                    (dir / "ratios.txt").string() + " --delta 0.1 --trials 5 --seed 8 --out-dir " +
                    dir.string()) == 0);
    const json doc = json::parse(slurp(dir / "trial_reports.json"));
    CHECK(doc.at("aggregate").at("failures") == 0);
    CHECK(doc.at("trials").size() == 5);
}

TEST_CASE("report merges trial files") {
    const fs::path dir = fresh_dir("report");
    {
        std::ofstream ratios(dir / "ratios.txt");
        ratios << "1.0\n1.0\n";
    }
    REQUIRE(run_cli("construct-wlt-fc --arch 3,4,2 --plan external --ratios " +
                    (dir / "ratios.txt").string() + " --delta 0.1 --trials 3 --seed 8 --out-dir " +
                    dir.string()) == 0);
    const fs::path merged = fresh_dir("report_out");
    REQUIRE(run_cli("report " + (dir / "trial_reports.json").string() + " --delta 0.5 --out-dir " +
                    merged.string()) == 0);
    const json doc = json::parse(slurp(merged / "trial_reports.json"));
    CHECK(doc.at("aggregate").at("trials") == 3);
}

TEST_CASE("train-sgd with zero learning rate gives a flat loss curve") {
    const fs::path dir = fresh_dir("sgd");
    REQUIRE(run_cli("train-sgd --arch 4,6,2 --density 0.5 --dataset blobs --classes 2 "
                    "--samples 20 --lr 0 --epochs 4 --seed 5 --out-dir " + dir.string()) == 0);
    std::istringstream csv(slurp(dir / "loss_curve.csv"));
    std::string line;
    std::getline(csv, line);  // header
    std::vector<double> values;
    while (std::getline(csv, line)) values.push_back(std::stod(line.substr(line.find(',') + 1)));
    REQUIRE(values.size() == 4);
    // epoch means differ only by the shuffled summation order
    for (double v : values) CHECK(std::abs(v - values.front()) < 1e-12);
}

TEST_CASE("train-rigl reports a constant nnz column in rewiring mode") {
    const fs::path dir = fresh_dir("rigl");
    REQUIRE(run_cli("train-rigl --arch 4,8,2 --density 0.4 --dataset blobs --classes 2 "
                    "--samples 32 --lr 0.05 --epochs 3 --batch-size 8 --update-every 4 "
                    "--prune-rate 0.3 --seed 6 --out-dir " + dir.string()) == 0);
    std::istringstream csv(slurp(dir / "nnz_trace.csv"));
    std::string line;
    std::getline(csv, line);
    std::vector<std::string> nnz;
    while (std::getline(csv, line)) nnz.push_back(line.substr(line.find(',') + 1));
    REQUIRE(nnz.size() >= 2);
    for (const auto& v : nnz) CHECK(v == nnz.front());
}

TEST_CASE("train-edge-popup writes curves and a contained ticket") {
    const fs::path dir = fresh_dir("ep");
    REQUIRE(run_cli("train-edge-popup --arch 4,8,2 --density 0.5 --dataset blobs --classes 2 "
                    "--samples 24 --lr 0.1 --epochs 2 --levels 0.4,0.2 --seed 7 --out-dir " +
                    dir.string()) == 0);
    const json ticket = json::parse(slurp(dir / "ticket.json"));
    CHECK(ticket.at("layers").size() == 2);
    const std::string curve = slurp(dir / "accuracy_curve.csv");
    CHECK(curve.rfind("step,accuracy\n", 0) == 0);
}
