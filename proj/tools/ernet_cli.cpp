#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ernet/mask.hpp"
#include "ernet/network.hpp"
#include "ernet/parallel.hpp"
#include "ernet/plans.hpp"
#include "ernet/rng.hpp"
#include "ernet/subset_sum.hpp"
#include "ernet/tickets.hpp"
#include "ernet/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ernet;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 claim holds / success, 1 claim violated, 2 usage error,
// 3 runtime or numeric error.
constexpr int kOk = 0;
constexpr int kClaimViolated = 1;
constexpr int kUsage = 2;
constexpr int kRuntime = 3;

struct Globals {
    std::uint64_t seed = 0;
    int trials = 1;
    int jobs = 0;  // 0 = hardware concurrency
    std::string out_dir = ".";
    std::string config_path;
};

std::string fmt(double v) { return json(v).dump(); }

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream out(path);
    if (!out) throw StructuralError("cannot open " + path.string() + " for writing");
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

json meta_block(const json& resolved, std::uint64_t seed) {
    return json{{"tool_version", kVersion}, {"config", resolved}, {"master_seed", seed}};
}

fs::path out_path(const Globals& g, const std::string& name) {
    fs::create_directories(g.out_dir);
    return fs::path(g.out_dir) / name;
}

// Inline arch shorthands: "4,6,2" (FC widths) or "conv:4,8,2@3" (channel
// chain with square kernels); anything else is a JSON file path.
Architecture parse_arch(const std::string& spec, double lo, double hi) {
    if (spec.empty()) throw DomainError("missing --arch");
    const bool conv = spec.rfind("conv:", 0) == 0;
    const std::string body = conv ? spec.substr(5) : spec;
    if (conv || body.find_first_not_of("0123456789,@x") == std::string::npos) {
        std::size_t k = 3;
        std::string chain = body;
        if (conv) {
            const auto at = body.find('@');
            if (at != std::string::npos) {
                chain = body.substr(0, at);
                k = std::stoul(body.substr(at + 1));
            }
        }
        std::vector<std::size_t> widths;
        std::stringstream ss(chain);
        std::string tok;
        while (std::getline(ss, tok, ',')) widths.push_back(std::stoul(tok));
        if (widths.size() < 2) throw DomainError("arch shorthand needs at least two widths");
        if (!conv) return fc_chain(widths, lo, hi);
        Architecture arch;
        arch.domain_lo = lo;
        arch.domain_hi = hi;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l)
            arch.layers.push_back(Conv2dSpec{widths[l], widths[l + 1], k, k});
        arch.validate();
        return arch;
    }
    return architecture_from_json(read_file(spec));
}

std::vector<int> parse_int_list(const std::string& spec) {
    std::vector<int> out;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto colon = tok.find(':');
        if (colon != std::string::npos) {
            // min:max[:step]
            const auto colon2 = tok.find(':', colon + 1);
            const int lo = std::stoi(tok.substr(0, colon));
            const int hi = std::stoi(
                colon2 == std::string::npos ? tok.substr(colon + 1)
                                            : tok.substr(colon + 1, colon2 - colon - 1));
            const int step = colon2 == std::string::npos ? 1 : std::stoi(tok.substr(colon2 + 1));
            for (int n = lo; n <= hi; n += step) out.push_back(n);
        } else {
            out.push_back(std::stoi(tok));
        }
    }
    if (out.empty()) throw DomainError("empty integer list");
    return out;
}

std::vector<double> parse_double_list(const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

SparsityPlan build_plan(const std::string& name, const Architecture& arch, double density,
                        const std::string& ratios_path) {
    if (name == "external") {
        if (ratios_path.empty()) throw DomainError("external plan needs --ratios");
        return plan_external(arch, ratios_path);
    }
    return make_plan(plan_method_from_string(name), arch, density);
}

json plan_to_json(const SparsityPlan& plan) {
    return json{{"method", to_string(plan.method)},
                {"global_p", plan.global_p},
                {"achieved_global_p", plan.achieved_global_p},
                {"p_per_layer", plan.p_per_layer}};
}

json flow_to_json(const FlowReport& flow) {
    return json{{"zero_in_degree", flow.zero_in_degree},
                {"zero_out_degree", flow.zero_out_degree},
                {"edges_added", flow.edges_added},
                {"edges_removed", flow.edges_removed},
                {"total_flags", flow.total_flags()}};
}

json report_to_json(const TrialReport& r) {
    return json{{"kind", r.kind},
                {"success", r.success},
                {"q", r.q},
                {"max_error", r.max_error},
                {"nnz_lt", r.nnz_lt},
                {"seed", r.seed},
                {"wall_time_s", r.wall_time_s},
                {"rho", r.rho},
                {"output_scale", r.output_scale},
                {"failure_detail", r.failure_detail}};
}

TrialReport report_from_json(const json& j) {
    TrialReport r;
    r.kind = j.at("kind");
    r.success = j.at("success");
    r.q = j.at("q").get<std::vector<std::size_t>>();
    r.max_error = j.at("max_error");
    r.nnz_lt = j.at("nnz_lt");
    r.seed = j.at("seed");
    r.wall_time_s = j.at("wall_time_s");
    r.rho = j.at("rho");
    r.output_scale = j.at("output_scale");
    r.failure_detail = j.at("failure_detail");
    return r;
}

json aggregate_reports(const std::vector<TrialReport>& reports, double delta) {
    const std::size_t trials = reports.size();
    std::size_t failures = 0;
    double err_sum = 0.0;
    std::size_t err_count = 0;
    std::size_t nnz_min = 0, nnz_max = 0;
    double nnz_sum = 0.0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        if (!r.success) ++failures;
        if (r.success) {
            err_sum += r.max_error;
            ++err_count;
        }
        if (i == 0 || r.nnz_lt < nnz_min) nnz_min = r.nnz_lt;
        if (i == 0 || r.nnz_lt > nnz_max) nnz_max = r.nnz_lt;
        nnz_sum += static_cast<double>(r.nnz_lt);
    }
    const double rate = trials ? static_cast<double>(failures) / trials : 0.0;
    const double half = trials ? 1.96 * std::sqrt(rate * (1.0 - rate) / trials) : 0.0;
    json agg;
    agg["kind"] = reports.empty() ? "" : reports.front().kind;
    agg["delta"] = delta;
    agg["trials"] = trials;
    agg["failures"] = failures;
    agg["failure_rate"] = rate;
    agg["failure_rate_ci"] = json{{"halfwidth", half}, {"upper", rate + half}};
    agg["mean_verification_error"] = err_count ? err_sum / err_count : 0.0;
    agg["q"] = reports.empty() ? json::array() : json(reports.front().q);
    agg["nnz_stats"] = json{{"min", nnz_min},
                            {"max", nnz_max},
                            {"mean", trials ? nnz_sum / trials : 0.0}};
    return agg;
}

std::string reports_to_csv(const std::vector<TrialReport>& reports) {
    std::ostringstream os;
    os << "trial,seed,success,max_error,nnz_lt,rho,output_scale,wall_time_s\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        os << i << ',' << r.seed << ',' << (r.success ? 1 : 0) << ',' << fmt(r.max_error) << ','
           << r.nnz_lt << ',' << r.rho << ',' << fmt(r.output_scale) << ',' << fmt(r.wall_time_s)
           << '\n';
    }
    return os.str();
}

void write_report_bundle(const Globals& g, const std::vector<TrialReport>& reports, double delta,
                         const json& resolved) {
    json doc;
    doc["meta"] = meta_block(resolved, g.seed);
    doc["aggregate"] = aggregate_reports(reports, delta);
    doc["trials"] = json::array();
    for (const auto& r : reports) doc["trials"].push_back(report_to_json(r));
    write_file(out_path(g, "trial_reports.json"), doc.dump(2));
    write_file(out_path(g, "trial_reports.csv"), reports_to_csv(reports));
}

// Pre-scan for --config so file values act as defaults under CLI overrides.
json load_config(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") return json::parse(read_file(argv[i + 1]));
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a.rfind("--config=", 0) == 0) return json::parse(read_file(a.substr(9)));
    }
    return json::object();
}

template <class T>
void cfg_get(const json& cfg, const char* key, T& out) {
    if (cfg.contains(key)) cfg.at(key).get_to(out);
}

void add_globals(CLI::App* cmd, Globals& g, const json& cfg) {
    cfg_get(cfg, "seed", g.seed);
    cfg_get(cfg, "trials", g.trials);
    cfg_get(cfg, "jobs", g.jobs);
    cfg_get(cfg, "out_dir", g.out_dir);
    cmd->add_option("--seed", g.seed, "master seed");
    cmd->add_option("--trials", g.trials, "number of Monte Carlo trials");
    cmd->add_option("--jobs", g.jobs, "parallel workers (0 = all cores)");
    cmd->add_option("--out-dir", g.out_dir, "output directory");
    cmd->add_option("--config", g.config_path, "JSON config file (same keys as the flags)");
}

json globals_json(const std::string& command, const Globals& g) {
    return json{{"command", command},
                {"seed", g.seed},
                {"trials", g.trials},
                {"jobs", g.jobs},
                {"out_dir", g.out_dir}};
}

struct TrainArgs {
    std::string arch = "8,16,2";
    std::string plan = "uniform";
    double density = 0.5;
    std::string ratios;
    double domain_lo = 0.0;
    double domain_hi = 1.0;
    std::string dataset = "blobs";  // blobs | teacher-student
    int samples = 256;
    int classes = 2;
    double spread = 0.5;
    double lr = 0.05;
    double momentum = 0.9;
    double weight_decay = 0.0;
    int epochs = 10;
    int batch_size = 32;
    std::string loss = "cross-entropy";
};

void add_train_args(CLI::App* cmd, TrainArgs& a, const json& cfg) {
    cfg_get(cfg, "arch", a.arch);
    cfg_get(cfg, "plan", a.plan);
    cfg_get(cfg, "density", a.density);
    cfg_get(cfg, "ratios", a.ratios);
    cfg_get(cfg, "domain_lo", a.domain_lo);
    cfg_get(cfg, "domain_hi", a.domain_hi);
    cfg_get(cfg, "dataset", a.dataset);
    cfg_get(cfg, "samples", a.samples);
    cfg_get(cfg, "classes", a.classes);
    cfg_get(cfg, "spread", a.spread);
    cfg_get(cfg, "lr", a.lr);
    cfg_get(cfg, "momentum", a.momentum);
    cfg_get(cfg, "weight_decay", a.weight_decay);
    cfg_get(cfg, "epochs", a.epochs);
    cfg_get(cfg, "batch_size", a.batch_size);
    cfg_get(cfg, "loss", a.loss);
    cmd->add_option("--arch", a.arch, "architecture (widths, conv:..., or JSON file)");
    cmd->add_option("--plan", a.plan, "sparsity plan: uniform|erk|pyramidal|balanced|external");
    cmd->add_option("--density", a.density, "global density p");
    cmd->add_option("--ratios", a.ratios, "per-layer density file for --plan external");
    cmd->add_option("--domain-lo", a.domain_lo, "input domain lower bound");
    cmd->add_option("--domain-hi", a.domain_hi, "input domain upper bound");
    cmd->add_option("--dataset", a.dataset, "blobs | teacher-student");
    cmd->add_option("--samples", a.samples, "dataset size (per class for blobs)");
    cmd->add_option("--classes", a.classes, "number of blob classes");
    cmd->add_option("--spread", a.spread, "blob noise standard deviation");
    cmd->add_option("--lr", a.lr, "learning rate");
    cmd->add_option("--momentum", a.momentum, "SGD momentum");
    cmd->add_option("--weight-decay", a.weight_decay, "L2 penalty on unmasked weights");
    cmd->add_option("--epochs", a.epochs, "training epochs (per anneal level for edge-popup)");
    cmd->add_option("--batch-size", a.batch_size, "minibatch size");
    cmd->add_option("--loss", a.loss, "mse | cross-entropy");
}

json train_args_json(const TrainArgs& a) {
    return json{{"arch", a.arch},         {"plan", a.plan},
                {"density", a.density},   {"ratios", a.ratios},
                {"domain_lo", a.domain_lo}, {"domain_hi", a.domain_hi},
                {"dataset", a.dataset},   {"samples", a.samples},
                {"classes", a.classes},   {"spread", a.spread},
                {"lr", a.lr},             {"momentum", a.momentum},
                {"weight_decay", a.weight_decay}, {"epochs", a.epochs},
                {"batch_size", a.batch_size}, {"loss", a.loss}};
}

struct TrainSetup {
    MaskedNetwork net;
    Dataset data;
    TrainConfig cfg;
};

TrainSetup prepare_training(const TrainArgs& a, const Globals& g) {
    Architecture arch = parse_arch(a.arch, a.domain_lo, a.domain_hi);
    SparsityPlan plan = build_plan(a.plan, arch, a.density, a.ratios);
    MaskedNetwork net = MaskedNetwork::zeros(arch);
    net.mask = sample_mask(arch, plan, derive_seed(g.seed, 0x3a5cULL));
    he_init(net, derive_seed(g.seed, 0x1217ULL));

    Dataset data;
    if (a.dataset == "blobs") {
        data = make_blobs(arch.input_width(), a.classes, a.samples, a.spread,
                          derive_seed(g.seed, 0xb10bULL));
    } else if (a.dataset == "teacher-student") {
        MaskedNetwork teacher = random_target(arch, derive_seed(g.seed, 0x7eacULL), 1.0);
        data = make_teacher_student(teacher, a.samples, derive_seed(g.seed, 0xda7aULL));
    } else {
        throw DomainError("unknown dataset: " + a.dataset);
    }

    TrainConfig cfg;
    cfg.learning_rate = a.lr;
    cfg.momentum = a.momentum;
    cfg.weight_decay = a.weight_decay;
    cfg.epochs = a.epochs;
    cfg.batch_size = static_cast<std::size_t>(a.batch_size);
    cfg.seed = g.seed;
    if (a.loss == "mse")
        cfg.loss = Loss::Mse;
    else if (a.loss == "cross-entropy")
        cfg.loss = Loss::CrossEntropy;
    else
        throw DomainError("unknown loss: " + a.loss);
    if (data.classification && cfg.loss == Loss::Mse)
        throw DomainError("mse loss requires a regression dataset");
    if (!data.classification && cfg.loss == Loss::CrossEntropy)
        throw DomainError("cross-entropy requires a classification dataset");
    return TrainSetup{std::move(net), std::move(data), cfg};
}

std::string curve_csv(const std::vector<double>& values, const char* label) {
    std::ostringstream os;
    os << "step," << label << '\n';
    for (std::size_t i = 0; i < values.size(); ++i) os << i << ',' << fmt(values[i]) << '\n';
    return os.str();
}

MaskedNetwork load_or_make_target(const std::string& target_path, const std::string& arch_spec,
                                  double lo, double hi, std::uint64_t seed) {
    if (!target_path.empty()) return load_network(target_path);
    Architecture arch = parse_arch(arch_spec, lo, hi);
    return random_target(arch, derive_seed(seed, 0x7a26ULL), 1.0);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ER-network lottery ticket toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    json cfg;
    try {
        cfg = load_config(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }

    Globals g;
    int exit_code = kOk;

    // ---- sample-mask ----
    auto* sm = app.add_subcommand("sample-mask", "sample an ER mask under a sparsity plan");
    struct {
        std::string arch = "8,8,8";
        std::string plan = "uniform";
        double density = 0.5;
        std::string ratios;
        double domain_lo = 0.0, domain_hi = 1.0;
        std::string repair = "none";
    } sm_a;
    cfg_get(cfg, "arch", sm_a.arch);
    cfg_get(cfg, "plan", sm_a.plan);
    cfg_get(cfg, "density", sm_a.density);
    cfg_get(cfg, "ratios", sm_a.ratios);
    cfg_get(cfg, "domain_lo", sm_a.domain_lo);
    cfg_get(cfg, "domain_hi", sm_a.domain_hi);
    cfg_get(cfg, "repair", sm_a.repair);
    sm->add_option("--arch", sm_a.arch, "architecture (widths, conv:..., or JSON file)");
    sm->add_option("--plan", sm_a.plan, "uniform|erk|pyramidal|balanced|external");
    sm->add_option("--density", sm_a.density, "global density p");
    sm->add_option("--ratios", sm_a.ratios, "per-layer densities for --plan external");
    sm->add_option("--domain-lo", sm_a.domain_lo, "input domain lower bound");
    sm->add_option("--domain-hi", sm_a.domain_hi, "input domain upper bound");
    sm->add_option("--repair", sm_a.repair, "flow repair: none|random-add|reject");
    add_globals(sm, g, cfg);
    sm->callback([&] {
        Architecture arch = parse_arch(sm_a.arch, sm_a.domain_lo, sm_a.domain_hi);
        SparsityPlan plan = build_plan(sm_a.plan, arch, sm_a.density, sm_a.ratios);
        Mask mask = sample_mask(arch, plan, g.seed);
        FlowReport flow = flow_stats(arch, mask);
        if (sm_a.repair == "random-add") {
            auto [repaired, rep] = repair_random_addition(arch, mask, g.seed);
            mask = std::move(repaired);
            flow = rep;
        } else if (sm_a.repair == "reject") {
            mask = repair_rejection(arch, plan, g.seed, 10000);
            flow = flow_stats(arch, mask);
        } else if (sm_a.repair != "none") {
            throw DomainError("unknown repair mode: " + sm_a.repair);
        }
        json resolved = globals_json("sample-mask", g);
        resolved.update(json{{"arch", sm_a.arch},
                             {"plan", sm_a.plan},
                             {"density", sm_a.density},
                             {"ratios", sm_a.ratios},
                             {"domain_lo", sm_a.domain_lo},
                             {"domain_hi", sm_a.domain_hi},
                             {"repair", sm_a.repair}});
        json mask_doc = json::parse(mask_to_json(mask));
        mask_doc["meta"] = meta_block(resolved, g.seed);
        write_file(out_path(g, "mask.json"), mask_doc.dump(2));
        json flow_doc = flow_to_json(flow);
        flow_doc["meta"] = meta_block(resolved, g.seed);
        write_file(out_path(g, "flow_report.json"), flow_doc.dump(2));
        json plan_doc = plan_to_json(plan);
        plan_doc["meta"] = meta_block(resolved, g.seed);
        write_file(out_path(g, "plan.json"), plan_doc.dump(2));
    });

    // ---- probe-subset-sum ----
    auto* pss = app.add_subcommand("probe-subset-sum", "failure-rate curve for thinned subset sums");
    struct {
        double p = 0.5;
        double epsilon = 0.05;
        double delta = 0.05;
        std::string n_grid = "2:40:2";
    } pss_a;
    cfg_get(cfg, "p", pss_a.p);
    cfg_get(cfg, "epsilon", pss_a.epsilon);
    cfg_get(cfg, "delta", pss_a.delta);
    cfg_get(cfg, "n_grid", pss_a.n_grid);
    pss->add_option("--p", pss_a.p, "Bernoulli keep probability");
    pss->add_option("--epsilon", pss_a.epsilon, "approximation tolerance");
    pss->add_option("--delta", pss_a.delta, "target failure probability");
    pss->add_option("--n-grid", pss_a.n_grid, "grid of n values (list or min:max:step)");
    add_globals(pss, g, cfg);
    pss->callback([&] {
        const auto grid = parse_int_list(pss_a.n_grid);
        ProbeResult res = probe_subset_sum(pss_a.p, pss_a.epsilon, pss_a.delta, grid, g.trials, g.seed);
        json resolved = globals_json("probe-subset-sum", g);
        resolved.update(json{{"p", pss_a.p},
                             {"epsilon", pss_a.epsilon},
                             {"delta", pss_a.delta},
                             {"n_grid", pss_a.n_grid}});
        std::ostringstream csv;
        csv << "n,trials,failures,failure_rate,ci_halfwidth\n";
        for (const auto& pt : res.points)
            csv << pt.n << ',' << pt.trials << ',' << pt.failures << ',' << fmt(pt.failure_rate)
                << ',' << fmt(pt.ci_halfwidth) << '\n';
        write_file(out_path(g, "probe.csv"), csv.str());
        json doc{{"p", res.p},
                 {"epsilon", res.epsilon},
                 {"delta", res.delta},
                 {"n_star", res.n_star},
                 {"adversarial_worst_rate", res.adversarial_worst_rate},
                 {"meta", meta_block(resolved, g.seed)}};
        write_file(out_path(g, "probe_summary.json"), doc.dump(2));
        if (res.n_star < 0) exit_code = kClaimViolated;
    });

    // ---- probe-lower-bound ----
    auto* plb = app.add_subcommand("probe-lower-bound",
                                   "representability of univariate targets in d->n->1 sources");
    struct {
        double p = 0.5;
        int d = 4;
        double delta = 0.05;
        std::string n_grid = "1:32";
    } plb_a;
    cfg_get(cfg, "p", plb_a.p);
    cfg_get(cfg, "d", plb_a.d);
    cfg_get(cfg, "delta", plb_a.delta);
    cfg_get(cfg, "n_grid", plb_a.n_grid);
    plb->add_option("--p", plb_a.p, "Bernoulli keep probability");
    plb->add_option("--d", plb_a.d, "input dimension");
    plb->add_option("--delta", plb_a.delta, "failure probability budget");
    plb->add_option("--n-grid", plb_a.n_grid, "grid of hidden widths");
    add_globals(plb, g, cfg);
    plb->callback([&] {
        const auto grid = parse_int_list(plb_a.n_grid);
        LowerBoundResult res =
            probe_lower_bound(plb_a.p, plb_a.d, plb_a.delta, grid, g.trials, g.seed);
        json resolved = globals_json("probe-lower-bound", g);
        resolved.update(json{{"p", plb_a.p},
                             {"d", plb_a.d},
                             {"delta", plb_a.delta},
                             {"n_grid", plb_a.n_grid}});
        std::ostringstream csv;
        csv << "n,analytic,monte_carlo\n";
        for (const auto& pt : res.points)
            csv << pt.n << ',' << fmt(pt.analytic) << ',' << fmt(pt.monte_carlo) << '\n';
        write_file(out_path(g, "lower_bound.csv"), csv.str());
        json doc{{"p", res.p},
                 {"d", res.d},
                 {"delta", res.delta},
                 {"measured_min_n", res.measured_min_n},
                 {"analytic_threshold", res.analytic_threshold},
                 {"meta", meta_block(resolved, g.seed)}};
        write_file(out_path(g, "lower_bound_summary.json"), doc.dump(2));
        if (res.measured_min_n >= 0 &&
            static_cast<double>(res.measured_min_n) < res.analytic_threshold - 1e-9)
            exit_code = kClaimViolated;
    });

    // ---- construct-* ----
    struct ConstructArgs {
        std::string target;
        std::string arch = "4,6,2";
        std::string plan = "uniform";
        double density = 0.5;
        std::string ratios;
        double domain_lo = 0.0, domain_hi = 1.0;
        double delta = 0.1;
        double epsilon = 0.2;
    };
    auto add_construct_args = [&](CLI::App* cmd, ConstructArgs& a, bool with_eps) {
        cfg_get(cfg, "target", a.target);
        cfg_get(cfg, "arch", a.arch);
        cfg_get(cfg, "plan", a.plan);
        cfg_get(cfg, "density", a.density);
        cfg_get(cfg, "ratios", a.ratios);
        cfg_get(cfg, "domain_lo", a.domain_lo);
        cfg_get(cfg, "domain_hi", a.domain_hi);
        cfg_get(cfg, "delta", a.delta);
        cfg_get(cfg, "epsilon", a.epsilon);
        cmd->add_option("--target", a.target, "target network JSON (default: random from --arch)");
        cmd->add_option("--arch", a.arch, "target architecture when no --target is given");
        cmd->add_option("--plan", a.plan, "uniform|erk|pyramidal|balanced|external");
        cmd->add_option("--density", a.density, "global density p");
        cmd->add_option("--ratios", a.ratios, "per-layer densities for --plan external");
        cmd->add_option("--domain-lo", a.domain_lo, "input domain lower bound");
        cmd->add_option("--domain-hi", a.domain_hi, "input domain upper bound");
        cmd->add_option("--delta", a.delta, "per-trial failure budget");
        if (with_eps) cmd->add_option("--epsilon", a.epsilon, "approximation tolerance");
        add_globals(cmd, g, cfg);
    };
    auto construct_resolved = [&](const char* command, const ConstructArgs& a, bool with_eps) {
        json resolved = globals_json(command, g);
        resolved.update(json{{"target", a.target},
                             {"arch", a.arch},
                             {"plan", a.plan},
                             {"density", a.density},
                             {"ratios", a.ratios},
                             {"domain_lo", a.domain_lo},
                             {"domain_hi", a.domain_hi},
                             {"delta", a.delta}});
        if (with_eps) resolved["epsilon"] = a.epsilon;
        return resolved;
    };

    auto* cw = app.add_subcommand("construct-wlt-fc", "weak lottery tickets for FC targets");
    auto* cc = app.add_subcommand("construct-wlt-conv", "weak lottery tickets for conv targets");
    auto* cs = app.add_subcommand("construct-slt", "strong lottery tickets for FC targets");
    static ConstructArgs cw_a, cc_a, cs_a;
    cc_a.arch = "conv:2,2,2@3";
    add_construct_args(cw, cw_a, false);
    add_construct_args(cc, cc_a, false);
    add_construct_args(cs, cs_a, true);

    auto run_wlt = [&](const ConstructArgs& a, bool conv, const char* command) {
        MaskedNetwork target =
            load_or_make_target(a.target, a.arch, a.domain_lo, a.domain_hi, g.seed);
        SparsityPlan plan = build_plan(a.plan, target.arch, a.density, a.ratios);
        std::vector<TrialReport> reports(g.trials);
        parallel_for(reports.size(), g.jobs, [&](std::size_t t) {
            const std::uint64_t ts = derive_seed(g.seed, t);
            auto res = conv ? construct_wlt_conv(target, plan, a.delta, ts)
                            : construct_wlt_fc(target, plan, a.delta, ts);
            reports[t] = res.report;
        });
        write_report_bundle(g, reports, a.delta, construct_resolved(command, a, false));
        const double rate = aggregate_reports(reports, a.delta)["failure_rate"].get<double>();
        if (rate > a.delta) exit_code = kClaimViolated;
    };
    cw->callback([&] { run_wlt(cw_a, false, "construct-wlt-fc"); });
    cc->callback([&] { run_wlt(cc_a, true, "construct-wlt-conv"); });
    cs->callback([&] {
        MaskedNetwork target =
            load_or_make_target(cs_a.target, cs_a.arch, cs_a.domain_lo, cs_a.domain_hi, g.seed);
        SparsityPlan plan = build_plan(cs_a.plan, target.arch, cs_a.density, cs_a.ratios);
        SltWidths widths =
            compute_slt_widths(target, plan, cs_a.delta, cs_a.epsilon, g.seed, SltCalibration{});
        std::vector<TrialReport> reports(g.trials);
        parallel_for(reports.size(), g.jobs, [&](std::size_t t) {
            const std::uint64_t ts = derive_seed(g.seed, t);
            reports[t] = construct_slt_with_widths(target, plan, widths, cs_a.epsilon, ts).report;
        });
        write_report_bundle(g, reports, cs_a.delta, construct_resolved("construct-slt", cs_a, true));
        const double rate = aggregate_reports(reports, cs_a.delta)["failure_rate"].get<double>();
        if (rate > cs_a.delta) exit_code = kClaimViolated;
    });

    // ---- train-* ----
    auto* ts = app.add_subcommand("train-sgd", "SGD on a fixed ER mask");
    static TrainArgs ts_a;
    add_train_args(ts, ts_a, cfg);
    add_globals(ts, g, cfg);
    ts->callback([&] {
        TrainSetup setup = prepare_training(ts_a, g);
        SgdResult res = sgd_train(setup.net, setup.data, setup.cfg);
        json resolved = globals_json("train-sgd", g);
        resolved.update(train_args_json(ts_a));
        write_file(out_path(g, "loss_curve.csv"), curve_csv(res.loss_curve, "loss"));
        save_network(res.net, out_path(g, "trained_network.json").string());
        json doc{{"final_loss", res.loss_curve.empty() ? 0.0 : res.loss_curve.back()},
                 {"diverged", res.diverged},
                 {"meta", meta_block(resolved, g.seed)}};
        write_file(out_path(g, "train_summary.json"), doc.dump(2));
        if (res.diverged) exit_code = kClaimViolated;
    });

    auto* te = app.add_subcommand("train-edge-popup", "edge-popup scores within an ER mask");
    static TrainArgs te_a;
    static std::string te_levels = "0.45,0.35,0.25,0.15,0.05";
    add_train_args(te, te_a, cfg);
    cfg_get(cfg, "levels", te_levels);
    te->add_option("--levels", te_levels, "annealed keep fractions, nonincreasing");
    add_globals(te, g, cfg);
    te->callback([&] {
        TrainSetup setup = prepare_training(te_a, g);
        std::vector<AnnealLevel> schedule;
        const auto fractions = parse_double_list(te_levels);
        for (std::size_t i = 0; i < fractions.size(); ++i)
            schedule.push_back({static_cast<int>(i), fractions[i]});
        EdgePopupResult res = edge_popup(setup.net, setup.data, setup.cfg, schedule);
        json resolved = globals_json("train-edge-popup", g);
        resolved.update(train_args_json(te_a));
        resolved["levels"] = te_levels;
        write_file(out_path(g, "accuracy_curve.csv"), curve_csv(res.accuracy_curve, "accuracy"));
        json ticket_doc = json::parse(mask_to_json(res.ticket));
        ticket_doc["meta"] = meta_block(resolved, g.seed);
        write_file(out_path(g, "ticket.json"), ticket_doc.dump(2));
        save_network(res.net, out_path(g, "trained_network.json").string());
        json doc{{"final_accuracy",
                  res.accuracy_curve.empty() ? 0.0 : res.accuracy_curve.back()},
                 {"keep_clipped", res.keep_clipped},
                 {"meta", meta_block(resolved, g.seed)}};
        write_file(out_path(g, "train_summary.json"), doc.dump(2));
    });

    auto* tr = app.add_subcommand("train-rigl", "SGD with periodic prune/grow rewiring");
    static TrainArgs tr_a;
    static int tr_update_every = 100;
    static double tr_prune_rate = 0.5;
    static std::string tr_density_schedule;
    add_train_args(tr, tr_a, cfg);
    cfg_get(cfg, "update_every", tr_update_every);
    cfg_get(cfg, "prune_rate", tr_prune_rate);
    cfg_get(cfg, "density_schedule", tr_density_schedule);
    tr->add_option("--update-every", tr_update_every, "steps between mask updates");
    tr->add_option("--prune-rate", tr_prune_rate, "fraction of active weights dropped per update");
    tr->add_option("--density-schedule", tr_density_schedule,
                   "per-update densities for sparse-to-sparse mode");
    add_globals(tr, g, cfg);
    tr->callback([&] {
        TrainSetup setup = prepare_training(tr_a, g);
        const auto schedule = tr_density_schedule.empty() ? std::vector<double>{}
                                                          : parse_double_list(tr_density_schedule);
        RiglResult res =
            rigl_rewire(setup.net, setup.data, setup.cfg, tr_update_every, tr_prune_rate, schedule);
        json resolved = globals_json("train-rigl", g);
        resolved.update(train_args_json(tr_a));
        resolved.update(json{{"update_every", tr_update_every},
                             {"prune_rate", tr_prune_rate},
                             {"density_schedule", tr_density_schedule}});
        write_file(out_path(g, "loss_curve.csv"), curve_csv(res.loss_curve, "loss"));
        std::ostringstream nnz_csv;
        nnz_csv << "update,nnz\n";
        for (std::size_t i = 0; i < res.nnz_trace.size(); ++i)
            nnz_csv << i << ',' << res.nnz_trace[i] << '\n';
        write_file(out_path(g, "nnz_trace.csv"), nnz_csv.str());
        json mask_doc = json::parse(mask_to_json(res.mask));
        mask_doc["meta"] = meta_block(resolved, g.seed);
        write_file(out_path(g, "final_mask.json"), mask_doc.dump(2));
        save_network(res.net, out_path(g, "trained_network.json").string());
        json doc{{"final_loss", res.loss_curve.empty() ? 0.0 : res.loss_curve.back()},
                 {"grow_shortfall", res.grow_shortfall},
                 {"meta", meta_block(resolved, g.seed)}};
        write_file(out_path(g, "train_summary.json"), doc.dump(2));
    });

    // ---- report ----
    auto* rp = app.add_subcommand("report", "merge trial report files into one aggregate");
    static std::vector<std::string> rp_inputs;
    static double rp_delta = -1.0;
    cfg_get(cfg, "inputs", rp_inputs);
    cfg_get(cfg, "delta", rp_delta);
    rp->add_option("inputs", rp_inputs, "trial_reports.json files to merge");
    rp->add_option("--delta", rp_delta, "gate: exit 1 if merged failure rate exceeds this");
    add_globals(rp, g, cfg);
    rp->callback([&] {
        if (rp_inputs.empty()) throw DomainError("report needs at least one input file");
        std::vector<TrialReport> merged;
        for (const auto& path : rp_inputs) {
            json doc = json::parse(read_file(path));
            const json& arr = doc.contains("trials") ? doc["trials"] : doc;
            for (const auto& j : arr) merged.push_back(report_from_json(j));
        }
        json resolved = globals_json("report", g);
        resolved.update(json{{"inputs", rp_inputs}, {"delta", rp_delta}});
        write_report_bundle(g, merged, rp_delta, resolved);
        if (rp_delta >= 0.0) {
            const double rate = aggregate_reports(merged, rp_delta)["failure_rate"].get<double>();
            if (rate > rp_delta) exit_code = kClaimViolated;
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return exit_code;
}
