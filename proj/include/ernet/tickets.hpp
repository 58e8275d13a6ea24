#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ernet/network.hpp"
#include "ernet/plans.hpp"
#include "ernet/subset_sum.hpp"

namespace ernet {

// Width overparametrization factors q_0..q_L of an (L+1)-layer source built
// around a depth-L target; q_L = 1.
struct WidthPlan {
    std::vector<std::size_t> q;
    double delta = 0.0;
    Architecture source_arch;
};

// Per-layer tolerances for the strong-ticket construction plus the activation
// norm bounds they are computed from (B_l estimated as a max over domain
// samples, a lower estimate of the sup).
struct EpsSchedule {
    std::vector<double> eps_per_layer;  // eps_1..eps_L
    std::vector<double> b_estimates;    // B_0..B_{L-1}
};

struct TrialReport {
    std::string kind;  // slt | wlt-fc | wlt-conv
    bool success = false;
    std::vector<std::size_t> q;  // widths/copies used per source layer
    double max_error = 0.0;
    std::size_t nnz_lt = 0;
    std::uint64_t seed = 0;
    double wall_time_s = 0.0;
    std::size_t rho = 0;           // subset-sum problems solved (slt)
    double output_scale = 1.0;     // slt: undo of per-layer target rescaling
    std::string failure_detail;
};

// Backward recursion q_l = ceil(log(L m_{T,l+1} q_{l+1} / delta) /
// log(1/(1-p_{l+1}))); q_L = 1; dense next layer gives q_l = 1.
// m_{T,l} is counted from the target's nonzero effective weights.
WidthPlan compute_q(const MaskedNetwork& target, const SparsityPlan& plan, double delta);

// Weak ticket in a sampled ER source: exact representation on success
// (verified to 1e-9 over domain samples).  The returned network's mask is the
// ticket S_LT; its ER mask (with the layer-0 flow enforcement applied) is
// returned alongside for containment checks.
struct WltResult {
    MaskedNetwork ticket;
    Mask er_mask;
    TrialReport report;
};

WltResult construct_wlt_fc(const MaskedNetwork& target, const SparsityPlan& plan, double delta,
                           std::uint64_t seed,
                           const std::optional<std::vector<std::size_t>>& width_override = {});

WltResult construct_wlt_conv(const MaskedNetwork& target, const SparsityPlan& plan, double delta,
                             std::uint64_t seed,
                             const std::optional<std::vector<std::size_t>>& width_override = {});

EpsSchedule compute_eps_schedule(const MaskedNetwork& target, double eps, int domain_samples,
                                 std::uint64_t seed = 0x5eedULL);

// Copy counts per source layer for the strong-ticket construction, calibrated
// from probe_subset_sum's measured n* instead of the symbolic constant.
struct SltWidths {
    std::vector<std::size_t> copies;  // layer 0..L-1 copies per unit; layer L has 1
    EpsSchedule schedule;
    std::size_t rho_budgeted = 0;
    Architecture source_arch;
    double output_scale = 1.0;  // product of per-layer target rescalings
    double scaled_eps = 0.0;    // eps in the rescaled target's units
};

struct SltCalibration {
    int probe_trials = 1000;
    int grid_step = 2;
    double block_scale = 1.0;  // extra margin on measured n*
};

SltWidths compute_slt_widths(const MaskedNetwork& target, const SparsityPlan& plan, double delta,
                             double eps, std::uint64_t seed,
                             const SltCalibration& calib = SltCalibration{});

struct SltResult {
    MaskedNetwork ticket;
    Mask er_mask;
    TrialReport report;
};

// Strong ticket: prune a randomly initialized ER source so it approximates the
// target to eps without touching any surviving weight.  Source biases are
// pruned via the bias mask; nonzero target biases are approximated by a
// keep-or-prune decision per copy (experimental).
SltResult construct_slt(const MaskedNetwork& target, const SparsityPlan& plan, double delta,
                        double eps, std::uint64_t seed,
                        const SltCalibration& calib = SltCalibration{});

SltResult construct_slt_with_widths(const MaskedNetwork& target, const SparsityPlan& plan,
                                    const SltWidths& widths, double eps, std::uint64_t seed);

// Lower-bound probe: representability of univariate targets by a d -> n -> 1 ER
// source, analytic (1-(1-p^2)^n)^d vs Monte Carlo path counting.
struct LowerBoundPoint {
    int n = 0;
    double analytic = 0.0;
    double monte_carlo = 0.0;
};

struct LowerBoundResult {
    double p = 0.0;
    int d = 1;
    double delta = 0.0;
    std::vector<LowerBoundPoint> points;
    int measured_min_n = -1;       // smallest grid n with analytic prob >= 1-delta
    double analytic_threshold = 0.0;
};

LowerBoundResult probe_lower_bound(double p, int d, double delta, const std::vector<int>& n_grid,
                                   int trials, std::uint64_t seed);

}  // namespace ernet
