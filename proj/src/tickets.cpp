#include "ernet/tickets.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "ernet/parallel.hpp"
#include "ernet/rng.hpp"

namespace ernet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t layer_nnz_effective(const MaskedNetwork& net, std::size_t l) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < net.weights[l].size(); ++i)
        n += net.effective_weight(l, i) != 0.0;
    return n;
}

bool pure_fc(const Architecture& arch) {
    for (const auto& s : arch.layers)
        if (Architecture::is_conv(s)) return false;
    return true;
}

bool pure_conv(const Architecture& arch) {
    for (const auto& s : arch.layers)
        if (!Architecture::is_conv(s)) return false;
    return true;
}

void check_plan_matches(const MaskedNetwork& target, const SparsityPlan& plan) {
    if (plan.p_per_layer.size() != target.arch.depth())
        throw StructuralError("plan does not match target depth");
    for (double p : plan.p_per_layer)
        if (!(p > 0.0 && p <= 1.0)) throw DomainError("plan density outside (0, 1]");
}

// Uniform domain sample; FC targets take a flat vector, conv targets a
// C x H x W tensor (spatial size from the recorded flatten size, default 4).
Tensor domain_sample(const Architecture& arch, Rng& rng) {
    if (Architecture::is_conv(arch.layers[0])) {
        const std::size_t h = arch.flatten_h > 0 ? arch.flatten_h : 4;
        const std::size_t w = arch.flatten_w > 0 ? arch.flatten_w : 4;
        Tensor x({arch.in_units(0), h, w});
        for (double& v : x.flat()) v = rng.uniform(arch.domain_lo, arch.domain_hi);
        return x;
    }
    Tensor x({arch.input_width()});
    for (double& v : x.flat()) v = rng.uniform(arch.domain_lo, arch.domain_hi);
    return x;
}

double max_output_gap(const MaskedNetwork& target, const MaskedNetwork& ticket,
                      double ticket_scale, int samples, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const Tensor x = domain_sample(target.arch, rng);
        const auto yt = forward_tensor(target, x);
        const auto ys = forward_tensor(ticket, x);
        if (yt.size() != ys.size()) throw StructuralError("output width mismatch in verification");
        for (std::size_t i = 0; i < yt.size(); ++i)
            worst = std::max(worst, std::abs(yt[i] - ticket_scale * ys[i]));
    }
    return worst;
}

}  // namespace

WidthPlan compute_q(const MaskedNetwork& target, const SparsityPlan& plan, double delta) {
    target.validate();
    check_plan_matches(target, plan);
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
    const std::size_t depth = target.arch.depth();
    const double depth_factor = static_cast<double>(depth);

    WidthPlan wp;
    wp.delta = delta;
    wp.q.assign(depth + 1, 1);
    for (std::size_t l = depth; l-- > 0;) {
        // q_l from the density and nonzero count of target layer l+1
        const double p_next = plan.p_per_layer[l];
        const auto m_next = static_cast<double>(layer_nnz_effective(target, l));
        if (p_next >= 1.0 || m_next == 0.0) {
            wp.q[l] = 1;
            continue;
        }
        const double bound = std::log(depth_factor * m_next * static_cast<double>(wp.q[l + 1]) /
                                      delta) /
                             std::log(1.0 / (1.0 - p_next));
        wp.q[l] = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bound)));
    }

    // Derived source architecture of depth L+1.
    Architecture src;
    src.domain_lo = target.arch.domain_lo;
    src.domain_hi = target.arch.domain_hi;
    src.flatten_h = target.arch.flatten_h;
    src.flatten_w = target.arch.flatten_w;
    const std::size_t d = target.arch.input_width();
    if (pure_fc(target.arch)) {
        std::size_t prev = wp.q[0] * d;
        src.layers.push_back(FcSpec{d, prev});
        for (std::size_t l = 0; l < depth; ++l) {
            const std::size_t cur = wp.q[l + 1] * target.arch.out_units(l);
            src.layers.push_back(FcSpec{prev, cur});
            prev = cur;
        }
    } else if (pure_conv(target.arch)) {
        std::size_t prev = wp.q[0] * d;
        src.layers.push_back(Conv2dSpec{d, prev, 1, 1});
        for (std::size_t l = 0; l < depth; ++l) {
            const auto& c = std::get<Conv2dSpec>(target.arch.layers[l]);
            const std::size_t cur = wp.q[l + 1] * c.out_channels;
            src.layers.push_back(Conv2dSpec{prev, cur, c.kernel_h, c.kernel_w});
            prev = cur;
        }
    } else {
        throw StructuralError("width plans support pure FC or pure conv targets");
    }
    src.validate();
    wp.source_arch = src;
    return wp;
}

namespace {

// Shared FC/conv weak-ticket construction.  Layers are handled through the
// (out_unit, in_unit, element) view, which makes the 1x1-kernel conv case
// consume randomness identically to the FC case.
WltResult construct_wlt_impl(const MaskedNetwork& target, const SparsityPlan& plan, double delta,
                             std::uint64_t seed,
                             const std::optional<std::vector<std::size_t>>& width_override,
                             bool conv, const char* kind) {
    const auto t0 = Clock::now();
    target.validate();
    check_plan_matches(target, plan);
    if (conv && target.arch.domain_lo < 0.0)
        throw DomainError(
            "conv ticket construction requires a nonnegative input domain: the univariate-layer "
            "bias shift cannot be compensated exactly under zero padding");

    WidthPlan wp = compute_q(target, plan, delta);
    if (width_override) {
        if (width_override->size() != wp.q.size())
            throw StructuralError("width override size mismatch");
        for (std::size_t q : *width_override)
            if (q < 1) throw DomainError("width override entries must be >= 1");
        wp.q = *width_override;
        // re-derive the source architecture for the overridden widths
        WidthPlan tmp = wp;
        MaskedNetwork probe_target = target;
        wp.source_arch = [&] {
            // rebuild by re-running compute_q's arch derivation with fixed q
            Architecture src;
            src.domain_lo = target.arch.domain_lo;
            src.domain_hi = target.arch.domain_hi;
            const std::size_t d = target.arch.input_width();
            std::size_t prev = wp.q[0] * d;
            if (!conv) {
                src.layers.push_back(FcSpec{d, prev});
                for (std::size_t l = 0; l < target.arch.depth(); ++l) {
                    const std::size_t cur = wp.q[l + 1] * target.arch.out_units(l);
                    src.layers.push_back(FcSpec{prev, cur});
                    prev = cur;
                }
            } else {
                src.layers.push_back(Conv2dSpec{d, prev, 1, 1});
                for (std::size_t l = 0; l < target.arch.depth(); ++l) {
                    const auto& c = std::get<Conv2dSpec>(target.arch.layers[l]);
                    const std::size_t cur = wp.q[l + 1] * c.out_channels;
                    src.layers.push_back(Conv2dSpec{prev, cur, c.kernel_h, c.kernel_w});
                    prev = cur;
                }
            }
            src.validate();
            return src;
        }();
    }
    const Architecture& src_arch = wp.source_arch;
    const std::size_t depth = target.arch.depth();

    // Layer-wise densities of the source; the univariate layer 0 reuses the
    // first plan density and is flow-enforced below.
    SparsityPlan src_plan;
    src_plan.method = plan.method;
    src_plan.global_p = plan.global_p;
    src_plan.p_per_layer.push_back(plan.p_per_layer[0]);
    for (double p : plan.p_per_layer) src_plan.p_per_layer.push_back(p);
    src_plan.achieved_global_p = weighted_density(src_arch, src_plan.p_per_layer);

    Mask er = sample_mask(src_arch, src_plan, seed);
    // Enforce flow on layer 0: every univariate unit keeps an edge to its
    // designated input coordinate.
    const std::size_t q0 = wp.q[0];
    {
        Tensor& m0 = er.layers[0];
        for (std::size_t u = 0; u < m0.out_units(); ++u) m0.at_oie(u, u / q0, 0) = 1.0;
    }

    MaskedNetwork ticket = MaskedNetwork::zeros(src_arch);
    for (auto& t : ticket.mask.layers) t.fill(0.0);

    TrialReport report;
    report.kind = kind;
    report.q = wp.q;
    report.seed = seed;
    report.success = true;

    const double shift = target.arch.domain_lo <= 0.0 ? -target.arch.domain_lo : 0.0;

    // Layer 0: univariate identity copies with a bias shift past the ReLU.
    {
        Tensor& w0 = ticket.weights[0];
        Tensor& s0 = ticket.mask.layers[0];
        for (std::size_t u = 0; u < w0.out_units(); ++u) {
            w0.at_oie(u, u / q0, 0) = 1.0;
            s0.at_oie(u, u / q0, 0) = 1.0;
            ticket.biases[0][u] = shift;
        }
    }

    Rng choice_rng(derive_seed(seed, 0x7431ULL));
    std::vector<std::size_t> candidates;

    for (std::size_t l = 1; l <= depth && report.success; ++l) {
        const Tensor& wt = target.weights[l - 1];
        const Tensor& mt = target.mask.layers[l - 1];
        Tensor& ws = ticket.weights[l];
        Tensor& ss = ticket.mask.layers[l];
        const Tensor& ms = er.layers[l];
        const std::size_t q_out = wp.q[l];
        const std::size_t q_in = wp.q[l - 1];
        const std::size_t n_out = wt.out_units();
        const std::size_t n_in = wt.in_units();
        const std::size_t elems = wt.elems();

        for (std::size_t i = 0; i < n_out && report.success; ++i) {
            for (std::size_t c = 0; c < q_out && report.success; ++c) {
                const std::size_t copy = i * q_out + c;
                double row_sum = 0.0;  // sum of target in-weights, for the bias shift
                for (std::size_t j = 0; j < n_in && report.success; ++j) {
                    for (std::size_t e = 0; e < elems; ++e) {
                        const double w = wt.at_oie(i, j, e) * mt.at_oie(i, j, e);
                        if (w == 0.0) continue;
                        row_sum += w;
                        candidates.clear();
                        for (std::size_t b = 0; b < q_in; ++b) {
                            const std::size_t jp = j * q_in + b;
                            if (ms.at_oie(copy, jp, e) != 0.0) candidates.push_back(jp);
                        }
                        if (candidates.empty()) {
                            report.success = false;
                            std::ostringstream os;
                            os << "no unmasked edge for target weight (layer " << l << ", unit "
                               << i << ", copy " << c << ", in " << j << ", elem " << e << ")";
                            report.failure_detail = os.str();
                            break;
                        }
                        const std::size_t jp = candidates[choice_rng.below(candidates.size())];
                        ws.at_oie(copy, jp, e) = w;
                        ss.at_oie(copy, jp, e) = 1.0;
                    }
                }
                // Layer 1 compensates the univariate bias shift; deeper layers
                // copy the target bias.
                ticket.biases[l][copy] =
                    target.biases[l - 1][i] - (l == 1 ? shift * row_sum : 0.0);
            }
        }
    }

    if (report.success) {
        report.max_error = max_output_gap(target, ticket, 1.0, 100, derive_seed(seed, 0xabcdULL));
        report.success = report.max_error <= 1e-9;
        if (!report.success) report.failure_detail = "verification tolerance exceeded";
    }
    report.nnz_lt = ticket.mask.nnz_total();
    report.wall_time_s = seconds_since(t0);
    return WltResult{std::move(ticket), std::move(er), std::move(report)};
}

}  // namespace

WltResult construct_wlt_fc(const MaskedNetwork& target, const SparsityPlan& plan, double delta,
                           std::uint64_t seed,
                           const std::optional<std::vector<std::size_t>>& width_override) {
    if (!pure_fc(target.arch)) throw StructuralError("construct_wlt_fc expects an FC target");
    return construct_wlt_impl(target, plan, delta, seed, width_override, false, "wlt-fc");
}

WltResult construct_wlt_conv(const MaskedNetwork& target, const SparsityPlan& plan, double delta,
                             std::uint64_t seed,
                             const std::optional<std::vector<std::size_t>>& width_override) {
    if (!pure_conv(target.arch)) throw StructuralError("construct_wlt_conv expects a conv target");
    return construct_wlt_impl(target, plan, delta, seed, width_override, true, "wlt-conv");
}

EpsSchedule compute_eps_schedule(const MaskedNetwork& target, double eps, int domain_samples,
                                 std::uint64_t seed) {
    target.validate();
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
    if (domain_samples < 100) throw DomainError("eps schedule needs >= 100 domain samples");
    if (!pure_fc(target.arch)) throw StructuralError("eps schedule supports FC targets");

    const std::size_t depth = target.arch.depth();
    const double depth_f = static_cast<double>(depth);
    const double n_out = static_cast<double>(target.arch.output_width());

    EpsSchedule sched;
    // B_0 is exact: sup of ||x||_1 over the box domain.
    sched.b_estimates.assign(depth, 0.0);
    sched.b_estimates[0] = static_cast<double>(target.arch.input_width()) *
                           std::max(std::abs(target.arch.domain_lo), std::abs(target.arch.domain_hi));

    // B_1..B_{L-1} as maxima of layerwise l1 norms over domain samples.
    Rng rng(seed);
    for (int s = 0; s < domain_samples; ++s) {
        std::vector<double> x(target.arch.input_width());
        for (double& v : x) v = rng.uniform(target.arch.domain_lo, target.arch.domain_hi);
        std::vector<double> cur = x;
        for (std::size_t l = 0; l + 1 < depth; ++l) {
            std::vector<double> next(target.arch.out_units(l));
            const Tensor& w = target.weights[l];
            for (std::size_t i = 0; i < next.size(); ++i) {
                double acc = target.effective_bias(l, i);
                for (std::size_t j = 0; j < cur.size(); ++j)
                    acc += target.effective_weight(l, i * cur.size() + j) * cur[j];
                next[i] = std::max(acc, 0.0);
            }
            (void)w;
            cur = std::move(next);
            double l1 = 0.0;
            for (double v : cur) l1 += std::abs(v);
            sched.b_estimates[l + 1] = std::max(sched.b_estimates[l + 1], l1);
        }
    }

    std::vector<double> w_inf(depth, 0.0);  // operator infinity norms per layer
    for (std::size_t l = 0; l < depth; ++l) {
        const Tensor& w = target.weights[l];
        for (std::size_t i = 0; i < w.out_units(); ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < w.in_units(); ++j)
                row += std::abs(target.effective_weight(l, i * w.in_units() + j));
            w_inf[l] = std::max(w_inf[l], row);
        }
    }

    sched.eps_per_layer.assign(depth, 0.0);
    for (std::size_t l = 1; l <= depth; ++l) {
        double denom = (1.0 + sched.b_estimates[l - 1]) * (1.0 + eps / depth_f);
        for (std::size_t k = l + 1; k <= depth - 1; ++k)
            denom *= w_inf[k - 1] + eps / depth_f;
        sched.eps_per_layer[l - 1] = eps / (n_out * depth_f) / denom;
    }
    return sched;
}

namespace {

// Per-layer rescaling that brings all effective parameters into [-1, 1];
// returns the scaled copy and the product of scales (to be undone at the
// output).
std::pair<MaskedNetwork, double> rescale_target(const MaskedNetwork& target) {
    MaskedNetwork scaled = target;
    double cumulative = 1.0;  // product of scales applied so far
    double total = 1.0;
    for (std::size_t l = 0; l < target.arch.depth(); ++l) {
        double mx = 0.0;
        for (std::size_t i = 0; i < target.weights[l].size(); ++i)
            mx = std::max(mx, std::abs(target.effective_weight(l, i)));
        const double s = std::max(1.0, mx);
        for (double& w : scaled.weights[l].flat()) w /= s;
        cumulative *= s;
        total *= s;
        // biases propagate through every scale applied up to this layer
        for (double& b : scaled.biases[l]) b /= cumulative;
    }
    return {std::move(scaled), total};
}

// Failure rates below ~1/trials cannot be resolved directly at an affordable
// trial count, so the curve is measured where it is observable, the
// exponential decay in n is fit, and the extrapolated width is confirmed with
// one final probe.
struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
};

DecayFit fit_failure_decay(double p, double eps, int probe_trials, std::uint64_t seed,
                           ProbeValues values) {
    const double log_keep = std::log(1.0 / (1.0 - std::min(p, 0.999999)));
    int guess =
        static_cast<int>(std::ceil(3.0 / log_keep * std::log(1.0 / std::min(eps, 1e-3)))) + 10;
    const int coarse_trials = std::max(probe_trials, 500);
    for (int attempt = 0; attempt < 3; ++attempt, guess *= 2) {
        const int step = std::max(2, 2 * ((guess / 16 + 1) / 2));
        std::vector<int> grid;
        for (int n = 2; n <= guess; n += step) grid.push_back(n);
        const ProbeResult res = probe_subset_sum(p, eps, 0.5 / coarse_trials, grid, coarse_trials,
                                             derive_seed(seed, attempt), true, values, false);
        // regression of log(rate) on n over the resolvable stretch
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        int k = 0;
        for (const ProbePoint& pt : res.points) {
            if (pt.failures < 3 || pt.failure_rate > 0.9) continue;
            const double y = std::log(pt.failure_rate);
            sx += pt.n;
            sy += y;
            sxx += static_cast<double>(pt.n) * pt.n;
            sxy += pt.n * y;
            ++k;
        }
        if (k < 2) continue;
        const double denom = k * sxx - sx * sx;
        if (denom <= 0.0) continue;
        DecayFit fit;
        fit.slope = (k * sxy - sx * sy) / denom;
        fit.intercept = (sy - fit.slope * sx) / k;
        if (fit.slope < 0.0) return fit;
    }
    throw InfeasibleError("subset-sum calibration could not fit the failure-rate decay");
}

int confirmed_n_star(const DecayFit& fit, double p, double eps, double delta_each,
                     int probe_trials, std::uint64_t seed, ProbeValues values) {
    int n = static_cast<int>(
        std::ceil((std::log(delta_each) - fit.intercept) / fit.slope * 1.25));
    n += n % 2;
    n = std::max(n, 2);
    const int confirm_trials = std::max(
        probe_trials, std::min(12000, static_cast<int>(3.0 / std::max(delta_each, 2.5e-4))));
    for (int bump = 0; bump < 3; ++bump) {
        const ProbeResult res = probe_subset_sum(p, eps, delta_each, {n}, confirm_trials,
                                             derive_seed(seed, 0xc0ULL + bump), true, values,
                                             false);
        if (res.n_star > 0) return res.n_star;
        n = static_cast<int>(std::ceil(n * 1.3));
        n += n % 2;
    }
    throw InfeasibleError("subset-sum calibration failed to reach the requested failure rate");
}

}  // namespace

SltWidths compute_slt_widths(const MaskedNetwork& target, const SparsityPlan& plan, double delta,
                             double eps, std::uint64_t seed, const SltCalibration& calib) {
    target.validate();
    check_plan_matches(target, plan);
    if (!pure_fc(target.arch)) throw StructuralError("strong tickets support FC targets");
    if (target.arch.domain_lo < 0.0)
        throw DomainError("strong tickets require a nonnegative input domain (biases are pruned, "
                          "so negative inputs cannot be shifted past the first ReLU)");
    if (!(delta > 0.0 && delta < 1.0) || !(eps > 0.0 && eps < 1.0))
        throw DomainError("delta and eps must lie in (0, 1)");

    auto [scaled, scale] = rescale_target(target);
    const double scaled_eps = eps / scale;
    if (!(scaled_eps > 0.0 && scaled_eps < 1.0))
        throw DomainError("eps too small after target rescaling");

    SltWidths widths;
    widths.output_scale = scale;
    widths.scaled_eps = scaled_eps;
    widths.schedule = compute_eps_schedule(scaled, scaled_eps, 200, derive_seed(seed, 0xb0ULL));

    const std::size_t depth = target.arch.depth();
    std::vector<std::size_t> m(depth);
    for (std::size_t l = 0; l < depth; ++l) m[l] = layer_nnz_effective(scaled, l);

    // Layer-1 base values come through the univariate layer, where a negative
    // retained weight dies at the ReLU; halve p accordingly and probe with the
    // gain-attenuated value distribution.  The decay fit per layer does not
    // depend on the union-bound budget, so it is measured once.
    std::vector<double> p_eff(depth);
    std::vector<ProbeValues> dist(depth);
    std::vector<DecayFit> fits(depth);
    for (std::size_t l = 1; l <= depth; ++l) {
        p_eff[l - 1] = (l == 1) ? plan.p_per_layer[0] / 2.0 : plan.p_per_layer[l - 1];
        dist[l - 1] = (l == 1) ? ProbeValues::product_uniform : ProbeValues::uniform;
        if (m[l - 1] == 0) continue;
        fits[l - 1] = fit_failure_decay(p_eff[l - 1], widths.schedule.eps_per_layer[l - 1],
                                        calib.probe_trials, derive_seed(seed, 0xca11ULL + l),
                                        dist[l - 1]);
    }

    // The copy counts and the union-bound budget delta/rho depend on each
    // other; two refinement rounds settle the logarithmic coupling.
    widths.copies.assign(depth + 1, 1);
    std::size_t rho = 0;
    for (std::size_t l = 0; l < depth; ++l) rho += m[l];
    for (int round = 0; round < 2; ++round) {
        const double delta_each = delta / (2.0 * static_cast<double>(std::max<std::size_t>(rho, 1)));
        for (std::size_t l = 1; l <= depth; ++l) {
            if (m[l - 1] == 0) {
                widths.copies[l - 1] = 1;
                continue;
            }
            const int n_star = confirmed_n_star(
                fits[l - 1], p_eff[l - 1], widths.schedule.eps_per_layer[l - 1], delta_each,
                calib.probe_trials, derive_seed(seed, 0xca11ULL + l + 31 * round), dist[l - 1]);
            widths.copies[l - 1] = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::ceil(n_star * calib.block_scale)));
        }
        widths.copies[depth] = 1;
        rho = 0;
        for (std::size_t l = 1; l <= depth; ++l) rho += widths.copies[l] * m[l - 1];
    }
    widths.rho_budgeted = rho;

    Architecture src;
    src.domain_lo = target.arch.domain_lo;
    src.domain_hi = target.arch.domain_hi;
    const std::size_t d = target.arch.input_width();
    std::size_t prev = widths.copies[0] * d;
    src.layers.push_back(FcSpec{d, prev});
    for (std::size_t l = 0; l < depth; ++l) {
        const std::size_t cur = widths.copies[l + 1] * target.arch.out_units(l);
        src.layers.push_back(FcSpec{prev, cur});
        prev = cur;
    }
    src.validate();
    widths.source_arch = src;
    return widths;
}

SltResult construct_slt_with_widths(const MaskedNetwork& target, const SparsityPlan& plan,
                                    const SltWidths& widths, double eps, std::uint64_t seed) {
    const auto t0 = Clock::now();
    target.validate();
    check_plan_matches(target, plan);
    auto [scaled, scale] = rescale_target(target);
    const Architecture& src_arch = widths.source_arch;
    const std::size_t depth = target.arch.depth();
    const std::size_t d = target.arch.input_width();
    const std::size_t block0 = widths.copies[0];

    // Random source: iid U([-1,1]) weights and biases, ER mask on top.
    MaskedNetwork source = random_target(src_arch, derive_seed(seed, 0x51ULL), 1.0);
    SparsityPlan src_plan;
    src_plan.method = plan.method;
    src_plan.global_p = plan.global_p;
    src_plan.p_per_layer.push_back(plan.p_per_layer[0]);
    for (double p : plan.p_per_layer) src_plan.p_per_layer.push_back(p);
    src_plan.achieved_global_p = weighted_density(src_arch, src_plan.p_per_layer);
    Mask er = sample_mask(src_arch, src_plan, derive_seed(seed, 0x52ULL));
    // Flow enforcement on the univariate layer.
    for (std::size_t u = 0; u < er.layers[0].out_units(); ++u)
        er.layers[0].at2(u, u / block0) = 1.0;

    MaskedNetwork ticket = source;
    for (auto& t : ticket.mask.layers) t.fill(0.0);
    ticket.mask.bias.clear();
    for (std::size_t l = 0; l < src_arch.depth(); ++l)
        ticket.mask.bias.emplace_back(src_arch.out_units(l), 0.0);  // biases pruned by default

    TrialReport report;
    report.kind = "slt";
    report.seed = seed;
    report.q = widths.copies;
    report.success = true;
    report.output_scale = widths.output_scale;

    // Layer 0: one retained in-edge per univariate unit; the drawn weight
    // stays.  gain[u] is the factor the copy applies to its input; copies with
    // a nonpositive weight are dead behind the ReLU on a nonnegative domain.
    std::vector<double> gain(src_arch.out_units(0), 0.0);
    std::vector<char> usable(src_arch.out_units(0), 0);
    for (std::size_t u = 0; u < gain.size(); ++u) {
        const std::size_t j = u / block0;
        ticket.mask.layers[0].at2(u, j) = 1.0;
        gain[u] = source.weights[0].at2(u, j);
        usable[u] = gain[u] > 0.0 ? 1 : 0;
    }

    for (std::size_t l = 1; l <= depth && report.success; ++l) {
        const std::size_t copies = widths.copies[l];
        const std::size_t prev_copies = widths.copies[l - 1];
        const std::size_t n_out = target.arch.out_units(l - 1);
        const std::size_t n_in = target.arch.in_units(l - 1);
        const Tensor& wt = scaled.weights[l - 1];
        const Tensor& mt = scaled.mask.layers[l - 1];
        const double eps_l = widths.schedule.eps_per_layer[l - 1];

        std::vector<double> next_gain(src_arch.out_units(l), 1.0);
        std::vector<char> next_usable(src_arch.out_units(l), 1);

        for (std::size_t i = 0; i < n_out && report.success; ++i) {
            for (std::size_t c = 0; c < copies && report.success; ++c) {
                const std::size_t copy = i * copies + c;
                for (std::size_t j = 0; j < n_in; ++j) {
                    const double z = wt.at2(i, j) * mt.at2(i, j);
                    if (z == 0.0) continue;
                    SubsetSumInstance inst;
                    inst.target = std::clamp(z, -1.0, 1.0);
                    inst.epsilon = eps_l;
                    inst.values.resize(prev_copies);
                    inst.availability.resize(prev_copies);
                    for (std::size_t b = 0; b < prev_copies; ++b) {
                        const std::size_t jp = j * prev_copies + b;
                        inst.values[b] = source.weights[l].at2(copy, jp) * (l == 1 ? gain[jp] : 1.0);
                        inst.availability[b] =
                            (er.layers[l].at2(copy, jp) != 0.0 && usable[jp]) ? 1 : 0;
                    }
                    SubsetSolution sol = solve_heuristic(inst);
                    ++report.rho;
                    if (!sol.feasible) {
                        report.success = false;
                        std::ostringstream os;
                        os << "subset-sum infeasible at (layer " << l << ", unit " << i << ", in "
                           << j << "), error " << sol.achieved_error << " > " << eps_l;
                        report.failure_detail = os.str();
                        break;
                    }
                    for (std::size_t b : sol.chosen)
                        ticket.mask.layers[l].at2(copy, j * prev_copies + b) = 1.0;
                }
                // Nonzero target bias: keep-or-prune decision on the copy's
                // own drawn bias (experimental; exact for zero-bias targets).
                const double bt = scaled.biases[l - 1][i];
                if (bt != 0.0) {
                    const double bs = source.biases[l][copy];
                    if (std::abs(bt - bs) < std::abs(bt)) ticket.mask.bias[l][copy] = 1.0;
                }
            }
        }
        gain = std::move(next_gain);
        usable = std::move(next_usable);
    }

    if (report.success) {
        report.max_error =
            max_output_gap(target, ticket, widths.output_scale, 100, derive_seed(seed, 0x53ULL));
        report.success = report.max_error <= eps;
        if (!report.success) report.failure_detail = "verification tolerance exceeded";
    }
    report.nnz_lt = ticket.mask.nnz_total();
    report.wall_time_s = seconds_since(t0);
    (void)d;
    (void)scale;
    return SltResult{std::move(ticket), std::move(er), std::move(report)};
}

SltResult construct_slt(const MaskedNetwork& target, const SparsityPlan& plan, double delta,
                        double eps, std::uint64_t seed, const SltCalibration& calib) {
    SltWidths widths = compute_slt_widths(target, plan, delta, eps, seed, calib);
    return construct_slt_with_widths(target, plan, widths, eps, seed);
}

LowerBoundResult probe_lower_bound(double p, int d, double delta, const std::vector<int>& n_grid,
                                   int trials, std::uint64_t seed) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("lower-bound probe requires p in (0, 1)");
    if (d < 1) throw DomainError("lower-bound probe requires d >= 1");
    if (trials < 1) throw DomainError("lower-bound probe requires trials >= 1");

    LowerBoundResult result;
    result.p = p;
    result.d = d;
    result.delta = delta;
    result.points.resize(n_grid.size());
    result.analytic_threshold = std::log(1.0 / (1.0 - std::pow(1.0 - delta, 1.0 / d))) /
                               std::log(1.0 / (1.0 - p));

    parallel_for(n_grid.size(), 0, [&](std::size_t gi) {
        const int n = n_grid[gi];
        LowerBoundPoint& pt = result.points[gi];
        pt.n = n;
        pt.analytic = std::pow(1.0 - std::pow(1.0 - p * p, n), d);
        int hits = 0;
        for (int t = 0; t < trials; ++t) {
            Rng rng(derive_seed(seed, gi * static_cast<std::size_t>(trials) + t));
            // d -> n -> 1 mask; representable iff every input has a two-edge
            // unmasked path through the hidden layer.
            bool all_inputs = true;
            std::vector<char> hidden_out(n);
            for (int h = 0; h < n; ++h) hidden_out[h] = rng.bernoulli(p) ? 1 : 0;
            for (int i = 0; i < d && all_inputs; ++i) {
                bool path = false;
                for (int h = 0; h < n; ++h) {
                    const bool in_edge = rng.bernoulli(p);
                    path = path || (in_edge && hidden_out[h]);
                }
                all_inputs = path;
            }
            if (all_inputs) ++hits;
        }
        pt.monte_carlo = static_cast<double>(hits) / trials;
    });

    for (const auto& pt : result.points)
        if (result.measured_min_n < 0 && pt.analytic >= 1.0 - delta) result.measured_min_n = pt.n;
    return result;
}

}  // namespace ernet
