#include "ernet/plans.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ernet/errors.hpp"

namespace ernet {

std::string to_string(PlanMethod m) {
    switch (m) {
        case PlanMethod::Uniform: return "uniform";
        case PlanMethod::Erk: return "erk";
        case PlanMethod::Pyramidal: return "pyramidal";
        case PlanMethod::Balanced: return "balanced";
        case PlanMethod::External: return "external";
    }
    return "?";
}

PlanMethod plan_method_from_string(const std::string& name) {
    if (name == "uniform") return PlanMethod::Uniform;
    if (name == "erk") return PlanMethod::Erk;
    if (name == "pyramidal") return PlanMethod::Pyramidal;
    if (name == "balanced") return PlanMethod::Balanced;
    if (name == "external") return PlanMethod::External;
    throw DomainError("unknown sparsity plan: " + name);
}

std::string SparsityPlan::id() const {
    std::ostringstream os;
    os << to_string(method) << "(p=" << global_p << ")";
    return os.str();
}

double weighted_density(const Architecture& arch, const std::vector<double>& p_per_layer) {
    double num = 0.0, den = 0.0;
    for (std::size_t l = 0; l < arch.depth(); ++l) {
        const double m = static_cast<double>(arch.weight_count(l));
        num += p_per_layer[l] * m;
        den += m;
    }
    return num / den;
}

namespace {

void check_p(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("global density p must lie in (0, 1)");
}

SparsityPlan finish(const Architecture& arch, std::vector<double> p_per_layer, double p,
                    PlanMethod method) {
    SparsityPlan plan;
    plan.p_per_layer = std::move(p_per_layer);
    plan.global_p = p;
    plan.achieved_global_p = weighted_density(arch, plan.p_per_layer);
    plan.method = method;
    return plan;
}

double erk_score(const LayerSpec& s) {
    if (auto* fc = std::get_if<FcSpec>(&s)) {
        const double nin = static_cast<double>(fc->in_width);
        const double nout = static_cast<double>(fc->out_width);
        return (nin + nout) / (nin * nout);
    }
    const auto& c = std::get<Conv2dSpec>(s);
    const double ci = static_cast<double>(c.in_channels);
    const double co = static_cast<double>(c.out_channels);
    const double k = static_cast<double>(c.kernel_h * c.kernel_w);
    return (co + ci + k) / (co * ci * k);
}

}  // namespace

SparsityPlan plan_uniform(const Architecture& arch, double p) {
    arch.validate();
    check_p(p);
    return finish(arch, std::vector<double>(arch.depth(), p), p, PlanMethod::Uniform);
}

SparsityPlan plan_erk(const Architecture& arch, double p) {
    arch.validate();
    check_p(p);
    const std::size_t depth = arch.depth();
    std::vector<double> score(depth);
    std::vector<double> m(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        score[l] = erk_score(arch.layers[l]);
        m[l] = static_cast<double>(arch.weight_count(l));
    }
    // p_l = min(1, scale * score_l); clamp layers to 1 and re-solve until the
    // weighted mean hits p on the remaining layers.
    std::vector<bool> clamped(depth, false);
    std::vector<double> p_per_layer(depth, 0.0);
    for (;;) {
        double m_total = 0.0, budget = 0.0, weighted_score = 0.0;
        for (std::size_t l = 0; l < depth; ++l) {
            m_total += m[l];
            if (clamped[l])
                budget += m[l];  // density 1
            else
                weighted_score += score[l] * m[l];
        }
        const double target_mass = p * m_total - budget;
        if (weighted_score == 0.0 || target_mass <= 0.0)
            throw InfeasibleError("ERK plan infeasible at p=" + std::to_string(p));
        const double scale = target_mass / weighted_score;
        bool new_clamp = false;
        for (std::size_t l = 0; l < depth; ++l) {
            if (clamped[l]) continue;
            if (scale * score[l] >= 1.0) {
                clamped[l] = true;
                new_clamp = true;
            }
        }
        if (new_clamp) {
            bool all = true;
            for (bool c : clamped) all = all && c;
            if (all) throw InfeasibleError("ERK plan: all layers clamp to density 1 below target p");
            continue;
        }
        for (std::size_t l = 0; l < depth; ++l)
            p_per_layer[l] = clamped[l] ? 1.0 : scale * score[l];
        break;
    }
    return finish(arch, std::move(p_per_layer), p, PlanMethod::Erk);
}

SparsityPlan plan_pyramidal(const Architecture& arch, double p) {
    arch.validate();
    check_p(p);
    const std::size_t depth = arch.depth();
    std::vector<double> m(depth);
    double m_total = 0.0;
    for (std::size_t l = 0; l < depth; ++l) {
        m[l] = static_cast<double>(arch.weight_count(l));
        m_total += m[l];
    }
    // Root of g(x) = sum_l m_l x^l - p * sum_l m_l on (0, 1); g is strictly
    // increasing there, so plain bisection is exact enough and deterministic.
    const auto g = [&](double x) {
        double acc = 0.0, xp = 1.0;
        for (std::size_t l = 0; l < depth; ++l) {
            xp *= x;  // x^(l+1), maskable layers indexed 1..L
            acc += m[l] * xp;
        }
        return acc - p * m_total;
    };
    double lo = 0.0, hi = 1.0;
    if (g(hi) < 0.0) throw InfeasibleError("pyramidal plan: no root in (0, 1)");
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    const double p1 = 0.5 * (lo + hi);
    if (std::abs(g(p1)) > 1e-12)
        throw InfeasibleError("pyramidal plan: bisection residual too large");
    std::vector<double> p_per_layer(depth);
    double xp = 1.0;
    for (std::size_t l = 0; l < depth; ++l) {
        xp *= p1;
        p_per_layer[l] = xp;
    }
    return finish(arch, std::move(p_per_layer), p, PlanMethod::Pyramidal);
}

SparsityPlan plan_balanced(const Architecture& arch, double p) {
    arch.validate();
    check_p(p);
    const std::size_t depth = arch.depth();
    double m_total = 0.0;
    for (std::size_t l = 0; l < depth; ++l) m_total += static_cast<double>(arch.weight_count(l));
    const double per_layer_budget = p / static_cast<double>(depth) * m_total;
    std::vector<double> p_per_layer(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        const double m = static_cast<double>(arch.weight_count(l));
        // Literal clamp; the density shortfall shows up in achieved_global_p.
        p_per_layer[l] = per_layer_budget >= m ? 1.0 : per_layer_budget / m;
    }
    return finish(arch, std::move(p_per_layer), p, PlanMethod::Balanced);
}

SparsityPlan plan_external_values(const Architecture& arch, const std::vector<double>& ratios) {
    arch.validate();
    if (ratios.size() != arch.depth())
        throw StructuralError("ratio count does not match number of maskable layers");
    for (double r : ratios)
        if (!(r > 0.0 && r <= 1.0)) throw DomainError("layer density must lie in (0, 1]");
    SparsityPlan plan = finish(arch, ratios, weighted_density(arch, ratios), PlanMethod::External);
    return plan;
}

SparsityPlan plan_external(const Architecture& arch, const std::string& ratios_path) {
    std::ifstream in(ratios_path);
    if (!in) throw StructuralError("cannot open ratios file: " + ratios_path);
    std::vector<double> ratios;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double v;
        if (ls >> v) ratios.push_back(v);
    }
    return plan_external_values(arch, ratios);
}

SparsityPlan make_plan(PlanMethod method, const Architecture& arch, double p) {
    switch (method) {
        case PlanMethod::Uniform: return plan_uniform(arch, p);
        case PlanMethod::Erk: return plan_erk(arch, p);
        case PlanMethod::Pyramidal: return plan_pyramidal(arch, p);
        case PlanMethod::Balanced: return plan_balanced(arch, p);
        case PlanMethod::External: break;
    }
    throw DomainError("external plans require a ratios file");
}

}  // namespace ernet
