#pragma once

#include <string>
#include <vector>

#include "ernet/architecture.hpp"

namespace ernet {

enum class PlanMethod { Uniform, Erk, Pyramidal, Balanced, External };

std::string to_string(PlanMethod m);
PlanMethod plan_method_from_string(const std::string& name);

// Per-layer density vector for the maskable layers of an architecture.
struct SparsityPlan {
    std::vector<double> p_per_layer;
    double global_p = 0.0;          // requested
    double achieved_global_p = 0.0; // recomputed weighted mean
    PlanMethod method = PlanMethod::Uniform;

    std::string id() const;
};

double weighted_density(const Architecture& arch, const std::vector<double>& p_per_layer);

SparsityPlan plan_uniform(const Architecture& arch, double p);
SparsityPlan plan_erk(const Architecture& arch, double p);
SparsityPlan plan_pyramidal(const Architecture& arch, double p);
SparsityPlan plan_balanced(const Architecture& arch, double p);

// Ratios file: one density per maskable layer, '#' comments.
SparsityPlan plan_external(const Architecture& arch, const std::string& ratios_path);
SparsityPlan plan_external_values(const Architecture& arch, const std::vector<double>& ratios);

SparsityPlan make_plan(PlanMethod method, const Architecture& arch, double p);

}  // namespace ernet
