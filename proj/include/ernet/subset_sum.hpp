#pragma once

#include <cstdint>
#include <vector>

#include "ernet/errors.hpp"

namespace ernet {

// Bernoulli-thinned subset-sum approximation instance: choose I among the
// available indices so that |target - sum_{i in I} values[i]| <= epsilon.
struct SubsetSumInstance {
    std::vector<double> values;
    std::vector<std::uint8_t> availability;  // aligned with values, 0/1
    double target = 0.0;
    double epsilon = 0.0;

    void validate() const;
    std::size_t available_count() const;
};

struct SubsetSolution {
    std::vector<std::size_t> chosen;  // indices into values, sorted
    double achieved_error = 0.0;
    bool feasible = false;
};

// Hard cap on the number of available values for exact enumeration.
inline constexpr std::size_t kExactBudget = 30;

// Minimum-|error| subset via meet-in-the-middle; ties broken by smaller
// cardinality, then lexicographic index order.  Throws BudgetError above
// kExactBudget available values.
SubsetSolution solve_exact(const SubsetSumInstance& inst);

// Greedy residual halving over all available values, polished with an exact
// solve over the smallest remaining values.  feasible implies the error bound
// holds; infeasible is not a proof.
SubsetSolution solve_heuristic(const SubsetSumInstance& inst);

struct ProbePoint {
    int n = 0;
    int trials = 0;
    int failures = 0;
    double failure_rate = 0.0;
    double ci_halfwidth = 0.0;  // binomial 95% normal-approximation half-width
};

struct ProbeResult {
    double p = 0.0;
    double epsilon = 0.0;
    double delta = 0.0;
    std::vector<ProbePoint> points;
    // Smallest n whose monotone-smoothed failure rate is <= delta; -1 if the
    // grid never reaches it.
    int n_star = -1;
    // Worst failure rate over the adversarial z grid evaluated at n_star.
    double adversarial_worst_rate = 0.0;
};

// Distribution of the candidate values.  product_uniform models values that
// pass through a retained first-layer relu copy: U([-1,1]) * U((0,1]).
enum class ProbeValues { uniform, product_uniform };

// Empirical failure-rate curve: fresh X^n from the value distribution,
// M ~ Ber(p)^n, z ~ U([-1,1]) per trial; failure iff no subset of the
// available values lands within epsilon of z.
ProbeResult probe_subset_sum(double p, double epsilon, double delta, const std::vector<int>& n_grid,
                         int trials, std::uint64_t seed, bool heuristic_fallback = true,
                         ProbeValues values = ProbeValues::uniform, bool adversarial = true);

}  // namespace ernet
