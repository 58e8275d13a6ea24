#include <cmath>

#include "doctest.h"
#include "ernet/rng.hpp"
#include "ernet/subset_sum.hpp"

using namespace ernet;

namespace {

SubsetSumInstance random_instance(std::size_t n, double p, double z, double eps,
                                  std::uint64_t seed) {
    Rng rng(seed);
    SubsetSumInstance inst;
    inst.target = z;
    inst.epsilon = eps;
    inst.values.resize(n);
    inst.availability.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        inst.values[i] = rng.uniform(-1.0, 1.0);
        inst.availability[i] = rng.bernoulli(p) ? 1 : 0;
    }
    return inst;
}

double brute_force_error(const SubsetSumInstance& inst) {
    std::vector<std::size_t> avail;
    for (std::size_t i = 0; i < inst.values.size(); ++i)
        if (inst.availability[i]) avail.push_back(i);
    double best = std::abs(inst.target);
    for (std::uint64_t bits = 1; bits < (1ULL << avail.size()); ++bits) {
        double s = 0.0;
        for (std::size_t k = 0; k < avail.size(); ++k)
            if (bits & (1ULL << k)) s += inst.values[avail[k]];
        best = std::min(best, std::abs(inst.target - s));
    }
    return best;
}

}  // namespace

TEST_CASE("exact solver trivial cases") {
    SubsetSumInstance inst;
    inst.values = {0.3, -0.2};
    inst.availability = {1, 1};
    inst.target = 0.0;
    inst.epsilon = 0.01;
    SubsetSolution sol = solve_exact(inst);
    CHECK(sol.feasible);
    CHECK(sol.chosen.empty());
    CHECK(sol.achieved_error == 0.0);

    inst.values = {0.5};
    inst.availability = {1};
    inst.target = 0.5;
    sol = solve_exact(inst);
    CHECK(sol.feasible);
    CHECK(sol.chosen == std::vector<std::size_t>{0});
    CHECK(sol.achieved_error == 0.0);
}

TEST_CASE("exact solver matches 2^12 brute force") {
    const SubsetSumInstance inst = random_instance(12, 1.0, 0.37, 0.05, 99);
    const SubsetSolution sol = solve_exact(inst);
    CHECK(sol.achieved_error == doctest::Approx(brute_force_error(inst)).epsilon(1e-15));
}

TEST_CASE("exact solver optimal on 200 seeded instances up to n = 14") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const std::size_t n = 4 + seed % 11;
        Rng zr(derive_seed(seed, 1));
        const SubsetSumInstance inst =
            random_instance(n, 0.7, zr.uniform(-1.0, 1.0), 0.05, seed);
        const SubsetSolution sol = solve_exact(inst);
        CHECK(std::abs(sol.achieved_error - brute_force_error(inst)) <= 1e-15);
        for (std::size_t i : sol.chosen) CHECK(inst.availability[i] == 1);
    }
}

TEST_CASE("exact solver rejects oversized instances") {
    const SubsetSumInstance inst = random_instance(40, 1.0, 0.1, 0.05, 7);
    CHECK_THROWS_AS(solve_exact(inst), BudgetError);
}

TEST_CASE("heuristic trivial cases") {
    SubsetSumInstance inst;
    inst.values = {0.49, 0.9};
    inst.availability = {1, 0};
    inst.target = 0.5;
    inst.epsilon = 0.02;
    CHECK(solve_heuristic(inst).feasible);

    inst.availability = {0, 0};
    const SubsetSolution sol = solve_heuristic(inst);
    CHECK_FALSE(sol.feasible);
    CHECK(sol.chosen.empty());
}

TEST_CASE("heuristic stays within epsilon on n = 50 instances") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const SubsetSumInstance inst = random_instance(50, 1.0, 0.37, 0.01, seed);
        const SubsetSolution heur = solve_heuristic(inst);
        CHECK(heur.feasible);
        CHECK(heur.achieved_error <= 1e-5);  // far inside epsilon = 0.01
        for (std::size_t i : heur.chosen) CHECK(inst.availability[i] == 1);
    }
}

TEST_CASE("thinning equivalence") {
    const SubsetSumInstance inst = random_instance(16, 0.5, 0.2, 0.05, 31);
    SubsetSumInstance compact;
    compact.target = inst.target;
    compact.epsilon = inst.epsilon;
    for (std::size_t i = 0; i < inst.values.size(); ++i)
        if (inst.availability[i]) {
            compact.values.push_back(inst.values[i]);
            compact.availability.push_back(1);
        }
    CHECK(solve_exact(inst).achieved_error ==
          doctest::Approx(solve_exact(compact).achieved_error).epsilon(1e-15));
}

TEST_CASE("feasibility is monotone in epsilon") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        SubsetSumInstance inst = random_instance(10, 0.6, 0.3, 0.02, seed);
        const bool tight = solve_exact(inst).feasible;
        inst.epsilon = 0.2;
        const bool loose = solve_exact(inst).feasible;
        if (tight) CHECK(loose);
    }
}

TEST_CASE("probe reduces to the classical case at p near 1") {
    const std::vector<int> grid = {2, 4, 6, 8, 10, 12};
    const ProbeResult thinned = probe_subset_sum(0.999999, 0.1, 0.1, grid, 200, 5);
    const ProbeResult classic = probe_subset_sum(1.0, 0.1, 0.1, grid, 200, 5);
    CHECK(thinned.n_star == classic.n_star);
}

TEST_CASE("probe returns a monotone-consistent n_star") {
    const std::vector<int> grid = {2, 4, 6, 8, 10, 12, 14, 16};
    const ProbeResult res = probe_subset_sum(0.5, 0.1, 0.1, grid, 300, 7);
    REQUIRE(res.n_star > 0);
    // the smoothed (running-min) rate at n_star must be within delta
    double running = 1.0;
    for (const auto& pt : res.points) {
        running = std::min(running, pt.failure_rate);
        if (pt.n == res.n_star) CHECK(running <= 0.1);
        if (pt.n < res.n_star) CHECK(running > 0.1);
    }
    CHECK(res.adversarial_worst_rate >= 0.0);
}

TEST_CASE("probe rejects tiny trial counts") {
    CHECK_THROWS_AS(probe_subset_sum(0.5, 0.1, 0.1, {4}, 10, 1), DomainError);
}
