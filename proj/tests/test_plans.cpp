#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "ernet/plans.hpp"

using namespace ernet;

TEST_CASE("uniform plan") {
    const Architecture arch = fc_chain({4, 8, 2}, 0.0, 1.0);
    const SparsityPlan plan = plan_uniform(arch, 0.5);
    for (double p : plan.p_per_layer) CHECK(p == 0.5);
    CHECK(plan.achieved_global_p == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_NOTHROW(plan_uniform(arch, 0.999999));
    CHECK_THROWS_AS(plan_uniform(arch, 1.5), DomainError);
}

TEST_CASE("erk plan matches the one-unknown linear solve") {
    // layers 4->8 and 8->2: r = (12/32, 10/16); p = 0.45 -> eps = 0.98182
    const Architecture arch = fc_chain({4, 8, 2}, 0.0, 1.0);
    const SparsityPlan plan = plan_erk(arch, 0.45);
    CHECK(plan.p_per_layer[0] == doctest::Approx(0.36818).epsilon(1e-4));
    CHECK(plan.p_per_layer[1] == doctest::Approx(0.61364).epsilon(1e-4));
    CHECK(plan.achieved_global_p == doctest::Approx(0.45).epsilon(1e-9));
}

TEST_CASE("erk single layer degenerates to uniform") {
    const Architecture arch = fc_chain({4, 8}, 0.0, 1.0);
    const SparsityPlan plan = plan_erk(arch, 0.3);
    CHECK(plan.p_per_layer[0] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("erk clamp-and-resolve keeps the weighted mean") {
    // second layer has a much larger score and clamps to 1 at high p
    const Architecture arch = fc_chain({100, 100, 2}, 0.0, 1.0);
    const SparsityPlan plan = plan_erk(arch, 0.9);
    CHECK(plan.p_per_layer[1] == 1.0);
    double num = 0.0, den = 0.0;
    const std::vector<double> m = {100.0 * 100.0, 100.0 * 2.0};
    for (std::size_t l = 0; l < 2; ++l) {
        num += plan.p_per_layer[l] * m[l];
        den += m[l];
    }
    CHECK(num / den == doctest::Approx(0.9).epsilon(1e-9));
    CHECK(plan.achieved_global_p == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("erk proportionality on unclamped layers") {
    const Architecture arch = fc_chain({4, 8, 8, 2}, 0.0, 1.0);
    const SparsityPlan plan = plan_erk(arch, 0.4);
    const std::vector<double> r = {12.0 / 32.0, 16.0 / 64.0, 10.0 / 16.0};
    double ratio = plan.p_per_layer[0] / r[0];
    for (std::size_t l = 1; l < 3; ++l)
        if (plan.p_per_layer[l] < 1.0)
            CHECK(plan.p_per_layer[l] / r[l] == doctest::Approx(ratio).epsilon(1e-9));
}

TEST_CASE("pyramidal quadratic case") {
    // widths 5 -> 2 -> 5 gives m = (10, 10); x + x^2 = 1
    const Architecture arch = fc_chain({5, 2, 5}, 0.0, 1.0);
    const SparsityPlan plan = plan_pyramidal(arch, 0.5);
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    CHECK(plan.p_per_layer[0] == doctest::Approx(golden).epsilon(1e-9));
    CHECK(plan.p_per_layer[1] == doctest::Approx(golden * golden).epsilon(1e-9));
    CHECK(plan.achieved_global_p == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("pyramidal single layer") {
    const Architecture arch = fc_chain({4, 8}, 0.0, 1.0);
    const SparsityPlan plan = plan_pyramidal(arch, 0.7);
    CHECK(plan.p_per_layer[0] == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("pyramidal cubic residual within 1e-12") {
    const Architecture arch = fc_chain({1, 1, 1, 1}, 0.0, 1.0);
    const SparsityPlan plan = plan_pyramidal(arch, 0.9);
    const double x = plan.p_per_layer[0];
    CHECK(std::abs(x + x * x + x * x * x - 2.7) <= 1e-11);
    CHECK(plan.p_per_layer[1] == doctest::Approx(x * x).epsilon(1e-12));
    CHECK(plan.p_per_layer[2] == doctest::Approx(x * x * x).epsilon(1e-12));
}

TEST_CASE("pyramidal monotonicity") {
    const Architecture arch = fc_chain({8, 8, 8, 8, 8}, 0.0, 1.0);
    const SparsityPlan plan = plan_pyramidal(arch, 0.4);
    for (std::size_t l = 1; l < plan.p_per_layer.size(); ++l)
        CHECK(plan.p_per_layer[l] < plan.p_per_layer[l - 1]);
}

TEST_CASE("balanced plan direct formula") {
    // widths 10 -> 10 -> 5 gives m = (100, 50); x = 37.5
    const Architecture arch = fc_chain({10, 10, 5}, 0.0, 1.0);
    const SparsityPlan plan = plan_balanced(arch, 0.5);
    CHECK(plan.p_per_layer[0] == 0.375);
    CHECK(plan.p_per_layer[1] == 0.75);
    CHECK(plan.achieved_global_p == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("balanced plan clamps literally with recorded shortfall") {
    // widths 10 -> 10 -> 1 gives m = (100, 10); x = 27.5
    const Architecture arch = fc_chain({10, 10, 1}, 0.0, 1.0);
    const SparsityPlan plan = plan_balanced(arch, 0.5);
    CHECK(plan.p_per_layer[0] == 0.275);
    CHECK(plan.p_per_layer[1] == 1.0);
    CHECK(plan.achieved_global_p == doctest::Approx(37.5 / 110.0).epsilon(1e-9));
}

TEST_CASE("balanced equal budget and symmetry") {
    const Architecture arch = fc_chain({8, 8, 8, 8}, 0.0, 1.0);
    const SparsityPlan plan = plan_balanced(arch, 0.3);
    for (double p : plan.p_per_layer) CHECK(p == doctest::Approx(0.3).epsilon(1e-12));
    const Architecture uneven = fc_chain({16, 4, 8}, 0.0, 1.0);
    const SparsityPlan plan2 = plan_balanced(uneven, 0.3);
    CHECK(plan2.p_per_layer[0] * 64.0 == doctest::Approx(plan2.p_per_layer[1] * 32.0).epsilon(1e-9));
}

TEST_CASE("external plan round-trips and recomputes the weighted mean") {
    const Architecture arch = fc_chain({4, 8, 2}, 0.0, 1.0);
    const std::string path = "external_plan_test.txt";
    {
        std::ofstream out(path);
        out << "# layer densities\n0.2\n0.8\n";
    }
    const SparsityPlan plan = plan_external(arch, path);
    std::remove(path.c_str());
    CHECK(plan.p_per_layer == std::vector<double>{0.2, 0.8});
    CHECK(plan.achieved_global_p == doctest::Approx((0.2 * 32 + 0.8 * 16) / 48.0).epsilon(1e-9));

    const SparsityPlan dense = plan_external_values(arch, {1.0, 1.0});
    CHECK(dense.achieved_global_p == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS(plan_external_values(arch, {0.5}));
    CHECK_THROWS(plan_external_values(arch, {0.5, 1.5}));
}
