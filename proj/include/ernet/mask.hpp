#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ernet/architecture.hpp"
#include "ernet/plans.hpp"
#include "ernet/tensor.hpp"

namespace ernet {

// Per-layer binary tensors aligned with an Architecture's weights.
// An optional per-layer bias mask supports constructions that prune biases
// (empty = all biases kept).
struct Mask {
    std::vector<Tensor> layers;
    std::vector<std::vector<double>> bias;
    std::uint64_t seed = 0;
    std::string plan_ref;

    static Mask dense(const Architecture& arch);

    bool has_bias_mask() const { return !bias.empty(); }

    std::size_t nnz(std::size_t l) const {
        std::size_t n = 0;
        for (double v : layers[l].flat()) n += (v != 0.0);
        return n;
    }
    std::size_t nnz_total() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < layers.size(); ++l) n += nnz(l);
        return n;
    }

    // Elementwise containment: every nonzero of *this is a nonzero of other.
    bool contained_in(const Mask& other) const;

    void validate(const Architecture& arch) const;
};

struct FlowReport {
    std::vector<std::size_t> zero_in_degree;   // per layer boundary, hidden+output units
    std::vector<std::size_t> zero_out_degree;  // per layer boundary, input+hidden units
    std::size_t edges_added = 0;
    std::size_t edges_removed = 0;

    std::size_t total_flags() const {
        std::size_t n = 0;
        for (auto v : zero_in_degree) n += v;
        for (auto v : zero_out_degree) n += v;
        return n;
    }
};

// Bernoulli(p_l) sample per weight entry; deterministic under seed.
Mask sample_mask(const Architecture& arch, const SparsityPlan& plan, std::uint64_t seed);

// Degree statistics.  A unit is a neuron (FC) or a filter/channel (conv); a
// conv connection counts as present when any kernel entry is nonzero.
FlowReport flow_stats(const Architecture& arch, const Mask& mask);

// Appendix-style Random Addition: give every zero-degree unit one random
// incident edge, removing a random edge elsewhere in the layer when possible
// so the total edge count is preserved.
std::pair<Mask, FlowReport> repair_random_addition(const Architecture& arch, const Mask& mask,
                                                   std::uint64_t seed);

// Rejection sampling: resample rows/columns of flagged units until the mask
// preserves flow; throws InfeasibleError after max_attempts.
Mask repair_rejection(const Architecture& arch, const SparsityPlan& plan, std::uint64_t seed,
                      int max_attempts);

// Standalone mask JSON ({"layers":[{"shape","nnz","coords"}...],"seed":...});
// coordinates sorted lexicographically.
std::string mask_to_json(const Mask& mask);
Mask mask_from_json(const std::string& text);

}  // namespace ernet
