#include "ernet/mask.hpp"

#include <algorithm>

#include "ernet/rng.hpp"
#include "json.hpp"

namespace ernet {

using nlohmann::json;

Mask Mask::dense(const Architecture& arch) {
    Mask m;
    for (std::size_t l = 0; l < arch.depth(); ++l)
        m.layers.emplace_back(arch.weight_shape(l), 1.0);
    return m;
}

bool Mask::contained_in(const Mask& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (!layers[l].same_shape(other.layers[l])) return false;
        for (std::size_t i = 0; i < layers[l].size(); ++i)
            if (layers[l][i] != 0.0 && other.layers[l][i] == 0.0) return false;
    }
    return true;
}

void Mask::validate(const Architecture& arch) const {
    if (layers.size() != arch.depth()) throw StructuralError("mask layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].shape() != arch.weight_shape(l))
            throw StructuralError("mask shape mismatch in layer " + std::to_string(l));
        for (double v : layers[l].flat())
            if (v != 0.0 && v != 1.0) throw StructuralError("mask entries must be 0 or 1");
    }
    if (!bias.empty()) {
        if (bias.size() != arch.depth()) throw StructuralError("bias mask layer count mismatch");
        for (std::size_t l = 0; l < bias.size(); ++l)
            if (bias[l].size() != arch.out_units(l))
                throw StructuralError("bias mask size mismatch in layer " + std::to_string(l));
    }
}

Mask sample_mask(const Architecture& arch, const SparsityPlan& plan, std::uint64_t seed) {
    arch.validate();
    if (plan.p_per_layer.size() != arch.depth())
        throw StructuralError("plan does not match architecture");
    Mask mask;
    mask.seed = seed;
    mask.plan_ref = plan.id();
    Rng rng(seed);
    for (std::size_t l = 0; l < arch.depth(); ++l) {
        Tensor t(arch.weight_shape(l));
        const double p = plan.p_per_layer[l];
        for (double& v : t.flat()) v = rng.bernoulli(p) ? 1.0 : 0.0;
        mask.layers.push_back(std::move(t));
    }
    return mask;
}

namespace {

// Per-unit degrees in the (out, in, element) view; a connection exists when
// any kernel element is nonzero.
void layer_degrees(const Tensor& m, std::vector<std::size_t>& in_deg,
                   std::vector<std::size_t>& out_deg) {
    const std::size_t out = m.out_units(), in = m.in_units(), e = m.elems();
    in_deg.assign(out, 0);
    out_deg.assign(in, 0);
    for (std::size_t o = 0; o < out; ++o)
        for (std::size_t i = 0; i < in; ++i)
            for (std::size_t k = 0; k < e; ++k)
                if (m.at_oie(o, i, k) != 0.0) {
                    ++in_deg[o];
                    ++out_deg[i];
                    break;
                }
}

}  // namespace

FlowReport flow_stats(const Architecture& arch, const Mask& mask) {
    mask.validate(arch);
    FlowReport report;
    report.zero_in_degree.resize(arch.depth(), 0);
    report.zero_out_degree.resize(arch.depth(), 0);
    std::vector<std::size_t> in_deg, out_deg;
    for (std::size_t l = 0; l < arch.depth(); ++l) {
        layer_degrees(mask.layers[l], in_deg, out_deg);
        for (std::size_t o = 0; o < in_deg.size(); ++o)
            if (in_deg[o] == 0) ++report.zero_in_degree[l];
        for (std::size_t i = 0; i < out_deg.size(); ++i)
            if (out_deg[i] == 0) ++report.zero_out_degree[l];
    }
    return report;
}

namespace {

// Remove one maskable edge from layer m that can be spared without creating a
// new zero-degree unit.  Returns false when no such edge exists.
bool remove_spare_edge(Tensor& m, Rng& rng, std::size_t skip_flat) {
    std::vector<std::size_t> in_deg, out_deg;
    layer_degrees(m, in_deg, out_deg);
    const std::size_t out = m.out_units(), in = m.in_units(), e = m.elems();
    std::vector<std::size_t> candidates;
    for (std::size_t o = 0; o < out; ++o)
        for (std::size_t i = 0; i < in; ++i) {
            std::size_t kernel_nnz = 0;
            for (std::size_t k = 0; k < e; ++k) kernel_nnz += m.at_oie(o, i, k) != 0.0;
            if (kernel_nnz == 0) continue;
            const bool connection_spare = kernel_nnz >= 2;
            const bool degree_spare = in_deg[o] >= 2 && out_deg[i] >= 2;
            if (!connection_spare && !degree_spare) continue;
            for (std::size_t k = 0; k < e; ++k) {
                const std::size_t flat = (o * in + i) * e + k;
                if (m[flat] != 0.0 && flat != skip_flat &&
                    (kernel_nnz >= 2 || degree_spare))
                    candidates.push_back(flat);
            }
        }
    if (candidates.empty()) return false;
    m[candidates[rng.below(candidates.size())]] = 0.0;
    return true;
}

}  // namespace

std::pair<Mask, FlowReport> repair_random_addition(const Architecture& arch, const Mask& mask,
                                                   std::uint64_t seed) {
    Mask repaired = mask;
    FlowReport before = flow_stats(arch, mask);
    FlowReport result = before;
    result.edges_added = 0;
    result.edges_removed = 0;
    Rng rng(seed);

    for (int pass = 0; pass < 64; ++pass) {
        bool any_flag = false;
        std::vector<std::size_t> in_deg, out_deg;
        for (std::size_t l = 0; l < arch.depth(); ++l) {
            Tensor& m = repaired.layers[l];
            const std::size_t in = m.in_units(), e = m.elems();
            layer_degrees(m, in_deg, out_deg);
            for (std::size_t o = 0; o < in_deg.size(); ++o) {
                if (in_deg[o] != 0) continue;
                any_flag = true;
                const std::size_t i = rng.below(in);
                const std::size_t k = rng.below(e);
                const std::size_t flat = (o * in + i) * e + k;
                m[flat] = 1.0;
                ++result.edges_added;
                if (remove_spare_edge(m, rng, flat)) ++result.edges_removed;
            }
            layer_degrees(m, in_deg, out_deg);
            for (std::size_t i = 0; i < out_deg.size(); ++i) {
                if (out_deg[i] != 0) continue;
                any_flag = true;
                const std::size_t o = rng.below(in_deg.size());
                const std::size_t k = rng.below(e);
                const std::size_t flat = (o * in + i) * e + k;
                m[flat] = 1.0;
                ++result.edges_added;
                if (remove_spare_edge(m, rng, flat)) ++result.edges_removed;
            }
        }
        if (!any_flag) {
            result.zero_in_degree = before.zero_in_degree;
            result.zero_out_degree = before.zero_out_degree;
            return {repaired, result};
        }
    }
    throw InfeasibleError("random-addition repair did not converge");
}

Mask repair_rejection(const Architecture& arch, const SparsityPlan& plan, std::uint64_t seed,
                      int max_attempts) {
    for (double p : plan.p_per_layer)
        if (!(p > 0.0)) throw InfeasibleError("rejection repair requires p_l > 0 on all layers");
    Mask mask = sample_mask(arch, plan, seed);
    Rng rng(derive_seed(seed, 0x7265ULL));
    std::vector<std::size_t> in_deg, out_deg;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        bool any_flag = false;
        for (std::size_t l = 0; l < arch.depth(); ++l) {
            Tensor& m = mask.layers[l];
            const double p = plan.p_per_layer[l];
            const std::size_t in = m.in_units(), e = m.elems();
            layer_degrees(m, in_deg, out_deg);
            for (std::size_t o = 0; o < in_deg.size(); ++o) {
                if (in_deg[o] != 0) continue;
                any_flag = true;
                for (std::size_t i = 0; i < in; ++i)
                    for (std::size_t k = 0; k < e; ++k)
                        m.at_oie(o, i, k) = rng.bernoulli(p) ? 1.0 : 0.0;
            }
            layer_degrees(m, in_deg, out_deg);
            for (std::size_t i = 0; i < out_deg.size(); ++i) {
                if (out_deg[i] != 0) continue;
                any_flag = true;
                for (std::size_t o = 0; o < in_deg.size(); ++o)
                    for (std::size_t k = 0; k < e; ++k)
                        m.at_oie(o, i, k) = rng.bernoulli(p) ? 1.0 : 0.0;
            }
        }
        if (!any_flag) return mask;
    }
    throw InfeasibleError("rejection repair: attempts exhausted (p too small for this geometry)");
}

std::string mask_to_json(const Mask& mask) {
    json j;
    j["seed"] = mask.seed;
    if (!mask.plan_ref.empty()) j["plan_ref"] = mask.plan_ref;
    j["layers"] = json::array();
    for (const auto& m : mask.layers) {
        json layer;
        layer["shape"] = m.shape();
        json coords = json::array();
        // Row-major scan emits coordinates in lexicographic order.
        const auto& shape = m.shape();
        std::vector<std::size_t> idx(shape.size(), 0);
        for (std::size_t flat = 0; flat < m.size(); ++flat) {
            if (m[flat] != 0.0) coords.push_back(idx);
            for (std::size_t d = shape.size(); d-- > 0;) {
                if (++idx[d] < shape[d]) break;
                idx[d] = 0;
            }
        }
        layer["nnz"] = coords.size();
        layer["coords"] = std::move(coords);
        j["layers"].push_back(std::move(layer));
    }
    return j.dump(2);
}

Mask mask_from_json(const std::string& text) {
    json j = json::parse(text);
    Mask mask;
    mask.seed = j.value("seed", 0ULL);
    mask.plan_ref = j.value("plan_ref", std::string());
    for (const auto& layer : j.at("layers")) {
        Tensor t(layer.at("shape").get<std::vector<std::size_t>>());
        const auto& shape = t.shape();
        for (const auto& coord : layer.at("coords")) {
            std::size_t flat = 0;
            for (std::size_t d = 0; d < shape.size(); ++d)
                flat = flat * shape[d] + coord.at(d).get<std::size_t>();
            t[flat] = 1.0;
        }
        if (layer.contains("nnz") && layer["nnz"].get<std::size_t>() != layer["coords"].size())
            throw StructuralError("mask nnz does not match coordinate count");
        mask.layers.push_back(std::move(t));
    }
    return mask;
}

}  // namespace ernet
