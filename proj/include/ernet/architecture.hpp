#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "ernet/errors.hpp"

namespace ernet {

struct FcSpec {
    std::size_t in_width = 0;
    std::size_t out_width = 0;
};

struct Conv2dSpec {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
};

using LayerSpec = std::variant<FcSpec, Conv2dSpec>;

// Layer-by-layer shape description.  Conv layers may only appear as a prefix;
// a conv->fc transition carries an explicit flatten size (channel-major
// flattening of the c x flatten_h x flatten_w activation).
struct Architecture {
    std::vector<LayerSpec> layers;
    double domain_lo = 0.0;
    double domain_hi = 1.0;
    // Spatial size at the conv->fc transition; 0 when there is none.
    std::size_t flatten_h = 0;
    std::size_t flatten_w = 0;

    std::size_t depth() const { return layers.size(); }

    static bool is_conv(const LayerSpec& s) { return std::holds_alternative<Conv2dSpec>(s); }

    // Number of output units (neurons for FC, filters for conv) of layer l.
    std::size_t out_units(std::size_t l) const {
        const auto& s = layers.at(l);
        if (auto* fc = std::get_if<FcSpec>(&s)) return fc->out_width;
        return std::get<Conv2dSpec>(s).out_channels;
    }

    std::size_t in_units(std::size_t l) const {
        const auto& s = layers.at(l);
        if (auto* fc = std::get_if<FcSpec>(&s)) return fc->in_width;
        return std::get<Conv2dSpec>(s).in_channels;
    }

    // Weight tensor shape of layer l.
    std::vector<std::size_t> weight_shape(std::size_t l) const {
        const auto& s = layers.at(l);
        if (auto* fc = std::get_if<FcSpec>(&s)) return {fc->out_width, fc->in_width};
        const auto& c = std::get<Conv2dSpec>(s);
        return {c.out_channels, c.in_channels, c.kernel_h, c.kernel_w};
    }

    std::size_t weight_count(std::size_t l) const {
        std::size_t n = 1;
        for (std::size_t d : weight_shape(l)) n *= d;
        return n;
    }

    std::size_t input_width() const { return in_units(0); }
    std::size_t output_width() const { return out_units(depth() - 1); }

    void validate() const {
        if (layers.empty()) throw StructuralError("architecture has no layers");
        if (!(domain_lo < domain_hi)) throw StructuralError("input domain requires a1 < b1");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            if (auto* fc = std::get_if<FcSpec>(&layers[l])) {
                if (fc->in_width < 1 || fc->out_width < 1)
                    throw StructuralError("fc widths must be >= 1 in layer " + std::to_string(l));
            } else {
                const auto& c = std::get<Conv2dSpec>(layers[l]);
                if (c.in_channels < 1 || c.out_channels < 1 || c.kernel_h < 1 || c.kernel_w < 1)
                    throw StructuralError("conv dims must be >= 1 in layer " + std::to_string(l));
            }
        }
        bool seen_fc = std::holds_alternative<FcSpec>(layers[0]);
        for (std::size_t l = 1; l < layers.size(); ++l) {
            const bool cur_fc = std::holds_alternative<FcSpec>(layers[l]);
            if (seen_fc && !cur_fc)
                throw StructuralError("fc->conv transition is not supported (layer " +
                                      std::to_string(l) + ")");
            if (!seen_fc && cur_fc) {
                // conv -> fc transition
                if (flatten_h < 1 || flatten_w < 1)
                    throw StructuralError("conv->fc transition requires a flatten size");
                const std::size_t flat = out_units(l - 1) * flatten_h * flatten_w;
                if (std::get<FcSpec>(layers[l]).in_width != flat)
                    throw StructuralError("fc in_width does not match flatten size at layer " +
                                          std::to_string(l));
            } else if (out_units(l - 1) != in_units(l)) {
                throw StructuralError("shape mismatch between layers " + std::to_string(l - 1) +
                                      " and " + std::to_string(l));
            }
            seen_fc = seen_fc || cur_fc;
        }
    }
};

inline Architecture fc_chain(const std::vector<std::size_t>& widths, double lo, double hi) {
    Architecture arch;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        arch.layers.push_back(FcSpec{widths[l], widths[l + 1]});
    arch.domain_lo = lo;
    arch.domain_hi = hi;
    arch.validate();
    return arch;
}

}  // namespace ernet
