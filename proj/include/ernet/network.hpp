#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ernet/architecture.hpp"
#include "ernet/mask.hpp"
#include "ernet/tensor.hpp"

namespace ernet {

// Weights, biases and a mask over an Architecture.  Evaluation applies ReLU
// after every layer except the last; the effective weight is W * S.
struct MaskedNetwork {
    Architecture arch;
    std::vector<Tensor> weights;
    std::vector<std::vector<double>> biases;
    Mask mask;

    static MaskedNetwork zeros(const Architecture& arch);

    double effective_weight(std::size_t l, std::size_t flat_index) const {
        return weights[l][flat_index] * mask.layers[l][flat_index];
    }
    double effective_bias(std::size_t l, std::size_t i) const {
        return mask.has_bias_mask() ? biases[l][i] * mask.bias[l][i] : biases[l][i];
    }

    void validate() const;

    std::size_t nnz_total() const { return mask.nnz_total(); }
};

// Forward pass.  Input is a flat vector for FC networks or a C x H x W tensor
// for networks with a conv prefix.  check_domain verifies components lie in
// [a1, b1].
std::vector<double> forward(const MaskedNetwork& net, const std::vector<double>& x,
                            bool check_domain = false);

// Conv entry point: x has shape {C, H, W}; returns the flat output (the last
// layer's activation, channel-major if it is convolutional).
std::vector<double> forward_tensor(const MaskedNetwork& net, const Tensor& x,
                                   bool check_domain = false);

// Single same-padding stride-1 cross-correlation, exposed for oracles/tests.
Tensor conv2d_same(const Tensor& input, const Tensor& kernel_oi, const Tensor& kernel_mask,
                   const std::vector<double>& bias);

// Dense network with i.i.d. uniform parameters in [-weight_scale, weight_scale].
MaskedNetwork random_target(const Architecture& arch, std::uint64_t seed, double weight_scale);

// JSON document {"arch":..., "input_domain":..., "weights":..., "biases":...,
// "mask": optional}; value-exact round-trip for doubles.
std::string network_to_json(const MaskedNetwork& net);
MaskedNetwork network_from_json(const std::string& text);

// Architecture-only document (the "arch"/"input_domain"/"flatten" subset);
// architecture_from_json also accepts a full network document.
std::string architecture_to_json(const Architecture& arch);
Architecture architecture_from_json(const std::string& text);

void save_network(const MaskedNetwork& net, const std::string& path);
MaskedNetwork load_network(const std::string& path);

}  // namespace ernet
