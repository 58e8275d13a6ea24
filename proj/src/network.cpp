#include "ernet/network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ernet/rng.hpp"
#include "json.hpp"

namespace ernet {

using nlohmann::json;

MaskedNetwork MaskedNetwork::zeros(const Architecture& arch) {
    arch.validate();
    MaskedNetwork net;
    net.arch = arch;
    for (std::size_t l = 0; l < arch.depth(); ++l) {
        net.weights.emplace_back(arch.weight_shape(l));
        net.biases.emplace_back(arch.out_units(l), 0.0);
    }
    net.mask = Mask::dense(arch);
    return net;
}

void MaskedNetwork::validate() const {
    arch.validate();
    if (weights.size() != arch.depth() || biases.size() != arch.depth())
        throw StructuralError("parameter count does not match architecture depth");
    mask.validate(arch);
    for (std::size_t l = 0; l < arch.depth(); ++l) {
        if (weights[l].shape() != arch.weight_shape(l))
            throw StructuralError("weight shape mismatch in layer " + std::to_string(l));
        if (biases[l].size() != arch.out_units(l))
            throw StructuralError("bias size mismatch in layer " + std::to_string(l));
        for (double v : weights[l].flat())
            if (!std::isfinite(v)) throw NumericError("non-finite weight in layer " + std::to_string(l));
        for (double v : biases[l])
            if (!std::isfinite(v)) throw NumericError("non-finite bias in layer " + std::to_string(l));
    }
}

Tensor conv2d_same(const Tensor& input, const Tensor& kernel, const Tensor& kernel_mask,
                   const std::vector<double>& bias) {
    const auto& ishape = input.shape();
    if (ishape.size() != 3) throw StructuralError("conv input must be C x H x W");
    const std::size_t ic = ishape[0], h = ishape[1], w = ishape[2];
    const auto& kshape = kernel.shape();
    const std::size_t oc = kshape[0], kh = kshape[2], kw = kshape[3];
    if (kshape[1] != ic) throw StructuralError("conv channel mismatch");
    if (kh > h + kh - 1 || kw > w + kw - 1)
        throw StructuralError("kernel larger than padded input");
    const std::size_t pad_h = (kh - 1) / 2, pad_w = (kw - 1) / 2;
    if (kh - 1 - pad_h >= h + pad_h || kw - 1 - pad_w >= w + pad_w)
        throw StructuralError("kernel larger than padded input");

    Tensor out({oc, h, w});
    for (std::size_t o = 0; o < oc; ++o) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                double acc = bias[o];
                for (std::size_t i = 0; i < ic; ++i) {
                    for (std::size_t dy = 0; dy < kh; ++dy) {
                        const std::ptrdiff_t sy =
                            static_cast<std::ptrdiff_t>(y + dy) - static_cast<std::ptrdiff_t>(pad_h);
                        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t dx = 0; dx < kw; ++dx) {
                            const std::ptrdiff_t sx =
                                static_cast<std::ptrdiff_t>(x + dx) - static_cast<std::ptrdiff_t>(pad_w);
                            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
                            acc += kernel.at4(o, i, dy, dx) * kernel_mask.at4(o, i, dy, dx) *
                                   input.data()[(i * h + static_cast<std::size_t>(sy)) * w +
                                                static_cast<std::size_t>(sx)];
                        }
                    }
                }
                out.data()[(o * h + y) * w + x] = acc;
            }
        }
    }
    return out;
}

namespace {

void relu_inplace(std::vector<double>& v) {
    for (double& x : v) x = x > 0.0 ? x : 0.0;
}

std::vector<double> fc_apply(const MaskedNetwork& net, std::size_t l,
                             const std::vector<double>& x) {
    const Tensor& w = net.weights[l];
    const Tensor& m = net.mask.layers[l];
    const std::size_t out = w.shape()[0], in = w.shape()[1];
    if (x.size() != in) throw StructuralError("input width mismatch at layer " + std::to_string(l));
    std::vector<double> y(out);
    for (std::size_t i = 0; i < out; ++i) {
        double acc = net.effective_bias(l, i);
        const double* wr = w.data() + i * in;
        const double* mr = m.data() + i * in;
        for (std::size_t j = 0; j < in; ++j) acc += wr[j] * mr[j] * x[j];
        y[i] = acc;
    }
    return y;
}

}  // namespace

std::vector<double> forward_tensor(const MaskedNetwork& net, const Tensor& x, bool check_domain) {
    for (double v : x.flat())
        if (!std::isfinite(v)) throw NumericError("non-finite input");
    if (check_domain) {
        for (double v : x.flat())
            if (v < net.arch.domain_lo || v > net.arch.domain_hi)
                throw DomainError("input component outside [a1, b1]");
    }

    const std::size_t depth = net.arch.depth();
    Tensor cur = x;
    bool spatial = Architecture::is_conv(net.arch.layers[0]);
    if (spatial) {
        if (cur.shape().size() != 3) throw StructuralError("conv network expects C x H x W input");
        if (cur.shape()[0] != net.arch.in_units(0)) throw StructuralError("input channel mismatch");
    } else {
        if (cur.size() != net.arch.input_width()) throw StructuralError("input width mismatch");
    }

    std::vector<double> flat(cur.flat());
    for (std::size_t l = 0; l < depth; ++l) {
        const bool conv = Architecture::is_conv(net.arch.layers[l]);
        if (conv) {
            cur = conv2d_same(cur, net.weights[l], net.mask.layers[l], [&] {
                std::vector<double> b(net.arch.out_units(l));
                for (std::size_t i = 0; i < b.size(); ++i) b[i] = net.effective_bias(l, i);
                return b;
            }());
            flat = cur.flat();
        } else {
            if (spatial) {
                // conv -> fc transition; channel-major flatten
                if (cur.shape()[1] != net.arch.flatten_h || cur.shape()[2] != net.arch.flatten_w)
                    throw StructuralError("spatial size does not match recorded flatten size");
                spatial = false;
            }
            flat = fc_apply(net, l, flat);
        }
        if (l + 1 < depth) {
            relu_inplace(flat);
            if (conv) cur.flat() = flat;
        }
    }
    return flat;
}

std::vector<double> forward(const MaskedNetwork& net, const std::vector<double>& x,
                            bool check_domain) {
    if (Architecture::is_conv(net.arch.layers[0]))
        throw StructuralError("conv network requires forward_tensor with a C x H x W input");
    Tensor t({x.size()});
    t.flat() = x;
    return forward_tensor(net, t, check_domain);
}

MaskedNetwork random_target(const Architecture& arch, std::uint64_t seed, double weight_scale) {
    if (weight_scale < 0.0) throw DomainError("weight_scale must be >= 0");
    MaskedNetwork net = MaskedNetwork::zeros(arch);
    Rng rng(seed);
    for (std::size_t l = 0; l < arch.depth(); ++l) {
        for (double& w : net.weights[l].flat()) w = rng.uniform(-weight_scale, weight_scale);
        for (double& b : net.biases[l]) b = rng.uniform(-weight_scale, weight_scale);
    }
    return net;
}

namespace {

json layer_spec_to_json(const LayerSpec& s) {
    if (auto* fc = std::get_if<FcSpec>(&s))
        return json{{"type", "fc"}, {"in", fc->in_width}, {"out", fc->out_width}};
    const auto& c = std::get<Conv2dSpec>(s);
    return json{{"type", "conv2d"},
                {"in_channels", c.in_channels},
                {"out_channels", c.out_channels},
                {"kernel", {c.kernel_h, c.kernel_w}}};
}

LayerSpec layer_spec_from_json(const json& j) {
    const std::string type = j.at("type");
    if (type == "fc") return FcSpec{j.at("in"), j.at("out")};
    if (type == "conv2d") {
        const auto& k = j.at("kernel");
        return Conv2dSpec{j.at("in_channels"), j.at("out_channels"), k.at(0), k.at(1)};
    }
    throw StructuralError("unknown layer type: " + type);
}

json tensor_to_nested(const Tensor& t, std::size_t dim, std::size_t offset, std::size_t stride) {
    const auto& shape = t.shape();
    json arr = json::array();
    if (dim + 1 == shape.size()) {
        for (std::size_t i = 0; i < shape[dim]; ++i) arr.push_back(t[offset + i]);
        return arr;
    }
    const std::size_t inner = stride / shape[dim];
    for (std::size_t i = 0; i < shape[dim]; ++i)
        arr.push_back(tensor_to_nested(t, dim + 1, offset + i * inner, inner));
    return arr;
}

json tensor_to_json(const Tensor& t) { return tensor_to_nested(t, 0, 0, t.size()); }

void nested_to_tensor(const json& j, Tensor& t, std::size_t dim, std::size_t offset,
                      std::size_t stride) {
    const auto& shape = t.shape();
    if (!j.is_array() || j.size() != shape[dim])
        throw StructuralError("nested array does not match tensor shape");
    if (dim + 1 == shape.size()) {
        for (std::size_t i = 0; i < shape[dim]; ++i) t[offset + i] = j.at(i).get<double>();
        return;
    }
    const std::size_t inner = stride / shape[dim];
    for (std::size_t i = 0; i < shape[dim]; ++i)
        nested_to_tensor(j.at(i), t, dim + 1, offset + i * inner, inner);
}

Tensor tensor_from_json(const json& j, const std::vector<std::size_t>& shape) {
    Tensor t(shape);
    nested_to_tensor(j, t, 0, 0, t.size());
    return t;
}

}  // namespace

std::string network_to_json(const MaskedNetwork& net) {
    json j;
    j["arch"] = json::array();
    for (const auto& s : net.arch.layers) j["arch"].push_back(layer_spec_to_json(s));
    j["input_domain"] = {net.arch.domain_lo, net.arch.domain_hi};
    if (net.arch.flatten_h > 0) j["flatten"] = {net.arch.flatten_h, net.arch.flatten_w};
    j["weights"] = json::array();
    j["biases"] = json::array();
    for (std::size_t l = 0; l < net.arch.depth(); ++l) {
        j["weights"].push_back(tensor_to_json(net.weights[l]));
        j["biases"].push_back(net.biases[l]);
    }
    bool dense = true;
    for (const auto& m : net.mask.layers)
        for (double v : m.flat()) dense = dense && v == 1.0;
    if (!dense) {
        j["mask"] = json::array();
        for (const auto& m : net.mask.layers) j["mask"].push_back(tensor_to_json(m));
    }
    if (net.mask.has_bias_mask()) {
        j["bias_mask"] = json::array();
        for (const auto& bm : net.mask.bias) j["bias_mask"].push_back(bm);
    }
    return j.dump(2);
}

MaskedNetwork network_from_json(const std::string& text) {
    json j = json::parse(text);
    Architecture arch;
    for (const auto& s : j.at("arch")) arch.layers.push_back(layer_spec_from_json(s));
    arch.domain_lo = j.at("input_domain").at(0);
    arch.domain_hi = j.at("input_domain").at(1);
    if (j.contains("flatten")) {
        arch.flatten_h = j["flatten"].at(0);
        arch.flatten_w = j["flatten"].at(1);
    }
    arch.validate();
    MaskedNetwork net = MaskedNetwork::zeros(arch);
    for (std::size_t l = 0; l < arch.depth(); ++l) {
        net.weights[l] = tensor_from_json(j.at("weights").at(l), arch.weight_shape(l));
        net.biases[l] = j.at("biases").at(l).get<std::vector<double>>();
        if (net.biases[l].size() != arch.out_units(l))
            throw StructuralError("bias size mismatch in layer " + std::to_string(l));
    }
    if (j.contains("mask")) {
        for (std::size_t l = 0; l < arch.depth(); ++l)
            net.mask.layers[l] = tensor_from_json(j["mask"].at(l), arch.weight_shape(l));
    }
    if (j.contains("bias_mask")) {
        net.mask.bias.clear();
        for (std::size_t l = 0; l < arch.depth(); ++l)
            net.mask.bias.push_back(j["bias_mask"].at(l).get<std::vector<double>>());
    }
    net.validate();
    return net;
}

std::string architecture_to_json(const Architecture& arch) {
    json j;
    j["arch"] = json::array();
    for (const auto& s : arch.layers) j["arch"].push_back(layer_spec_to_json(s));
    j["input_domain"] = {arch.domain_lo, arch.domain_hi};
    if (arch.flatten_h > 0) j["flatten"] = {arch.flatten_h, arch.flatten_w};
    return j.dump(2);
}

Architecture architecture_from_json(const std::string& text) {
    json j = json::parse(text);
    Architecture arch;
    for (const auto& s : j.at("arch")) arch.layers.push_back(layer_spec_from_json(s));
    arch.domain_lo = j.at("input_domain").at(0);
    arch.domain_hi = j.at("input_domain").at(1);
    if (j.contains("flatten")) {
        arch.flatten_h = j["flatten"].at(0);
        arch.flatten_w = j["flatten"].at(1);
    }
    arch.validate();
    return arch;
}

void save_network(const MaskedNetwork& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw StructuralError("cannot open " + path + " for writing");
    out << network_to_json(net) << '\n';
}

MaskedNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return network_from_json(ss.str());
}

}  // namespace ernet
