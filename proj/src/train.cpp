#include "ernet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ernet/rng.hpp"

namespace ernet {

namespace {

double normal01(Rng& rng) {
    // Box-Muller; u clamped away from 0.
    const double u = std::max(rng.uniform01(), 1e-300);
    const double v = rng.uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * 3.14159265358979323846 * v);
}

double mask_at(const MaskedNetwork& net, const Mask* active, std::size_t l, std::size_t i) {
    return active ? (*active).layers[l][i] : net.mask.layers[l][i];
}

double eff_w(const MaskedNetwork& net, const Mask* active, std::size_t l, std::size_t i) {
    return net.weights[l][i] * mask_at(net, active, l, i);
}

struct Tape {
    Tensor input;
    std::vector<Tensor> acts;  // output of each layer after its activation
};

const Tensor& layer_input(const Tape& tape, std::size_t l) {
    return l == 0 ? tape.input : tape.acts[l - 1];
}

void forward_tape(const MaskedNetwork& net, const Mask* active, const Tensor& x, Tape& tape) {
    const Architecture& arch = net.arch;
    tape.input = x;
    tape.acts.assign(arch.depth(), Tensor{});
    for (std::size_t l = 0; l < arch.depth(); ++l) {
        const Tensor& a = layer_input(tape, l);
        const bool last = l + 1 == arch.depth();
        if (auto* fc = std::get_if<FcSpec>(&arch.layers[l])) {
            if (a.size() != fc->in_width) throw StructuralError("input width mismatch");
            Tensor out({fc->out_width});
            for (std::size_t i = 0; i < fc->out_width; ++i) {
                double acc = net.effective_bias(l, i);
                const std::size_t base = i * fc->in_width;
                for (std::size_t j = 0; j < fc->in_width; ++j)
                    acc += eff_w(net, active, l, base + j) * a[j];
                out[i] = last ? acc : std::max(acc, 0.0);
            }
            tape.acts[l] = std::move(out);
        } else {
            const auto& c = std::get<Conv2dSpec>(arch.layers[l]);
            if (a.shape().size() != 3 || a.shape()[0] != c.in_channels)
                throw StructuralError("conv input shape mismatch");
            const std::size_t h = a.shape()[1], w = a.shape()[2];
            const std::size_t ph = (c.kernel_h - 1) / 2, pw = (c.kernel_w - 1) / 2;
            Tensor out({c.out_channels, h, w});
            const Tensor& wt = net.weights[l];
            for (std::size_t o = 0; o < c.out_channels; ++o)
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t xw = 0; xw < w; ++xw) {
                        double acc = net.effective_bias(l, o);
                        for (std::size_t i = 0; i < c.in_channels; ++i)
                            for (std::size_t dy = 0; dy < c.kernel_h; ++dy)
                                for (std::size_t dx = 0; dx < c.kernel_w; ++dx) {
                                    const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + dy) -
                                                              static_cast<std::ptrdiff_t>(ph);
                                    const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xw + dx) -
                                                              static_cast<std::ptrdiff_t>(pw);
                                    if (sy < 0 || sx < 0 || sy >= static_cast<std::ptrdiff_t>(h) ||
                                        sx >= static_cast<std::ptrdiff_t>(w))
                                        continue;
                                    const std::size_t widx =
                                        ((o * c.in_channels + i) * c.kernel_h + dy) * c.kernel_w +
                                        dx;
                                    acc += wt[widx] * mask_at(net, active, l, widx) *
                                           a[(i * h + static_cast<std::size_t>(sy)) * w +
                                             static_cast<std::size_t>(sx)];
                                }
                        const std::size_t oidx = (o * h + y) * w + xw;
                        out[oidx] = last ? acc : std::max(acc, 0.0);
                    }
            tape.acts[l] = std::move(out);
        }
    }
}

// Backward pass from the gradient of the loss with respect to the network
// output.  Weight gradients are dense; input gradients flow through the
// active effective weights only.
void backward_tape(const MaskedNetwork& net, const Mask* active, const Tape& tape,
                   const std::vector<double>& dloss, Gradients& grad) {
    const Architecture& arch = net.arch;
    Tensor g = tape.acts.back();
    if (dloss.size() != g.size()) throw StructuralError("loss gradient size mismatch");
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = dloss[i];

    for (std::size_t l = arch.depth(); l-- > 0;) {
        const bool last = l + 1 == arch.depth();
        if (!last) {
            const Tensor& act = tape.acts[l];
            for (std::size_t i = 0; i < g.size(); ++i)
                if (act[i] <= 0.0) g[i] = 0.0;
        }
        const Tensor& a = layer_input(tape, l);
        if (auto* fc = std::get_if<FcSpec>(&arch.layers[l])) {
            Tensor gin({fc->in_width});
            for (std::size_t i = 0; i < fc->out_width; ++i) {
                grad.biases[l][i] += g[i];
                const std::size_t base = i * fc->in_width;
                for (std::size_t j = 0; j < fc->in_width; ++j) {
                    grad.weights[l][base + j] += g[i] * a[j];
                    gin[j] += g[i] * eff_w(net, active, l, base + j);
                }
            }
            if (l > 0 && tape.acts[l - 1].shape().size() == 3) {
                // reshape the flat gradient back to the conv activation shape
                Tensor shaped(tape.acts[l - 1].shape());
                shaped.flat() = gin.flat();
                g = std::move(shaped);
            } else {
                g = std::move(gin);
            }
        } else {
            const auto& c = std::get<Conv2dSpec>(arch.layers[l]);
            const std::size_t h = a.shape()[1], w = a.shape()[2];
            const std::size_t ph = (c.kernel_h - 1) / 2, pw = (c.kernel_w - 1) / 2;
            Tensor gin(a.shape());
            const Tensor& wt = net.weights[l];
            for (std::size_t o = 0; o < c.out_channels; ++o)
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t xw = 0; xw < w; ++xw) {
                        const double go = g[(o * h + y) * w + xw];
                        if (go == 0.0) continue;
                        grad.biases[l][o] += go;
                        for (std::size_t i = 0; i < c.in_channels; ++i)
                            for (std::size_t dy = 0; dy < c.kernel_h; ++dy)
                                for (std::size_t dx = 0; dx < c.kernel_w; ++dx) {
                                    const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + dy) -
                                                              static_cast<std::ptrdiff_t>(ph);
                                    const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xw + dx) -
                                                              static_cast<std::ptrdiff_t>(pw);
                                    if (sy < 0 || sx < 0 || sy >= static_cast<std::ptrdiff_t>(h) ||
                                        sx >= static_cast<std::ptrdiff_t>(w))
                                        continue;
                                    const std::size_t widx =
                                        ((o * c.in_channels + i) * c.kernel_h + dy) * c.kernel_w +
                                        dx;
                                    const std::size_t aidx =
                                        (i * h + static_cast<std::size_t>(sy)) * w +
                                        static_cast<std::size_t>(sx);
                                    grad.weights[l][widx] += go * a[aidx];
                                    gin[aidx] += go * wt[widx] * mask_at(net, active, l, widx);
                                }
                    }
            g = std::move(gin);
        }
    }
}

double loss_value_and_dloss(const std::vector<double>& y, const std::vector<double>& target,
                            int label, Loss loss, std::vector<double>& dloss) {
    dloss.assign(y.size(), 0.0);
    if (loss == Loss::Mse) {
        if (target.size() != y.size()) throw StructuralError("target size mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double d = y[i] - target[i];
            s += d * d;
            dloss[i] = 2.0 * d / static_cast<double>(y.size());
        }
        return s / static_cast<double>(y.size());
    }
    // softmax cross-entropy
    if (label < 0 || static_cast<std::size_t>(label) >= y.size())
        throw DomainError("label out of range");
    const double mx = *std::max_element(y.begin(), y.end());
    double z = 0.0;
    for (double v : y) z += std::exp(v - mx);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double p = std::exp(y[i] - mx) / z;
        dloss[i] = p - (static_cast<int>(i) == label ? 1.0 : 0.0);
    }
    return -(y[static_cast<std::size_t>(label)] - mx - std::log(z));
}

std::vector<double> forward_active(const MaskedNetwork& net, const Mask* active, const Tensor& x) {
    Tape tape;
    forward_tape(net, active, x, tape);
    return tape.acts.back().flat();
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    return idx;
}

}  // namespace

Gradients Gradients::zeros_like(const MaskedNetwork& net) {
    Gradients g;
    for (std::size_t l = 0; l < net.arch.depth(); ++l) {
        g.weights.emplace_back(net.arch.weight_shape(l));
        g.biases.emplace_back(net.arch.out_units(l), 0.0);
    }
    return g;
}

void Gradients::add_scaled(const Gradients& other, double s) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += s * other.weights[l][i];
        for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += s * other.biases[l][i];
    }
}

double loss_and_grad(const MaskedNetwork& net, const Mask* active, const Tensor& x,
                     const std::vector<double>& target, int label, Loss loss, Gradients& grad) {
    Tape tape;
    forward_tape(net, active, x, tape);
    std::vector<double> dloss;
    const double value =
        loss_value_and_dloss(tape.acts.back().flat(), target, label, loss, dloss);
    backward_tape(net, active, tape, dloss, grad);
    return value;
}

double evaluate(const MaskedNetwork& net, const Mask* active, const Dataset& data, Loss loss) {
    if (data.size() == 0) throw DomainError("empty dataset");
    double total = 0.0;
    std::vector<double> dloss;
    for (std::size_t s = 0; s < data.size(); ++s) {
        const auto y = forward_active(net, active, data.inputs[s]);
        total += loss_value_and_dloss(y, data.classification ? std::vector<double>{} : data.targets[s],
                                      data.classification ? data.labels[s] : 0, loss, dloss);
    }
    return total / static_cast<double>(data.size());
}

double accuracy(const MaskedNetwork& net, const Mask* active, const Dataset& data) {
    if (!data.classification) throw DomainError("accuracy requires a classification dataset");
    std::size_t hits = 0;
    for (std::size_t s = 0; s < data.size(); ++s) {
        const auto y = forward_active(net, active, data.inputs[s]);
        const auto it = std::max_element(y.begin(), y.end());
        hits += static_cast<int>(it - y.begin()) == data.labels[s];
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

Dataset make_teacher_student(const MaskedNetwork& teacher, std::size_t count, std::uint64_t seed) {
    teacher.validate();
    Dataset data;
    Rng rng(seed);
    for (std::size_t s = 0; s < count; ++s) {
        Tensor x;
        if (Architecture::is_conv(teacher.arch.layers[0])) {
            const std::size_t h = teacher.arch.flatten_h > 0 ? teacher.arch.flatten_h : 4;
            const std::size_t w = teacher.arch.flatten_w > 0 ? teacher.arch.flatten_w : 4;
            x = Tensor({teacher.arch.in_units(0), h, w});
        } else {
            x = Tensor({teacher.arch.input_width()});
        }
        for (double& v : x.flat())
            v = rng.uniform(teacher.arch.domain_lo, teacher.arch.domain_hi);
        data.targets.push_back(forward_active(teacher, nullptr, x));
        data.inputs.push_back(std::move(x));
    }
    return data;
}

Dataset make_blobs(std::size_t dims, std::size_t classes, std::size_t per_class, double spread,
                   std::uint64_t seed) {
    if (dims < 1 || classes < 2 || per_class < 1) throw DomainError("invalid blob parameters");
    Dataset data;
    data.classification = true;
    Rng rng(seed);
    // deterministic unit-separated centers: class c puts mass on dims with
    // index ≡ c (mod classes)
    for (std::size_t s = 0; s < per_class * classes; ++s) {
        const std::size_t c = s % classes;
        Tensor x({dims});
        for (std::size_t j = 0; j < dims; ++j)
            x[j] = (j % classes == c ? 2.0 : 0.0) + spread * normal01(rng);
        data.inputs.push_back(std::move(x));
        data.labels.push_back(static_cast<int>(c));
    }
    return data;
}

void he_init(MaskedNetwork& net, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t l = 0; l < net.arch.depth(); ++l) {
        Tensor& w = net.weights[l];
        const Tensor& m = net.mask.layers[l];
        const std::size_t n_out = w.out_units();
        const std::size_t per_out = w.size() / n_out;
        for (std::size_t i = 0; i < n_out; ++i) {
            std::size_t fan = 0;
            for (std::size_t k = 0; k < per_out; ++k) fan += m[i * per_out + k] != 0.0;
            const double std_dev = fan > 0 ? std::sqrt(2.0 / static_cast<double>(fan)) : 0.0;
            for (std::size_t k = 0; k < per_out; ++k) {
                const std::size_t idx = i * per_out + k;
                w[idx] = m[idx] != 0.0 ? std_dev * normal01(rng) : 0.0;
            }
            net.biases[l][i] = 0.0;
        }
    }
}

namespace {

void apply_sgd_step(MaskedNetwork& net, const Gradients& grad, Gradients& velocity,
                    const TrainConfig& cfg) {
    for (std::size_t l = 0; l < net.arch.depth(); ++l) {
        for (std::size_t i = 0; i < net.weights[l].size(); ++i) {
            if (net.mask.layers[l][i] == 0.0) continue;
            const double g = grad.weights[l][i] + cfg.weight_decay * net.weights[l][i];
            velocity.weights[l][i] = cfg.momentum * velocity.weights[l][i] - cfg.learning_rate * g;
            net.weights[l][i] += velocity.weights[l][i];
        }
        for (std::size_t i = 0; i < net.biases[l].size(); ++i) {
            if (net.mask.has_bias_mask() && net.mask.bias[l][i] == 0.0) continue;
            velocity.biases[l][i] =
                cfg.momentum * velocity.biases[l][i] - cfg.learning_rate * grad.biases[l][i];
            net.biases[l][i] += velocity.biases[l][i];
        }
    }
}

}  // namespace

SgdResult sgd_train(const MaskedNetwork& net, const Dataset& data, const TrainConfig& cfg) {
    net.validate();
    cfg.validate();
    if (data.size() == 0) throw DomainError("empty dataset");

    SgdResult result;
    result.net = net;
    Gradients velocity = Gradients::zeros_like(net);
    Rng order_rng(derive_seed(cfg.seed, 0x0dULL));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto idx = shuffled_indices(data.size(), order_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < idx.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, idx.size());
            Gradients grad = Gradients::zeros_like(net);
            double batch_loss = 0.0;
            for (std::size_t s = start; s < end; ++s) {
                const std::size_t k = idx[s];
                batch_loss += loss_and_grad(
                    result.net, nullptr, data.inputs[k],
                    data.classification ? std::vector<double>{} : data.targets[k],
                    data.classification ? data.labels[k] : 0, cfg.loss, grad);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (auto& t : grad.weights)
                for (double& v : t.flat()) v *= inv;
            for (auto& b : grad.biases)
                for (double& v : b) v *= inv;
            apply_sgd_step(result.net, grad, velocity, cfg);
            epoch_loss += batch_loss;
        }
        epoch_loss /= static_cast<double>(idx.size());
        result.loss_curve.push_back(epoch_loss);
        if (!std::isfinite(epoch_loss)) {
            result.diverged = true;
            break;
        }
    }
    return result;
}

namespace {

// Top-k mask per layer by score among ER-unmasked entries; k counted against
// the full layer size, clipped to the ER support.  Ties break by index.
Mask topk_mask(const Mask& er, const std::vector<Tensor>& scores, double keep_fraction,
               bool* clipped) {
    Mask active = er;
    for (std::size_t l = 0; l < er.layers.size(); ++l) {
        std::vector<std::size_t> support;
        for (std::size_t i = 0; i < er.layers[l].size(); ++i)
            if (er.layers[l][i] != 0.0) support.push_back(i);
        std::size_t k = static_cast<std::size_t>(
            std::llround(keep_fraction * static_cast<double>(er.layers[l].size())));
        if (k > support.size()) {
            k = support.size();
            if (clipped) *clipped = true;
        }
        std::sort(support.begin(), support.end(), [&](std::size_t a, std::size_t b) {
            if (scores[l][a] != scores[l][b]) return scores[l][a] > scores[l][b];
            return a < b;
        });
        active.layers[l].fill(0.0);
        for (std::size_t r = 0; r < k; ++r) active.layers[l][support[r]] = 1.0;
    }
    return active;
}

}  // namespace

EdgePopupResult edge_popup(const MaskedNetwork& net, const Dataset& data, const TrainConfig& cfg,
                           const std::vector<AnnealLevel>& schedule) {
    net.validate();
    cfg.validate();
    if (schedule.empty()) throw DomainError("edge_popup needs a nonempty anneal schedule");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i].keep_fraction > schedule[i - 1].keep_fraction)
            throw DomainError("anneal schedule must have nonincreasing keep fractions");

    EdgePopupResult result;
    result.net = net;  // weights frozen throughout
    const Mask& er = net.mask;
    std::vector<Tensor> scores;
    for (std::size_t l = 0; l < net.arch.depth(); ++l) {
        Tensor s(net.arch.weight_shape(l));
        for (std::size_t i = 0; i < s.size(); ++i)
            s[i] = er.layers[l][i] != 0.0 ? std::abs(net.weights[l][i]) : 0.0;
        scores.push_back(std::move(s));
    }

    Rng order_rng(derive_seed(cfg.seed, 0xe9ULL));
    Mask active = topk_mask(er, scores, schedule.front().keep_fraction, &result.keep_clipped);

    for (const AnnealLevel& level : schedule) {
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            const auto idx = shuffled_indices(data.size(), order_rng);
            for (std::size_t start = 0; start < idx.size(); start += cfg.batch_size) {
                const std::size_t end = std::min(start + cfg.batch_size, idx.size());
                active = topk_mask(er, scores, level.keep_fraction, &result.keep_clipped);
                Gradients grad = Gradients::zeros_like(net);
                for (std::size_t s = start; s < end; ++s) {
                    const std::size_t k = idx[s];
                    loss_and_grad(result.net, &active, data.inputs[k],
                                  data.classification ? std::vector<double>{} : data.targets[k],
                                  data.classification ? data.labels[k] : 0, cfg.loss, grad);
                }
                const double inv = 1.0 / static_cast<double>(end - start);
                // straight-through: score gradient = weight gradient * weight,
                // applied on every ER entry regardless of the active top-k
                for (std::size_t l = 0; l < scores.size(); ++l)
                    for (std::size_t i = 0; i < scores[l].size(); ++i)
                        if (er.layers[l][i] != 0.0)
                            scores[l][i] -= cfg.learning_rate * inv * grad.weights[l][i] *
                                            net.weights[l][i];
            }
        }
        active = topk_mask(er, scores, level.keep_fraction, &result.keep_clipped);
        result.accuracy_curve.push_back(data.classification
                                            ? accuracy(result.net, &active, data)
                                            : -evaluate(result.net, &active, data, cfg.loss));
    }

    result.ticket = active;
    result.net.mask = active;
    return result;
}

RiglResult rigl_rewire(const MaskedNetwork& net, const Dataset& data, const TrainConfig& cfg,
                       int update_every, double prune_rate,
                       const std::vector<double>& density_schedule) {
    net.validate();
    cfg.validate();
    if (update_every < 1) throw DomainError("update_every must be >= 1");
    if (!(prune_rate >= 0.0 && prune_rate <= 1.0)) throw DomainError("prune_rate must be in [0, 1]");

    RiglResult result;
    result.net = net;
    Gradients velocity = Gradients::zeros_like(net);
    // same data order as sgd_train so prune_rate = 0 reproduces it exactly
    Rng order_rng(derive_seed(cfg.seed, 0x0dULL));
    long long step = 0;
    std::size_t update_index = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto idx = shuffled_indices(data.size(), order_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < idx.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, idx.size());
            Gradients grad = Gradients::zeros_like(net);
            for (std::size_t s = start; s < end; ++s) {
                const std::size_t k = idx[s];
                epoch_loss += loss_and_grad(
                    result.net, nullptr, data.inputs[k],
                    data.classification ? std::vector<double>{} : data.targets[k],
                    data.classification ? data.labels[k] : 0, cfg.loss, grad);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (auto& t : grad.weights)
                for (double& v : t.flat()) v *= inv;
            for (auto& b : grad.biases)
                for (double& v : b) v *= inv;
            apply_sgd_step(result.net, grad, velocity, cfg);
            ++step;

            if (prune_rate > 0.0 && step % update_every == 0) {
                for (std::size_t l = 0; l < net.arch.depth(); ++l) {
                    Tensor& m = result.net.mask.layers[l];
                    std::vector<std::size_t> act, inact;
                    for (std::size_t i = 0; i < m.size(); ++i)
                        (m[i] != 0.0 ? act : inact).push_back(i);
                    std::size_t budget = act.size();
                    if (!density_schedule.empty()) {
                        const double d = density_schedule[std::min(update_index,
                                                                   density_schedule.size() - 1)];
                        budget = static_cast<std::size_t>(
                            std::llround(d * static_cast<double>(m.size())));
                    }
                    std::size_t prune_k = static_cast<std::size_t>(
                        std::floor(prune_rate * static_cast<double>(act.size())));
                    if (act.size() - prune_k > budget) prune_k = act.size() - budget;
                    std::sort(act.begin(), act.end(), [&](std::size_t a, std::size_t b) {
                        const double wa = std::abs(result.net.weights[l][a]);
                        const double wb = std::abs(result.net.weights[l][b]);
                        if (wa != wb) return wa < wb;
                        return a < b;
                    });
                    for (std::size_t r = 0; r < prune_k; ++r) {
                        m[act[r]] = 0.0;
                        result.net.weights[l][act[r]] = 0.0;
                        velocity.weights[l][act[r]] = 0.0;
                    }
                    std::size_t grow_k = budget - std::min(budget, act.size() - prune_k);
                    if (grow_k > inact.size()) {
                        result.grow_shortfall += grow_k - inact.size();
                        grow_k = inact.size();
                    }
                    std::sort(inact.begin(), inact.end(), [&](std::size_t a, std::size_t b) {
                        const double ga = std::abs(grad.weights[l][a]);
                        const double gb = std::abs(grad.weights[l][b]);
                        if (ga != gb) return ga > gb;
                        return a < b;
                    });
                    for (std::size_t r = 0; r < grow_k; ++r) {
                        m[inact[r]] = 1.0;
                        result.net.weights[l][inact[r]] = 0.0;
                        velocity.weights[l][inact[r]] = 0.0;
                    }
                }
                ++update_index;
                result.nnz_trace.push_back(result.net.mask.nnz_total());
            }
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(idx.size()));
        if (!std::isfinite(result.loss_curve.back())) break;
    }
    result.mask = result.net.mask;
    return result;
}

}  // namespace ernet
