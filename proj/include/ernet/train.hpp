#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ernet/network.hpp"

namespace ernet {

enum class Loss { Mse, CrossEntropy };

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.0;
    double weight_decay = 0.0;
    int epochs = 1;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    Loss loss = Loss::Mse;

    void validate() const {
        if (!(learning_rate >= 0.0)) throw DomainError("learning_rate must be >= 0");
        if (epochs < 1) throw DomainError("epochs must be >= 1");
        if (batch_size < 1) throw DomainError("batch_size must be >= 1");
    }
};

// Synthetic data.  Inputs are flat vectors (FC) or C x H x W tensors (conv).
// Regression stores per-sample target vectors; classification stores labels.
struct Dataset {
    std::vector<Tensor> inputs;
    std::vector<std::vector<double>> targets;
    std::vector<int> labels;
    bool classification = false;

    std::size_t size() const { return inputs.size(); }
};

Dataset make_teacher_student(const MaskedNetwork& teacher, std::size_t count, std::uint64_t seed);

// Gaussian blobs: `classes` isotropic clusters with unit-spaced centers.
Dataset make_blobs(std::size_t dims, std::size_t classes, std::size_t per_class, double spread,
                   std::uint64_t seed);

struct Gradients {
    std::vector<Tensor> weights;
    std::vector<std::vector<double>> biases;

    static Gradients zeros_like(const MaskedNetwork& net);
    void add_scaled(const Gradients& other, double s);
};

// Loss and dense parameter gradients for one sample; `active` overrides the
// network's own mask when given (forward and input gradients use it; weight
// gradients are dense so callers can mask as needed).
double loss_and_grad(const MaskedNetwork& net, const Mask* active, const Tensor& x,
                     const std::vector<double>& target, int label, Loss loss, Gradients& grad);

double evaluate(const MaskedNetwork& net, const Mask* active, const Dataset& data, Loss loss);
double accuracy(const MaskedNetwork& net, const Mask* active, const Dataset& data);

// Re-initializes unmasked weights with He scaling over the unmasked fan-in and
// zero biases; deterministic under seed.
void he_init(MaskedNetwork& net, std::uint64_t seed);

struct SgdResult {
    MaskedNetwork net;
    std::vector<double> loss_curve;  // one entry per epoch, training loss
    bool diverged = false;
};

SgdResult sgd_train(const MaskedNetwork& net, const Dataset& data, const TrainConfig& cfg);

struct AnnealLevel {
    int level = 0;
    double keep_fraction = 1.0;
};

struct EdgePopupResult {
    Mask ticket;              // final top-k mask, contained in the ER mask
    MaskedNetwork net;        // frozen weights with the final ticket mask
    std::vector<double> accuracy_curve;  // per level
    bool keep_clipped = false;
};

// Scores live only on ER-unmasked entries, initialized to |w|; weights stay
// frozen; forward keeps the top keep_fraction scores per layer; score updates
// use the straight-through gradient grad_w * w.
EdgePopupResult edge_popup(const MaskedNetwork& net, const Dataset& data, const TrainConfig& cfg,
                           const std::vector<AnnealLevel>& schedule);

struct RiglResult {
    Mask mask;
    MaskedNetwork net;
    std::vector<double> loss_curve;          // per epoch
    std::vector<std::size_t> nnz_trace;      // total nnz after every mask update
    std::size_t grow_shortfall = 0;          // grows skipped for lack of inactive slots
};

// SGD with periodic rewiring: drop the prune_rate fraction of smallest-|w|
// active entries per layer, grow the same count at inactive entries with the
// largest |gradient|; grown weights start at 0.  An optional per-update nnz
// schedule shrinks the layer budgets (sparse-to-sparse mode).
RiglResult rigl_rewire(const MaskedNetwork& net, const Dataset& data, const TrainConfig& cfg,
                       int update_every, double prune_rate,
                       const std::vector<double>& density_schedule = {});

}  // namespace ernet
