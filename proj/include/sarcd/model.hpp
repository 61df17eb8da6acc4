#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sarcd/diff_image.hpp"
#include "sarcd/patches.hpp"
#include "sarcd/raster.hpp"
#include "sarcd/tensor.hpp"

namespace sarcd {

inline constexpr std::size_t kLayerCount = 4;     // stacked stem layers N
inline constexpr std::size_t kStemChannels = 16;  // shallow feature width
inline constexpr std::size_t kGroupChannels = 32; // width of every stacked layer

struct LossWeights {
    double alpha = 0.1;  // cross-entropy share
    double beta = 0.9;   // absolute-error share
};

void validate(const LossWeights& w);

struct TrainConfig {
    int epochs = 30;
    int batch_size = 128;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    LossWeights loss_weights;
    double flip_rate = 0.0;    // recorded for provenance; flips happen in the dataset step
    bool use_attention = true;
    int threads = 0;           // 0 = hardware concurrency
};

void validate(const TrainConfig& cfg);

/// All trainable tensors. The layer-weight matrix is stored as its diagonal
/// only, so off-diagonal entries are structurally zero and can never train.
struct ModelParams {
    int r = 0;
    bool use_attention = true;
    Tensor stem0_w, stem0_b;    // 16 x 3 x 1 x 1
    Tensor stem1_w, stem1_b;    // 32 x 16 x 3 x 3
    Tensor stem2_w, stem2_b;    // 32 x 32 x 3 x 3
    Tensor stem3_w, stem3_b;    // 32 x 32 x 3 x 3
    Tensor lift0_w, lift0_b;    // 32 x 16 x 1 x 1
    Tensor attn_diag;           // 4
    Tensor reduce_w, reduce_b;  // 32 x 128 x 1 x 1
    Tensor fc_w, fc_b;          // 2 x (32 r r), 2

    // Fixed field order; checkpointing, Adam and gradient checks rely on it.
    std::vector<std::pair<std::string, Tensor*>> named_tensors();
    std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
    std::vector<Tensor*> tensor_ptrs();
};

// Uniform(-s, s) weights with s = sqrt(1 / fan_in), zero biases, identity
// attention diagonal. Deterministic per seed.
ModelParams init_params(int r, std::uint64_t seed);

// Intermediates of one forward pass, kept for the backward pass.
struct ForwardTrace {
    Tensor f0_pre, f0;          // 16 x R x R
    Tensor f1_pre, f1;          // 32 x R x R
    Tensor f2_pre, f2;
    Tensor f3_pre, f3;
    Tensor lift_pre, lift;      // 32 x R x R
    Tensor x;                   // 4 x 32 x R x R (row-major, layer-major rows)
    Tensor xhat;                // 4 x (32 R R), diagonal-weighted rows
    Tensor attn;                // 4 x 4
    Tensor y;                   // stored as 128 x R x R; same layout as 4 x 32 x R x R
    Tensor reduce_pre, reduce_out;  // 32 x R x R
    std::array<double, 2> logits{};
    std::array<double, 2> probs{};
};

// Four-layer stem; the shallow 16-channel feature is lifted to 32 channels
// and stacked with the three intermediate features.
Tensor stem_forward(const ModelParams& p, const Tensor& patch);

// Gram-matrix attention across the stacked layers with a residual add: rows
// of X are scaled by the diagonal, correlated, row-softmaxed, and the
// mixture is added back onto X. Accepts any N x C x H x W input with a
// matching diagonal; the model always uses N=4, C=32. `attn_out`, when
// given, receives the N x N attention matrix.
Tensor layer_attention_forward(const Tensor& x, const Tensor& attn_diag,
                               Tensor* attn_out = nullptr);

// Channel reduction, flatten, dense layer, softmax over the two classes.
std::array<double, 2> head_forward(const ModelParams& p, const Tensor& y);

std::array<double, 2> forward(const ModelParams& p, const Tensor& patch,
                              ForwardTrace* trace = nullptr);

struct LossGrad {
    double value = 0.0;
    std::array<double, 2> grad{};  // d loss / d probabilities
};

// L1 distance to the one-hot target; gradient is -sign(e_y - f), sign(0)=0.
LossGrad mae_loss(const std::array<double, 2>& f, int label);
// -ln f_y with f_y clamped below at 1e-12.
LossGrad ce_loss(const std::array<double, 2>& f, int label);
LossGrad combined_loss(const std::array<double, 2>& f, int label, const LossWeights& w);

struct ModelGrads {
    Tensor stem0_w, stem0_b, stem1_w, stem1_b, stem2_w, stem2_b, stem3_w, stem3_b;
    Tensor lift0_w, lift0_b, attn_diag, reduce_w, reduce_b, fc_w, fc_b;

    static ModelGrads zeros_like(const ModelParams& p);
    void set_zero();
    std::vector<Tensor*> tensor_ptrs();
    std::vector<const Tensor*> tensor_ptrs() const;
};

// Vector-Jacobian products for every parameter given d loss / d probs.
void backward(const ModelParams& p, const Tensor& patch, const ForwardTrace& trace,
              const std::array<double, 2>& dprobs, ModelGrads& out);

struct TrainResult {
    ModelParams params;
    std::vector<double> epoch_loss;  // mean per-sample loss per epoch
};

// Mini-batch Adam over seed-shuffled samples. Per-sample gradients may be
// computed in parallel but are reduced in sample order, so results are
// bit-identical for any thread count.
TrainResult train(const std::vector<Sample>& samples, const TrainConfig& cfg);

// Classifies every pixel; exact 0.5/0.5 ties resolve to unchanged.
ChangeMap predict_map(const ModelParams& p, const RasterImage& i1, const RasterImage& i2,
                      const DifferenceImage& di, int r, int threads = 0);

// Versioned little-endian binary container: header, architecture (R,
// attention flag), training config, then every tensor with name and shape.
void save_checkpoint(const ModelParams& p, const TrainConfig& cfg, const std::string& path);

struct Checkpoint {
    ModelParams params;
    TrainConfig config;
};

// expected_r > 0 demands a matching patch size and rejects the file otherwise.
Checkpoint load_checkpoint(const std::string& path, int expected_r = -1);

}  // namespace sarcd
