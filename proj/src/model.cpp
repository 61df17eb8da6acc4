#include "sarcd/model.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "sarcd/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace sarcd {

namespace {

constexpr double kProbClamp = 1e-12;

void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

void check_probs(const std::array<double, 2>& f) {
    if (!std::isfinite(f[0]) || !std::isfinite(f[1]) || f[0] < 0.0 || f[1] < 0.0 ||
        std::abs(f[0] + f[1] - 1.0) > 1e-6)
        throw NumericError("invalid probability vector");
}

void check_label(int label) {
    if (label != 0 && label != 1) throw ValidationError("label must be 0 or 1");
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// X rows scaled by the diagonal, Gram matrix, row softmax, mixture plus
// residual. `y` keeps X's memory layout; the caller picks its shape.
void attention_core(const Tensor& x, const Tensor& diag, std::size_t n, std::size_t m,
                    Tensor& xhat, Tensor& attn, Tensor& y) {
    xhat = Tensor({n, m});
    for (std::size_t l = 0; l < n; ++l) {
        const double wl = diag.data[l];
        const double* src = x.data.data() + l * m;
        double* dst = xhat.data.data() + l * m;
        for (std::size_t k = 0; k < m; ++k) dst[k] = wl * src[k];
    }

    Tensor gram({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = xhat.data.data() + i * m;
        for (std::size_t j = 0; j < n; ++j) {
            const double* xj = xhat.data.data() + j * m;
            double acc = 0.0;
            for (std::size_t k = 0; k < m; ++k) acc += xi[k] * xj[k];
            gram.data[i * n + j] = acc;
        }
    }
    attn = softmax_rows(gram);

    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = attn.data.data() + i * n;
        double* yrow = y.data.data() + i * m;
        const double* xrow = x.data.data() + i * m;
        const double a0 = arow[0];
        const double* xh0 = xhat.data.data();
        for (std::size_t k = 0; k < m; ++k) yrow[k] = a0 * xh0[k];
        for (std::size_t j = 1; j < n; ++j) {
            const double aj = arow[j];
            const double* xhj = xhat.data.data() + j * m;
            for (std::size_t k = 0; k < m; ++k) yrow[k] += aj * xhj[k];
        }
        for (std::size_t k = 0; k < m; ++k) yrow[k] += xrow[k];
    }
}

}  // namespace

void validate(const LossWeights& w) {
    if (!(w.alpha >= 0.0 && w.beta >= 0.0 && w.alpha + w.beta > 0.0))
        throw ValidationError("loss weights: need alpha >= 0, beta >= 0, alpha + beta > 0");
}

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ValidationError("train config: epochs must be at least 1");
    if (cfg.batch_size < 1) throw ValidationError("train config: batch_size must be at least 1");
    if (!(cfg.lr >= 0.0)) throw ValidationError("train config: learning rate must be non-negative");
    if (!(cfg.flip_rate >= 0.0 && cfg.flip_rate < 1.0))
        throw ValidationError("train config: flip rate must be in [0, 1)");
    validate(cfg.loss_weights);
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named_tensors() {
    return {{"stem0_w", &stem0_w}, {"stem0_b", &stem0_b}, {"stem1_w", &stem1_w},
            {"stem1_b", &stem1_b}, {"stem2_w", &stem2_w}, {"stem2_b", &stem2_b},
            {"stem3_w", &stem3_w}, {"stem3_b", &stem3_b}, {"lift0_w", &lift0_w},
            {"lift0_b", &lift0_b}, {"attn_diag", &attn_diag}, {"reduce_w", &reduce_w},
            {"reduce_b", &reduce_b}, {"fc_w", &fc_w}, {"fc_b", &fc_b}};
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named_tensors() const {
    auto mutable_list = const_cast<ModelParams*>(this)->named_tensors();
    std::vector<std::pair<std::string, const Tensor*>> out;
    out.reserve(mutable_list.size());
    for (auto& [name, t] : mutable_list) out.emplace_back(name, t);
    return out;
}

std::vector<Tensor*> ModelParams::tensor_ptrs() {
    std::vector<Tensor*> out;
    for (auto& [name, t] : named_tensors()) out.push_back(t);
    return out;
}

ModelParams init_params(int r, std::uint64_t seed) {
    if (r < 3 || r > 31 || r % 2 == 0)
        throw ValidationError("init_params: r must be odd and in [3, 31]");
    const std::size_t ru = static_cast<std::size_t>(r);
    const std::size_t d = kGroupChannels * ru * ru;

    ModelParams p;
    p.r = r;
    p.stem0_w = Tensor({kStemChannels, 3, 1, 1});
    p.stem0_b = Tensor({kStemChannels});
    p.stem1_w = Tensor({kGroupChannels, kStemChannels, 3, 3});
    p.stem1_b = Tensor({kGroupChannels});
    p.stem2_w = Tensor({kGroupChannels, kGroupChannels, 3, 3});
    p.stem2_b = Tensor({kGroupChannels});
    p.stem3_w = Tensor({kGroupChannels, kGroupChannels, 3, 3});
    p.stem3_b = Tensor({kGroupChannels});
    p.lift0_w = Tensor({kGroupChannels, kStemChannels, 1, 1});
    p.lift0_b = Tensor({kGroupChannels});
    p.attn_diag = Tensor({kLayerCount});
    p.reduce_w = Tensor({kGroupChannels, kLayerCount * kGroupChannels, 1, 1});
    p.reduce_b = Tensor({kGroupChannels});
    p.fc_w = Tensor({2, d});
    p.fc_b = Tensor({2});

    std::mt19937_64 rng(seed);
    auto fill = [&rng](Tensor& t, std::size_t fan_in) {
        const double s = std::sqrt(1.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-s, s);
        for (double& v : t.data) v = u(rng);
    };
    fill(p.stem0_w, 3);
    fill(p.stem1_w, kStemChannels * 9);
    fill(p.stem2_w, kGroupChannels * 9);
    fill(p.stem3_w, kGroupChannels * 9);
    fill(p.lift0_w, kStemChannels);
    fill(p.reduce_w, kLayerCount * kGroupChannels);
    fill(p.fc_w, d);
    std::fill(p.attn_diag.data.begin(), p.attn_diag.data.end(), 1.0);
    return p;
}

Tensor stem_forward(const ModelParams& p, const Tensor& patch) {
    ForwardTrace t;
    forward(p, patch, &t);
    return t.x;
}

Tensor layer_attention_forward(const Tensor& x, const Tensor& attn_diag, Tensor* attn_out) {
    require(x.shape.size() == 4,
            "layer_attention_forward: expected N x C x H x W input, got " + shape_str(x.shape));
    require(attn_diag.shape.size() == 1 && attn_diag.shape[0] == x.shape[0],
            "layer_attention_forward: diagonal length must match the layer count");
    const std::size_t n = x.shape[0];
    const std::size_t m = x.shape[1] * x.shape[2] * x.shape[3];
    require(n >= 1 && m >= 1, "layer_attention_forward: empty input");
    Tensor xhat, attn;
    Tensor y(x.shape);
    attention_core(x, attn_diag, n, m, xhat, attn, y);
    if (attn_out) *attn_out = std::move(attn);
    return y;
}

std::array<double, 2> head_forward(const ModelParams& p, const Tensor& y) {
    require(y.shape.size() == 4 && y.shape[0] == kLayerCount && y.shape[1] == kGroupChannels,
            "head_forward: expected 4 x 32 x R x R input, got " + shape_str(y.shape));
    const std::size_t ru = y.shape[2];
    Tensor y128 = reshape(y, {kLayerCount * kGroupChannels, ru, ru});
    Tensor reduce_pre = conv2d(y128, p.reduce_w, p.reduce_b, 0);
    Tensor flat = relu(reduce_pre);

    const std::size_t d = flat.numel();
    require(p.fc_w.numel() == 2 * d, "head_forward: dense layer sized for a different R");
    std::array<double, 2> logits{};
    for (std::size_t c = 0; c < 2; ++c) {
        double acc = p.fc_b.data[c];
        const double* wrow = p.fc_w.data.data() + c * d;
        for (std::size_t i = 0; i < d; ++i) acc += wrow[i] * flat.data[i];
        logits[c] = acc;
    }
    const double mx = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - mx), e1 = std::exp(logits[1] - mx);
    return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

std::array<double, 2> forward(const ModelParams& p, const Tensor& patch, ForwardTrace* trace) {
    require(patch.shape.size() == 3 && patch.shape[0] == 3 && patch.shape[1] == patch.shape[2],
            "forward: expected 3 x R x R patch, got " + shape_str(patch.shape));
    require(static_cast<int>(patch.shape[1]) == p.r,
            "forward: patch size " + std::to_string(patch.shape[1]) +
                " does not match model r=" + std::to_string(p.r));
    ForwardTrace local;
    ForwardTrace& t = trace ? *trace : local;

    t.f0_pre = conv2d(patch, p.stem0_w, p.stem0_b, 0);
    t.f0 = relu(t.f0_pre);
    t.f1_pre = conv2d(t.f0, p.stem1_w, p.stem1_b, 1);
    t.f1 = relu(t.f1_pre);
    t.f2_pre = conv2d(t.f1, p.stem2_w, p.stem2_b, 1);
    t.f2 = relu(t.f2_pre);
    t.f3_pre = conv2d(t.f2, p.stem3_w, p.stem3_b, 1);
    t.f3 = relu(t.f3_pre);
    t.lift_pre = conv2d(t.f0, p.lift0_w, p.lift0_b, 0);
    t.lift = relu(t.lift_pre);

    const std::size_t ru = patch.shape[1];
    const std::size_t m = kGroupChannels * ru * ru;
    t.x = Tensor({kLayerCount, kGroupChannels, ru, ru});
    std::memcpy(t.x.data.data(), t.lift.data.data(), m * sizeof(double));
    std::memcpy(t.x.data.data() + m, t.f1.data.data(), m * sizeof(double));
    std::memcpy(t.x.data.data() + 2 * m, t.f2.data.data(), m * sizeof(double));
    std::memcpy(t.x.data.data() + 3 * m, t.f3.data.data(), m * sizeof(double));

    t.y = Tensor({kLayerCount * kGroupChannels, ru, ru});
    if (p.use_attention) {
        attention_core(t.x, p.attn_diag, kLayerCount, m, t.xhat, t.attn, t.y);
    } else {
        t.y.data = t.x.data;
    }

    t.reduce_pre = conv2d(t.y, p.reduce_w, p.reduce_b, 0);
    t.reduce_out = relu(t.reduce_pre);

    const std::size_t d = t.reduce_out.numel();
    for (std::size_t c = 0; c < 2; ++c) {
        double acc = p.fc_b.data[c];
        const double* wrow = p.fc_w.data.data() + c * d;
        const double* flat = t.reduce_out.data.data();
        for (std::size_t i = 0; i < d; ++i) acc += wrow[i] * flat[i];
        t.logits[c] = acc;
    }
    const double mx = std::max(t.logits[0], t.logits[1]);
    const double e0 = std::exp(t.logits[0] - mx), e1 = std::exp(t.logits[1] - mx);
    t.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
    return t.probs;
}

LossGrad mae_loss(const std::array<double, 2>& f, int label) {
    check_probs(f);
    check_label(label);
    LossGrad out;
    for (int j = 0; j < 2; ++j) {
        const double target = j == label ? 1.0 : 0.0;
        const double diff = target - f[j];
        out.value += std::abs(diff);
        out.grad[j] = diff > 0.0 ? -1.0 : (diff < 0.0 ? 1.0 : 0.0);
    }
    return out;
}

LossGrad ce_loss(const std::array<double, 2>& f, int label) {
    check_probs(f);
    check_label(label);
    LossGrad out;
    const double fy = std::max(f[label], kProbClamp);
    out.value = -std::log(fy);
    out.grad[label] = -1.0 / fy;
    return out;
}

LossGrad combined_loss(const std::array<double, 2>& f, int label, const LossWeights& w) {
    validate(w);
    const LossGrad ce = ce_loss(f, label);
    const LossGrad mae = mae_loss(f, label);
    LossGrad out;
    out.value = w.alpha * ce.value + w.beta * mae.value;
    out.grad[0] = w.alpha * ce.grad[0] + w.beta * mae.grad[0];
    out.grad[1] = w.alpha * ce.grad[1] + w.beta * mae.grad[1];
    return out;
}

ModelGrads ModelGrads::zeros_like(const ModelParams& p) {
    ModelGrads g;
    auto src = const_cast<ModelParams&>(p).named_tensors();
    auto dst = g.tensor_ptrs();
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = Tensor(src[i].second->shape);
    return g;
}

void ModelGrads::set_zero() {
    for (Tensor* t : tensor_ptrs()) std::fill(t->data.begin(), t->data.end(), 0.0);
}

std::vector<Tensor*> ModelGrads::tensor_ptrs() {
    return {&stem0_w, &stem0_b, &stem1_w, &stem1_b, &stem2_w, &stem2_b, &stem3_w, &stem3_b,
            &lift0_w, &lift0_b, &attn_diag, &reduce_w, &reduce_b, &fc_w, &fc_b};
}

std::vector<const Tensor*> ModelGrads::tensor_ptrs() const {
    auto mutable_list = const_cast<ModelGrads*>(this)->tensor_ptrs();
    return {mutable_list.begin(), mutable_list.end()};
}

void backward(const ModelParams& p, const Tensor& patch, const ForwardTrace& t,
              const std::array<double, 2>& dprobs, ModelGrads& g) {
    const std::size_t ru = static_cast<std::size_t>(p.r);
    const std::size_t m = kGroupChannels * ru * ru;
    const std::size_t n = kLayerCount;

    // Two-way softmax backward.
    const double dot = dprobs[0] * t.probs[0] + dprobs[1] * t.probs[1];
    const std::array<double, 2> dlogits{t.probs[0] * (dprobs[0] - dot),
                                        t.probs[1] * (dprobs[1] - dot)};

    // Dense layer.
    const std::size_t d = t.reduce_out.numel();
    g.fc_w = Tensor({2, d});
    g.fc_b = Tensor({2});
    const double* flat = t.reduce_out.data.data();
    for (std::size_t c = 0; c < 2; ++c) {
        g.fc_b.data[c] = dlogits[c];
        double* grow = g.fc_w.data.data() + c * d;
        for (std::size_t i = 0; i < d; ++i) grow[i] = dlogits[c] * flat[i];
    }
    Tensor dflat({kGroupChannels, ru, ru});
    for (std::size_t i = 0; i < d; ++i)
        dflat.data[i] = p.fc_w.data[i] * dlogits[0] + p.fc_w.data[d + i] * dlogits[1];

    // Channel-reduction conv.
    Tensor dreduce_pre = relu_backward(t.reduce_pre, dflat);
    Conv2dGrads gr = conv2d_backward(t.y, p.reduce_w, dreduce_pre, 0, true);
    g.reduce_w = std::move(gr.kernel);
    g.reduce_b = std::move(gr.bias);
    Tensor& dy = gr.input;  // 128 x R x R; four layer-major rows of length m

    // Attention block.
    Tensor dx({n, kGroupChannels, ru, ru});
    g.attn_diag = Tensor({n});
    if (p.use_attention) {
        const double* xhat = t.xhat.data.data();
        const double* dyd = dy.data.data();

        Tensor dattn({n, n});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                const double* dyi = dyd + i * m;
                const double* xj = xhat + j * m;
                for (std::size_t k = 0; k < m; ++k) acc += dyi[k] * xj[k];
                dattn.data[i * n + j] = acc;
            }

        Tensor dxhat({n, m});
        for (std::size_t j = 0; j < n; ++j) {
            double* row = dxhat.data.data() + j * m;
            const double a0 = t.attn.data[j];
            for (std::size_t k = 0; k < m; ++k) row[k] = a0 * dyd[k];
            for (std::size_t i = 1; i < n; ++i) {
                const double ai = t.attn.data[i * n + j];
                const double* dyi = dyd + i * m;
                for (std::size_t k = 0; k < m; ++k) row[k] += ai * dyi[k];
            }
        }

        Tensor dgram = softmax_rows_backward(t.attn, dattn);
        for (std::size_t i = 0; i < n; ++i) {
            double* row = dxhat.data.data() + i * m;
            for (std::size_t j = 0; j < n; ++j) {
                const double s = dgram.data[i * n + j] + dgram.data[j * n + i];
                const double* xj = xhat + j * m;
                for (std::size_t k = 0; k < m; ++k) row[k] += s * xj[k];
            }
        }

        // Only the diagonal of the layer-weight matrix exists, so its
        // gradient is the diagonal of dXhat * Xm^T by construction.
        const double* xm = t.x.data.data();
        for (std::size_t l = 0; l < n; ++l) {
            const double* dxh = dxhat.data.data() + l * m;
            const double* xrow = xm + l * m;
            double acc = 0.0;
            for (std::size_t k = 0; k < m; ++k) acc += dxh[k] * xrow[k];
            g.attn_diag.data[l] = acc;
            const double wl = p.attn_diag.data[l];
            double* dxrow = dx.data.data() + l * m;
            const double* dyrow = dyd + l * m;
            for (std::size_t k = 0; k < m; ++k) dxrow[k] = wl * dxh[k] + dyrow[k];
        }
    } else {
        dx.data = dy.data;
    }

    // Stem, deepest layer first; the shallow feature collects the stem path
    // before the lift path.
    auto slice = [&](const Tensor& src, std::size_t l) {
        Tensor out({kGroupChannels, ru, ru});
        std::memcpy(out.data.data(), src.data.data() + l * m, m * sizeof(double));
        return out;
    };

    Tensor d3pre = relu_backward(t.f3_pre, slice(dx, 3));
    Conv2dGrads g3 = conv2d_backward(t.f2, p.stem3_w, d3pre, 1, true);
    g.stem3_w = std::move(g3.kernel);
    g.stem3_b = std::move(g3.bias);

    Tensor df2 = std::move(g3.input);
    for (std::size_t k = 0; k < m; ++k) df2.data[k] += dx.data[2 * m + k];
    Tensor d2pre = relu_backward(t.f2_pre, df2);
    Conv2dGrads g2 = conv2d_backward(t.f1, p.stem2_w, d2pre, 1, true);
    g.stem2_w = std::move(g2.kernel);
    g.stem2_b = std::move(g2.bias);

    Tensor df1 = std::move(g2.input);
    for (std::size_t k = 0; k < m; ++k) df1.data[k] += dx.data[m + k];
    Tensor d1pre = relu_backward(t.f1_pre, df1);
    Conv2dGrads g1 = conv2d_backward(t.f0, p.stem1_w, d1pre, 1, true);
    g.stem1_w = std::move(g1.kernel);
    g.stem1_b = std::move(g1.bias);
    Tensor df0 = std::move(g1.input);

    Tensor dliftpre = relu_backward(t.lift_pre, slice(dx, 0));
    Conv2dGrads gl = conv2d_backward(t.f0, p.lift0_w, dliftpre, 0, true);
    g.lift0_w = std::move(gl.kernel);
    g.lift0_b = std::move(gl.bias);
    for (std::size_t k = 0; k < df0.data.size(); ++k) df0.data[k] += gl.input.data[k];

    Tensor d0pre = relu_backward(t.f0_pre, df0);
    Conv2dGrads g0 = conv2d_backward(patch, p.stem0_w, d0pre, 0, false);
    g.stem0_w = std::move(g0.kernel);
    g.stem0_b = std::move(g0.bias);
}

TrainResult train(const std::vector<Sample>& samples, const TrainConfig& cfg) {
    validate(cfg);
    if (samples.empty()) throw ValidationError("train: empty dataset");
    bool has0 = false, has1 = false;
    for (const Sample& s : samples) (s.label == 0 ? has0 : has1) = true;
    if (!has0 || !has1) throw ValidationError("train: both classes must be present");
    const Tensor& first = samples.front().patch;
    if (first.shape.size() != 3 || first.shape[0] != 3 || first.shape[1] != first.shape[2])
        throw ValidationError("train: samples must hold 3 x R x R patches");
    const int r = static_cast<int>(first.shape[1]);

    TrainResult result;
    result.params = init_params(r, cfg.seed);
    result.params.use_attention = cfg.use_attention;
    ModelParams& params = result.params;

    auto ptrs = params.tensor_ptrs();
    for (Tensor* t : ptrs) t->ensure_grad();
    AdamState adam = adam_init(std::span<const Tensor* const>(
                                   const_cast<const Tensor* const*>(ptrs.data()), ptrs.size()),
                               cfg.lr);

    const std::size_t n = samples.size();
    const std::size_t bsz = static_cast<std::size_t>(cfg.batch_size);
    const int threads = std::max(1, std::min<int>(resolve_threads(cfg.threads),
                                                  static_cast<int>(bsz)));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 shuffler(cfg.seed);

    std::vector<ModelGrads> slots(bsz);
    std::vector<double> losses(bsz);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffler);
        double epoch_sum = 0.0;

        for (std::size_t start = 0; start < n; start += bsz) {
            const std::size_t count = std::min(bsz, n - start);

            std::atomic<std::size_t> cursor{0};
            std::exception_ptr failure;
            std::mutex failure_mutex;
            auto work = [&]() {
                try {
                    ForwardTrace trace;
                    for (;;) {
                        const std::size_t bi = cursor.fetch_add(1);
                        if (bi >= count) break;
                        const Sample& s = samples[order[start + bi]];
                        const auto probs = forward(params, s.patch, &trace);
                        const LossGrad lg = combined_loss(probs, s.label, cfg.loss_weights);
                        losses[bi] = lg.value;
                        backward(params, s.patch, trace, lg.grad, slots[bi]);
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            };
            if (threads == 1) {
                work();
            } else {
                std::vector<std::thread> pool;
                pool.reserve(static_cast<std::size_t>(threads));
                for (int ti = 0; ti < threads; ++ti) pool.emplace_back(work);
                for (auto& th : pool) th.join();
            }
            if (failure) std::rethrow_exception(failure);

            // Mean gradient, reduced in sample order.
            for (std::size_t pi = 0; pi < ptrs.size(); ++pi) {
                Tensor& param = *ptrs[pi];
                std::fill(param.grad.begin(), param.grad.end(), 0.0);
                for (std::size_t bi = 0; bi < count; ++bi) {
                    const Tensor& contrib = *slots[bi].tensor_ptrs()[pi];
                    for (std::size_t e = 0; e < param.grad.size(); ++e)
                        param.grad[e] += contrib.data[e];
                }
                const double inv = 1.0 / static_cast<double>(count);
                for (double& v : param.grad) v *= inv;
            }
            adam_step(std::span<Tensor* const>(ptrs.data(), ptrs.size()), adam);

            for (std::size_t bi = 0; bi < count; ++bi) epoch_sum += losses[bi];
        }
        result.epoch_loss.push_back(epoch_sum / static_cast<double>(n));
    }
    return result;
}

ChangeMap predict_map(const ModelParams& p, const RasterImage& i1, const RasterImage& i2,
                      const DifferenceImage& di, int r, int threads) {
    if (r != p.r)
        throw ValidationError("predict_map: requested r=" + std::to_string(r) +
                              " does not match model r=" + std::to_string(p.r));
    if (i1.width != i2.width || i1.height != i2.height || di.width != i1.width ||
        di.height != i1.height)
        throw ValidationError("predict_map: image dimensions disagree");

    ChangeMap map;
    map.width = i1.width;
    map.height = i1.height;
    map.labels.assign(static_cast<std::size_t>(i1.width) * i1.height, 0);

    const int nthreads = std::max(1, resolve_threads(threads));
    std::atomic<int> next_row{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&]() {
        try {
            for (;;) {
                const int row = next_row.fetch_add(1);
                if (row >= i1.height) break;
                for (int col = 0; col < i1.width; ++col) {
                    const Tensor patch = extract_patch(i1, i2, di, row, col, r);
                    const auto probs = forward(p, patch);
                    map.labels[static_cast<std::size_t>(row) * i1.width + col] =
                        probs[1] > probs[0] ? 1 : 0;
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    if (nthreads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int ti = 0; ti < nthreads; ++ti) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return map;
}

namespace {

constexpr char kMagic[8] = {'S', 'A', 'R', 'C', 'D', 'C', 'K', '1'};

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw ValidationError("checkpoint: truncated file");
    return v;
}
std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    if (!in) throw ValidationError("checkpoint: truncated file");
    return v;
}
double get_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    if (!in) throw ValidationError("checkpoint: truncated file");
    return v;
}

ModelParams make_shell(int r) {
    ModelParams p = init_params(r, 0);
    for (Tensor* t : p.tensor_ptrs()) std::fill(t->data.begin(), t->data.end(), 0.0);
    return p;
}

}  // namespace

void save_checkpoint(const ModelParams& p, const TrainConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint: cannot open '" + path + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    put_u32(out, 1);  // format version
    put_u32(out, static_cast<std::uint32_t>(p.r));
    out.put(p.use_attention ? 1 : 0);
    put_u32(out, static_cast<std::uint32_t>(cfg.epochs));
    put_u32(out, static_cast<std::uint32_t>(cfg.batch_size));
    put_f64(out, cfg.lr);
    put_u64(out, cfg.seed);
    put_f64(out, cfg.loss_weights.alpha);
    put_f64(out, cfg.loss_weights.beta);
    put_f64(out, cfg.flip_rate);

    const auto tensors = p.named_tensors();
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(out, static_cast<std::uint32_t>(t->shape.size()));
        for (std::size_t dim : t->shape) put_u64(out, dim);
        out.write(reinterpret_cast<const char*>(t->data.data()),
                  static_cast<std::streamsize>(t->data.size() * sizeof(double)));
    }
    if (!out) throw IoError("checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path, int expected_r) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open '" + path + "' for reading");
    char magic[8] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ValidationError("checkpoint: bad magic, not a model checkpoint");
    const std::uint32_t version = get_u32(in);
    if (version != 1)
        throw ValidationError("checkpoint: unsupported format version " + std::to_string(version));

    const int r = static_cast<int>(get_u32(in));
    if (expected_r > 0 && r != expected_r)
        throw ValidationError("checkpoint: stored r=" + std::to_string(r) +
                              " does not match requested r=" + std::to_string(expected_r));

    Checkpoint ck;
    ck.params = make_shell(r);
    const int attn_flag = in.get();
    if (attn_flag < 0) throw ValidationError("checkpoint: truncated file");
    ck.params.use_attention = attn_flag != 0;
    ck.config.epochs = static_cast<int>(get_u32(in));
    ck.config.batch_size = static_cast<int>(get_u32(in));
    ck.config.lr = get_f64(in);
    ck.config.seed = get_u64(in);
    ck.config.loss_weights.alpha = get_f64(in);
    ck.config.loss_weights.beta = get_f64(in);
    ck.config.flip_rate = get_f64(in);
    ck.config.use_attention = ck.params.use_attention;

    auto fields = ck.params.named_tensors();
    const std::uint32_t count = get_u32(in);
    if (count != fields.size())
        throw ValidationError("checkpoint: expected " + std::to_string(fields.size()) +
                              " tensors, found " + std::to_string(count));
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = get_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw ValidationError("checkpoint: truncated file");
        const std::uint32_t ndim = get_u32(in);
        std::vector<std::size_t> dims(ndim);
        for (auto& dim : dims) dim = static_cast<std::size_t>(get_u64(in));

        Tensor* target = nullptr;
        for (auto& [fname, t] : fields)
            if (fname == name) target = t;
        if (!target) throw ValidationError("checkpoint: unknown tensor '" + name + "'");
        if (target->shape != dims)
            throw ValidationError("checkpoint: tensor '" + name + "' has shape " + shape_str(dims) +
                                  ", expected " + shape_str(target->shape));
        in.read(reinterpret_cast<char*>(target->data.data()),
                static_cast<std::streamsize>(target->data.size() * sizeof(double)));
        if (!in) throw ValidationError("checkpoint: truncated file");
    }
    return ck;
}

}  // namespace sarcd
