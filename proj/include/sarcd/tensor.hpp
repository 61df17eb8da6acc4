#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sarcd {

/// Dense row-major tensor of doubles with an optional same-shape gradient
/// buffer. All kernels below are deterministic: fixed summation order, so
/// identical inputs give bit-identical outputs.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until ensure_grad()

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

    std::size_t numel() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    void ensure_grad();
    void zero_grad();
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);

// --- 2-D convolution (cross-correlation, "same" output size) ---
//
// input  C_in x H x W, kernel C_out x C_in x k x k with k in {1,3},
// padding must equal (k-1)/2 so the spatial size is preserved.
// Accumulation order per output element: ci, then ky, kx.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int padding);

struct Conv2dGrads {
    Tensor input;   // empty when need_input_grad is false
    Tensor kernel;
    Tensor bias;
};

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel,
                            const Tensor& upstream, int padding,
                            bool need_input_grad = true);

// --- matrix multiply ---
Tensor matmul(const Tensor& a, const Tensor& b);  // (M x K) * (K x N)

struct MatmulGrads {
    Tensor a;  // dY * B^T
    Tensor b;  // A^T * dY
};
MatmulGrads matmul_backward(const Tensor& a, const Tensor& b, const Tensor& upstream);

Tensor transpose2d(const Tensor& x);

// --- row softmax ---
// Per row: subtract max, exponentiate, normalize. Rows sum to 1 within 1e-12.
Tensor softmax_rows(const Tensor& x);
// `output` is the forward result for the same input.
Tensor softmax_rows_backward(const Tensor& output, const Tensor& upstream);

// --- ReLU ---
Tensor relu(const Tensor& x);
// Gradient at exactly 0 is 0.
Tensor relu_backward(const Tensor& input, const Tensor& upstream);

// --- reshape ---
// Same data, new shape; element counts must agree.
Tensor reshape(const Tensor& x, std::vector<std::size_t> new_shape);

// --- Adam ---
struct AdamState {
    long long step = 0;
    std::vector<std::vector<double>> first_moment;   // one buffer per parameter tensor
    std::vector<std::vector<double>> second_moment;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState adam_init(std::span<const Tensor* const> params, double lr,
                    double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// One optimizer step over all parameter tensors; reads each tensor's grad.
void adam_step(std::span<Tensor* const> params, AdamState& state);

// --- finite-difference gradient checking ---
//
// Central differences (f(p+h) - f(p-h)) / 2h against `analytic`, element by
// element, perturbing `params` in place. Returns the max of
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
// `offset`/`stride` select a subset of elements so callers can split the
// work; the default covers every element.
double grad_check(const std::function<double()>& f, std::span<double> params,
                  std::span<const double> analytic, double h,
                  std::size_t offset = 0, std::size_t stride = 1);

double relative_gap(double analytic, double numeric);

}  // namespace sarcd
