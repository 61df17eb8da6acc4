#include "sarcd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "sarcd/common.hpp"

namespace sarcd {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> s)
    : shape(std::move(s)), data(shape_numel(shape), 0.0) {}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
    grad.assign(data.size(), 0.0);
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int padding) {
    require(input.shape.size() == 3, "conv2d: input must be C_in x H x W, got " + shape_str(input.shape));
    require(kernel.shape.size() == 4, "conv2d: kernel must be C_out x C_in x k x k, got " + shape_str(kernel.shape));
    const std::size_t cin = input.shape[0], h = input.shape[1], w = input.shape[2];
    const std::size_t cout = kernel.shape[0];
    const std::size_t k = kernel.shape[2];
    require(kernel.shape[1] == cin,
            "conv2d: channel mismatch, input " + shape_str(input.shape) + " vs kernel " + shape_str(kernel.shape));
    require(kernel.shape[3] == k, "conv2d: kernel window must be square, got " + shape_str(kernel.shape));
    require(k == 1 || k == 3, "conv2d: kernel size must be 1 or 3");
    require(padding == static_cast<int>(k - 1) / 2, "conv2d: padding must be (k-1)/2 for same-size output");
    require(bias.shape.size() == 1 && bias.shape[0] == cout,
            "conv2d: bias must have one entry per output channel");

    const std::size_t pad = static_cast<std::size_t>(padding);
    const std::size_t ph = h + 2 * pad, pw = w + 2 * pad;

    // Padded copy only when needed; k=1 runs on the raw buffer.
    std::vector<double> padded;
    const double* src_base = input.data.data();
    std::size_t src_h = h, src_w = w;
    if (pad > 0) {
        padded.assign(cin * ph * pw, 0.0);
        for (std::size_t ci = 0; ci < cin; ++ci)
            for (std::size_t y = 0; y < h; ++y)
                std::memcpy(padded.data() + (ci * ph + y + pad) * pw + pad,
                            input.data.data() + (ci * h + y) * w, w * sizeof(double));
        src_base = padded.data();
        src_h = ph;
        src_w = pw;
    }

    Tensor out({cout, h, w});
    const std::size_t hw = h * w;
    for (std::size_t co = 0; co < cout; ++co) {
        double* out_c = out.data.data() + co * hw;
        std::fill(out_c, out_c + hw, bias.data[co]);
        for (std::size_t ci = 0; ci < cin; ++ci) {
            const double* ker_c = kernel.data.data() + (co * cin + ci) * k * k;
            if (k == 1) {
                const double wgt = ker_c[0];
                const double* in_c = src_base + ci * hw;
                for (std::size_t i = 0; i < hw; ++i) out_c[i] += wgt * in_c[i];
                continue;
            }
            // k == 3: all nine taps fused per output element.
            const double k00 = ker_c[0], k01 = ker_c[1], k02 = ker_c[2];
            const double k10 = ker_c[3], k11 = ker_c[4], k12 = ker_c[5];
            const double k20 = ker_c[6], k21 = ker_c[7], k22 = ker_c[8];
            const double* in_c = src_base + ci * src_h * src_w;
            for (std::size_t y = 0; y < h; ++y) {
                const double* r0 = in_c + y * src_w;
                const double* r1 = r0 + src_w;
                const double* r2 = r1 + src_w;
                double* dst = out_c + y * w;
                for (std::size_t x = 0; x < w; ++x) {
                    dst[x] += k00 * r0[x] + k01 * r0[x + 1] + k02 * r0[x + 2] +
                              k10 * r1[x] + k11 * r1[x + 1] + k12 * r1[x + 2] +
                              k20 * r2[x] + k21 * r2[x + 1] + k22 * r2[x + 2];
                }
            }
        }
    }
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel,
                            const Tensor& upstream, int padding, bool need_input_grad) {
    require(input.shape.size() == 3 && kernel.shape.size() == 4,
            "conv2d_backward: forward shapes missing or malformed");
    const std::size_t cin = input.shape[0], h = input.shape[1], w = input.shape[2];
    const std::size_t cout = kernel.shape[0];
    const std::size_t k = kernel.shape[2];
    require(upstream.shape.size() == 3 && upstream.shape[0] == cout &&
                upstream.shape[1] == h && upstream.shape[2] == w,
            "conv2d_backward: upstream gradient shape " + shape_str(upstream.shape) +
                " does not match forward output");
    require(padding == static_cast<int>(k - 1) / 2, "conv2d_backward: padding must be (k-1)/2");

    const std::size_t pad = static_cast<std::size_t>(padding);
    const std::size_t ph = h + 2 * pad, pw = w + 2 * pad;

    std::vector<double> padded;
    const double* src_base = input.data.data();
    std::size_t src_w = w;
    if (pad > 0) {
        padded.assign(cin * ph * pw, 0.0);
        for (std::size_t ci = 0; ci < cin; ++ci)
            for (std::size_t y = 0; y < h; ++y)
                std::memcpy(padded.data() + (ci * ph + y + pad) * pw + pad,
                            input.data.data() + (ci * h + y) * w, w * sizeof(double));
        src_base = padded.data();
        src_w = pw;
    }

    Conv2dGrads g;
    g.kernel = Tensor(kernel.shape);
    g.bias = Tensor({cout});
    const std::size_t hw = h * w;

    for (std::size_t co = 0; co < cout; ++co) {
        const double* up_c = upstream.data.data() + co * hw;
        double acc = 0.0;
        for (std::size_t i = 0; i < hw; ++i) acc += up_c[i];
        g.bias.data[co] = acc;
        for (std::size_t ci = 0; ci < cin; ++ci) {
            double* gk_c = g.kernel.data.data() + (co * cin + ci) * k * k;
            if (k == 1) {
                const double* in_c = src_base + ci * hw;
                double s = 0.0;
                for (std::size_t i = 0; i < hw; ++i) s += up_c[i] * in_c[i];
                gk_c[0] = s;
                continue;
            }
            const double* in_c = src_base + ci * ph * pw;
            double a00 = 0, a01 = 0, a02 = 0, a10 = 0, a11 = 0, a12 = 0, a20 = 0, a21 = 0, a22 = 0;
            for (std::size_t y = 0; y < h; ++y) {
                const double* r0 = in_c + y * pw;
                const double* r1 = r0 + pw;
                const double* r2 = r1 + pw;
                const double* up_row = up_c + y * w;
                for (std::size_t x = 0; x < w; ++x) {
                    const double u = up_row[x];
                    a00 += u * r0[x];
                    a01 += u * r0[x + 1];
                    a02 += u * r0[x + 2];
                    a10 += u * r1[x];
                    a11 += u * r1[x + 1];
                    a12 += u * r1[x + 2];
                    a20 += u * r2[x];
                    a21 += u * r2[x + 1];
                    a22 += u * r2[x + 2];
                }
            }
            gk_c[0] = a00; gk_c[1] = a01; gk_c[2] = a02;
            gk_c[3] = a10; gk_c[4] = a11; gk_c[5] = a12;
            gk_c[6] = a20; gk_c[7] = a21; gk_c[8] = a22;
        }
    }

    if (need_input_grad) {
        g.input = Tensor(input.shape);
        if (k == 1) {
            for (std::size_t ci = 0; ci < cin; ++ci) {
                double* din_c = g.input.data.data() + ci * hw;
                for (std::size_t co = 0; co < cout; ++co) {
                    const double wgt = kernel.data[co * cin + ci];
                    const double* up_c = upstream.data.data() + co * hw;
                    for (std::size_t i = 0; i < hw; ++i) din_c[i] += wgt * up_c[i];
                }
            }
            return g;
        }
        // Gather form: correlate the padded upstream with the 180-degree
        // rotated kernel, channels transposed.
        std::vector<double> up_pad(cout * ph * pw, 0.0);
        for (std::size_t co = 0; co < cout; ++co)
            for (std::size_t y = 0; y < h; ++y)
                std::memcpy(up_pad.data() + (co * ph + y + pad) * pw + pad,
                            upstream.data.data() + (co * h + y) * w, w * sizeof(double));
        for (std::size_t ci = 0; ci < cin; ++ci) {
            double* din_c = g.input.data.data() + ci * hw;
            for (std::size_t co = 0; co < cout; ++co) {
                const double* ker_c = kernel.data.data() + (co * cin + ci) * 9;
                const double k00 = ker_c[8], k01 = ker_c[7], k02 = ker_c[6];
                const double k10 = ker_c[5], k11 = ker_c[4], k12 = ker_c[3];
                const double k20 = ker_c[2], k21 = ker_c[1], k22 = ker_c[0];
                const double* up_c = up_pad.data() + co * ph * pw;
                for (std::size_t y = 0; y < h; ++y) {
                    const double* r0 = up_c + y * pw;
                    const double* r1 = r0 + pw;
                    const double* r2 = r1 + pw;
                    double* dst = din_c + y * w;
                    for (std::size_t x = 0; x < w; ++x) {
                        dst[x] += k00 * r0[x] + k01 * r0[x + 1] + k02 * r0[x + 2] +
                                  k10 * r1[x] + k11 * r1[x + 1] + k12 * r1[x + 2] +
                                  k20 * r2[x] + k21 * r2[x + 1] + k22 * r2[x + 2];
                    }
                }
            }
        }
    }
    return g;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.shape.size() == 2 && b.shape.size() == 2,
            "matmul: operands must be rank-2, got " + shape_str(a.shape) + " and " + shape_str(b.shape));
    const std::size_t m = a.shape[0], k = a.shape[1];
    require(b.shape[0] == k,
            "matmul: inner dimensions disagree, " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    const std::size_t n = b.shape[1];
    Tensor c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a.data.data() + i * k;
        double* crow = c.data.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += arow[t] * b.data[t * n + j];
            crow[j] = acc;
        }
    }
    return c;
}

MatmulGrads matmul_backward(const Tensor& a, const Tensor& b, const Tensor& upstream) {
    require(upstream.shape.size() == 2 && upstream.shape[0] == a.shape[0] &&
                upstream.shape[1] == b.shape[1],
            "matmul_backward: upstream shape does not match forward output");
    MatmulGrads g;
    g.a = matmul(upstream, transpose2d(b));
    g.b = matmul(transpose2d(a), upstream);
    return g;
}

Tensor transpose2d(const Tensor& x) {
    require(x.shape.size() == 2, "transpose2d: rank-2 tensor required");
    const std::size_t m = x.shape[0], n = x.shape[1];
    Tensor t({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) t.data[j * m + i] = x.data[i * n + j];
    return t;
}

Tensor softmax_rows(const Tensor& x) {
    require(x.shape.size() == 2, "softmax_rows: rank-2 tensor required");
    const std::size_t m = x.shape[0], n = x.shape[1];
    require(n > 0, "softmax_rows: empty rows");
    Tensor out(x.shape);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = x.data.data() + i * n;
        double* orow = out.data.data() + i * n;
        double mx = row[0];
        for (std::size_t j = 0; j < n; ++j) {
            if (std::isnan(row[j])) throw NumericError("softmax_rows: NaN input");
            mx = std::max(mx, row[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        for (std::size_t j = 0; j < n; ++j) orow[j] /= sum;
    }
    return out;
}

Tensor softmax_rows_backward(const Tensor& output, const Tensor& upstream) {
    require(output.shape == upstream.shape, "softmax_rows_backward: shape mismatch");
    const std::size_t m = output.shape[0], n = output.shape[1];
    Tensor dx(output.shape);
    for (std::size_t i = 0; i < m; ++i) {
        const double* y = output.data.data() + i * n;
        const double* dy = upstream.data.data() + i * n;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
        double* row = dx.data.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) row[j] = y[j] * (dy[j] - dot);
    }
    return dx;
}

Tensor relu(const Tensor& x) {
    Tensor out(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
    require(input.shape == upstream.shape, "relu_backward: shape mismatch");
    Tensor dx(input.shape);
    for (std::size_t i = 0; i < input.data.size(); ++i)
        dx.data[i] = input.data[i] > 0.0 ? upstream.data[i] : 0.0;
    return dx;
}

Tensor reshape(const Tensor& x, std::vector<std::size_t> new_shape) {
    require(shape_numel(new_shape) == x.numel(),
            "reshape: element count mismatch, " + shape_str(x.shape) + " -> " + shape_str(new_shape));
    Tensor out;
    out.shape = std::move(new_shape);
    out.data = x.data;
    return out;
}

AdamState adam_init(std::span<const Tensor* const> params, double lr,
                    double beta1, double beta2, double eps) {
    AdamState st;
    st.lr = lr;
    st.beta1 = beta1;
    st.beta2 = beta2;
    st.eps = eps;
    st.first_moment.reserve(params.size());
    st.second_moment.reserve(params.size());
    for (const Tensor* t : params) {
        st.first_moment.emplace_back(t->numel(), 0.0);
        st.second_moment.emplace_back(t->numel(), 0.0);
    }
    return st;
}

void adam_step(std::span<Tensor* const> params, AdamState& state) {
    require(params.size() == state.first_moment.size(),
            "adam_step: state does not match parameter group count");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        require(p.grad.size() == p.data.size(), "adam_step: gradient buffer missing or mismatched");
        auto& m = state.first_moment[pi];
        auto& v = state.second_moment[pi];
        require(m.size() == p.data.size(), "adam_step: moment buffer shape mismatch");
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const double g = p.grad[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

double relative_gap(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

double grad_check(const std::function<double()>& f, std::span<double> params,
                  std::span<const double> analytic, double h,
                  std::size_t offset, std::size_t stride) {
    require(params.size() == analytic.size(), "grad_check: analytic gradient size mismatch");
    require(h > 0, "grad_check: step must be positive");
    require(stride >= 1, "grad_check: stride must be at least 1");
    double worst = 0.0;
    for (std::size_t i = offset; i < params.size(); i += stride) {
        const double saved = params[i];
        params[i] = saved + h;
        const double fp = f();
        params[i] = saved - h;
        const double fm = f();
        params[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("grad_check: non-finite function value");
        const double numeric = (fp - fm) / (2.0 * h);
        worst = std::max(worst, relative_gap(analytic[i], numeric));
    }
    return worst;
}

}  // namespace sarcd
