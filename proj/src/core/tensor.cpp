#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dira {

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t e : s) {
        if (e < 0) throw ConfigError("tensor shape has negative extent " + std::to_string(e));
        n *= e;
    }
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

namespace {

using Data = std::shared_ptr<detail::TensorData>;

std::vector<float>& grad_of(const Data& d) {
    if (d->grad.empty()) d->grad.assign(d->data.size(), 0.0f);
    return d->grad;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0f, requires_grad);
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
    auto d = std::make_shared<detail::TensorData>();
    const int64_t n = shape_numel(shape);
    d->shape = std::move(shape);
    d->data.assign(static_cast<size_t>(n), value);
    d->requires_grad = requires_grad;
    return Tensor(std::move(d));
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data, bool requires_grad) {
    const int64_t n = shape_numel(shape);
    if (n != static_cast<int64_t>(data.size()))
        throw ConfigError("tensor data length " + std::to_string(data.size()) +
                          " does not match shape " + shape_str(shape));
    auto d = std::make_shared<detail::TensorData>();
    d->shape = std::move(shape);
    d->data = std::move(data);
    d->requires_grad = requires_grad;
    return Tensor(std::move(d));
}

Tensor Tensor::scalar(float value) { return from_data({1}, {value}); }

const std::vector<float>& Tensor::grad() const {
    if (d_->grad.empty()) throw ConfigError("tensor has no gradient (backward not run?)");
    return d_->grad;
}

std::vector<float>& Tensor::grad_buffer() { return grad_of(d_); }

float Tensor::item() const {
    if (numel() != 1) throw ConfigError("item() on tensor of shape " + shape_str(shape()));
    return d_->data[0];
}

Tensor Tensor::clone() const {
    auto d = std::make_shared<detail::TensorData>();
    d->shape = d_->shape;
    d->data = d_->data;
    d->requires_grad = d_->requires_grad;
    return Tensor(std::move(d));
}

// --- tape ---------------------------------------------------------------

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() : prev_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw ConfigError("backward: loss must be a scalar tensor, got shape " +
                          (loss.defined() ? shape_str(loss.shape()) : std::string("<null>")));
    for (auto& n : nodes_) n.output->grad.clear();
    loss.impl()->grad.assign(1, 1.0f);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->step();
}

void backward(const Tensor& loss) {
    Tape* t = Tape::active();
    if (t == nullptr) throw ConfigError("backward: no active tape on this thread");
    t->backward(loss);
}

// --- ops ----------------------------------------------------------------

namespace {

// Records the closure if grads are being traced; marks the output accordingly.
template <typename Fn>
void maybe_record(bool any_input_grad, Tensor& out, Fn&& fn) {
    Tape* t = Tape::active();
    if (t != nullptr && any_input_grad) {
        out.set_requires_grad(true);
        t->record(out.impl(), std::forward<Fn>(fn));
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2)
        throw ConfigError("matmul: expected rank-2 tensors, got " + shape_str(a.shape()) + " and " +
                          shape_str(b.shape()));
    const int64_t m = a.shape()[0], k = a.shape()[1], k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        throw ConfigError("matmul: inner dimensions disagree: " + shape_str(a.shape()) + " x " +
                          shape_str(b.shape()));
    Tensor out = Tensor::zeros({m, n});
    {
        const float* ad = a.data().data();
        const float* bd = b.data().data();
        float* od = out.data().data();
        for (int64_t i = 0; i < m; ++i)
            for (int64_t p = 0; p < k; ++p) {
                const float av = ad[i * k + p];
                if (av == 0.0f) continue;
                const float* brow = bd + p * n;
                float* orow = od + i * n;
                for (int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
            }
    }
    maybe_record(a.requires_grad() || b.requires_grad(), out,
                 [ai = a.impl(), bi = b.impl(), oi = out.impl(), m, k, n] {
                     if (oi->grad.empty()) return;
                     const float* go = oi->grad.data();
                     if (ai->requires_grad) {
                         float* ga = grad_of(ai).data();
                         const float* bd = bi->data.data();
                         // dA = dC * B^T
                         for (int64_t i = 0; i < m; ++i)
                             for (int64_t p = 0; p < k; ++p) {
                                 float acc = 0.0f;
                                 const float* grow = go + i * n;
                                 const float* brow = bd + p * n;
                                 for (int64_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                                 ga[i * k + p] += acc;
                             }
                     }
                     if (bi->requires_grad) {
                         float* gb = grad_of(bi).data();
                         const float* ad = ai->data.data();
                         // dB = A^T * dC
                         for (int64_t i = 0; i < m; ++i) {
                             const float* grow = go + i * n;
                             for (int64_t p = 0; p < k; ++p) {
                                 const float av = ad[i * k + p];
                                 if (av == 0.0f) continue;
                                 float* gbrow = gb + p * n;
                                 for (int64_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
                             }
                         }
                     }
                 });
    return out;
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding) {
    if (stride < 1) throw ConfigError("conv2d: stride must be positive");
    if (padding < 0) throw ConfigError("conv2d: padding must be nonnegative");
    const bool batched = input.shape().size() == 4;
    if (!batched && input.shape().size() != 3)
        throw ConfigError("conv2d: input must be (c,h,w) or (n,c,h,w), got " + shape_str(input.shape()));
    if (kernels.shape().size() != 4)
        throw ConfigError("conv2d: kernels must be (c_out,c_in,kh,kw), got " + shape_str(kernels.shape()));

    const int64_t n = batched ? input.shape()[0] : 1;
    const int64_t ci = input.shape()[batched ? 1 : 0];
    const int64_t h = input.shape()[batched ? 2 : 1];
    const int64_t w = input.shape()[batched ? 3 : 2];
    const int64_t co = kernels.shape()[0], kci = kernels.shape()[1];
    const int64_t kh = kernels.shape()[2], kw = kernels.shape()[3];

    if (ci != kci)
        throw ConfigError("conv2d: input channels " + std::to_string(ci) + " do not match kernel channels " +
                          std::to_string(kci));
    if (kh > h + 2 * padding || kw > w + 2 * padding)
        throw ConfigError("conv2d: kernel " + shape_str(kernels.shape()) + " larger than padded input " +
                          shape_str(input.shape()) + " with padding " + std::to_string(padding));

    const int64_t ho = (h + 2 * padding - kh) / stride + 1;
    const int64_t wo = (w + 2 * padding - kw) / stride + 1;

    Shape out_shape = batched ? Shape{n, co, ho, wo} : Shape{co, ho, wo};
    Tensor out = Tensor::zeros(out_shape);
    {
        const float* in = input.data().data();
        const float* kd = kernels.data().data();
        float* od = out.data().data();
        for (int64_t b = 0; b < n; ++b)
            for (int64_t o = 0; o < co; ++o)
                for (int64_t y = 0; y < ho; ++y)
                    for (int64_t x = 0; x < wo; ++x) {
                        float acc = 0.0f;
                        for (int64_t c = 0; c < ci; ++c)
                            for (int64_t ky = 0; ky < kh; ++ky) {
                                const int64_t iy = y * stride - padding + ky;
                                if (iy < 0 || iy >= h) continue;
                                const float* irow = in + ((b * ci + c) * h + iy) * w;
                                const float* krow = kd + ((o * ci + c) * kh + ky) * kw;
                                for (int64_t kx = 0; kx < kw; ++kx) {
                                    const int64_t ix = x * stride - padding + kx;
                                    if (ix < 0 || ix >= w) continue;
                                    acc += irow[ix] * krow[kx];
                                }
                            }
                        od[((b * co + o) * ho + y) * wo + x] = acc;
                    }
    }
    maybe_record(
        input.requires_grad() || kernels.requires_grad(), out,
        [ii = input.impl(), ki = kernels.impl(), oi = out.impl(), n, ci, h, w, co, kh, kw, ho, wo, stride,
         padding] {
            if (oi->grad.empty()) return;
            const float* go = oi->grad.data();
            const float* in = ii->data.data();
            const float* kd = ki->data.data();
            float* gi = ii->requires_grad ? grad_of(ii).data() : nullptr;
            float* gk = ki->requires_grad ? grad_of(ki).data() : nullptr;
            for (int64_t b = 0; b < n; ++b)
                for (int64_t o = 0; o < co; ++o)
                    for (int64_t y = 0; y < ho; ++y)
                        for (int64_t x = 0; x < wo; ++x) {
                            const float g = go[((b * co + o) * ho + y) * wo + x];
                            if (g == 0.0f) continue;
                            for (int64_t c = 0; c < ci; ++c)
                                for (int64_t ky = 0; ky < kh; ++ky) {
                                    const int64_t iy = y * stride - padding + ky;
                                    if (iy < 0 || iy >= h) continue;
                                    const int64_t ibase = ((b * ci + c) * h + iy) * w;
                                    const int64_t kbase = ((o * ci + c) * kh + ky) * kw;
                                    for (int64_t kx = 0; kx < kw; ++kx) {
                                        const int64_t ix = x * stride - padding + kx;
                                        if (ix < 0 || ix >= w) continue;
                                        if (gk != nullptr) gk[kbase + kx] += g * in[ibase + ix];
                                        if (gi != nullptr) gi[ibase + ix] += g * kd[kbase + kx];
                                    }
                                }
                        }
        });
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    const auto& xd = x.data();
    auto& od = out.data();
    for (size_t i = 0; i < xd.size(); ++i) od[i] = xd[i] > 0.0f ? xd[i] : 0.0f;
    maybe_record(x.requires_grad(), out, [xi = x.impl(), oi = out.impl()] {
        if (oi->grad.empty() || !xi->requires_grad) return;
        float* gx = grad_of(xi).data();
        const float* go = oi->grad.data();
        const float* xd = xi->data.data();
        for (size_t i = 0; i < xi->data.size(); ++i)
            if (xd[i] > 0.0f) gx[i] += go[i];
    });
    return out;
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ConfigError(std::string(op) + ": shapes differ: " + shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out = Tensor::zeros(a.shape());
    for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    maybe_record(a.requires_grad() || b.requires_grad(), out,
                 [ai = a.impl(), bi = b.impl(), oi = out.impl()] {
                     if (oi->grad.empty()) return;
                     const float* go = oi->grad.data();
                     if (ai->requires_grad) {
                         float* g = grad_of(ai).data();
                         for (size_t i = 0; i < ai->data.size(); ++i) g[i] += go[i];
                     }
                     if (bi->requires_grad) {
                         float* g = grad_of(bi).data();
                         for (size_t i = 0; i < bi->data.size(); ++i) g[i] += go[i];
                     }
                 });
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out = Tensor::zeros(a.shape());
    for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
    maybe_record(a.requires_grad() || b.requires_grad(), out,
                 [ai = a.impl(), bi = b.impl(), oi = out.impl()] {
                     if (oi->grad.empty()) return;
                     const float* go = oi->grad.data();
                     if (ai->requires_grad) {
                         float* g = grad_of(ai).data();
                         for (size_t i = 0; i < ai->data.size(); ++i) g[i] += go[i];
                     }
                     if (bi->requires_grad) {
                         float* g = grad_of(bi).data();
                         for (size_t i = 0; i < bi->data.size(); ++i) g[i] -= go[i];
                     }
                 });
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor out = Tensor::zeros(a.shape());
    for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    maybe_record(a.requires_grad() || b.requires_grad(), out,
                 [ai = a.impl(), bi = b.impl(), oi = out.impl()] {
                     if (oi->grad.empty()) return;
                     const float* go = oi->grad.data();
                     if (ai->requires_grad) {
                         float* g = grad_of(ai).data();
                         const float* bd = bi->data.data();
                         for (size_t i = 0; i < ai->data.size(); ++i) g[i] += go[i] * bd[i];
                     }
                     if (bi->requires_grad) {
                         float* g = grad_of(bi).data();
                         const float* ad = ai->data.data();
                         for (size_t i = 0; i < bi->data.size(); ++i) g[i] += go[i] * ad[i];
                     }
                 });
    return out;
}

Tensor scale(const Tensor& x, float s) {
    Tensor out = Tensor::zeros(x.shape());
    for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] = x.data()[i] * s;
    maybe_record(x.requires_grad(), out, [xi = x.impl(), oi = out.impl(), s] {
        if (oi->grad.empty() || !xi->requires_grad) return;
        float* g = grad_of(xi).data();
        const float* go = oi->grad.data();
        for (size_t i = 0; i < xi->data.size(); ++i) g[i] += go[i] * s;
    });
    return out;
}

Tensor sum(const Tensor& x) {
    float acc = 0.0f;
    for (float v : x.data()) acc += v;
    Tensor out = Tensor::scalar(acc);
    maybe_record(x.requires_grad(), out, [xi = x.impl(), oi = out.impl()] {
        if (oi->grad.empty() || !xi->requires_grad) return;
        const float go = oi->grad[0];
        float* g = grad_of(xi).data();
        for (size_t i = 0; i < xi->data.size(); ++i) g[i] += go;
    });
    return out;
}

Tensor reshape(const Tensor& x, Shape new_shape) {
    if (shape_numel(new_shape) != x.numel())
        throw ConfigError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(new_shape));
    Tensor out = Tensor::from_data(std::move(new_shape), x.data());
    maybe_record(x.requires_grad(), out, [xi = x.impl(), oi = out.impl()] {
        if (oi->grad.empty() || !xi->requires_grad) return;
        float* g = grad_of(xi).data();
        const float* go = oi->grad.data();
        for (size_t i = 0; i < xi->data.size(); ++i) g[i] += go[i];
    });
    return out;
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
    if (m.shape().size() != 2 || v.shape().size() != 1 || m.shape()[1] != v.shape()[0])
        throw ConfigError("add_rowvec: shapes " + shape_str(m.shape()) + " and " + shape_str(v.shape()));
    const int64_t rows = m.shape()[0], cols = m.shape()[1];
    Tensor out = Tensor::zeros(m.shape());
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < cols; ++j) out.data()[i * cols + j] = m.data()[i * cols + j] + v.data()[j];
    maybe_record(m.requires_grad() || v.requires_grad(), out,
                 [mi = m.impl(), vi = v.impl(), oi = out.impl(), rows, cols] {
                     if (oi->grad.empty()) return;
                     const float* go = oi->grad.data();
                     if (mi->requires_grad) {
                         float* g = grad_of(mi).data();
                         for (int64_t i = 0; i < rows * cols; ++i) g[i] += go[i];
                     }
                     if (vi->requires_grad) {
                         float* g = grad_of(vi).data();
                         for (int64_t i = 0; i < rows; ++i)
                             for (int64_t j = 0; j < cols; ++j) g[j] += go[i * cols + j];
                     }
                 });
    return out;
}

Tensor add_channel_bias(const Tensor& x, const Tensor& b) {
    if (x.shape().size() != 4 || b.shape().size() != 1 || x.shape()[1] != b.shape()[0])
        throw ConfigError("add_channel_bias: shapes " + shape_str(x.shape()) + " and " + shape_str(b.shape()));
    const int64_t n = x.shape()[0], c = x.shape()[1], hw = x.shape()[2] * x.shape()[3];
    Tensor out = Tensor::zeros(x.shape());
    for (int64_t i = 0; i < n; ++i)
        for (int64_t ch = 0; ch < c; ++ch) {
            const float bias = b.data()[ch];
            const int64_t base = (i * c + ch) * hw;
            for (int64_t k = 0; k < hw; ++k) out.data()[base + k] = x.data()[base + k] + bias;
        }
    maybe_record(x.requires_grad() || b.requires_grad(), out,
                 [xi = x.impl(), bi = b.impl(), oi = out.impl(), n, c, hw] {
                     if (oi->grad.empty()) return;
                     const float* go = oi->grad.data();
                     if (xi->requires_grad) {
                         float* g = grad_of(xi).data();
                         for (size_t i = 0; i < xi->data.size(); ++i) g[i] += go[i];
                     }
                     if (bi->requires_grad) {
                         float* g = grad_of(bi).data();
                         for (int64_t i = 0; i < n; ++i)
                             for (int64_t ch = 0; ch < c; ++ch) {
                                 const int64_t base = (i * c + ch) * hw;
                                 float acc = 0.0f;
                                 for (int64_t k = 0; k < hw; ++k) acc += go[base + k];
                                 g[ch] += acc;
                             }
                     }
                 });
    return out;
}

Tensor global_avg_pool(const Tensor& x) {
    if (x.shape().size() != 4)
        throw ConfigError("global_avg_pool: expected (n,c,h,w), got " + shape_str(x.shape()));
    const int64_t n = x.shape()[0], c = x.shape()[1], hw = x.shape()[2] * x.shape()[3];
    if (hw == 0) throw ConfigError("global_avg_pool: empty spatial extent");
    Tensor out = Tensor::zeros({n, c});
    const float inv = 1.0f / static_cast<float>(hw);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t ch = 0; ch < c; ++ch) {
            const int64_t base = (i * c + ch) * hw;
            float acc = 0.0f;
            for (int64_t k = 0; k < hw; ++k) acc += x.data()[base + k];
            out.data()[i * c + ch] = acc * inv;
        }
    maybe_record(x.requires_grad(), out, [xi = x.impl(), oi = out.impl(), n, c, hw, inv] {
        if (oi->grad.empty() || !xi->requires_grad) return;
        float* g = grad_of(xi).data();
        const float* go = oi->grad.data();
        for (int64_t i = 0; i < n; ++i)
            for (int64_t ch = 0; ch < c; ++ch) {
                const float gv = go[i * c + ch] * inv;
                const int64_t base = (i * c + ch) * hw;
                for (int64_t k = 0; k < hw; ++k) g[base + k] += gv;
            }
    });
    return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.shape().size() != 2)
        throw ConfigError("softmax_cross_entropy: logits must be (n,c), got " + shape_str(logits.shape()));
    const int64_t n = logits.shape()[0], c = logits.shape()[1];
    if (n == 0) throw ConfigError("softmax_cross_entropy: empty batch");
    if (static_cast<int64_t>(labels.size()) != n)
        throw ConfigError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(n) + " rows");
    for (int64_t i = 0; i < n; ++i)
        if (labels[i] < 0 || labels[i] >= c)
            throw ConfigError("softmax_cross_entropy: label " + std::to_string(labels[i]) + " at row " +
                              std::to_string(i) + " outside [0," + std::to_string(c) + ")");

    std::vector<float> probs(static_cast<size_t>(n * c));
    double loss_acc = 0.0;
    const float* ld = logits.data().data();
    for (int64_t i = 0; i < n; ++i) {
        const float* row = ld + i * c;
        float mx = row[0];
        for (int64_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        float denom = 0.0f;
        for (int64_t j = 0; j < c; ++j) {
            const float e = std::exp(row[j] - mx);
            probs[i * c + j] = e;
            denom += e;
        }
        const float inv = 1.0f / denom;
        for (int64_t j = 0; j < c; ++j) probs[i * c + j] *= inv;
        loss_acc += std::log(denom) - (row[labels[i]] - mx);
    }
    Tensor out = Tensor::scalar(static_cast<float>(loss_acc / static_cast<double>(n)));
    maybe_record(logits.requires_grad(), out,
                 [li = logits.impl(), oi = out.impl(), probs = std::move(probs), labels, n, c] {
                     if (oi->grad.empty() || !li->requires_grad) return;
                     const float go = oi->grad[0] / static_cast<float>(n);
                     float* g = grad_of(li).data();
                     for (int64_t i = 0; i < n; ++i) {
                         for (int64_t j = 0; j < c; ++j) g[i * c + j] += go * probs[i * c + j];
                         g[i * c + labels[i]] -= go;
                     }
                 });
    return out;
}

}  // namespace dira
