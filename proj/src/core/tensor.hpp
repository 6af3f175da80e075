#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "error.hpp"

namespace dira {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {
struct TensorData {
    Shape shape;
    std::vector<float> data;
    std::vector<float> grad;  // empty means "not allocated"
    bool requires_grad = false;
};
}  // namespace detail

/// Dense row-major float32 tensor. Value-semantic handle: copies share storage,
/// clone() makes a deep copy. Gradients live beside the data and accumulate
/// across backward passes until zero_grad().
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, float value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<float> data, bool requires_grad = false);
    static Tensor scalar(float value);

    bool defined() const { return d_ != nullptr; }
    const Shape& shape() const { return d_->shape; }
    int64_t numel() const { return static_cast<int64_t>(d_->data.size()); }

    bool requires_grad() const { return d_->requires_grad; }
    void set_requires_grad(bool v) { d_->requires_grad = v; }

    std::vector<float>& data() { return d_->data; }
    const std::vector<float>& data() const { return d_->data; }

    bool has_grad() const { return !d_->grad.empty(); }
    const std::vector<float>& grad() const;
    /// Grad buffer, zero-allocated on first use.
    std::vector<float>& grad_buffer();
    void zero_grad() { d_->grad.clear(); }

    /// Value of a single-element tensor.
    float item() const;

    /// Deep copy; never participates in any tape.
    Tensor clone() const;

    bool same_storage(const Tensor& other) const { return d_ == other.d_; }

    std::shared_ptr<detail::TensorData> impl() const { return d_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorData> d) : d_(std::move(d)) {}
    std::shared_ptr<detail::TensorData> d_;
};

/// Define-by-run gradient tape. Constructing a Tape makes it the active tape
/// for the current thread; destruction restores the previous one. Ops record
/// onto the active tape whenever an input requires gradients, so a forward
/// pass with no live Tape runs in inference mode.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    void record(std::shared_ptr<detail::TensorData> output, std::function<void()> backward_step) {
        nodes_.push_back({std::move(output), std::move(backward_step)});
    }
    size_t size() const { return nodes_.size(); }

    /// Reverse sweep from a scalar loss. Leaf gradients accumulate across
    /// sweeps; gradients of tensors produced on this tape are reset first.
    void backward(const Tensor& loss);

private:
    struct Node {
        std::shared_ptr<detail::TensorData> output;
        std::function<void()> step;
    };
    std::vector<Node> nodes_;
    Tape* prev_ = nullptr;
};

/// backward() on the active tape.
void backward(const Tensor& loss);

// --- differentiable ops ------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);

/// Cross-correlation (no kernel flip). Input is (c,h,w) or (n,c,h,w);
/// kernels are (c_out,c_in,kh,kw). Output spatial extents follow
/// floor((h + 2*padding - kh)/stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding);

Tensor relu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);  // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& x, float s);
Tensor sum(const Tensor& x);  // -> shape {1}
Tensor reshape(const Tensor& x, Shape new_shape);
Tensor add_rowvec(const Tensor& m, const Tensor& v);         // (n,c) + (c)
Tensor add_channel_bias(const Tensor& x, const Tensor& b);   // (n,c,h,w) + (c)
Tensor global_avg_pool(const Tensor& x);                     // (n,c,h,w) -> (n,c)

/// Mean over the batch of -log softmax(logits)[label]; rows stabilized by
/// max subtraction before exponentiation.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace dira
