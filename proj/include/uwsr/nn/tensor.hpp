#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace uwsr::nn {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
struct TensorImpl;

template <typename T>
struct Node {
    std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
    // Receives the output (data and grad) and accumulates into inputs' grads.
    std::function<void(Node&, TensorImpl<T>&)> backward;
};

template <typename T>
struct TensorImpl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until something flows into it
    bool requires_grad = false;
    std::shared_ptr<Node<T>> node;  // null for leaves

    void accumulate(const T* g);
    T* grad_buffer();
};

// Dense row-major NCHW tensor with shared storage and optional autograd.
template <typename T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T(0));
    Tensor(Shape shape, std::vector<T> data);

    static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }

    bool defined() const noexcept { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int dim(int i) const { return impl_->shape.at(static_cast<std::size_t>(i)); }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    std::size_t size() const { return impl_->data.size(); }

    T* data() { return impl_->data.data(); }
    const T* data() const { return impl_->data.data(); }
    std::vector<T>& values() { return impl_->data; }
    const std::vector<T>& values() const { return impl_->data; }
    T item() const;

    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    Tensor& set_requires_grad(bool on);
    // Gradient of the last backward pass; empty vector if none reached this tensor.
    const std::vector<T>& grad() const { return impl_->grad; }
    std::vector<T>& grad() { return impl_->grad; }
    void zero_grad() { impl_->grad.clear(); }

    // Copy of the values with no history.
    Tensor detach() const;
    Tensor clone() const { return detach(); }

    // Seeds d(this)/d(this) = 1 (scalar only) and propagates through the graph.
    void backward() const;

    const std::shared_ptr<TensorImpl<T>>& impl() const { return impl_; }
    static Tensor from_impl(std::shared_ptr<TensorImpl<T>> impl);

private:
    std::shared_ptr<TensorImpl<T>> impl_;
};

// Disables graph recording on this thread while alive.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled() noexcept;

// Builds the output of an op: records a node when grad mode is on and any
// input requires grad.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, std::vector<Tensor<T>> inputs,
                      std::function<void(Node<T>&, TensorImpl<T>&)> backward);

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template struct TensorImpl<float>;
extern template struct TensorImpl<double>;

}  // namespace uwsr::nn
