#include "uwsr/nn/tensor.hpp"

#include <unordered_set>

#include "uwsr/error.hpp"

namespace uwsr::nn {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) fail(ErrorCode::ShapeMismatch, "negative dimension in shape " + shape_string(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
T* TensorImpl<T>::grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad.data();
}

template <typename T>
void TensorImpl<T>::accumulate(const T* g) {
    T* dst = grad_buffer();
    for (std::size_t i = 0; i < data.size(); ++i) dst[i] += g[i];
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : impl_(std::make_shared<TensorImpl<T>>()) {
    impl_->data.assign(numel(shape), fill);
    impl_->shape = std::move(shape);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : impl_(std::make_shared<TensorImpl<T>>()) {
    if (numel(shape) != data.size()) {
        fail(ErrorCode::ShapeMismatch, "shape " + shape_string(shape) + " does not hold " +
                                           std::to_string(data.size()) + " values");
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
}

template <typename T>
Tensor<T> Tensor<T>::from_impl(std::shared_ptr<TensorImpl<T>> impl) {
    Tensor t;
    t.impl_ = std::move(impl);
    return t;
}

template <typename T>
T Tensor<T>::item() const {
    if (impl_->data.size() != 1) fail(ErrorCode::ShapeMismatch, "item() needs a single-element tensor");
    return impl_->data[0];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool on) {
    impl_->requires_grad = on;
    if (!on) impl_->grad.clear();
    return *this;
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
    return Tensor(impl_->shape, impl_->data);
}

template <typename T>
void Tensor<T>::backward() const {
    if (impl_->data.size() != 1) fail(ErrorCode::ShapeMismatch, "backward() needs a scalar output");
    if (!impl_->requires_grad) fail(ErrorCode::InvalidConfig, "backward() on a tensor that does not require grad");

    // Post-order DFS gives inputs before consumers; walk it backwards. The
    // order holds owning pointers because releasing a node frees its inputs.
    std::vector<std::shared_ptr<TensorImpl<T>>> order;
    std::unordered_set<TensorImpl<T>*> seen;
    std::vector<std::pair<std::shared_ptr<TensorImpl<T>>, std::size_t>> stack{{impl_, 0}};
    seen.insert(impl_.get());
    while (!stack.empty()) {
        auto& [t, next] = stack.back();
        if (t->node && next < t->node->inputs.size()) {
            std::shared_ptr<TensorImpl<T>> child = t->node->inputs[next++];
            if (child->requires_grad && seen.insert(child.get()).second) stack.push_back({std::move(child), 0});
            continue;
        }
        order.push_back(std::move(t));
        stack.pop_back();
    }

    impl_->grad.assign(1, T(1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorImpl<T>* t = it->get();
        if (!t->node) continue;
        if (!t->grad.empty()) t->node->backward(*t->node, *t);
        // Interior tensors release their history and gradient once consumed.
        t->node.reset();
        t->grad.clear();
        t->grad.shrink_to_fit();
    }
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, std::vector<Tensor<T>> inputs,
                      std::function<void(Node<T>&, TensorImpl<T>&)> backward) {
    Tensor<T> out(std::move(shape), std::move(data));
    if (!grad_enabled()) return out;
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (!any) return out;
    auto node = std::make_shared<Node<T>>();
    node->inputs.reserve(inputs.size());
    for (const auto& in : inputs) node->inputs.push_back(in.impl());
    node->backward = std::move(backward);
    out.impl()->node = std::move(node);
    out.impl()->requires_grad = true;
    return out;
}

template class Tensor<float>;
template class Tensor<double>;
template struct TensorImpl<float>;
template struct TensorImpl<double>;
template Tensor<float> make_result(Shape, std::vector<float>, std::vector<Tensor<float>>,
                                   std::function<void(Node<float>&, TensorImpl<float>&)>);
template Tensor<double> make_result(Shape, std::vector<double>, std::vector<Tensor<double>>,
                                    std::function<void(Node<double>&, TensorImpl<double>&)>);

}  // namespace uwsr::nn
