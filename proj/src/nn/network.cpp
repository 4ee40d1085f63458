#include "uwsr/nn/network.hpp"

#include <cmath>
#include <random>

#include "uwsr/error.hpp"
#include "uwsr/nn/ops.hpp"
#include "uwsr/nn/spectral.hpp"

namespace uwsr::nn {

template <typename T>
std::vector<NamedTensor<T>> Network<T>::parameters() const {
    std::vector<NamedTensor<T>> out;
    for (const auto& e : state_) {
        if (!e.buffer) out.push_back(e);
    }
    return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : state_) {
        if (!e.buffer) n += e.tensor.size();
    }
    return n;
}

template <typename T>
const Tensor<T>& Network<T>::find(const std::string& name) const {
    for (const auto& e : state_) {
        if (e.name == name) return e.tensor;
    }
    fail(ErrorCode::InvalidConfig, architecture() + " has no tensor named '" + name + "'");
}

template <typename T>
void Network<T>::set_requires_grad(bool on) {
    for (auto& e : state_) {
        if (!e.buffer) e.tensor.set_requires_grad(on);
    }
}

template <typename T>
void Network<T>::zero_grad() {
    for (auto& e : state_) e.tensor.zero_grad();
}

template <typename T>
Tensor<T> Network<T>::add_parameter(const std::string& name, Shape shape) {
    Tensor<T> t(std::move(shape));
    t.set_requires_grad(true);
    state_.push_back({name, t, false});
    return t;
}

template <typename T>
Tensor<T> Network<T>::add_buffer(const std::string& name, Shape shape) {
    Tensor<T> t(std::move(shape));
    state_.push_back({name, t, true});
    return t;
}

template <typename T>
Tensor<T> Conv2d<T>::operator()(const Tensor<T>& x) const {
    return conv2d(x, weight, bias, stride, padding);
}

template <typename T>
void SNConv2d<T>::power_iterate(int iterations) {
    const int rows = weight_orig.dim(0);
    const int cols = static_cast<int>(weight_orig.size()) / rows;
    auto est = power_iteration(weight_orig.data(), rows, cols, weight_u.values(), weight_v.values(), iterations);
    weight_u.values() = std::move(est.u);
    weight_v.values() = std::move(est.v);
}

template <typename T>
Tensor<T> SNConv2d<T>::effective_weight(bool update) {
    if (update) power_iterate(1);
    return spectral_scale(weight_orig, weight_u.values(), weight_v.values());
}

template <typename T>
Tensor<T> SNConv2d<T>::operator()(const Tensor<T>& x, bool update) {
    return conv2d(x, effective_weight(update), bias, stride, padding);
}

template <typename T>
Conv2d<T> ConvFactory<T>::conv(const std::string& prefix, int in, int out, int kernel, int stride, int padding,
                               bool bias) {
    Conv2d<T> c;
    c.weight = net_.add_parameter(prefix + ".weight", {out, in, kernel, kernel});
    if (bias) c.bias = net_.add_parameter(prefix + ".bias", {out});
    c.stride = stride;
    c.padding = padding;
    return c;
}

template <typename T>
SNConv2d<T> ConvFactory<T>::sn_conv(const std::string& prefix, int in, int out, int kernel, int stride, int padding) {
    SNConv2d<T> c;
    c.weight_orig = net_.add_parameter(prefix + ".weight_orig", {out, in, kernel, kernel});
    c.weight_u = net_.add_buffer(prefix + ".weight_u", {out});
    c.weight_v = net_.add_buffer(prefix + ".weight_v", {in * kernel * kernel});
    c.stride = stride;
    c.padding = padding;
    return c;
}

template <typename T>
void init_uniform_fan_in(Tensor<T>& weight, Tensor<T>* bias, Rng& rng) {
    const std::size_t fan_in = weight.size() / static_cast<std::size_t>(weight.dim(0));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (T& v : weight.values()) v = static_cast<T>(dist(rng));
    if (bias && bias->defined()) {
        for (T& v : bias->values()) v = static_cast<T>(dist(rng));
    }
}

template <typename T>
void init_kaiming_normal(Tensor<T>& weight, Tensor<T>* bias, double scale, Rng& rng) {
    const std::size_t fan_in = weight.size() / static_cast<std::size_t>(weight.dim(0));
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (T& v : weight.values()) v = static_cast<T>(scale * dist(rng));
    if (bias && bias->defined()) std::fill(bias->values().begin(), bias->values().end(), T(0));
}

template <typename T>
void init_unit_random(Tensor<T>& vec, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (T& v : vec.values()) v = static_cast<T>(dist(rng));
    normalize_vector(vec.values());
}

template class Network<float>;
template class Network<double>;
template struct Conv2d<float>;
template struct Conv2d<double>;
template struct SNConv2d<float>;
template struct SNConv2d<double>;
template class ConvFactory<float>;
template class ConvFactory<double>;
template void init_uniform_fan_in(Tensor<float>&, Tensor<float>*, Rng&);
template void init_uniform_fan_in(Tensor<double>&, Tensor<double>*, Rng&);
template void init_kaiming_normal(Tensor<float>&, Tensor<float>*, double, Rng&);
template void init_kaiming_normal(Tensor<double>&, Tensor<double>*, double, Rng&);
template void init_unit_random(Tensor<float>&, Rng&);
template void init_unit_random(Tensor<double>&, Rng&);

}  // namespace uwsr::nn
