#pragma once

#include <string>
#include <vector>

#include "uwsr/nn/tensor.hpp"
#include "uwsr/random.hpp"

namespace uwsr::nn {

template <typename T>
struct NamedTensor {
    std::string name;
    Tensor<T> tensor;
    bool buffer = false;  // persistent state that is not optimized
};

// Flat registry of named parameters and buffers shared by every network.
template <typename T>
class Network {
public:
    Network() = default;
    Network(const Network&) = delete;  // layers hold handles into the registry
    Network& operator=(const Network&) = delete;
    virtual ~Network() = default;
    virtual std::string architecture() const = 0;

    const std::vector<NamedTensor<T>>& state() const { return state_; }
    std::vector<NamedTensor<T>> parameters() const;
    std::size_t parameter_count() const;
    const Tensor<T>& find(const std::string& name) const;

    void set_requires_grad(bool on);
    void zero_grad();
    void set_training(bool on) { training_ = on; }
    bool training() const { return training_; }

    Tensor<T> add_parameter(const std::string& name, Shape shape);
    Tensor<T> add_buffer(const std::string& name, Shape shape);

private:
    std::vector<NamedTensor<T>> state_;
    bool training_ = true;
};

template <typename T>
struct Conv2d {
    Tensor<T> weight;
    Tensor<T> bias;  // undefined when the layer has none
    int stride = 1;
    int padding = 1;

    Tensor<T> operator()(const Tensor<T>& x) const;
};

// Convolution whose effective weight is weight_orig / sigma, sigma estimated
// by power iteration with persistent weight_u and weight_v buffers.
template <typename T>
struct SNConv2d {
    Tensor<T> weight_orig;
    Tensor<T> weight_u;
    Tensor<T> weight_v;
    Tensor<T> bias;
    int stride = 1;
    int padding = 1;

    // One power-iteration step updates u and v first when `update` is set.
    Tensor<T> operator()(const Tensor<T>& x, bool update);
    Tensor<T> effective_weight(bool update);
    void power_iterate(int iterations);
};

// Registers "<prefix>.weight" and optionally "<prefix>.bias".
template <typename T>
class ConvFactory {
public:
    explicit ConvFactory(Network<T>& net) : net_(net) {}
    Conv2d<T> conv(const std::string& prefix, int in, int out, int kernel, int stride, int padding, bool bias);
    SNConv2d<T> sn_conv(const std::string& prefix, int in, int out, int kernel, int stride, int padding);

private:
    Network<T>& net_;
};

// Parameter initializers. Uniform bound 1/sqrt(fan_in) is the default for
// plain convolutions; scaled Kaiming-normal is used inside residual blocks.
template <typename T>
void init_uniform_fan_in(Tensor<T>& weight, Tensor<T>* bias, Rng& rng);
template <typename T>
void init_kaiming_normal(Tensor<T>& weight, Tensor<T>* bias, double scale, Rng& rng);
template <typename T>
void init_unit_random(Tensor<T>& vec, Rng& rng);

}  // namespace uwsr::nn
