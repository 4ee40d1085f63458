#pragma once

#include <array>
#include <utility>
#include <vector>

#include "uwsr/nn/tensor.hpp"

namespace uwsr::nn {

// x: N x C x H x W, weight: O x C x k x k, bias: O or undefined. Zero padding.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride, int padding);

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

// a + scale * b
template <typename T>
Tensor<T> add_scaled(const Tensor<T>& a, const Tensor<T>& b, T scale);

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T scale);

// Concatenates NCHW tensors along the channel axis.
template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int factor);

// Bilinear x2 with half-pixel centres (align_corners = false).
template <typename T>
Tensor<T> upsample_bilinear2x(const Tensor<T>& x);

template <typename T>
Tensor<T> max_pool2x2(const Tensor<T>& x);

// (x[:, c] - mean[c]) / std[c] for a 3-channel batch.
template <typename T>
Tensor<T> normalize_channels(const Tensor<T>& x, const std::array<T, 3>& mean, const std::array<T, 3>& std);

// weight / (u^T W v) with W the weight reshaped to out x rest; u and v are
// treated as constants.
template <typename T>
Tensor<T> spectral_scale(const Tensor<T>& weight, const std::vector<T>& u, const std::vector<T>& v);

// Reductions to a scalar.
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

template <typename T>
Tensor<T> l1_mean(const Tensor<T>& pred, const Tensor<T>& target);

// Mean binary cross-entropy of sigmoid(logits) against a constant label.
template <typename T>
Tensor<T> bce_with_logits_mean(const Tensor<T>& logits, T label);

// sum_i w_i * s_i over scalar tensors.
template <typename T>
Tensor<T> weighted_sum(const std::vector<std::pair<Tensor<T>, T>>& terms);

}  // namespace uwsr::nn
