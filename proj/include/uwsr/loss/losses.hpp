#pragma once

#include <array>

#include <json.hpp>

#include "uwsr/image.hpp"
#include "uwsr/nn/tensor.hpp"
#include "uwsr/nn/vgg.hpp"

namespace uwsr::loss {

using nn::Tensor;

struct LossWeights {
    double l1 = 1.0;
    double perceptual = 1.0;
    std::array<double, 5> layers{0.1, 0.1, 1.0, 1.0, 1.0};  // conv1_2 .. conv5_4
    double gan = 0.1;
};

// Weights must be finite and non-negative with at least one of l1,
// perceptual, gan positive.
void validate(const LossWeights& weights);
nlohmann::json to_json(const LossWeights& weights);
LossWeights loss_weights_from_json(const nlohmann::json& j);

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target);

// sum_k layers[k] * mean|phi_k(pred) - phi_k(target)|; the target branch is
// evaluated without recording a graph.
template <typename T>
Tensor<T> perceptual_loss(const Tensor<T>& pred, const Tensor<T>& target, const nn::VggFeatureExtractor<T>& extractor,
                          const std::array<double, 5>& layers);

// mean BCE(real, 1) + mean BCE(fake, 0).
template <typename T>
Tensor<T> gan_loss_d(const Tensor<T>& logits_real, const Tensor<T>& logits_fake);

// mean BCE(fake, 1).
template <typename T>
Tensor<T> gan_loss_g(const Tensor<T>& logits_fake);

template <typename T>
struct GeneratorLoss {
    Tensor<T> total;
    double l1 = 0.0;
    double perceptual = 0.0;
    double gan = 0.0;  // unweighted gan_loss_g
};

// w_l1 L1 + w_perceptual Perc + w_gan GAN_g. Terms with zero weight are not
// evaluated, so `extractor` may be null when the perceptual weight is 0 and
// `logits_fake` may be undefined when the GAN weight is 0.
template <typename T>
GeneratorLoss<T> total_generator_loss(const Tensor<T>& pred, const Tensor<T>& target, const Tensor<T>& logits_fake,
                                      const LossWeights& weights, const nn::VggFeatureExtractor<T>* extractor);

// Unsharp masking of an HR target: Gaussian blur (kernel 51, sigma 8), a
// residual threshold mask softened by the same blur, sharpened = img + w * residual.
ImageF usm_sharpen(const ImageF& img, double weight = 0.5, double threshold = 10.0);

}  // namespace uwsr::loss
