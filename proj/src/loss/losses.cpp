#include "uwsr/loss/losses.hpp"

#include <algorithm>
#include <cmath>

#include "uwsr/error.hpp"
#include "uwsr/nn/ops.hpp"

namespace uwsr::loss {

void validate(const LossWeights& w) {
    auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!ok(w.l1) || !ok(w.perceptual) || !ok(w.gan)) {
        fail(ErrorCode::InvalidConfig, "loss weights must be finite and non-negative");
    }
    for (double v : w.layers) {
        if (!ok(v)) fail(ErrorCode::InvalidConfig, "perceptual layer weights must be finite and non-negative");
    }
    if (w.l1 <= 0.0 && w.perceptual <= 0.0 && w.gan <= 0.0) {
        fail(ErrorCode::InvalidConfig, "at least one loss weight must be positive");
    }
}

nlohmann::json to_json(const LossWeights& w) {
    return {{"l1", w.l1}, {"perceptual", w.perceptual}, {"perceptual_layers", w.layers}, {"gan", w.gan}};
}

LossWeights loss_weights_from_json(const nlohmann::json& j) {
    LossWeights w;
    try {
        w.l1 = j.value("l1", w.l1);
        w.perceptual = j.value("perceptual", w.perceptual);
        w.layers = j.value("perceptual_layers", w.layers);
        w.gan = j.value("gan", w.gan);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidConfig, std::string("bad loss weights: ") + e.what());
    }
    validate(w);
    return w;
}

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    if (pred.shape() != target.shape()) {
        fail(ErrorCode::ShapeMismatch, "l1_loss: " + nn::shape_string(pred.shape()) + " vs " +
                                           nn::shape_string(target.shape()));
    }
    return nn::l1_mean(pred, target);
}

template <typename T>
Tensor<T> perceptual_loss(const Tensor<T>& pred, const Tensor<T>& target, const nn::VggFeatureExtractor<T>& extractor,
                          const std::array<double, 5>& layers) {
    if (pred.shape() != target.shape()) {
        fail(ErrorCode::ShapeMismatch, "perceptual_loss: " + nn::shape_string(pred.shape()) + " vs " +
                                           nn::shape_string(target.shape()));
    }
    std::vector<Tensor<T>> target_features;
    {
        nn::NoGradGuard no_grad;
        target_features = extractor.forward(target);
    }
    const auto pred_features = extractor.forward(pred);
    std::vector<std::pair<Tensor<T>, T>> terms;
    for (std::size_t k = 0; k < 5; ++k) {
        if (layers[k] == 0.0) continue;
        terms.emplace_back(nn::l1_mean(pred_features[k], target_features[k]), static_cast<T>(layers[k]));
    }
    if (terms.empty()) return Tensor<T>::scalar(T(0));
    return nn::weighted_sum(terms);
}

template <typename T>
Tensor<T> gan_loss_d(const Tensor<T>& logits_real, const Tensor<T>& logits_fake) {
    return nn::add(nn::bce_with_logits_mean(logits_real, T(1)), nn::bce_with_logits_mean(logits_fake, T(0)));
}

template <typename T>
Tensor<T> gan_loss_g(const Tensor<T>& logits_fake) {
    return nn::bce_with_logits_mean(logits_fake, T(1));
}

template <typename T>
GeneratorLoss<T> total_generator_loss(const Tensor<T>& pred, const Tensor<T>& target, const Tensor<T>& logits_fake,
                                      const LossWeights& weights, const nn::VggFeatureExtractor<T>* extractor) {
    validate(weights);
    GeneratorLoss<T> out;
    std::vector<std::pair<Tensor<T>, T>> terms;
    if (weights.l1 > 0.0) {
        auto t = l1_loss(pred, target);
        out.l1 = t.item();
        terms.emplace_back(t, static_cast<T>(weights.l1));
    }
    if (weights.perceptual > 0.0) {
        if (!extractor) fail(ErrorCode::WeightsUnavailable, "perceptual loss needs a feature extractor");
        auto t = perceptual_loss(pred, target, *extractor, weights.layers);
        out.perceptual = t.item();
        terms.emplace_back(t, static_cast<T>(weights.perceptual));
    }
    if (weights.gan > 0.0) {
        if (!logits_fake.defined()) fail(ErrorCode::InvalidConfig, "GAN loss needs discriminator logits");
        auto t = gan_loss_g(logits_fake);
        out.gan = t.item();
        terms.emplace_back(t, static_cast<T>(weights.gan));
    }
    out.total = nn::weighted_sum(terms);
    return out;
}

namespace {

// Separable Gaussian blur with mirrored borders that do not repeat the edge sample.
std::vector<float> gaussian_blur(const std::vector<float>& src, int h, int w, int ksize, double sigma) {
    const int r = ksize / 2;
    std::vector<double> k(static_cast<std::size_t>(ksize));
    double sum = 0;
    for (int i = 0; i < ksize; ++i) sum += k[static_cast<std::size_t>(i)] = std::exp(-0.5 * (i - r) * (i - r) / (sigma * sigma));
    for (double& v : k) v /= sum;
    auto reflect = [](int i, int n) {
        if (n == 1) return 0;
        const int period = 2 * (n - 1);
        i %= period;
        if (i < 0) i += period;
        return i < n ? i : period - i;
    };
    std::vector<float> tmp(src.size()), out(src.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * src[static_cast<std::size_t>(y * w + reflect(x + i, w))];
            tmp[static_cast<std::size_t>(y * w + x)] = static_cast<float>(acc);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * tmp[static_cast<std::size_t>(reflect(y + i, h) * w + x)];
            out[static_cast<std::size_t>(y * w + x)] = static_cast<float>(acc);
        }
    return out;
}

}  // namespace

ImageF usm_sharpen(const ImageF& img, double weight, double threshold) {
    constexpr int ksize = 51;
    constexpr double sigma = 8.0;  // 0.3 * ((ksize - 1) / 2 - 1) + 0.8
    const int h = img.height(), w = img.width();
    ImageF out(img.channels(), h, w);
    for (int c = 0; c < img.channels(); ++c) {
        const auto plane = img.plane(c);
        std::vector<float> src(plane.begin(), plane.end());
        const auto blur = gaussian_blur(src, h, w, ksize, sigma);
        std::vector<float> mask(src.size());
        for (std::size_t i = 0; i < src.size(); ++i) mask[i] = std::abs(src[i] - blur[i]) * 255.0f > threshold ? 1.0f : 0.0f;
        const auto soft = gaussian_blur(mask, h, w, ksize, sigma);
        auto dst = out.plane(c);
        for (std::size_t i = 0; i < src.size(); ++i) {
            const float sharp = std::clamp(src[i] + static_cast<float>(weight) * (src[i] - blur[i]), 0.0f, 1.0f);
            dst[i] = soft[i] * sharp + (1.0f - soft[i]) * src[i];
        }
    }
    return out;
}

#define UWSR_INSTANTIATE_LOSSES(T)                                                                             \
    template Tensor<T> l1_loss(const Tensor<T>&, const Tensor<T>&);                                            \
    template Tensor<T> perceptual_loss(const Tensor<T>&, const Tensor<T>&, const nn::VggFeatureExtractor<T>&,  \
                                       const std::array<double, 5>&);                                          \
    template Tensor<T> gan_loss_d(const Tensor<T>&, const Tensor<T>&);                                         \
    template Tensor<T> gan_loss_g(const Tensor<T>&);                                                           \
    template GeneratorLoss<T> total_generator_loss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                                   const LossWeights&, const nn::VggFeatureExtractor<T>*);

UWSR_INSTANTIATE_LOSSES(float)
UWSR_INSTANTIATE_LOSSES(double)

}  // namespace uwsr::loss
