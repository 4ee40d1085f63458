#include "uwsr/nn/vgg.hpp"

#include "uwsr/error.hpp"
#include "uwsr/nn/ops.hpp"

namespace uwsr::nn {

nlohmann::json to_json(const VggConfig& c) {
    return {{"widths", c.widths}, {"convs", c.convs}, {"use_input_norm", c.use_input_norm}};
}

VggConfig vgg_config_from_json(const nlohmann::json& j) {
    VggConfig c;
    if (j.contains("widths")) c.widths = j.at("widths").get<std::array<int, 5>>();
    if (j.contains("convs")) c.convs = j.at("convs").get<std::array<int, 5>>();
    c.use_input_norm = j.value("use_input_norm", c.use_input_norm);
    for (int i = 0; i < 5; ++i) {
        if (c.widths[static_cast<std::size_t>(i)] < 1 || c.convs[static_cast<std::size_t>(i)] < 1) {
            fail(ErrorCode::InvalidConfig, "VGG stage widths and conv counts must be positive");
        }
    }
    return c;
}

template <typename T>
VggFeatureExtractor<T>::VggFeatureExtractor(const VggConfig& config) : config_(config) {
    ConvFactory<T> f(*this);
    int index = 0, in = 3;
    for (int s = 0; s < 5; ++s) {
        std::vector<Conv2d<T>> stage;
        const int width = config_.widths[static_cast<std::size_t>(s)];
        for (int k = 0; k < config_.convs[static_cast<std::size_t>(s)]; ++k) {
            stage.push_back(f.conv("features." + std::to_string(index), in, width, 3, 1, 1, true));
            taps_[static_cast<std::size_t>(s)] = index;
            index += 2;  // conv, relu
            in = width;
        }
        ++index;  // max pool
        stages_.push_back(std::move(stage));
    }
    this->set_requires_grad(false);
    this->set_training(false);
}

template <typename T>
void VggFeatureExtractor<T>::init(Rng& rng) {
    for (auto& stage : stages_) {
        for (auto& c : stage) init_kaiming_normal(c.weight, &c.bias, 1.0, rng);
    }
}

template <typename T>
std::vector<Tensor<T>> VggFeatureExtractor<T>::forward(const Tensor<T>& x) const {
    if (x.rank() != 4 || x.dim(1) != 3) {
        fail(ErrorCode::ShapeMismatch, "feature extractor expects N x 3 x H x W, got " + shape_string(x.shape()));
    }
    Tensor<T> h = x;
    if (config_.use_input_norm) {
        h = normalize_channels<T>(h, {T(0.485), T(0.456), T(0.406)}, {T(0.229), T(0.224), T(0.225)});
    }
    std::vector<Tensor<T>> taps;
    for (std::size_t s = 0; s < stages_.size(); ++s) {
        if (s > 0) h = max_pool2x2(h);
        const auto& stage = stages_[s];
        for (std::size_t k = 0; k < stage.size(); ++k) {
            h = stage[k](h);
            if (k + 1 == stage.size()) taps.push_back(h);
            if (k + 1 < stage.size() || s + 1 < stages_.size()) h = relu(h);
        }
    }
    return taps;
}

template class VggFeatureExtractor<float>;
template class VggFeatureExtractor<double>;

}  // namespace uwsr::nn
