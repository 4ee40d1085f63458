#pragma once

#include <array>
#include <filesystem>

#include <json.hpp>

#include "uwsr/nn/network.hpp"

namespace uwsr::nn {

struct VggConfig {
    std::array<int, 5> widths{64, 128, 256, 512, 512};
    std::array<int, 5> convs{2, 2, 4, 4, 4};  // VGG19
    bool use_input_norm = true;              // ImageNet mean/std

    static VggConfig tiny() { return {{8, 8, 16, 16, 16}, {2, 2, 4, 4, 4}, true}; }
    friend bool operator==(const VggConfig&, const VggConfig&) = default;
};

nlohmann::json to_json(const VggConfig& config);
VggConfig vgg_config_from_json(const nlohmann::json& j);

// Frozen VGG feature extractor. Tensors are named features.{index}.weight/bias
// with the torchvision layer indexing, so for VGG19 the taps conv1_2, conv2_2,
// conv3_4, conv4_4, conv5_4 are features.2, 7, 16, 25, 34. Taps are taken
// before the activation; layers after conv5_4 are not built.
template <typename T>
class VggFeatureExtractor : public Network<T> {
public:
    explicit VggFeatureExtractor(const VggConfig& config = {});
    std::string architecture() const override { return "vgg19_features"; }
    const VggConfig& config() const { return config_; }

    // N x 3 x H x W in [0, 1] -> five pre-activation feature maps.
    std::vector<Tensor<T>> forward(const Tensor<T>& x) const;
    void init(Rng& rng);
    std::array<int, 5> tap_indices() const { return taps_; }

private:
    VggConfig config_;
    std::vector<std::vector<Conv2d<T>>> stages_;
    std::array<int, 5> taps_{};
};

extern template class VggFeatureExtractor<float>;
extern template class VggFeatureExtractor<double>;

}  // namespace uwsr::nn
