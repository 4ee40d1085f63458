#pragma once

#include <json.hpp>

#include "uwsr/nn/network.hpp"

namespace uwsr::nn {

struct DiscriminatorConfig {
    int in_channels = 3;
    int num_feat = 64;
    bool skip_connection = true;

    static DiscriminatorConfig tiny() { return {3, 8, true}; }
    friend bool operator==(const DiscriminatorConfig&, const DiscriminatorConfig&) = default;
};

void validate(const DiscriminatorConfig& config);
nlohmann::json to_json(const DiscriminatorConfig& config);
DiscriminatorConfig discriminator_config_from_json(const nlohmann::json& j);

// U-Net discriminator with spectrally normalized conv1..conv8 (keys
// weight_orig, weight_u, weight_v) and plain conv0/conv9 with bias, as in the
// upstream UNetDiscriminatorSN release.
template <typename T>
class Discriminator : public Network<T> {
public:
    explicit Discriminator(const DiscriminatorConfig& config = {});
    std::string architecture() const override { return "unet_discriminator_sn"; }
    const DiscriminatorConfig& config() const { return config_; }

    // N x C x H x W -> N x 1 x H x W logits; H and W must be divisible by 8.
    // In training mode every spectral layer runs one power-iteration step.
    Tensor<T> forward(const Tensor<T>& x);
    void init(Rng& rng);
    // Extra power iterations on every spectral layer, e.g. after loading.
    void warm_start_spectral(int iterations);
    std::vector<SNConv2d<T>*> spectral_layers();

private:
    DiscriminatorConfig config_;
    Conv2d<T> conv0_, conv9_;
    SNConv2d<T> sn_[8];  // conv1 .. conv8
};

extern template class Discriminator<float>;
extern template class Discriminator<double>;

}  // namespace uwsr::nn
