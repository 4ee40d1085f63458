#include "uwsr/nn/discriminator.hpp"

#include "uwsr/error.hpp"
#include "uwsr/nn/ops.hpp"

namespace uwsr::nn {

void validate(const DiscriminatorConfig& c) {
    if (c.in_channels < 1 || c.num_feat < 1) fail(ErrorCode::InvalidConfig, "discriminator sizes must be positive");
}

nlohmann::json to_json(const DiscriminatorConfig& c) {
    return {{"in_channels", c.in_channels}, {"num_feat", c.num_feat}, {"skip_connection", c.skip_connection}};
}

DiscriminatorConfig discriminator_config_from_json(const nlohmann::json& j) {
    DiscriminatorConfig c;
    c.in_channels = j.value("in_channels", c.in_channels);
    c.num_feat = j.value("num_feat", c.num_feat);
    c.skip_connection = j.value("skip_connection", c.skip_connection);
    validate(c);
    return c;
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& config) : config_(config) {
    validate(config_);
    ConvFactory<T> f(*this);
    const int nf = config_.num_feat;
    conv0_ = f.conv("conv0", config_.in_channels, nf, 3, 1, 1, true);
    // downsampling
    sn_[0] = f.sn_conv("conv1", nf, nf * 2, 4, 2, 1);
    sn_[1] = f.sn_conv("conv2", nf * 2, nf * 4, 4, 2, 1);
    sn_[2] = f.sn_conv("conv3", nf * 4, nf * 8, 4, 2, 1);
    // upsampling
    sn_[3] = f.sn_conv("conv4", nf * 8, nf * 4, 3, 1, 1);
    sn_[4] = f.sn_conv("conv5", nf * 4, nf * 2, 3, 1, 1);
    sn_[5] = f.sn_conv("conv6", nf * 2, nf, 3, 1, 1);
    // extra convolutions
    sn_[6] = f.sn_conv("conv7", nf, nf, 3, 1, 1);
    sn_[7] = f.sn_conv("conv8", nf, nf, 3, 1, 1);
    conv9_ = f.conv("conv9", nf, 1, 3, 1, 1, true);
}

template <typename T>
void Discriminator<T>::init(Rng& rng) {
    init_uniform_fan_in(conv0_.weight, &conv0_.bias, rng);
    for (auto& c : sn_) {
        init_uniform_fan_in<T>(c.weight_orig, nullptr, rng);
        init_unit_random(c.weight_u, rng);
        init_unit_random(c.weight_v, rng);
    }
    init_uniform_fan_in(conv9_.weight, &conv9_.bias, rng);
}

template <typename T>
void Discriminator<T>::warm_start_spectral(int iterations) {
    for (auto& c : sn_) c.power_iterate(iterations);
}

template <typename T>
std::vector<SNConv2d<T>*> Discriminator<T>::spectral_layers() {
    std::vector<SNConv2d<T>*> out;
    for (auto& c : sn_) out.push_back(&c);
    return out;
}

template <typename T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& x) {
    if (x.rank() != 4 || x.dim(1) != config_.in_channels) {
        fail(ErrorCode::ShapeMismatch, "discriminator expects N x " + std::to_string(config_.in_channels) +
                                           " x H x W, got " + shape_string(x.shape()));
    }
    if (x.dim(2) % 8 != 0 || x.dim(3) % 8 != 0) {
        fail(ErrorCode::IndivisibleDims, "discriminator input " + std::to_string(x.dim(3)) + "x" +
                                             std::to_string(x.dim(2)) + " is not divisible by 8");
    }
    const bool update = this->training();
    const T slope = T(0.2);
    auto act = [slope](const Tensor<T>& t) { return leaky_relu(t, slope); };

    const Tensor<T> x0 = act(conv0_(x));
    const Tensor<T> x1 = act(sn_[0](x0, update));
    const Tensor<T> x2 = act(sn_[1](x1, update));
    const Tensor<T> x3 = act(sn_[2](x2, update));

    Tensor<T> x4 = act(sn_[3](upsample_bilinear2x(x3), update));
    if (config_.skip_connection) x4 = add(x4, x2);
    Tensor<T> x5 = act(sn_[4](upsample_bilinear2x(x4), update));
    if (config_.skip_connection) x5 = add(x5, x1);
    Tensor<T> x6 = act(sn_[5](upsample_bilinear2x(x5), update));
    if (config_.skip_connection) x6 = add(x6, x0);

    Tensor<T> out = act(sn_[6](x6, update));
    out = act(sn_[7](out, update));
    return conv9_(out);
}

template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace uwsr::nn
