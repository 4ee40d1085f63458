#include "uwsr/nn/generator.hpp"

#include <cmath>

#include "uwsr/error.hpp"
#include "uwsr/nn/ops.hpp"

namespace uwsr::nn {

namespace {
constexpr double kSlope = 0.2;
constexpr double kResidualScale = 0.2;
}  // namespace

void validate(const GeneratorConfig& c) {
    if (c.scale != 4) fail(ErrorCode::InvalidConfig, "generator scale must be 4");
    if (c.in_channels < 1 || c.out_channels < 1 || c.num_feat < 1 || c.num_block < 1 || c.num_grow_ch < 1) {
        fail(ErrorCode::InvalidConfig, "generator channel and block counts must be positive");
    }
}

nlohmann::json to_json(const GeneratorConfig& c) {
    return {{"in_channels", c.in_channels}, {"out_channels", c.out_channels}, {"num_feat", c.num_feat},
            {"num_block", c.num_block},     {"num_grow_ch", c.num_grow_ch},   {"scale", c.scale}};
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    c.in_channels = j.value("in_channels", c.in_channels);
    c.out_channels = j.value("out_channels", c.out_channels);
    c.num_feat = j.value("num_feat", c.num_feat);
    c.num_block = j.value("num_block", c.num_block);
    c.num_grow_ch = j.value("num_grow_ch", c.num_grow_ch);
    c.scale = j.value("scale", c.scale);
    validate(c);
    return c;
}

template <typename T>
Generator<T>::Generator(const GeneratorConfig& config) : config_(config) {
    validate(config_);
    ConvFactory<T> f(*this);
    const int nf = config_.num_feat, gc = config_.num_grow_ch;
    conv_first_ = f.conv("conv_first", config_.in_channels, nf, 3, 1, 1, true);
    body_.resize(static_cast<std::size_t>(config_.num_block));
    for (int i = 0; i < config_.num_block; ++i) {
        for (int r = 0; r < 3; ++r) {
            auto& b = body_[static_cast<std::size_t>(i)].rdb[r];
            const std::string prefix = "body." + std::to_string(i) + ".rdb" + std::to_string(r + 1) + ".conv";
            for (int k = 0; k < 4; ++k) b.conv[k] = f.conv(prefix + std::to_string(k + 1), nf + k * gc, gc, 3, 1, 1, true);
            b.conv[4] = f.conv(prefix + "5", nf + 4 * gc, nf, 3, 1, 1, true);
        }
    }
    conv_body_ = f.conv("conv_body", nf, nf, 3, 1, 1, true);
    conv_up1_ = f.conv("conv_up1", nf, nf, 3, 1, 1, true);
    conv_up2_ = f.conv("conv_up2", nf, nf, 3, 1, 1, true);
    conv_hr_ = f.conv("conv_hr", nf, nf, 3, 1, 1, true);
    conv_last_ = f.conv("conv_last", nf, config_.out_channels, 3, 1, 1, true);
}

template <typename T>
void Generator<T>::init(Rng& rng) {
    for (Conv2d<T>* c : {&conv_first_, &conv_body_, &conv_up1_, &conv_up2_, &conv_hr_, &conv_last_}) {
        init_uniform_fan_in(c->weight, &c->bias, rng);
    }
    for (auto& block : body_) {
        for (auto& rdb : block.rdb) {
            for (auto& c : rdb.conv) init_kaiming_normal(c.weight, &c.bias, 0.1, rng);
        }
    }
}

template <typename T>
Tensor<T> Generator<T>::dense_block(const DenseBlock& b, const Tensor<T>& x) const {
    const T slope = static_cast<T>(kSlope);
    std::vector<Tensor<T>> feats{x};
    for (int k = 0; k < 4; ++k) feats.push_back(leaky_relu(b.conv[k](concat_channels(feats)), slope));
    const Tensor<T> x5 = b.conv[4](concat_channels(feats));
    return add_scaled(x, x5, static_cast<T>(kResidualScale));
}

template <typename T>
Tensor<T> Generator<T>::forward(const Tensor<T>& x) const {
    if (x.rank() != 4 || x.dim(1) != config_.in_channels) {
        fail(ErrorCode::ShapeMismatch, "generator expects N x " + std::to_string(config_.in_channels) +
                                           " x H x W, got " + shape_string(x.shape()));
    }
    for (T v : x.values()) {
        if (!std::isfinite(static_cast<double>(v))) fail(ErrorCode::NonFiniteInput, "generator input is not finite");
    }
    const T slope = static_cast<T>(kSlope);
    const Tensor<T> feat = conv_first_(x);
    Tensor<T> trunk = feat;
    for (const auto& block : body_) {
        Tensor<T> h = trunk;
        for (const auto& rdb : block.rdb) h = dense_block(rdb, h);
        trunk = add_scaled(trunk, h, static_cast<T>(kResidualScale));
    }
    Tensor<T> out = add(feat, conv_body_(trunk));
    out = leaky_relu(conv_up1_(upsample_nearest(out, 2)), slope);
    out = leaky_relu(conv_up2_(upsample_nearest(out, 2)), slope);
    return conv_last_(leaky_relu(conv_hr_(out), slope));
}

template class Generator<float>;
template class Generator<double>;

}  // namespace uwsr::nn
