#pragma once

#include <json.hpp>

#include "uwsr/nn/network.hpp"

namespace uwsr::nn {

struct GeneratorConfig {
    int in_channels = 3;
    int out_channels = 3;
    int num_feat = 64;
    int num_block = 23;
    int num_grow_ch = 32;
    int scale = 4;

    static GeneratorConfig tiny() { return {3, 3, 16, 2, 8, 4}; }
    friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

void validate(const GeneratorConfig& config);
nlohmann::json to_json(const GeneratorConfig& config);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

// RRDB x4 generator. Tensor names follow the upstream RRDBNet layout:
// conv_first, body.{i}.rdb{1,2,3}.conv{1..5}, conv_body, conv_up1, conv_up2,
// conv_hr, conv_last.
template <typename T>
class Generator : public Network<T> {
public:
    explicit Generator(const GeneratorConfig& config = {});
    std::string architecture() const override { return "rrdbnet"; }
    const GeneratorConfig& config() const { return config_; }

    // N x C x H x W in [0, 1] -> N x C x 4H x 4W (unclamped).
    Tensor<T> forward(const Tensor<T>& x) const;
    void init(Rng& rng);

private:
    struct DenseBlock {
        Conv2d<T> conv[5];
    };
    struct RRDB {
        DenseBlock rdb[3];
    };
    Tensor<T> dense_block(const DenseBlock& b, const Tensor<T>& x) const;

    GeneratorConfig config_;
    Conv2d<T> conv_first_, conv_body_, conv_up1_, conv_up2_, conv_hr_, conv_last_;
    std::vector<RRDB> body_;
};

extern template class Generator<float>;
extern template class Generator<double>;

}  // namespace uwsr::nn
