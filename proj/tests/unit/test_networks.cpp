#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>

#include "gradcheck.hpp"
#include "uwsr/error.hpp"
#include "uwsr/nn/checkpoint.hpp"
#include "uwsr/nn/discriminator.hpp"
#include "uwsr/nn/generator.hpp"
#include "uwsr/nn/ops.hpp"
#include "uwsr/nn/spectral.hpp"
#include "uwsr/nn/torch_import.hpp"
#include "uwsr/nn/vgg.hpp"

using namespace uwsr;
using namespace uwsr::nn;
namespace fs = std::filesystem;

namespace {

template <typename T>
Tensor<T> rand_tensor(Shape shape, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor<T> t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<T>(u(rng));
    return t;
}

double largest_singular_value(const std::vector<double>& w, int rows, int cols) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(w.data(), rows, cols);
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

std::vector<std::pair<std::string, Tensor<double>>> all_parameters(const Network<double>& net) {
    std::vector<std::pair<std::string, Tensor<double>>> out;
    for (const auto& p : net.parameters()) out.emplace_back(p.name, p.tensor);
    return out;
}

fs::path upstream_dir() {
    const char* env = std::getenv("UWSR_UPSTREAM_DIR");
    return env ? fs::path(env) : fs::path();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("generator maps N x 3 x H x W to N x 3 x 4H x 4W") {
    Generator<float> g(GeneratorConfig::tiny());
    Rng rng(1);
    g.init(rng);
    NoGradGuard no_grad;
    for (auto [n, h, w] : {std::tuple{1, 16, 16}, std::tuple{2, 17, 23}, std::tuple{1, 5, 31}}) {
        auto y = g.forward(rand_tensor<float>({n, 3, h, w}, 2));
        CHECK(y.shape() == Shape{n, 3, 4 * h, 4 * w});
    }
    auto zero = g.forward(Tensor<float>({1, 3, 8, 8}, 0.0f));
    for (float v : zero.values()) REQUIRE(std::isfinite(v));
}

TEST_CASE("generator rejects non-finite input and wrong channel count") {
    Generator<float> g(GeneratorConfig::tiny());
    Tensor<float> x({1, 3, 4, 4}, 0.5f);
    x.data()[7] = std::nanf("");
    CHECK_THROWS_WITH_AS(g.forward(x), doctest::Contains("finite"), Error);
    CHECK_THROWS_AS(g.forward(Tensor<float>({1, 4, 4, 4})), Error);
}

TEST_CASE("default generator has the upstream parameter layout") {
    Generator<float> g;
    CHECK(g.parameter_count() == 16697987);
    CHECK(g.find("conv_first.weight").shape() == Shape{64, 3, 3, 3});
    CHECK(g.find("body.22.rdb3.conv5.weight").shape() == Shape{64, 192, 3, 3});
    CHECK(g.find("conv_last.bias").shape() == Shape{3});
    CHECK_THROWS_AS(g.find("body.23.rdb1.conv1.weight"), Error);
}

TEST_CASE("generator gradients match finite differences") {
    Generator<double> g(GeneratorConfig::tiny());
    Rng rng(3);
    g.init(rng);
    auto x = rand_tensor<double>({1, 3, 4, 5}, 4);
    auto f = [&] { return mean(g.forward(x)); };
    auto r = uwsr::testing::grad_check(f, all_parameters(g), 3);
    INFO(r.worst);
    CHECK(r.checked > 100);
    CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("discriminator preserves spatial dims and needs multiples of 8") {
    Discriminator<float> d(DiscriminatorConfig::tiny());
    Rng rng(5);
    d.init(rng);
    auto y = d.forward(rand_tensor<float>({2, 3, 16, 24}, 6));
    CHECK(y.shape() == Shape{2, 1, 16, 24});
    CHECK_THROWS_AS(d.forward(rand_tensor<float>({1, 3, 12, 16}, 6)), Error);
    try {
        d.forward(rand_tensor<float>({1, 3, 12, 16}, 6));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IndivisibleDims);
    }
}

TEST_CASE("default discriminator has the upstream parameter layout") {
    Discriminator<float> d;
    CHECK(d.find("conv0.weight").shape() == Shape{64, 3, 3, 3});
    CHECK(d.find("conv1.weight_orig").shape() == Shape{128, 64, 4, 4});
    CHECK(d.find("conv1.weight_u").shape() == Shape{128});
    CHECK(d.find("conv1.weight_v").shape() == Shape{1024});
    CHECK(d.find("conv9.bias").shape() == Shape{1});
    CHECK(d.state().size() == 2 + 8 * 3 + 2);
}

TEST_CASE("discriminator gradients match finite differences") {
    Discriminator<double> d(DiscriminatorConfig::tiny());
    Rng rng(7);
    d.init(rng);
    d.warm_start_spectral(20);
    d.set_training(false);  // fixed u and v so the function is deterministic
    auto x = rand_tensor<double>({1, 3, 8, 8}, 8);
    auto f = [&] { return mean(d.forward(x)); };
    auto params = all_parameters(d);
    params.emplace_back("input", x);
    auto r = uwsr::testing::grad_check(f, params, 4);
    INFO(r.worst);
    CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("rescaling a raw conv weight leaves the logits unchanged") {
    Discriminator<double> d(DiscriminatorConfig::tiny());
    Rng rng(9);
    d.init(rng);
    d.warm_start_spectral(30);
    d.set_training(false);
    auto x = rand_tensor<double>({1, 3, 16, 16}, 10);
    NoGradGuard no_grad;
    const auto before = d.forward(x).values();
    for (auto* layer : d.spectral_layers()) {
        for (auto& v : layer->weight_orig.values()) v *= 2.0;
    }
    const auto after = d.forward(x).values();
    CHECK(max_abs_diff(before, after) < 1e-12);
}

TEST_CASE("power iteration: closed forms and SVD oracle") {
    std::vector<double> two_i{2, 0, 0, 0, 2, 0, 0, 0, 2};
    auto e = power_iteration<double>(two_i.data(), 3, 3, {1, 0, 0}, {}, 1);
    CHECK(e.sigma == doctest::Approx(2.0).epsilon(1e-15));
    auto sn = spectral_normalize<double>(two_i, 3, 3, {0.6, 0.8, 0.0});
    CHECK(sn.weight[0] == doctest::Approx(1.0));
    CHECK(sn.weight[4] == doctest::Approx(1.0));

    // 3 a b^T with unit a, b: one step from any u with a^T u != 0 recovers 3.
    const std::vector<double> a{0.6, 0.8}, b{2.0 / 3, 1.0 / 3, 2.0 / 3};
    std::vector<double> rank1;
    for (double ai : a)
        for (double bj : b) rank1.push_back(3 * ai * bj);
    CHECK(power_iteration<double>(rank1.data(), 2, 3, {1, 0}, {}, 1).sigma == doctest::Approx(3.0));

    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0, 1);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> w(64);
        for (auto& v : w) v = n(rng);
        std::vector<double> u(8);
        for (auto& v : u) v = n(rng);
        normalize_vector(u);
        auto est = power_iteration<double>(w.data(), 8, 8, u, {}, 50);
        CHECK(est.sigma == doctest::Approx(largest_singular_value(w, 8, 8)).epsilon(1e-3));
    }

    std::vector<double> zero(6, 0.0);
    CHECK_THROWS_AS(power_iteration<double>(zero.data(), 2, 3, {1, 0}, {}, 1), Error);
}

TEST_CASE("effective weights of a warmed discriminator have unit spectral norm") {
    Discriminator<double> d(DiscriminatorConfig::tiny());
    Rng rng(12);
    d.init(rng);
    d.warm_start_spectral(100);
    for (auto* layer : d.spectral_layers()) {
        auto w = layer->effective_weight(false);
        const int rows = w.dim(0);
        const int cols = static_cast<int>(w.size()) / rows;
        const double s = largest_singular_value(w.values(), rows, cols);
        CHECK(s >= 0.99);
        CHECK(s <= 1.01);
    }
}

TEST_CASE("VGG taps halve per stage and are deterministic") {
    VggFeatureExtractor<float> vgg(VggConfig::tiny());
    Rng rng(13);
    vgg.init(rng);
    CHECK(vgg.tap_indices() == std::array<int, 5>{2, 7, 16, 25, 34});
    auto x = rand_tensor<float>({1, 3, 64, 64}, 14);
    auto a = vgg.forward(x);
    auto b = vgg.forward(x);
    REQUIRE(a.size() == 5);
    int side = 64;
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(a[k].dim(2) == side);
        CHECK(a[k].dim(3) == side);
        CHECK(a[k].values() == b[k].values());
        side /= 2;
    }
    for (const auto& p : vgg.state()) CHECK_FALSE(p.tensor.requires_grad());
}

TEST_CASE("VGG features are Lipschitz in the input on fixtures") {
    VggFeatureExtractor<double> vgg(VggConfig::tiny());
    Rng rng(15);
    vgg.init(rng);
    auto x = rand_tensor<double>({1, 3, 32, 32}, 16);
    auto dx = rand_tensor<double>({1, 3, 32, 32}, 17, -1.0, 1.0);
    auto norm = [](const std::vector<double>& v) {
        double s = 0;
        for (double e : v) s += e * e;
        return std::sqrt(s);
    };
    // Measure L at one perturbation size and check it bounds smaller ones.
    auto ratio = [&](double eps) {
        Tensor<double> y({1, 3, 32, 32});
        for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = x.data()[i] + eps * dx.data()[i];
        auto fa = vgg.forward(x), fb = vgg.forward(y);
        std::vector<double> diff;
        for (std::size_t k = 0; k < 5; ++k)
            for (std::size_t i = 0; i < fa[k].size(); ++i) diff.push_back(fa[k].data()[i] - fb[k].data()[i]);
        return norm(diff) / (eps * norm(dx.values()));
    };
    const double lipschitz = ratio(1e-2) * 1.5;
    CHECK(ratio(1e-3) <= lipschitz);
    CHECK(ratio(1e-4) <= lipschitz);
}

TEST_CASE("torch-trained tiny networks reproduce reference outputs") {
    const fs::path dir = upstream_dir();
    if (dir.empty() || !fs::exists(dir / "parity.safetensors")) {
        MESSAGE("reference archives not generated; skipping");
        return;
    }
    auto ref = TensorArchive::load(dir / "parity.safetensors");
    auto values = [&](const std::string& name) { return ref.at(name).values<double>(); };
    auto tensor = [&](const std::string& name) { return Tensor<double>(ref.at(name).shape, values(name)); };

    SUBCASE("generator, EMA weights from the zip container") {
        auto imported = read_torch_checkpoint(dir / "tiny_generator.pth");
        CHECK(imported.selected_key == "params_ema");
        auto meta = infer_checkpoint_meta(imported.archive);
        REQUIRE(meta.architecture == "rrdbnet");
        Generator<double> g(generator_config_from_json(meta.config));
        CHECK(g.config() == GeneratorConfig::tiny());
        CHECK(load_archive(imported.archive, g, true).clean());
        NoGradGuard no_grad;
        CHECK(max_abs_diff(g.forward(tensor("g_input")).values(), values("g_ema_output")) < 1e-10);
    }
    SUBCASE("generator, raw weights and gradients, both containers") {
        for (const char* file : {"tiny_generator.pth", "tiny_generator_legacy.pth"}) {
            auto imported = read_torch_checkpoint(dir / file, "params");
            Generator<double> g(GeneratorConfig::tiny());
            load_archive(imported.archive, g, true);
            auto out = g.forward(tensor("g_input"));
            CHECK(max_abs_diff(out.values(), values("g_output")) < 1e-10);
            l1_mean(out, tensor("g_target")).backward();
            CHECK(max_abs_diff(g.find("conv_first.weight").grad(), values("g_grad_conv_first_weight")) < 1e-10);
            CHECK(max_abs_diff(g.find("body.1.rdb3.conv5.weight").grad(), values("g_grad_body_1_rdb3_conv5_weight")) <
                  1e-10);
        }
    }
    SUBCASE("discriminator in eval and training mode") {
        auto imported = read_torch_checkpoint(dir / "tiny_discriminator.pth");
        CHECK(imported.selected_key == "params");
        auto meta = infer_checkpoint_meta(imported.archive);
        REQUIRE(meta.architecture == "unet_discriminator_sn");
        Discriminator<double> d(discriminator_config_from_json(meta.config));
        load_archive(imported.archive, d, true);
        d.set_training(false);
        auto logits = d.forward(tensor("d_input"));
        CHECK(max_abs_diff(logits.values(), values("d_eval_logits")) < 1e-10);
        mean(logits).backward();
        CHECK(max_abs_diff(d.find("conv1.weight_orig").grad(), values("d_grad_conv1_weight_orig")) < 1e-10);
        CHECK(max_abs_diff(d.find("conv0.weight").grad(), values("d_grad_conv0_weight")) < 1e-10);

        d.set_training(true);
        NoGradGuard no_grad;
        CHECK(max_abs_diff(d.forward(tensor("d_input")).values(), values("d_train_logits")) < 1e-10);
        CHECK(max_abs_diff(d.find("conv1.weight_u").values(), values("d_train_conv1_weight_u")) < 1e-12);
        CHECK(max_abs_diff(d.find("conv1.weight_v").values(), values("d_train_conv1_weight_v")) < 1e-12);
    }
    SUBCASE("VGG taps") {
        auto imported = read_torch_checkpoint(dir / "tiny_vgg.pth");
        CHECK(imported.selected_key.empty());
        auto meta = infer_checkpoint_meta(imported.archive);
        REQUIRE(meta.architecture == "vgg19_features");
        VggFeatureExtractor<double> vgg(vgg_config_from_json(meta.config));
        CHECK(vgg.config() == VggConfig::tiny());
        load_archive(imported.archive, vgg, true);
        auto taps = vgg.forward(tensor("vgg_input"));
        for (int k = 0; k < 5; ++k) {
            CHECK(max_abs_diff(taps[static_cast<std::size_t>(k)].values(), values("vgg_tap" + std::to_string(k))) < 1e-10);
        }
    }
}
