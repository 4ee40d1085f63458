#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "uwsr/error.hpp"
#include "uwsr/loss/losses.hpp"
#include "uwsr/nn/ops.hpp"

using namespace uwsr;
using namespace uwsr::loss;
using nn::Shape;
using nn::Tensor;

namespace {

Tensor<double> rand_tensor(Shape shape, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor<double> t(std::move(shape));
    for (auto& v : t.values()) v = u(rng);
    return t;
}

Tensor<double> duplicate_batch(const Tensor<double>& t) {
    auto values = t.values();
    values.insert(values.end(), t.values().begin(), t.values().end());
    Shape s = t.shape();
    s[0] *= 2;
    return Tensor<double>(s, values);
}

double brute_bce(double z, double y) {
    const double s = 1.0 / (1.0 + std::exp(-z));
    return -(y * std::log(s) + (1 - y) * std::log(1 - s));
}

using Vgg = nn::VggFeatureExtractor<double>;
constexpr const Vgg* kNoExtractor = nullptr;

std::unique_ptr<Vgg> tiny_vgg(std::uint64_t seed) {
    auto vgg = std::make_unique<Vgg>(nn::VggConfig::tiny());
    Rng rng(seed);
    vgg->init(rng);
    return vgg;
}

}  // namespace

TEST_CASE("l1 loss: identity, constant offset, brute force") {
    auto a = rand_tensor({2, 3, 8, 8}, 1);
    CHECK(l1_loss(a, a).item() == 0.0);
    Tensor<double> shifted(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) shifted.data()[i] = a.data()[i] + 0.5;
    CHECK(l1_loss(shifted, a).item() == doctest::Approx(0.5).epsilon(1e-12));

    auto b = rand_tensor({2, 3, 8, 8}, 2);
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a.data()[i] - b.data()[i]);
    CHECK(std::abs(l1_loss(a, b).item() - sum / static_cast<double>(a.size())) < 1e-7);
    CHECK_THROWS_AS(l1_loss(a, rand_tensor({2, 3, 8, 7}, 3)), Error);
}

TEST_CASE("BCE-based GAN losses against closed forms and brute force") {
    Tensor<double> zero({1, 1, 4, 4}, 0.0);
    CHECK(gan_loss_g(zero).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(gan_loss_d(zero, zero).item() - 2 * std::log(2.0)) < 1e-9);
    Tensor<double> pos({1, 1, 4, 4}, 20.0), neg({1, 1, 4, 4}, -20.0);
    CHECK(gan_loss_d(pos, neg).item() <= 1e-8);
    CHECK(gan_loss_g(pos).item() <= 1e-8);

    Tensor<double> real({1, 1, 2, 2}, std::vector<double>{-1.5, 0.3, 2.0, -0.1});
    Tensor<double> fake({1, 1, 2, 2}, std::vector<double>{0.7, -2.2, 0.0, 1.1});
    double r = 0, f = 0, g = 0;
    for (int i = 0; i < 4; ++i) {
        r += brute_bce(real.data()[i], 1.0) / 4;
        f += brute_bce(fake.data()[i], 0.0) / 4;
        g += brute_bce(fake.data()[i], 1.0) / 4;
    }
    CHECK(std::abs(gan_loss_d(real, fake).item() - (r + f)) < 1e-7);
    CHECK(std::abs(gan_loss_g(fake).item() - g) < 1e-7);

    auto map = rand_tensor({2, 1, 8, 8}, 4, -6.0, 6.0);
    double brute = 0;
    for (double z : map.values()) brute += brute_bce(z, 1.0);
    CHECK(std::abs(gan_loss_g(map).item() - brute / static_cast<double>(map.size())) < 1e-7);

    Tensor<double> inf({1, 1, 1, 1}, INFINITY);
    try {
        gan_loss_g(inf);
        FAIL("expected NonFiniteLogits");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFiniteLogits);
    }
}

TEST_CASE("perceptual loss: identity, linearity and single-layer oracle") {
    auto vgg_ptr = tiny_vgg(5);
    const Vgg& vgg = *vgg_ptr;
    auto a = rand_tensor({1, 3, 32, 32}, 6), b = rand_tensor({1, 3, 32, 32}, 7);
    const std::array<double, 5> w{0.1, 0.1, 1.0, 1.0, 1.0};
    CHECK(perceptual_loss(a, a, vgg, w).item() == 0.0);

    const double base = perceptual_loss(a, b, vgg, w).item();
    std::array<double, 5> doubled{};
    for (int k = 0; k < 5; ++k) doubled[static_cast<std::size_t>(k)] = 2 * w[static_cast<std::size_t>(k)];
    CHECK(perceptual_loss(a, b, vgg, doubled).item() == doctest::Approx(2 * base).epsilon(1e-12));

    const auto fa = vgg.forward(a), fb = vgg.forward(b);
    CHECK(perceptual_loss(a, b, vgg, {1, 0, 0, 0, 0}).item() == doctest::Approx(l1_loss(fa[0], fb[0]).item()));

    double recomposed = 0;
    for (std::size_t k = 0; k < 5; ++k) recomposed += w[k] * l1_loss(fa[k], fb[k]).item();
    CHECK(base == doctest::Approx(recomposed).epsilon(1e-12));
}

TEST_CASE("total generator loss composition") {
    auto vgg_ptr = tiny_vgg(8);
    const Vgg& vgg = *vgg_ptr;
    auto a = rand_tensor({2, 3, 16, 16}, 9), b = rand_tensor({2, 3, 16, 16}, 10);
    Tensor<double> zero_logits({2, 1, 16, 16}, 0.0);

    auto same = total_generator_loss(a, a, zero_logits, LossWeights{}, vgg_ptr.get());
    CHECK(same.total.item() == doctest::Approx(0.1 * std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(same.total.item() - 0.06931) < 1e-5);

    LossWeights l1_only{1.0, 0.0, {0.1, 0.1, 1, 1, 1}, 0.0};
    CHECK(total_generator_loss(a, b, Tensor<double>(), l1_only, kNoExtractor).total.item() == l1_loss(a, b).item());

    auto logits = rand_tensor({2, 1, 16, 16}, 11, -3.0, 3.0);
    LossWeights w{0.7, 1.3, {0.1, 0.1, 1, 1, 1}, 0.05};
    auto mixed = total_generator_loss(a, b, logits, w, vgg_ptr.get());
    const double expect = 0.7 * l1_loss(a, b).item() + 1.3 * perceptual_loss(a, b, vgg, w.layers).item() +
                          0.05 * gan_loss_g(logits).item();
    CHECK(std::abs(mixed.total.item() - expect) < 1e-6);
    CHECK(mixed.l1 == l1_loss(a, b).item());

    // Affine in each weight.
    auto at = [&](double g) {
        LossWeights v = w;
        v.gan = g;
        return total_generator_loss(a, b, logits, v, vgg_ptr.get()).total.item();
    };
    CHECK(at(0.2) - at(0.1) == doctest::Approx(at(0.3) - at(0.2)).epsilon(1e-9));

    CHECK_THROWS_AS(total_generator_loss(a, b, Tensor<double>(), LossWeights{}, vgg_ptr.get()), Error);
    CHECK_THROWS_AS(total_generator_loss(a, b, logits, LossWeights{}, kNoExtractor), Error);
}

TEST_CASE("losses are non-negative and invariant to batch duplication") {
    auto vgg_ptr = tiny_vgg(12);
    const Vgg& vgg = *vgg_ptr;
    auto a = rand_tensor({2, 3, 16, 16}, 13), b = rand_tensor({2, 3, 16, 16}, 14);
    auto z = rand_tensor({2, 1, 16, 16}, 15, -4.0, 4.0), y = rand_tensor({2, 1, 16, 16}, 16, -4.0, 4.0);
    const auto a2 = duplicate_batch(a), b2 = duplicate_batch(b), z2 = duplicate_batch(z), y2 = duplicate_batch(y);
    const std::array<double, 5> w{0.1, 0.1, 1, 1, 1};

    CHECK(l1_loss(a, b).item() >= 0);
    CHECK(std::abs(l1_loss(a, b).item() - l1_loss(a2, b2).item()) < 1e-7);
    CHECK(std::abs(perceptual_loss(a, b, vgg, w).item() - perceptual_loss(a2, b2, vgg, w).item()) < 1e-7);
    CHECK(std::abs(gan_loss_d(z, y).item() - gan_loss_d(z2, y2).item()) < 1e-7);
    CHECK(std::abs(gan_loss_g(z).item() - gan_loss_g(z2).item()) < 1e-7);
    CHECK(gan_loss_d(z, y).item() >= 0);
}

TEST_CASE("loss gradients with respect to the prediction") {
    auto vgg_ptr = tiny_vgg(17);
    const Vgg& vgg = *vgg_ptr;
    auto pred = rand_tensor({1, 3, 16, 16}, 18), target = rand_tensor({1, 3, 16, 16}, 19);
    auto logits = rand_tensor({1, 1, 4, 4}, 20, -2.0, 2.0), real = rand_tensor({1, 1, 4, 4}, 21, -2.0, 2.0);

    auto r1 = uwsr::testing::grad_check([&] { return l1_loss(pred, target); }, {{"pred", pred}});
    CHECK(r1.max_rel_error < 1e-3);
    auto r2 = uwsr::testing::grad_check([&] { return perceptual_loss(pred, target, vgg, {0.1, 0.1, 1, 1, 1}); },
                                        {{"pred", pred}});
    INFO(r2.worst);
    CHECK(r2.max_rel_error < 1e-3);
    auto r3 = uwsr::testing::grad_check([&] { return gan_loss_d(real, logits); }, {{"real", real}, {"fake", logits}});
    CHECK(r3.max_rel_error < 1e-3);
    auto r4 = uwsr::testing::grad_check([&] { return gan_loss_g(logits); }, {{"fake", logits}});
    CHECK(r4.max_rel_error < 1e-3);
}

TEST_CASE("loss weights config") {
    LossWeights w = loss_weights_from_json({{"gan", 0.0}, {"perceptual_layers", {1, 0, 0, 0, 0}}});
    CHECK(w.gan == 0.0);
    CHECK(w.l1 == 1.0);
    CHECK(w.layers[0] == 1.0);
    CHECK(loss_weights_from_json(to_json(w)).layers == w.layers);
    CHECK_THROWS_AS(loss_weights_from_json({{"l1", 0}, {"perceptual", 0}, {"gan", 0}}), Error);
    CHECK_THROWS_AS(loss_weights_from_json({{"l1", -1}}), Error);
}

TEST_CASE("unsharp masking") {
    auto flat = uwsr::testing::constant_image(3, 40, 40, 0.4f);
    auto same = usm_sharpen(flat);
    for (float v : same.values()) CHECK(v == doctest::Approx(0.4f).epsilon(1e-5));

    // A step edge gains contrast next to the edge and stays in range.
    ImageF step(1, 8, 64, 0.3f);
    for (int y = 0; y < 8; ++y)
        for (int x = 32; x < 64; ++x) step.at(0, y, x) = 0.7f;
    auto s = usm_sharpen(step);
    CHECK(s.at(0, 4, 31) < 0.3f);
    CHECK(s.at(0, 4, 32) > 0.7f);
    for (float v : s.values()) CHECK((v >= 0.0f && v <= 1.0f));
}
