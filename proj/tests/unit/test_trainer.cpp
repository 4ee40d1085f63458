#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fixtures.hpp"
#include "uwsr/error.hpp"
#include "uwsr/fileio.hpp"
#include "uwsr/nn/checkpoint.hpp"
#include "uwsr/train/trainer.hpp"

using namespace uwsr;
using namespace uwsr::train;
using uwsr::testing::TempDir;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_config(const fs::path& data, const fs::path& out) {
    TrainConfig c;
    c.generator = nn::GeneratorConfig::tiny();
    c.discriminator = nn::DiscriminatorConfig::tiny();
    c.vgg = nn::VggConfig::tiny();
    c.random_vgg_seed = 5;
    c.batch_size = 2;
    c.crop_size = 32;
    c.total_iterations = 5;
    c.checkpoint_every = 0;
    c.seed = 11;
    c.dataset_root = data;
    c.output_dir = out;
    return c;
}

void make_tree(const fs::path& root, int count) {
    uwsr::testing::UsrTreeOptions o;
    o.train_count = count;
    o.test_count = 2;
    o.distinct_scenes = count;
    uwsr::testing::write_usr_tree(root, o);
}

std::vector<std::vector<float>> snapshot(const nn::Network<float>& net) {
    std::vector<std::vector<float>> out;
    for (const auto& p : net.parameters()) out.push_back(p.tensor.values());
    return out;
}

bool bit_equal(const std::vector<std::vector<float>>& a, const std::vector<std::vector<float>>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size() || std::memcmp(a[i].data(), b[i].data(), a[i].size() * sizeof(float)) != 0) {
            return false;
        }
    }
    return true;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("schedule arithmetic") {
    const auto s = schedule_summary(1060, 10, 2200);
    CHECK(s.iterations_per_epoch == 106);
    CHECK(s.full_epochs == 20);
    CHECK(s.remainder_iterations == 80);
    CHECK(s.epochs_text() == "20.75");
    CHECK(schedule_summary(1060, 10, 2120).epochs == 20.0);
    CHECK(schedule_summary(8, 3, 4).iterations_per_epoch == 2);
    CHECK_THROWS_AS(schedule_summary(4, 5, 10), Error);
}

TEST_CASE("learning rate is constant") {
    CHECK(lr_schedule(1e-4, 0) == 1e-4);
    CHECK(lr_schedule(1e-4, 2199) == 1e-4);
    CHECK(lr_schedule(1e-4, 1'000'000) == 1e-4);
    CHECK_THROWS_AS(lr_schedule(1e-4, -1), Error);
}

TEST_CASE("EMA update: degenerate decays and closed form") {
    std::vector<float> e{1.0f, -2.0f}, p{3.0f, 5.0f};
    auto e0 = e;
    ema_update(e0, p, 0.0);
    CHECK(e0 == p);
    auto e1 = e;
    ema_update(e1, p, 1.0);
    CHECK(e1 == e);

    // k = 5 steps of decay 0.5 toward a constant: e0 d^k + p (1 - d^k).
    std::vector<double> iter{1.0, -2.0};
    auto ef = e;
    for (int k = 0; k < 5; ++k) {
        ema_update(ef, p, 0.5);
        for (std::size_t i = 0; i < 2; ++i) iter[i] = 0.5 * iter[i] + 0.5 * p[i];
    }
    const double d5 = std::pow(0.5, 5);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(ef[i] == doctest::Approx(e[i] * d5 + p[i] * (1 - d5)).epsilon(1e-6));
        CHECK(ef[i] == doctest::Approx(iter[i]).epsilon(1e-6));
    }
    CHECK_THROWS_AS(ema_update(ef, std::vector<float>{1.0f}, 0.5), Error);

    nn::Generator<float> g(nn::GeneratorConfig::tiny()), ema(nn::GeneratorConfig::tiny());
    Rng rng(3);
    g.init(rng);
    ema_update(ema, g, 0.0);
    CHECK(bit_equal(snapshot(ema), snapshot(g)));
    nn::Discriminator<float> d(nn::DiscriminatorConfig::tiny());
    CHECK(code_of([&] { ema_update<float>(ema, d, 0.5); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("Adam matches a hand-computed first step") {
    nn::Tensor<float> w({2}, std::vector<float>{1.0f, -1.0f});
    w.set_requires_grad(true);
    Adam<float> opt({{"w", w, false}}, AdamConfig{0.9, 0.99, 1e-8});
    w.grad() = {0.5f, -2.0f};
    opt.step(0.1);
    // The bias-corrected first step moves each weight by lr * sign(g).
    CHECK(w.values()[0] == doctest::Approx(0.9f).epsilon(1e-6));
    CHECK(w.values()[1] == doctest::Approx(-0.9f).epsilon(1e-6));
    w.grad().clear();
    opt.step(0.1);
    CHECK(w.values()[0] == doctest::Approx(0.9f).epsilon(1e-6));
    CHECK(opt.steps() == 2);
}

TEST_CASE("sampler visits every image once per epoch") {
    BatchSampler sampler(7, 3);
    Rng rng(1);
    std::vector<int> seen(7, 0);
    for (int i = 0; i < 2; ++i)
        for (auto idx : sampler.next(rng)) ++seen[idx];
    CHECK(sampler.epoch() == 1);
    int total = 0;
    for (int v : seen) {
        CHECK(v <= 1);
        total += v;
    }
    CHECK(total == 6);
    sampler.next(rng);
    CHECK(sampler.epoch() == 2);

    BatchSampler copy(7, 3);
    copy.restore(sampler.to_json());
    Rng r1(9), r2(9);
    for (int i = 0; i < 5; ++i) CHECK(sampler.next(r1) == copy.next(r2));
    CHECK_THROWS_AS(BatchSampler(2, 3), Error);
}

TEST_CASE("config validation and JSON round trip") {
    TrainConfig c;
    CHECK(c.total_iterations == 2200);
    CHECK(c.batch_size == 10);
    CHECK(c.lr_g == 1e-4);
    CHECK(c.lr_d == 1e-4);
    CHECK(c.betas == std::array<double, 2>{0.9, 0.99});
    CHECK(c.ema_decay == 0.999);
    CHECK(c.checkpoint_every == 200);

    auto back = train_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    auto tiny = train_config_from_json({{"model", "tiny"}, {"loss", {{"gan", 0.0}}}, {"random_vgg_seed", 4}});
    CHECK(tiny.generator == nn::GeneratorConfig::tiny());
    CHECK(tiny.loss.gan == 0.0);
    CHECK(*tiny.random_vgg_seed == 4u);

    CHECK(code_of([] { train_config_from_json({{"total_iterations", 0}}); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { train_config_from_json({{"batch_size", 0}}); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { train_config_from_json({{"lr_g", 0.0}}); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { train_config_from_json({{"lr_d", -1e-4}}); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { train_config_from_json({{"crop_size", 60}}); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { train_config_from_json({{"model", "huge"}}); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { train_config_from_json({{"batch_size", "ten"}}); }) == ErrorCode::ParseError);
}

TEST_CASE("smoke run writes finite logs and checkpoints") {
    TempDir dir;
    make_tree(dir / "data", 8);
    auto c = tiny_config(dir / "data", dir / "out");
    c.checkpoint_every = 2;
    std::vector<IterationStats> seen;
    auto result = finetune(c, {}, [&](const IterationStats& s) { seen.push_back(s); });
    CHECK(result.iterations == 5);
    REQUIRE(seen.size() == 5);
    for (const auto& s : seen) {
        CHECK(std::isfinite(s.l1));
        CHECK(std::isfinite(s.perceptual));
        CHECK(std::isfinite(s.gan_g));
        CHECK(std::isfinite(s.gan_d));
        CHECK(s.l1 > 0);
        CHECK(s.lr_g == 1e-4);
    }
    const auto log = read_text(result.log);
    CHECK(log.rfind(std::string(kLogHeader) + "\n", 0) == 0);
    CHECK(std::count(log.begin(), log.end(), '\n') == 6);
    for (const char* name : {"net_g_000002.safetensors", "net_g_ema_000004.safetensors", "net_d_000004.safetensors",
                             "state_000002.safetensors"}) {
        CHECK(fs::exists(dir / "out" / "checkpoints" / name));
    }
    CHECK(fs::exists(result.generator));
    CHECK(nn::read_checkpoint_meta(result.generator_ema).is_ema);
    CHECK(nn::read_checkpoint_meta(result.generator).iteration == 5);

    // The EMA trails the raw weights.
    nn::Generator<float> g(nn::GeneratorConfig::tiny()), e(nn::GeneratorConfig::tiny());
    CHECK(nn::load_checkpoint(result.generator, g, true).clean());
    CHECK(nn::load_checkpoint(result.generator_ema, e, true).clean());
    CHECK_FALSE(bit_equal(snapshot(g), snapshot(e)));

    // Pretrained weights load strictly.
    auto again = c;
    again.pretrained_g = result.generator_ema;
    again.pretrained_d = result.discriminator;
    again.output_dir = dir / "out2";
    again.total_iterations = 1;
    CHECK(finetune(again).iterations == 1);
    again.pretrained_g = result.discriminator;
    CHECK(code_of([&] { Trainer t(again); }) == ErrorCode::StrictMismatch);
    again.pretrained_g = dir / "missing.safetensors";
    CHECK(code_of([&] { Trainer t(again); }) == ErrorCode::CheckpointMissing);
}

TEST_CASE("G and D steps leave the other network untouched") {
    TempDir dir;
    make_tree(dir / "data", 4);
    Trainer t(tiny_config(dir / "data", dir / "out"));
    IterationStats s;
    s.lr_g = s.lr_d = 1e-3;
    const auto batch = t.next_batch();
    const auto g0 = snapshot(t.generator()), d0 = snapshot(t.discriminator());
    const auto fake = t.generator_step(batch, s);
    const auto g1 = snapshot(t.generator()), d1 = snapshot(t.discriminator());
    CHECK(bit_equal(d0, d1));
    CHECK_FALSE(bit_equal(g0, g1));
    t.discriminator_step(batch, fake, s);
    CHECK(bit_equal(g1, snapshot(t.generator())));
    CHECK_FALSE(bit_equal(d1, snapshot(t.discriminator())));
}

TEST_CASE("fixed seed gives identical logs; resume is bit-exact") {
    TempDir dir;
    make_tree(dir / "data", 8);
    auto c = tiny_config(dir / "data", dir / "full");
    c.total_iterations = 20;
    c.checkpoint_every = 10;
    auto full = finetune(c);

    auto twin = c;
    twin.output_dir = dir / "twin";
    twin.checkpoint_every = 0;
    finetune(twin);
    CHECK(read_text(dir / "full" / "train_log.csv") == read_text(dir / "twin" / "train_log.csv"));

    auto first = c;
    first.output_dir = dir / "split";
    first.total_iterations = 10;
    finetune(first);
    auto second = c;
    second.output_dir = dir / "split";
    auto resumed = finetune(second, dir / "split" / "checkpoints" / "state_000010.safetensors");
    CHECK(resumed.iterations == 20);
    CHECK(read_text(full.log) == read_text(resumed.log));
    CHECK(sha256_file(full.generator) == sha256_file(resumed.generator));
    CHECK(sha256_file(full.generator_ema) == sha256_file(resumed.generator_ema));
    CHECK(sha256_file(full.discriminator) == sha256_file(resumed.discriminator));

    CHECK(code_of([&] { finetune(second, dir / "nothing.safetensors"); }) == ErrorCode::CheckpointMissing);
}

TEST_CASE("missing VGG weights are reported") {
    TempDir dir;
    make_tree(dir / "data", 4);
    auto c = tiny_config(dir / "data", dir / "out");
    c.random_vgg_seed.reset();
    CHECK(code_of([&] { Trainer t(c); }) == ErrorCode::WeightsUnavailable);
    c.loss.perceptual = 0.0;
    Trainer t(c);  // no extractor needed
    CHECK(t.step().perceptual == 0.0);
}

TEST_CASE("non-finite losses abort with a plan dump") {
    TempDir dir;
    make_tree(dir / "data", 4);
    auto c = tiny_config(dir / "data", dir / "out");
    Trainer t(c);
    nn::Tensor<float> w = t.generator().find("conv_last.bias");
    w.values()[0] = std::nanf("");
    CHECK(code_of([&] { t.step(); }) == ErrorCode::NonFiniteLoss);
    const auto dump = nlohmann::json::parse(read_text(dir / "out" / "nonfinite_iter_1.json"));
    CHECK(dump["plans"].size() == 2);
    CHECK(dump["images"].size() == 2);
    CHECK(dump["plans"][0].contains("seed"));
}

TEST_CASE("overfit sanity: L1 halves within 200 iterations without the GAN term") {
    TempDir dir;
    make_tree(dir / "data", 4);
    auto c = tiny_config(dir / "data", dir / "out");
    c.loss.gan = 0.0;
    c.total_iterations = 200;
    std::vector<double> l1;
    finetune(c, {}, [&](const IterationStats& s) { l1.push_back(s.l1); });
    REQUIRE(l1.size() == 200);
    MESSAGE("L1 at iteration 1: " << l1.front() << ", at 200: " << l1.back());
    CHECK(l1.back() <= 0.5 * l1.front());
}
