#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwsr/data/dataset.hpp"
#include "uwsr/degradation/pipeline.hpp"
#include "uwsr/loss/losses.hpp"
#include "uwsr/nn/archive.hpp"
#include "uwsr/nn/discriminator.hpp"
#include "uwsr/nn/generator.hpp"
#include "uwsr/nn/vgg.hpp"
#include "uwsr/random.hpp"

namespace uwsr::train {

struct TrainConfig {
    int total_iterations = 2200;
    int batch_size = 10;
    double lr_g = 1e-4;
    double lr_d = 1e-4;
    std::array<double, 2> betas{0.9, 0.99};
    double adam_eps = 1e-8;
    double ema_decay = 0.999;
    int checkpoint_every = 200;  // 0 writes only the final checkpoints
    std::uint64_t seed = 0;

    int crop_size = 256;          // HR patch side; LR patches are crop_size / 4
    bool augment = true;          // random flips and quarter turns
    bool sharpen_targets = true;  // USM-sharpened HR for the L1 and perceptual terms
    int spectral_warmup = 20;     // power iterations on the discriminator after loading

    std::filesystem::path dataset_root;
    std::filesystem::path pretrained_g;  // empty: random initialization
    std::filesystem::path pretrained_d;
    std::filesystem::path vgg_weights;   // converted VGG19 feature archive
    std::optional<std::uint64_t> random_vgg_seed;  // randomly initialized extractor instead of weights
    std::filesystem::path output_dir;

    nn::GeneratorConfig generator;
    nn::DiscriminatorConfig discriminator;
    nn::VggConfig vgg;
    degradation::DegradationConfig degradation = degradation::DegradationConfig::defaults();
    loss::LossWeights loss;
};

void validate(const TrainConfig& config);
nlohmann::json to_json(const TrainConfig& config);
// Missing keys keep their defaults. "model": "tiny" selects the small
// generator, discriminator and extractor used by the tests.
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::filesystem::path& path);

struct ScheduleSummary {
    int dataset_size = 0;
    int batch_size = 0;
    int total_iterations = 0;
    int iterations_per_epoch = 0;  // floor(dataset_size / batch_size); the last partial batch is dropped
    int full_epochs = 0;
    int remainder_iterations = 0;
    double epochs = 0.0;           // total_iterations / iterations_per_epoch

    std::string epochs_text() const;  // two decimals
    nlohmann::json to_json() const;
};

ScheduleSummary schedule_summary(int dataset_size, int batch_size, int total_iterations);

// Constant learning rate.
double lr_schedule(double base_lr, std::int64_t iteration);

// ema <- decay * ema + (1 - decay) * param for every parameter; buffers are copied.
template <typename T>
void ema_update(nn::Network<T>& ema, const nn::Network<T>& net, double decay);
void ema_update(std::vector<float>& ema, const std::vector<float>& values, double decay);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;
};

// Adam without weight decay, bias-corrected as in torch.optim.Adam.
template <typename T>
class Adam {
public:
    Adam(std::vector<nn::NamedTensor<T>> params, AdamConfig config);

    // Parameters whose gradient is empty are left alone.
    void step(double lr);
    std::int64_t steps() const { return steps_; }
    const std::vector<nn::NamedTensor<T>>& params() const { return params_; }

    void save(const std::string& prefix, nn::TensorArchive& archive) const;
    void restore(const std::string& prefix, const nn::TensorArchive& archive, std::int64_t steps);

private:
    std::vector<nn::NamedTensor<T>> params_;
    std::vector<std::vector<T>> m_, v_;
    AdamConfig config_;
    std::int64_t steps_ = 0;
};

// Epoch-wise shuffled batches of dataset indices; incomplete batches are dropped.
class BatchSampler {
public:
    BatchSampler(std::size_t dataset_size, int batch_size);
    std::vector<std::size_t> next(Rng& rng);
    std::int64_t epoch() const { return epoch_; }

    nlohmann::json to_json() const;
    void restore(const nlohmann::json& j);

private:
    std::size_t size_;
    std::size_t batch_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    std::int64_t epoch_ = 0;
};

struct IterationStats {
    std::int64_t iteration = 0;  // 1-based
    double l1 = 0.0;
    double perceptual = 0.0;
    double gan_g = 0.0;
    double gan_d = 0.0;
    double total_g = 0.0;
    double lr_g = 0.0;
    double lr_d = 0.0;
    double seconds = 0.0;
};

struct RunningStats {
    std::int64_t count = 0;
    double l1 = 0.0, perceptual = 0.0, gan_g = 0.0, gan_d = 0.0;
    void add(const IterationStats& s);
    nlohmann::json to_json() const;
};

struct TrainResult {
    std::int64_t iterations = 0;
    std::filesystem::path generator;
    std::filesystem::path generator_ema;
    std::filesystem::path discriminator;
    std::filesystem::path state;
    std::filesystem::path log;
    RunningStats stats;
};

struct TrainBatch {
    nn::Tensor<float> lr, hr, hr_sharp;
    std::vector<std::string> stems;
    std::vector<degradation::DegradationPlan> plans;
};

class Trainer {
public:
    // Scans the dataset and loads the networks; pretrained weights load strictly.
    explicit Trainer(TrainConfig config);
    ~Trainer();

    // Restores a state archive written by save_state. total_iterations of the
    // current config wins over the stored one.
    void resume(const std::filesystem::path& state_path);

    // One iteration: next_batch, generator_step, discriminator_step, EMA update.
    IterationStats step();
    TrainBatch next_batch();
    // Updates the generator with the discriminator frozen; returns the fakes.
    nn::Tensor<float> generator_step(const TrainBatch& batch, IterationStats& stats);
    // Updates the discriminator on detached fakes.
    void discriminator_step(const TrainBatch& batch, const nn::Tensor<float>& fake, IterationStats& stats);
    // Runs to config.total_iterations, writing checkpoints and the CSV log.
    TrainResult run(const std::function<void(const IterationStats&)>& on_iteration = {});

    void save_state(const std::filesystem::path& path) const;

    std::int64_t iteration() const { return iteration_; }
    const TrainConfig& config() const { return config_; }
    const data::DatasetIndex& dataset() const { return dataset_; }
    nn::Generator<float>& generator() { return *g_; }
    nn::Generator<float>& generator_ema() { return *g_ema_; }
    nn::Discriminator<float>& discriminator() { return *d_; }
    const RunningStats& stats() const { return stats_; }

private:
    [[noreturn]] void abort_nonfinite(const TrainBatch& batch, const IterationStats& stats, const std::string& what);
    void write_checkpoints(const std::filesystem::path& dir, const std::string& suffix) const;

    TrainConfig config_;
    data::DatasetIndex dataset_;
    std::unique_ptr<nn::Generator<float>> g_, g_ema_;
    std::unique_ptr<nn::Discriminator<float>> d_;
    std::unique_ptr<nn::VggFeatureExtractor<float>> vgg_;
    std::unique_ptr<Adam<float>> opt_g_, opt_d_;
    BatchSampler sampler_;
    Rng rng_;
    std::int64_t iteration_ = 0;
    RunningStats stats_;
};

TrainResult finetune(const TrainConfig& config, const std::optional<std::filesystem::path>& resume_from = {},
                     const std::function<void(const IterationStats&)>& on_iteration = {});

// Column order of the training log.
inline constexpr const char* kLogHeader = "iteration,l1,perceptual,gan_g,gan_d,total_g,lr_g,lr_d";
std::string log_row(const IterationStats& s);

}  // namespace uwsr::train
