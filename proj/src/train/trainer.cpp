#include "uwsr/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "uwsr/error.hpp"
#include "uwsr/fileio.hpp"
#include "uwsr/image_io.hpp"
#include "uwsr/nn/checkpoint.hpp"
#include "uwsr/nn/image_tensor.hpp"

namespace uwsr::train {
namespace fs = std::filesystem;
using nlohmann::json;

void validate(const TrainConfig& c) {
    if (c.total_iterations < 1) fail(ErrorCode::InvalidConfig, "total_iterations must be at least 1");
    if (c.batch_size < 1) fail(ErrorCode::InvalidConfig, "batch_size must be at least 1");
    if (!(c.lr_g > 0.0) || !(c.lr_d > 0.0) || !std::isfinite(c.lr_g) || !std::isfinite(c.lr_d)) {
        fail(ErrorCode::InvalidConfig, "learning rates must be positive");
    }
    for (double b : c.betas) {
        if (!(b >= 0.0 && b < 1.0)) fail(ErrorCode::InvalidConfig, "Adam betas must lie in [0, 1)");
    }
    if (!(c.adam_eps > 0.0)) fail(ErrorCode::InvalidConfig, "Adam eps must be positive");
    if (!(c.ema_decay >= 0.0 && c.ema_decay <= 1.0)) fail(ErrorCode::InvalidConfig, "ema_decay must lie in [0, 1]");
    if (c.checkpoint_every < 0) fail(ErrorCode::InvalidConfig, "checkpoint_every must be non-negative");
    if (c.crop_size < 32 || c.crop_size % 8 != 0) {
        fail(ErrorCode::InvalidConfig, "crop_size must be a multiple of 8 and at least 32");
    }
    if (c.spectral_warmup < 0) fail(ErrorCode::InvalidConfig, "spectral_warmup must be non-negative");
    nn::validate(c.generator);
    nn::validate(c.discriminator);
    if (c.generator.scale != c.degradation.scale) {
        fail(ErrorCode::InvalidConfig, "generator and degradation scales differ");
    }
    degradation::validate(c.degradation);
    loss::validate(c.loss);
}

json to_json(const TrainConfig& c) {
    json j = {{"total_iterations", c.total_iterations},
              {"batch_size", c.batch_size},
              {"lr_g", c.lr_g},
              {"lr_d", c.lr_d},
              {"betas", c.betas},
              {"adam_eps", c.adam_eps},
              {"ema_decay", c.ema_decay},
              {"checkpoint_every", c.checkpoint_every},
              {"seed", c.seed},
              {"crop_size", c.crop_size},
              {"augment", c.augment},
              {"sharpen_targets", c.sharpen_targets},
              {"spectral_warmup", c.spectral_warmup},
              {"dataset_root", c.dataset_root.string()},
              {"pretrained_g", c.pretrained_g.string()},
              {"pretrained_d", c.pretrained_d.string()},
              {"vgg_weights", c.vgg_weights.string()},
              {"output_dir", c.output_dir.string()},
              {"generator", nn::to_json(c.generator)},
              {"discriminator", nn::to_json(c.discriminator)},
              {"vgg", nn::to_json(c.vgg)},
              {"degradation", degradation::to_json(c.degradation)},
              {"loss", loss::to_json(c.loss)}};
    j["random_vgg_seed"] = c.random_vgg_seed ? json(*c.random_vgg_seed) : json(nullptr);
    return j;
}

TrainConfig train_config_from_json(const json& j) {
    if (!j.is_object()) fail(ErrorCode::ParseError, "training config must be a JSON object");
    TrainConfig c;
    try {
        c.total_iterations = j.value("total_iterations", c.total_iterations);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.lr_g = j.value("lr_g", c.lr_g);
        c.lr_d = j.value("lr_d", c.lr_d);
        c.betas = j.value("betas", c.betas);
        c.adam_eps = j.value("adam_eps", c.adam_eps);
        c.ema_decay = j.value("ema_decay", c.ema_decay);
        c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
        c.seed = j.value("seed", c.seed);
        c.crop_size = j.value("crop_size", c.crop_size);
        c.augment = j.value("augment", c.augment);
        c.sharpen_targets = j.value("sharpen_targets", c.sharpen_targets);
        c.spectral_warmup = j.value("spectral_warmup", c.spectral_warmup);
        c.dataset_root = j.value("dataset_root", std::string());
        c.pretrained_g = j.value("pretrained_g", std::string());
        c.pretrained_d = j.value("pretrained_d", std::string());
        c.vgg_weights = j.value("vgg_weights", std::string());
        c.output_dir = j.value("output_dir", std::string());
        if (j.contains("random_vgg_seed") && !j.at("random_vgg_seed").is_null()) {
            c.random_vgg_seed = j.at("random_vgg_seed").get<std::uint64_t>();
        }
        const std::string model = j.value("model", std::string("full"));
        if (model == "tiny") {
            c.generator = nn::GeneratorConfig::tiny();
            c.discriminator = nn::DiscriminatorConfig::tiny();
            c.vgg = nn::VggConfig::tiny();
        } else if (model != "full") {
            fail(ErrorCode::InvalidConfig, "model must be \"full\" or \"tiny\", got " + model);
        }
        if (j.contains("generator")) c.generator = nn::generator_config_from_json(j.at("generator"));
        if (j.contains("discriminator")) c.discriminator = nn::discriminator_config_from_json(j.at("discriminator"));
        if (j.contains("vgg")) c.vgg = nn::vgg_config_from_json(j.at("vgg"));
        if (j.contains("degradation")) c.degradation = degradation::config_from_json(j.at("degradation"));
        if (j.contains("loss")) c.loss = loss::loss_weights_from_json(j.at("loss"));
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, std::string("training config: ") + e.what());
    }
    validate(c);
    return c;
}

TrainConfig load_train_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return train_config_from_json(j);
}

std::string ScheduleSummary::epochs_text() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", epochs);
    return buf;
}

json ScheduleSummary::to_json() const {
    return {{"dataset_size", dataset_size},
            {"batch_size", batch_size},
            {"total_iterations", total_iterations},
            {"iterations_per_epoch", iterations_per_epoch},
            {"full_epochs", full_epochs},
            {"remainder_iterations", remainder_iterations},
            {"epochs", epochs},
            {"epochs_text", epochs_text()}};
}

ScheduleSummary schedule_summary(int dataset_size, int batch_size, int total_iterations) {
    if (batch_size < 1 || total_iterations < 0 || dataset_size < batch_size) {
        fail(ErrorCode::InvalidConfig, "schedule needs 1 <= batch_size <= dataset_size and iterations >= 0");
    }
    ScheduleSummary s;
    s.dataset_size = dataset_size;
    s.batch_size = batch_size;
    s.total_iterations = total_iterations;
    s.iterations_per_epoch = dataset_size / batch_size;
    s.full_epochs = total_iterations / s.iterations_per_epoch;
    s.remainder_iterations = total_iterations % s.iterations_per_epoch;
    s.epochs = static_cast<double>(total_iterations) / s.iterations_per_epoch;
    return s;
}

double lr_schedule(double base_lr, std::int64_t iteration) {
    if (iteration < 0) fail(ErrorCode::InvalidRange, "iteration must be non-negative");
    return base_lr;
}

template <typename T>
void ema_update(nn::Network<T>& ema, const nn::Network<T>& net, double decay) {
    const auto& es = ema.state();
    const auto& ps = net.state();
    if (es.size() != ps.size()) fail(ErrorCode::ShapeMismatch, "EMA and network have different tensor counts");
    for (std::size_t i = 0; i < es.size(); ++i) {
        if (es[i].name != ps[i].name || es[i].tensor.shape() != ps[i].tensor.shape()) {
            fail(ErrorCode::ShapeMismatch, "EMA tensor " + es[i].name + " does not match " + ps[i].name);
        }
    }
    const T d = static_cast<T>(decay), rest = static_cast<T>(1.0 - decay);
    for (std::size_t i = 0; i < es.size(); ++i) {
        nn::Tensor<T> e = es[i].tensor;
        const auto& p = ps[i].tensor.values();
        auto& ev = e.values();
        if (es[i].buffer) {
            ev = p;
            continue;
        }
        for (std::size_t k = 0; k < ev.size(); ++k) ev[k] = d * ev[k] + rest * p[k];
    }
}

void ema_update(std::vector<float>& ema, const std::vector<float>& values, double decay) {
    if (ema.size() != values.size()) fail(ErrorCode::ShapeMismatch, "EMA and values differ in length");
    const float d = static_cast<float>(decay), rest = static_cast<float>(1.0 - decay);
    for (std::size_t k = 0; k < ema.size(); ++k) ema[k] = d * ema[k] + rest * values[k];
}

template <typename T>
Adam<T>::Adam(std::vector<nn::NamedTensor<T>> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
    for (const auto& p : params_) {
        m_.emplace_back(p.tensor.size(), T(0));
        v_.emplace_back(p.tensor.size(), T(0));
    }
}

template <typename T>
void Adam<T>::step(double lr) {
    ++steps_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double bc2_sqrt = std::sqrt(1.0 - std::pow(b2, static_cast<double>(steps_)));
    const double step_size = lr / bc1;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        nn::Tensor<T> p = params_[i].tensor;
        const auto& g = p.grad();
        if (g.empty()) continue;
        auto& m = m_[i];
        auto& v = v_[i];
        auto& w = p.values();
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double gk = g[k];
            m[k] = static_cast<T>(b1 * m[k] + (1.0 - b1) * gk);
            v[k] = static_cast<T>(b2 * v[k] + (1.0 - b2) * gk * gk);
            const double denom = std::sqrt(static_cast<double>(v[k])) / bc2_sqrt + config_.eps;
            w[k] = static_cast<T>(w[k] - step_size * m[k] / denom);
        }
    }
}

template <typename T>
void Adam<T>::save(const std::string& prefix, nn::TensorArchive& archive) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const auto& shape = params_[i].tensor.shape();
        archive.add<T>(prefix + ".m." + params_[i].name, shape, m_[i]);
        archive.add<T>(prefix + ".v." + params_[i].name, shape, v_[i]);
    }
}

template <typename T>
void Adam<T>::restore(const std::string& prefix, const nn::TensorArchive& archive, std::int64_t steps) {
    std::vector<std::vector<T>> m(params_.size()), v(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const std::string mk = prefix + ".m." + params_[i].name, vk = prefix + ".v." + params_[i].name;
        if (!archive.contains(mk) || !archive.contains(vk)) {
            fail(ErrorCode::StrictMismatch, "optimizer state lacks " + params_[i].name);
        }
        m[i] = archive.at(mk).template values<T>();
        v[i] = archive.at(vk).template values<T>();
        if (m[i].size() != params_[i].tensor.size() || v[i].size() != params_[i].tensor.size()) {
            fail(ErrorCode::ShapeMismatch, "optimizer state for " + params_[i].name + " has the wrong size");
        }
    }
    m_ = std::move(m);
    v_ = std::move(v);
    steps_ = steps;
}

template class Adam<float>;
template class Adam<double>;
template void ema_update(nn::Network<float>&, const nn::Network<float>&, double);
template void ema_update(nn::Network<double>&, const nn::Network<double>&, double);

BatchSampler::BatchSampler(std::size_t dataset_size, int batch_size)
    : size_(dataset_size), batch_(static_cast<std::size_t>(batch_size)) {
    if (batch_size < 1 || dataset_size < batch_) {
        fail(ErrorCode::InvalidConfig, "dataset of " + std::to_string(dataset_size) + " images cannot fill a batch of " +
                                           std::to_string(batch_size));
    }
}

std::vector<std::size_t> BatchSampler::next(Rng& rng) {
    if (order_.empty() || cursor_ + batch_ > size_) {
        order_.resize(size_);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        for (std::size_t i = size_ - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i)));
            std::swap(order_[i], order_[j]);
        }
        cursor_ = 0;
        ++epoch_;
    }
    std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_));
    cursor_ += batch_;
    return out;
}

json BatchSampler::to_json() const { return {{"order", order_}, {"cursor", cursor_}, {"epoch", epoch_}}; }

void BatchSampler::restore(const json& j) {
    try {
        auto order = j.at("order").get<std::vector<std::size_t>>();
        const auto cursor = j.at("cursor").get<std::size_t>();
        if (!order.empty() && order.size() != size_) fail(ErrorCode::ShapeMismatch, "sampler state is for another dataset");
        if (cursor > order.size()) fail(ErrorCode::ParseError, "sampler cursor out of range");
        order_ = std::move(order);
        cursor_ = cursor;
        epoch_ = j.at("epoch").get<std::int64_t>();
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, std::string("sampler state: ") + e.what());
    }
}

void RunningStats::add(const IterationStats& s) {
    ++count;
    l1 += s.l1;
    perceptual += s.perceptual;
    gan_g += s.gan_g;
    gan_d += s.gan_d;
}

json RunningStats::to_json() const {
    const double n = count > 0 ? static_cast<double>(count) : 1.0;
    return {{"count", count},
            {"sum", {{"l1", l1}, {"perceptual", perceptual}, {"gan_g", gan_g}, {"gan_d", gan_d}}},
            {"mean", {{"l1", l1 / n}, {"perceptual", perceptual / n}, {"gan_g", gan_g / n}, {"gan_d", gan_d / n}}}};
}

std::string log_row(const IterationStats& s) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", static_cast<long long>(s.iteration), s.l1,
                  s.perceptual, s.gan_g, s.gan_d, s.total_g, s.lr_g, s.lr_d);
    return buf;
}

namespace {

// Architecture stored in a checkpoint wins over the configured one.
template <typename Config>
Config stored_config(const fs::path& path, const std::string& architecture, Config fallback,
                     Config (*parse)(const json&)) {
    if (!fs::exists(path)) fail(ErrorCode::CheckpointMissing, "no checkpoint at " + path.string());
    const auto meta = nn::read_checkpoint_meta(path);
    if (meta.architecture == architecture && meta.config.is_object() && !meta.config.empty()) {
        return parse(meta.config);
    }
    return fallback;
}

nn::TensorArchive with_prefix_removed(const nn::TensorArchive& archive, const std::string& prefix) {
    nn::TensorArchive out;
    for (const auto& [name, entry] : archive.entries()) {
        if (name.rfind(prefix, 0) == 0) out.add_entry(name.substr(prefix.size()), entry);
    }
    return out;
}

void add_network(const std::string& prefix, const nn::Network<float>& net, nn::TensorArchive& archive) {
    for (const auto& t : net.state()) archive.add<float>(prefix + t.name, t.tensor.shape(), t.tensor.values());
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

Trainer::Trainer(TrainConfig config)
    : config_(std::move(config)),
      dataset_(),
      sampler_(1, 1),
      rng_(config_.seed) {
    validate(config_);
    dataset_ = data::scan_dataset(config_.dataset_root, data::Split::Train, config_.degradation.scale);
    sampler_ = BatchSampler(dataset_.size(), config_.batch_size);

    if (!config_.pretrained_g.empty()) {
        config_.generator = stored_config(config_.pretrained_g, "rrdbnet", config_.generator, nn::generator_config_from_json);
    }
    g_ = std::make_unique<nn::Generator<float>>(config_.generator);
    g_ema_ = std::make_unique<nn::Generator<float>>(config_.generator);
    if (config_.pretrained_g.empty()) {
        g_->init(rng_);
    } else {
        nn::load_checkpoint(config_.pretrained_g, *g_, true);
    }
    ema_update(*g_ema_, *g_, 0.0);
    g_ema_->set_requires_grad(false);

    if (!config_.pretrained_d.empty()) {
        config_.discriminator = stored_config(config_.pretrained_d, "unet_discriminator_sn", config_.discriminator,
                                              nn::discriminator_config_from_json);
    }
    d_ = std::make_unique<nn::Discriminator<float>>(config_.discriminator);
    if (config_.pretrained_d.empty()) {
        d_->init(rng_);
    } else {
        nn::load_checkpoint(config_.pretrained_d, *d_, true);
    }
    d_->warm_start_spectral(config_.spectral_warmup);

    if (config_.loss.perceptual > 0.0) {
        if (!config_.vgg_weights.empty()) {
            config_.vgg = stored_config(config_.vgg_weights, "vgg19_features", config_.vgg, nn::vgg_config_from_json);
            vgg_ = std::make_unique<nn::VggFeatureExtractor<float>>(config_.vgg);
            nn::load_checkpoint(config_.vgg_weights, *vgg_, true);
        } else if (config_.random_vgg_seed) {
            vgg_ = std::make_unique<nn::VggFeatureExtractor<float>>(config_.vgg);
            Rng vgg_rng(*config_.random_vgg_seed);
            vgg_->init(vgg_rng);
        } else {
            fail(ErrorCode::WeightsUnavailable,
                 "the perceptual loss needs VGG19 weights: convert an ImageNet VGG19 archive and set vgg_weights");
        }
        vgg_->set_requires_grad(false);
        vgg_->set_training(false);
    }

    const AdamConfig adam{config_.betas[0], config_.betas[1], config_.adam_eps};
    opt_g_ = std::make_unique<Adam<float>>(g_->parameters(), adam);
    opt_d_ = std::make_unique<Adam<float>>(d_->parameters(), adam);
}

Trainer::~Trainer() = default;

TrainBatch Trainer::next_batch() {
    TrainBatch batch;
    std::vector<ImageF> lrs, hrs, sharp;
    for (std::size_t idx : sampler_.next(rng_)) {
        const auto& pair = dataset_.pairs[idx];
        const ImageF hr = load_image(pair.hr_path);
        if (hr.channels() != 3) {
            fail(ErrorCode::UnsupportedChannelCount, pair.hr_path.string() + " is not an RGB image");
        }
        ImageF patch = data::random_crop(hr, config_.crop_size, rng_);
        if (config_.augment) patch = data::augment(patch, rng_);
        auto degraded = degradation::degrade(patch, rng_, config_.degradation);
        lrs.push_back(std::move(degraded.lr));
        batch.plans.push_back(std::move(degraded.plan));
        sharp.push_back(config_.sharpen_targets ? loss::usm_sharpen(patch) : patch);
        hrs.push_back(std::move(patch));
        batch.stems.push_back(pair.stem);
    }
    batch.lr = nn::images_to_tensor<float>(lrs);
    batch.hr = nn::images_to_tensor<float>(hrs);
    batch.hr_sharp = nn::images_to_tensor<float>(sharp);
    return batch;
}

void Trainer::abort_nonfinite(const TrainBatch& batch, const IterationStats& stats, const std::string& what) {
    json dump = {{"iteration", stats.iteration},
                 {"what", what},
                 {"losses", {{"l1", stats.l1}, {"perceptual", stats.perceptual}, {"gan_g", stats.gan_g}, {"gan_d", stats.gan_d}}},
                 {"images", batch.stems}};
    dump["plans"] = json::array();
    for (const auto& plan : batch.plans) dump["plans"].push_back(degradation::to_json(plan));
    std::string where;
    if (!config_.output_dir.empty()) {
        fs::create_directories(config_.output_dir);
        const fs::path path = config_.output_dir / ("nonfinite_iter_" + std::to_string(stats.iteration) + ".json");
        write_text_atomic(path, dump.dump(2));
        where = "; batch plans written to " + path.string();
    }
    fail(ErrorCode::NonFiniteLoss, what + " at iteration " + std::to_string(stats.iteration) + where);
}

nn::Tensor<float> Trainer::generator_step(const TrainBatch& batch, IterationStats& s) {
    nn::Tensor<float> fake;
    try {
        d_->set_requires_grad(false);
        g_->zero_grad();
        fake = g_->forward(batch.lr);
        nn::Tensor<float> logits;
        if (config_.loss.gan > 0.0) logits = d_->forward(fake);
        auto gl = loss::total_generator_loss(fake, batch.hr_sharp, logits, config_.loss, vgg_.get());
        s.l1 = gl.l1;
        s.perceptual = gl.perceptual;
        s.gan_g = gl.gan;
        s.total_g = gl.total.item();
        if (!finite(s.total_g)) abort_nonfinite(batch, s, "non-finite generator loss");
        gl.total.backward();
        opt_g_->step(s.lr_g);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteLogits) throw;
        abort_nonfinite(batch, s, std::string("generator step: ") + e.what());
    }
    g_->zero_grad();
    return fake.detach();
}

void Trainer::discriminator_step(const TrainBatch& batch, const nn::Tensor<float>& fake, IterationStats& s) {
    try {
        d_->set_requires_grad(true);
        d_->zero_grad();
        const auto real_logits = d_->forward(batch.hr);
        const auto fake_logits = d_->forward(fake.detach());
        const auto ld = loss::gan_loss_d(real_logits, fake_logits);
        s.gan_d = ld.item();
        if (!finite(s.gan_d)) abort_nonfinite(batch, s, "non-finite discriminator loss");
        ld.backward();
        opt_d_->step(s.lr_d);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteLogits) throw;
        abort_nonfinite(batch, s, std::string("discriminator step: ") + e.what());
    }
    d_->zero_grad();
}

IterationStats Trainer::step() {
    const auto start = std::chrono::steady_clock::now();
    IterationStats s;
    s.iteration = iteration_ + 1;
    s.lr_g = lr_schedule(config_.lr_g, iteration_);
    s.lr_d = lr_schedule(config_.lr_d, iteration_);
    const TrainBatch batch = next_batch();
    const auto fake = generator_step(batch, s);
    discriminator_step(batch, fake, s);
    ema_update(*g_ema_, *g_, config_.ema_decay);
    iteration_ = s.iteration;
    stats_.add(s);
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
}

void Trainer::save_state(const fs::path& path) const {
    nn::TensorArchive archive;
    add_network("g.", *g_, archive);
    add_network("ema.", *g_ema_, archive);
    add_network("d.", *d_, archive);
    opt_g_->save("adam_g", archive);
    opt_d_->save("adam_d", archive);
    archive.metadata["format"] = "uwsr-train-state";
    archive.metadata["iteration"] = std::to_string(iteration_);
    archive.metadata["adam_g_steps"] = std::to_string(opt_g_->steps());
    archive.metadata["adam_d_steps"] = std::to_string(opt_d_->steps());
    archive.metadata["rng"] = serialize_rng(rng_);
    archive.metadata["sampler"] = sampler_.to_json().dump();
    archive.metadata["stats"] = json{{"count", stats_.count},
                                     {"l1", stats_.l1},
                                     {"perceptual", stats_.perceptual},
                                     {"gan_g", stats_.gan_g},
                                     {"gan_d", stats_.gan_d}}
                                    .dump();
    archive.metadata["config"] = to_json(config_).dump();
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    archive.save(path);
}

void Trainer::resume(const fs::path& state_path) {
    if (!fs::exists(state_path)) fail(ErrorCode::CheckpointMissing, "no training state at " + state_path.string());
    const auto archive = nn::TensorArchive::load(state_path);
    const auto& m = archive.metadata;
    auto get = [&](const char* key) -> const std::string& {
        auto it = m.find(key);
        if (it == m.end()) fail(ErrorCode::ParseError, std::string("training state lacks ") + key);
        return it->second;
    };
    if (get("format") != "uwsr-train-state") fail(ErrorCode::ParseError, state_path.string() + " is not a training state");

    // Parse everything before touching the live state.
    std::int64_t iteration = 0, g_steps = 0, d_steps = 0;
    json sampler_json, stats_json;
    try {
        iteration = std::stoll(get("iteration"));
        g_steps = std::stoll(get("adam_g_steps"));
        d_steps = std::stoll(get("adam_d_steps"));
        sampler_json = json::parse(get("sampler"));
        stats_json = json::parse(get("stats"));
    } catch (const std::logic_error& e) {
        fail(ErrorCode::ParseError, std::string("training state metadata: ") + e.what());
    }
    Rng rng = deserialize_rng(get("rng"));

    nn::load_archive(with_prefix_removed(archive, "g."), *g_, true);
    nn::load_archive(with_prefix_removed(archive, "ema."), *g_ema_, true);
    nn::load_archive(with_prefix_removed(archive, "d."), *d_, true);
    opt_g_->restore("adam_g", archive, g_steps);
    opt_d_->restore("adam_d", archive, d_steps);
    sampler_.restore(sampler_json);
    rng_ = rng;
    iteration_ = iteration;
    try {
        stats_.count = stats_json.at("count").get<std::int64_t>();
        stats_.l1 = stats_json.at("l1").get<double>();
        stats_.perceptual = stats_json.at("perceptual").get<double>();
        stats_.gan_g = stats_json.at("gan_g").get<double>();
        stats_.gan_d = stats_json.at("gan_d").get<double>();
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, std::string("training statistics: ") + e.what());
    }
}

void Trainer::write_checkpoints(const fs::path& dir, const std::string& suffix) const {
    fs::create_directories(dir);
    nn::save_checkpoint(*g_, {"rrdbnet", nn::to_json(g_->config()), g_->config().scale, iteration_, false, "finetune"},
                        dir / ("net_g" + suffix + ".safetensors"));
    nn::save_checkpoint(*g_ema_,
                        {"rrdbnet", nn::to_json(g_ema_->config()), g_ema_->config().scale, iteration_, true, "finetune"},
                        dir / ("net_g_ema" + suffix + ".safetensors"));
    nn::save_checkpoint(*d_, {"unet_discriminator_sn", nn::to_json(d_->config()), 4, iteration_, false, "finetune"},
                        dir / ("net_d" + suffix + ".safetensors"));
}

TrainResult Trainer::run(const std::function<void(const IterationStats&)>& on_iteration) {
    if (config_.output_dir.empty()) fail(ErrorCode::InvalidConfig, "output_dir is required for a training run");
    const fs::path out = config_.output_dir;
    const fs::path ckpt_dir = out / "checkpoints";
    fs::create_directories(ckpt_dir);

    // Keep log rows up to the resumed iteration so the file matches an uninterrupted run.
    const fs::path log_path = out / "train_log.csv";
    {
        std::string kept = std::string(kLogHeader) + "\n";
        if (iteration_ > 0 && fs::exists(log_path)) {
            std::istringstream in(read_text(log_path));
            std::string line;
            std::getline(in, line);
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                if (std::stoll(line.substr(0, line.find(','))) > iteration_) break;
                kept += line + "\n";
            }
        }
        write_text_atomic(log_path, kept);
    }
    std::ofstream log(log_path, std::ios::app);
    if (!log) fail(ErrorCode::IoError, "cannot append to " + log_path.string());

    char tag[16];
    while (iteration_ < config_.total_iterations) {
        const auto s = step();
        log << log_row(s) << '\n';
        log.flush();
        if (on_iteration) on_iteration(s);
        if (config_.checkpoint_every > 0 && iteration_ % config_.checkpoint_every == 0) {
            std::snprintf(tag, sizeof tag, "_%06lld", static_cast<long long>(iteration_));
            write_checkpoints(ckpt_dir, tag);
            save_state(ckpt_dir / ("state" + std::string(tag) + ".safetensors"));
        }
    }
    log.close();

    write_checkpoints(out, "");
    save_state(out / "state.safetensors");
    json summary = {{"iterations", iteration_},
                    {"schedule", schedule_summary(static_cast<int>(dataset_.size()), config_.batch_size,
                                                  config_.total_iterations)
                                     .to_json()},
                    {"stats", stats_.to_json()},
                    {"config", to_json(config_)}};
    write_text_atomic(out / "train_summary.json", summary.dump(2));

    TrainResult r;
    r.iterations = iteration_;
    r.generator = out / "net_g.safetensors";
    r.generator_ema = out / "net_g_ema.safetensors";
    r.discriminator = out / "net_d.safetensors";
    r.state = out / "state.safetensors";
    r.log = log_path;
    r.stats = stats_;
    return r;
}

TrainResult finetune(const TrainConfig& config, const std::optional<fs::path>& resume_from,
                     const std::function<void(const IterationStats&)>& on_iteration) {
    Trainer trainer(config);
    if (resume_from) trainer.resume(*resume_from);
    return trainer.run(on_iteration);
}

}  // namespace uwsr::train
