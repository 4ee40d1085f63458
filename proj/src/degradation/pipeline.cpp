#include "uwsr/degradation/pipeline.hpp"

#include <cmath>
#include <string>

#include "uwsr/error.hpp"

namespace uwsr::degradation {
namespace {

using nlohmann::json;

int draw_quality(Rng& rng, const JpegStageConfig& config) {
    return uniform_int(rng, static_cast<int>(std::lround(config.quality.lo)),
                       static_cast<int>(std::lround(config.quality.hi)));
}

BlurRecord draw_blur(Rng& rng, const BlurStageConfig& config, int padded_size) {
    BlurRecord record;
    if (bernoulli(rng, config.skip_prob)) {
        record.applied = false;
        record.spec = KernelSpec{KernelKind::Delta, 1};
        record.kernel = delta_kernel(1);
        return record;
    }
    auto sampled = sample_kernel(rng, config, padded_size);
    record.applied = true;
    record.spec = sampled.spec;
    record.kernel = std::move(sampled.kernel);
    return record;
}

StagePlan draw_stage(Rng& rng, const StageConfig& config, int padded_size, int base_height, int base_width) {
    StagePlan stage;
    stage.blur = draw_blur(rng, config.blur, padded_size);
    stage.resize = sample_resize(rng, config.resize, base_height, base_width);
    stage.noise = sample_noise(rng, config.noise);
    if (config.jpeg_enabled) stage.jpeg_quality = draw_quality(rng, config.jpeg);
    stage.jpeg_subsampling = config.jpeg.subsampling;
    return stage;
}

ImageF run_stage(ImageF x, const StagePlan& stage) {
    if (stage.blur.applied) x = apply_blur(x, stage.blur.kernel);
    x = apply_resize(x, stage.resize);
    x = apply_noise(x, stage.noise);
    if (stage.jpeg_quality) x = jpeg_roundtrip(x, *stage.jpeg_quality, stage.jpeg_subsampling);
    return x;
}

void check_jpeg(const JpegStageConfig& config) {
    if (!config.quality.valid() || config.quality.lo < 1.0 || config.quality.hi > 100.0) {
        fail(ErrorCode::InvalidRange, "JPEG quality range must lie within [1, 100]");
    }
}

void check_probability(double p, const char* what) {
    if (p < 0.0 || p > 1.0) fail(ErrorCode::InvalidRange, std::string(what) + " must lie in [0, 1]");
}

}  // namespace

DegradationConfig DegradationConfig::defaults() {
    DegradationConfig config;
    config.stage1.resize_base = ResizeBase::Input;

    auto& s2 = config.stage2;
    s2.blur.sigma = {0.2, 1.5};
    s2.blur.skip_prob = 0.2;
    s2.resize.direction_weights = {0.3, 0.4, 0.3};
    s2.resize.scale = {0.3, 1.2};
    s2.resize_base = ResizeBase::Target;
    s2.noise.gaussian_sigma = {1.0 / 255.0, 25.0 / 255.0};
    s2.noise.poisson_scale = {0.05, 2.5};
    s2.jpeg_enabled = false;  // the second compression happens in the final step
    return config;
}

DegradationConfig DegradationConfig::identity() {
    DegradationConfig config = defaults();
    for (StageConfig* stage : {&config.stage1, &config.stage2}) {
        stage->blur.skip_prob = 1.0;
        stage->resize.direction_weights = {0.0, 0.0, 1.0};
        stage->resize.interp_weights = {0.0, 0.0, 1.0};
        stage->noise.gaussian_prob = 1.0;
        stage->noise.gaussian_sigma = {0.0, 0.0};
        stage->noise.gray_prob = 0.0;
        stage->jpeg.quality = {100.0, 100.0};
        stage->jpeg.subsampling = ChromaSubsampling::k444;
    }
    config.final_stage.sinc_prob = 0.0;
    config.final_stage.interp_weights = {0.0, 0.0, 1.0};
    config.final_stage.jpeg.quality = {100.0, 100.0};
    config.final_stage.jpeg.subsampling = ChromaSubsampling::k444;
    return config;
}

void validate(const DegradationConfig& config) {
    if (config.scale < 1) fail(ErrorCode::InvalidRange, "scale must be positive");
    if (config.kernel_size < 1 || config.kernel_size % 2 == 0) fail(ErrorCode::InvalidRange, "kernel size must be odd");
    for (const StageConfig* stage : {&config.stage1, &config.stage2}) {
        validate(stage->blur, config.kernel_size);
        validate(stage->resize);
        validate(stage->noise);
        check_jpeg(stage->jpeg);
    }
    const auto& f = config.final_stage;
    check_probability(f.sinc_prob, "final sinc probability");
    check_probability(f.sinc_first_prob, "final order probability");
    if (f.min_kernel_size % 2 == 0 || f.max_kernel_size % 2 == 0 || f.min_kernel_size < 1 ||
        f.min_kernel_size > f.max_kernel_size || f.max_kernel_size > config.kernel_size) {
        fail(ErrorCode::InvalidRange, "final sinc kernel sizes must be odd with min <= max <= kernel size");
    }
    if (!f.omega.valid() || !(f.omega.lo > 0.0)) fail(ErrorCode::InvalidRange, "sinc cutoff range must be positive");
    double total = 0.0;
    for (double w : f.interp_weights) {
        if (w < 0.0) fail(ErrorCode::InvalidRange, "interpolation weights must be non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-6) fail(ErrorCode::InvalidRange, "final interpolation weights must sum to 1");
    check_jpeg(f.jpeg);
}

DegradationPlan sample_plan(std::uint64_t seed, const DegradationConfig& config, int hr_height, int hr_width) {
    validate(config);
    if (hr_height % config.scale != 0 || hr_width % config.scale != 0) {
        fail(ErrorCode::NotDivisibleBy4, "HR size " + std::to_string(hr_width) + "x" + std::to_string(hr_height) +
                                             " is not divisible by " + std::to_string(config.scale));
    }
    const int lr_height = hr_height / config.scale, lr_width = hr_width / config.scale;

    Rng rng(seed);
    DegradationPlan plan;
    plan.seed = seed;
    plan.scale = config.scale;
    plan.hr_height = hr_height;
    plan.hr_width = hr_width;

    const bool s1_target = config.stage1.resize_base == ResizeBase::Target;
    plan.stage1 = draw_stage(rng, config.stage1, config.kernel_size, s1_target ? lr_height : hr_height,
                             s1_target ? lr_width : hr_width);
    const bool s2_target = config.stage2.resize_base == ResizeBase::Target;
    plan.stage2 = draw_stage(rng, config.stage2, config.kernel_size,
                             s2_target ? lr_height : plan.stage1.resize.out_height,
                             s2_target ? lr_width : plan.stage1.resize.out_width);

    const auto& f = config.final_stage;
    FinalPlan& fin = plan.final_stage;
    if (bernoulli(rng, f.sinc_prob)) {
        const int steps = (f.max_kernel_size - f.min_kernel_size) / 2;
        fin.sinc.applied = true;
        fin.sinc.spec.kind = KernelKind::Sinc;
        fin.sinc.spec.size = f.min_kernel_size + 2 * uniform_int(rng, 0, steps);
        fin.sinc.spec.omega = uniform(rng, f.omega.lo, f.omega.hi);
        fin.sinc.kernel = build_kernel(fin.sinc.spec, config.kernel_size);
    } else {
        fin.sinc.applied = false;
        fin.sinc.spec = KernelSpec{KernelKind::Delta, 1};
        fin.sinc.kernel = delta_kernel(1);
    }
    fin.sinc_first = f.randomize_order ? bernoulli(rng, f.sinc_first_prob) : true;
    fin.mode = kRandomInterpModes[choose_index(rng, f.interp_weights)];
    fin.jpeg_quality = draw_quality(rng, f.jpeg);
    fin.jpeg_subsampling = f.jpeg.subsampling;
    return plan;
}

ImageF apply_plan(const ImageF& hr, const DegradationPlan& plan) {
    if (hr.height() != plan.hr_height || hr.width() != plan.hr_width) {
        fail(ErrorCode::DimensionMismatch, "plan was sampled for a different HR size");
    }
    const int lr_height = plan.hr_height / plan.scale, lr_width = plan.hr_width / plan.scale;
    ImageF x = run_stage(hr, plan.stage1);
    x = run_stage(std::move(x), plan.stage2);

    const FinalPlan& fin = plan.final_stage;
    auto resize_and_sinc = [&](ImageF img) {
        img = resize(img, lr_height, lr_width, fin.mode);
        if (fin.sinc.applied) img = apply_blur(img, fin.sinc.kernel);
        return img;
    };
    if (fin.sinc_first) {
        x = resize_and_sinc(std::move(x));
        x = jpeg_roundtrip(x, fin.jpeg_quality, fin.jpeg_subsampling);
    } else {
        x = jpeg_roundtrip(x, fin.jpeg_quality, fin.jpeg_subsampling);
        x = resize_and_sinc(std::move(x));
    }
    quantize8(x);
    return x;
}

DegradeResult degrade(const ImageF& hr, Rng& rng, const DegradationConfig& config) {
    const std::uint64_t seed = draw_seed(rng);
    DegradationPlan plan = sample_plan(seed, config, hr.height(), hr.width());
    ImageF lr = apply_plan(hr, plan);
    return {std::move(lr), std::move(plan)};
}

// ---- JSON ------------------------------------------------------------------

namespace {

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

void read_range(const json& j, const char* key, Range& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2) fail(ErrorCode::ParseError, std::string(key) + " must be [lo, hi]");
    out = {v[0].get<double>(), v[1].get<double>()};
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

std::string subsampling_name(ChromaSubsampling s) { return s == ChromaSubsampling::k420 ? "420" : "444"; }

ChromaSubsampling parse_subsampling(const std::string& text) {
    if (text == "420") return ChromaSubsampling::k420;
    if (text == "444") return ChromaSubsampling::k444;
    fail(ErrorCode::ParseError, "chroma subsampling must be \"420\" or \"444\"");
}

json jpeg_json(const JpegStageConfig& c) {
    return {{"quality", range_json(c.quality)}, {"chroma_subsampling", subsampling_name(c.subsampling)}};
}

void read_jpeg(const json& j, JpegStageConfig& c) {
    read_range(j, "quality", c.quality);
    if (j.contains("chroma_subsampling")) c.subsampling = parse_subsampling(j.at("chroma_subsampling").get<std::string>());
}

json stage_json(const StageConfig& s) {
    return {
        {"blur",
         {{"family_weights", s.blur.family_weights},
          {"sinc_prob", s.blur.sinc_prob},
          {"sigma", range_json(s.blur.sigma)},
          {"beta_generalized", range_json(s.blur.beta_generalized)},
          {"beta_plateau", range_json(s.blur.beta_plateau)},
          {"min_kernel_size", s.blur.min_kernel_size},
          {"max_kernel_size", s.blur.max_kernel_size},
          {"skip_prob", s.blur.skip_prob}}},
        {"resize",
         {{"direction_weights", s.resize.direction_weights},
          {"scale", range_json(s.resize.scale)},
          {"interp_weights", s.resize.interp_weights},
          {"relative_to", s.resize_base == ResizeBase::Target ? "target" : "input"}}},
        {"noise",
         {{"gaussian_prob", s.noise.gaussian_prob},
          {"gaussian_sigma", range_json(s.noise.gaussian_sigma)},
          {"poisson_scale", range_json(s.noise.poisson_scale)},
          {"gray_prob", s.noise.gray_prob}}},
        {"jpeg", [&] {
             json j = jpeg_json(s.jpeg);
             j["enabled"] = s.jpeg_enabled;
             return j;
         }()},
    };
}

void read_stage(const json& j, StageConfig& s) {
    if (j.contains("blur")) {
        const auto& b = j.at("blur");
        read(b, "family_weights", s.blur.family_weights);
        read(b, "sinc_prob", s.blur.sinc_prob);
        read_range(b, "sigma", s.blur.sigma);
        read_range(b, "beta_generalized", s.blur.beta_generalized);
        read_range(b, "beta_plateau", s.blur.beta_plateau);
        read(b, "min_kernel_size", s.blur.min_kernel_size);
        read(b, "max_kernel_size", s.blur.max_kernel_size);
        read(b, "skip_prob", s.blur.skip_prob);
    }
    if (j.contains("resize")) {
        const auto& r = j.at("resize");
        read(r, "direction_weights", s.resize.direction_weights);
        read_range(r, "scale", s.resize.scale);
        read(r, "interp_weights", s.resize.interp_weights);
        if (r.contains("relative_to")) {
            const auto base = r.at("relative_to").get<std::string>();
            if (base != "input" && base != "target") fail(ErrorCode::ParseError, "relative_to must be input or target");
            s.resize_base = base == "target" ? ResizeBase::Target : ResizeBase::Input;
        }
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        read(n, "gaussian_prob", s.noise.gaussian_prob);
        read_range(n, "gaussian_sigma", s.noise.gaussian_sigma);
        read_range(n, "poisson_scale", s.noise.poisson_scale);
        read(n, "gray_prob", s.noise.gray_prob);
    }
    if (j.contains("jpeg")) {
        read_jpeg(j.at("jpeg"), s.jpeg);
        read(j.at("jpeg"), "enabled", s.jpeg_enabled);
    }
}

json blur_record_json(const BlurRecord& b) {
    return {{"applied", b.applied},
            {"kind", to_string(b.spec.kind)},
            {"size", b.spec.size},
            {"sigma_x", b.spec.sigma_x},
            {"sigma_y", b.spec.sigma_y},
            {"rotation", b.spec.rotation},
            {"beta", b.spec.beta},
            {"omega", b.spec.omega},
            {"kernel_size", b.kernel.size},
            {"kernel", b.kernel.weights}};
}

BlurRecord blur_record_from_json(const json& j) {
    BlurRecord b;
    b.applied = j.at("applied").get<bool>();
    b.spec.kind = parse_kernel_kind(j.at("kind").get<std::string>());
    b.spec.size = j.at("size").get<int>();
    b.spec.sigma_x = j.at("sigma_x").get<double>();
    b.spec.sigma_y = j.at("sigma_y").get<double>();
    b.spec.rotation = j.at("rotation").get<double>();
    b.spec.beta = j.at("beta").get<double>();
    b.spec.omega = j.at("omega").get<double>();
    b.kernel.size = j.at("kernel_size").get<int>();
    b.kernel.weights = j.at("kernel").get<std::vector<double>>();
    if (b.kernel.weights.size() != static_cast<std::size_t>(b.kernel.size) * b.kernel.size) {
        fail(ErrorCode::ParseError, "kernel weight count does not match kernel_size");
    }
    return b;
}

json stage_plan_json(const StagePlan& s) {
    return {{"blur", blur_record_json(s.blur)},
            {"resize",
             {{"direction", to_string(s.resize.direction)},
              {"scale", s.resize.scale},
              {"mode", to_string(s.resize.mode)},
              {"out_height", s.resize.out_height},
              {"out_width", s.resize.out_width}}},
            {"noise",
             {{"kind", to_string(s.noise.kind)},
              {"strength", s.noise.strength},
              {"gray", s.noise.gray},
              {"seed", s.noise.seed}}},
            {"jpeg_quality", s.jpeg_quality ? json(*s.jpeg_quality) : json(nullptr)},
            {"jpeg_chroma_subsampling", subsampling_name(s.jpeg_subsampling)}};
}

StagePlan stage_plan_from_json(const json& j) {
    StagePlan s;
    s.blur = blur_record_from_json(j.at("blur"));
    const auto& r = j.at("resize");
    s.resize.direction = parse_resize_direction(r.at("direction").get<std::string>());
    s.resize.scale = r.at("scale").get<double>();
    s.resize.mode = parse_interp_mode(r.at("mode").get<std::string>());
    s.resize.out_height = r.at("out_height").get<int>();
    s.resize.out_width = r.at("out_width").get<int>();
    const auto& n = j.at("noise");
    s.noise.kind = parse_noise_kind(n.at("kind").get<std::string>());
    s.noise.strength = n.at("strength").get<double>();
    s.noise.gray = n.at("gray").get<bool>();
    s.noise.seed = n.at("seed").get<std::uint64_t>();
    if (!j.at("jpeg_quality").is_null()) s.jpeg_quality = j.at("jpeg_quality").get<int>();
    s.jpeg_subsampling = parse_subsampling(j.at("jpeg_chroma_subsampling").get<std::string>());
    return s;
}

}  // namespace

json to_json(const DegradationConfig& config) {
    const auto& f = config.final_stage;
    return {{"scale", config.scale},
            {"kernel_size", config.kernel_size},
            {"stage1", stage_json(config.stage1)},
            {"stage2", stage_json(config.stage2)},
            {"final",
             {{"sinc_prob", f.sinc_prob},
              {"min_kernel_size", f.min_kernel_size},
              {"max_kernel_size", f.max_kernel_size},
              {"omega", range_json(f.omega)},
              {"interp_weights", f.interp_weights},
              {"randomize_order", f.randomize_order},
              {"sinc_first_prob", f.sinc_first_prob},
              {"jpeg", jpeg_json(f.jpeg)}}}};
}

DegradationConfig config_from_json(const json& j) {
    DegradationConfig config = DegradationConfig::defaults();
    try {
        read(j, "scale", config.scale);
        read(j, "kernel_size", config.kernel_size);
        if (j.contains("stage1")) read_stage(j.at("stage1"), config.stage1);
        if (j.contains("stage2")) read_stage(j.at("stage2"), config.stage2);
        if (j.contains("final")) {
            const auto& fj = j.at("final");
            auto& f = config.final_stage;
            read(fj, "sinc_prob", f.sinc_prob);
            read(fj, "min_kernel_size", f.min_kernel_size);
            read(fj, "max_kernel_size", f.max_kernel_size);
            read_range(fj, "omega", f.omega);
            read(fj, "interp_weights", f.interp_weights);
            read(fj, "randomize_order", f.randomize_order);
            read(fj, "sinc_first_prob", f.sinc_first_prob);
            if (fj.contains("jpeg")) read_jpeg(fj.at("jpeg"), f.jpeg);
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, std::string("degradation config: ") + e.what());
    }
    if (config.scale != 4) fail(ErrorCode::InvalidConfig, "only x4 degradation is supported");
    validate(config);
    return config;
}

json to_json(const DegradationPlan& plan) {
    const auto& f = plan.final_stage;
    return {{"seed", plan.seed},
            {"scale", plan.scale},
            {"hr_height", plan.hr_height},
            {"hr_width", plan.hr_width},
            {"stage1", stage_plan_json(plan.stage1)},
            {"stage2", stage_plan_json(plan.stage2)},
            {"final",
             {{"sinc_first", f.sinc_first},
              {"mode", to_string(f.mode)},
              {"sinc", blur_record_json(f.sinc)},
              {"jpeg_quality", f.jpeg_quality},
              {"jpeg_chroma_subsampling", subsampling_name(f.jpeg_subsampling)}}}};
}

DegradationPlan plan_from_json(const json& j) {
    try {
        DegradationPlan plan;
        plan.seed = j.at("seed").get<std::uint64_t>();
        plan.scale = j.at("scale").get<int>();
        plan.hr_height = j.at("hr_height").get<int>();
        plan.hr_width = j.at("hr_width").get<int>();
        plan.stage1 = stage_plan_from_json(j.at("stage1"));
        plan.stage2 = stage_plan_from_json(j.at("stage2"));
        const auto& fj = j.at("final");
        plan.final_stage.sinc_first = fj.at("sinc_first").get<bool>();
        plan.final_stage.mode = parse_interp_mode(fj.at("mode").get<std::string>());
        plan.final_stage.sinc = blur_record_from_json(fj.at("sinc"));
        plan.final_stage.jpeg_quality = fj.at("jpeg_quality").get<int>();
        plan.final_stage.jpeg_subsampling = parse_subsampling(fj.at("jpeg_chroma_subsampling").get<std::string>());
        return plan;
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, std::string("degradation plan: ") + e.what());
    }
}

}  // namespace uwsr::degradation
