#include "uwsr/infer/upscale.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "uwsr/error.hpp"
#include "uwsr/fileio.hpp"
#include "uwsr/image_io.hpp"
#include "uwsr/nn/image_tensor.hpp"
#include "uwsr/nn/torch_import.hpp"

namespace uwsr::infer {
namespace fs = std::filesystem;
using nlohmann::json;

void validate(const TileConfig& t) {
    if (t.tile_size != 0 && t.tile_size < 32) fail(ErrorCode::InvalidConfig, "tile size must be 0 or at least 32");
    if (t.tile_pad < 0) fail(ErrorCode::InvalidConfig, "tile pad must be non-negative");
    if (t.pre_pad < 0) fail(ErrorCode::InvalidConfig, "pre pad must be non-negative");
}

json to_json(const TileConfig& t) {
    return {{"tile_size", t.tile_size}, {"tile_pad", t.tile_pad}, {"pre_pad", t.pre_pad}};
}

std::string_view to_string(WeightsChoice weights) noexcept { return weights == WeightsChoice::Ema ? "ema" : "raw"; }

WeightsChoice parse_weights_choice(std::string_view text) {
    if (text == "ema") return WeightsChoice::Ema;
    if (text == "raw") return WeightsChoice::Raw;
    fail(ErrorCode::InvalidConfig, "weights must be ema or raw, got " + std::string(text));
}

LoadedGenerator load_generator(const fs::path& checkpoint, WeightsChoice weights) {
    LoadedGenerator out;
    out.path = checkpoint;
    if (fs::is_directory(checkpoint)) {
        out.path = checkpoint / (weights == WeightsChoice::Ema ? "net_g_ema.safetensors" : "net_g.safetensors");
    }
    if (!fs::is_regular_file(out.path)) fail(ErrorCode::CheckpointMissing, "no generator checkpoint at " + out.path.string());

    const bool torch = out.path.extension() == ".pth" || out.path.extension() == ".pt";
    const auto archive = nn::read_any_checkpoint(out.path, torch ? (weights == WeightsChoice::Ema ? "params_ema" : "params")
                                                                 : "auto");
    out.meta = nn::meta_from_archive(archive);
    if (out.meta.architecture.empty()) {
        out.meta = nn::infer_checkpoint_meta(archive);
        out.meta.is_ema = torch && weights == WeightsChoice::Ema;
    }
    if (out.meta.architecture != "rrdbnet") {
        fail(ErrorCode::StrictMismatch, out.path.string() + " holds a " + out.meta.architecture + ", not a generator");
    }
    out.net = std::make_unique<nn::Generator<float>>(nn::generator_config_from_json(out.meta.config));
    nn::load_archive(archive, *out.net, true);
    out.net->set_requires_grad(false);
    out.sha256 = sha256_file(out.path);
    return out;
}

namespace {

int reflect(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

ImageF pad_bottom_right(const ImageF& img, int pad) {
    ImageF out(img.channels(), img.height() + pad, img.width() + pad);
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x) out.at(c, y, x) = img.at(c, reflect(y, img.height()), reflect(x, img.width()));
    return out;
}

ImageF run_network(const ImageF& img, const nn::Generator<float>& g) {
    return nn::tensor_to_image(g.forward(nn::image_to_tensor<float>(img)));
}

}  // namespace

ImageF upscale(const ImageF& img, const nn::Generator<float>& g, const TileConfig& tiles) {
    validate(tiles);
    if (img.channels() != 3) fail(ErrorCode::UnsupportedChannelCount, "upscaling needs a 3-channel image");
    if (img.empty()) fail(ErrorCode::TooSmall, "empty image");
    const int scale = g.config().scale;
    nn::NoGradGuard no_grad;

    const ImageF src = tiles.pre_pad > 0 ? pad_bottom_right(img, tiles.pre_pad) : img;
    const int h = src.height(), w = src.width();
    ImageF out;
    if (tiles.tile_size == 0) {
        out = run_network(src, g);
    } else {
        out = ImageF(3, h * scale, w * scale);
        const int t = tiles.tile_size, p = tiles.tile_pad;
        for (int y0 = 0; y0 < h; y0 += t) {
            for (int x0 = 0; x0 < w; x0 += t) {
                const int y1 = std::min(y0 + t, h), x1 = std::min(x0 + t, w);
                const int py0 = std::max(y0 - p, 0), px0 = std::max(x0 - p, 0);
                const int py1 = std::min(y1 + p, h), px1 = std::min(x1 + p, w);
                const ImageF tile_out = run_network(crop(src, py0, px0, py1 - py0, px1 - px0), g);
                const int oy = (y0 - py0) * scale, ox = (x0 - px0) * scale;
                for (int c = 0; c < 3; ++c)
                    for (int y = 0; y < (y1 - y0) * scale; ++y)
                        std::copy_n(tile_out.plane(c).data() + static_cast<std::size_t>(oy + y) * tile_out.width() + ox,
                                    (x1 - x0) * scale, &out.at(c, y0 * scale + y, x0 * scale));
            }
        }
    }
    if (tiles.pre_pad > 0) out = crop(out, 0, 0, img.height() * scale, img.width() * scale);
    if (!all_finite(out)) fail(ErrorCode::NonFiniteOutput, "generator produced non-finite values");
    clamp01(out);
    return out;
}

std::size_t UpscaleRun::failures() const {
    return static_cast<std::size_t>(std::count_if(files.begin(), files.end(), [](const auto& f) { return !f.ok(); }));
}

std::vector<fs::path> UpscaleRun::written() const {
    std::vector<fs::path> out;
    for (const auto& f : files)
        if (f.ok()) out.push_back(f.output);
    return out;
}

UpscaleRun upscale_path(const fs::path& input, const fs::path& output_dir, const LoadedGenerator& generator,
                        const TileConfig& tiles) {
    validate(tiles);
    if (!generator.net) fail(ErrorCode::CheckpointMissing, "no generator loaded");
    std::vector<fs::path> inputs;
    if (fs::is_directory(input)) {
        for (const auto& e : fs::directory_iterator(input)) {
            if (e.is_regular_file() && is_image_file(e.path())) inputs.push_back(e.path());
        }
        std::sort(inputs.begin(), inputs.end());
    } else if (fs::is_regular_file(input)) {
        inputs.push_back(input);
    } else {
        fail(ErrorCode::IoError, "input not found: " + input.string());
    }
    fs::create_directories(output_dir);

    UpscaleRun run;
    json files = json::array();
    for (const auto& path : inputs) {
        FileResult r;
        r.input = path;
        const auto start = std::chrono::steady_clock::now();
        try {
            const ImageF lr = load_image(path);
            r.width = lr.width();
            r.height = lr.height();
            const ImageF sr = upscale(lr, *generator.net, tiles);
            r.out_width = sr.width();
            r.out_height = sr.height();
            const fs::path dest = output_dir / (path.stem().string() + "_x4.png");
            save_png(sr, dest);
            r.output = dest;
        } catch (const std::exception& e) {
            r.error = e.what();
            if (r.error.empty()) r.error = "unknown error";
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json f = {{"input", r.input.string()}, {"seconds", r.seconds}, {"ok", r.ok()}};
        if (r.ok()) {
            f["output"] = r.output.string();
            f["input_size"] = {r.width, r.height};
            f["output_size"] = {r.out_width, r.out_height};
        } else {
            f["error"] = r.error;
        }
        files.push_back(std::move(f));
        run.files.push_back(std::move(r));
    }
    run.manifest = {{"checkpoint", generator.path.string()},
                    {"checkpoint_sha256", generator.sha256},
                    {"weights", generator.meta.is_ema ? "ema" : "raw"},
                    {"generator", nn::to_json(generator.net->config())},
                    {"tiles", to_json(tiles)},
                    {"input", input.string()},
                    {"processed", run.files.size()},
                    {"failed", run.failures()},
                    {"files", std::move(files)}};
    write_text_atomic(output_dir / "manifest.json", run.manifest.dump(2));
    return run;
}

}  // namespace uwsr::infer
