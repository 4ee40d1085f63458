#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "uwsr/data/dataset.hpp"
#include "uwsr/degradation/pipeline.hpp"
#include "uwsr/error.hpp"
#include "uwsr/eval/figures.hpp"
#include "uwsr/eval/report.hpp"
#include "uwsr/fileio.hpp"
#include "uwsr/image_io.hpp"
#include "uwsr/infer/upscale.hpp"
#include "uwsr/nn/checkpoint.hpp"
#include "uwsr/nn/discriminator.hpp"
#include "uwsr/nn/generator.hpp"
#include "uwsr/nn/torch_import.hpp"
#include "uwsr/nn/vgg.hpp"
#include "uwsr/train/trainer.hpp"

using namespace uwsr;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

int cmd_dataset_scan(const fs::path& root, const std::string& split, int scale, bool lenient, const fs::path& out) {
    data::ScanOptions opts;
    opts.strict = !lenient;
    auto index = data::scan_dataset(root, data::parse_split(split), scale, opts);
    const auto manifest = data::dataset_manifest(index).dump(2);
    if (out.empty()) {
        std::cout << manifest << "\n";
    } else {
        write_text_atomic(out, manifest + "\n");
        std::cerr << index.size() << " pairs -> " << out.string() << "\n";
    }
    return 0;
}

int cmd_degrade(const fs::path& in, const fs::path& out, const fs::path& config_path, std::uint64_t seed) {
    const auto config = config_path.empty() ? degradation::DegradationConfig::defaults()
                                            : degradation::config_from_json(read_json(config_path));
    degradation::validate(config);
    if (!fs::is_directory(in)) fail(ErrorCode::MissingFolder, in.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());

    fs::create_directories(out);
    std::ofstream plans(out / "plans.jsonl", std::ios::trunc);
    Rng rng(seed);
    for (const auto& f : files) {
        const auto hr = load_image(f);
        auto r = degradation::degrade(hr, rng, config);
        const auto name = f.stem().string() + ".png";
        save_png(r.lr, out / name);
        plans << json{{"image", f.filename().string()}, {"output", name}, {"plan", degradation::to_json(r.plan)}}.dump()
              << "\n";
    }
    std::cerr << files.size() << " images degraded into " << out.string() << "\n";
    return 0;
}

int cmd_convert(const fs::path& in, const fs::path& out, const std::string& key) {
    auto r = nn::convert_checkpoint(in, out, key);
    std::cout << json{{"output", r.output.string()},
                      {"architecture", r.meta.architecture},
                      {"selected_key", r.selected_key},
                      {"load", r.report.to_json()}}
                     .dump(2)
              << "\n";
    return 0;
}

int cmd_init(const std::string& arch, const std::string& size, std::uint64_t seed, const fs::path& out) {
    const bool tiny = size == "tiny";
    if (!tiny && size != "full") fail(ErrorCode::InvalidConfig, "--size must be full or tiny");
    Rng rng(seed);
    const std::string source = "random init, seed " + std::to_string(seed);
    if (arch == "generator") {
        nn::Generator<float> g(tiny ? nn::GeneratorConfig::tiny() : nn::GeneratorConfig{});
        g.init(rng);
        nn::save_checkpoint(g, {"rrdbnet", nn::to_json(g.config()), 4, 0, false, source}, out);
    } else if (arch == "discriminator") {
        nn::Discriminator<float> d(tiny ? nn::DiscriminatorConfig::tiny() : nn::DiscriminatorConfig{});
        d.init(rng);
        nn::save_checkpoint(d, {"unet_discriminator_sn", nn::to_json(d.config()), 4, 0, false, source}, out);
    } else if (arch == "vgg") {
        nn::VggFeatureExtractor<float> v(tiny ? nn::VggConfig::tiny() : nn::VggConfig{});
        v.init(rng);
        nn::save_checkpoint(v, {"vgg19_features", nn::to_json(v.config()), 1, 0, false, source}, out);
    } else {
        fail(ErrorCode::InvalidConfig, "--arch must be generator, discriminator or vgg");
    }
    std::cerr << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_train(const fs::path& config_path, const std::optional<fs::path>& resume, std::optional<int> iterations,
              bool dry_run, int print_every) {
    auto config = train::load_train_config(config_path);
    if (iterations) config.total_iterations = *iterations;
    train::validate(config);
    const auto index = data::scan_dataset(config.dataset_root, data::Split::Train, config.degradation.scale);
    const auto sched = train::schedule_summary(static_cast<int>(index.size()), config.batch_size,
                                               config.total_iterations);
    std::cout << "dataset " << sched.dataset_size << " images, batch " << sched.batch_size << ", "
              << sched.iterations_per_epoch << " iterations/epoch, " << sched.total_iterations << " iterations = "
              << sched.epochs_text() << " epochs\n";
    if (dry_run) {
        std::cout << sched.to_json().dump(2) << "\n";
        return 0;
    }
    auto result = train::finetune(config, resume, [&](const train::IterationStats& s) {
        if (print_every > 0 && (s.iteration % print_every == 0 || s.iteration == config.total_iterations)) {
            std::printf("iter %6lld  l1 %.5f  percep %.5f  gan_g %.5f  gan_d %.5f  %.2fs\n",
                        static_cast<long long>(s.iteration), s.l1, s.perceptual, s.gan_g, s.gan_d, s.seconds);
            std::fflush(stdout);
        }
    });
    std::cout << "finished at iteration " << result.iterations << "\n"
              << "  generator (ema) " << result.generator_ema.string() << "\n"
              << "  generator       " << result.generator.string() << "\n"
              << "  discriminator   " << result.discriminator.string() << "\n"
              << "  log             " << result.log.string() << "\n";
    return 0;
}

int cmd_upscale(const fs::path& in, const fs::path& out, const fs::path& ckpt, const infer::TileConfig& tiles,
                const std::string& weights) {
    infer::validate(tiles);
    auto g = infer::load_generator(ckpt, infer::parse_weights_choice(weights));
    auto run = infer::upscale_path(in, out, g, tiles);
    for (const auto& f : run.files)
        if (!f.ok()) std::cerr << "failed: " << f.input.string() << ": " << f.error << "\n";
    std::cout << run.written().size() << " written, " << run.failures() << " failed, manifest "
              << (out / "manifest.json").string() << "\n";
    return run.failures() == 0 ? 0 : 1;
}

eval::GridFile default_grid(const data::DatasetIndex& index) {
    eval::GridFile g;
    for (std::size_t i = 0; i < index.size() && i < 4; ++i) g.rows.push_back(index.pairs[i].stem);
    return g;
}

void write_grids(const data::DatasetIndex& index, const eval::ModelEntry& baseline, const eval::ModelEntry& tuned,
                 const eval::GridFile& file, const fs::path& dir) {
    fs::create_directories(dir);
    eval::GridSpec spec;
    spec.cell_width = file.cell_width;
    spec.cell_height = file.cell_height;
    spec.gutter = file.gutter;
    spec.labels = file.labels;
    for (const auto& [box, zoom] : file.boxes) spec.boxes.push_back(box);
    for (const auto& id : file.rows) {
        auto it = std::find_if(index.pairs.begin(), index.pairs.end(), [&](const auto& p) { return p.stem == id; });
        if (it == index.pairs.end() || !it->lr_path) fail(ErrorCode::MissingCell, "no LR/HR pair for grid row " + id);
        eval::GridRow row;
        row.image_id = id;
        row.cells[0] = load_image(*it->lr_path);
        row.cells[1] = baseline.upscale(row.cells[0]);
        row.cells[2] = tuned.upscale(row.cells[0]);
        row.cells[3] = load_image(it->hr_path);
        for (std::size_t b = 0; b < file.boxes.size(); ++b) {
            const auto& [box, zoom] = file.boxes[b];
            for (int c = 1; c < 4; ++c) {
                const auto m = eval::magnify_region(row.cells[c], box, zoom);
                static const char* names[] = {"input", "baseline", "finetuned", "original"};
                save_png(m.panel, dir / (id + "_box" + std::to_string(b) + "_" + names[c] + ".png"));
            }
        }
        spec.rows.push_back(std::move(row));
    }
    if (spec.rows.empty()) return;
    save_png(eval::make_comparison_grid(spec), dir / "grid.png");
}

int cmd_eval(const fs::path& root, const std::vector<fs::path>& models, const fs::path& grids, const fs::path& out,
             const std::string& weights, const infer::TileConfig& tiles) {
    const auto index = data::scan_dataset(root, data::Split::Test, 4, {true, true});
    const auto choice = infer::parse_weights_choice(weights);
    std::vector<eval::ModelEntry> entries;
    if (models.size() == 1) entries.push_back(eval::bicubic_model());
    for (const auto& m : models) entries.push_back(eval::checkpoint_model(m, choice, tiles));
    // Two checkpoints that share a file stem still need distinct ids.
    for (std::size_t i = 0; i < entries.size(); ++i)
        for (std::size_t k = 0; k < i; ++k)
            if (entries[i].id == entries[k].id) entries[i].id += "_" + std::to_string(i);

    auto report = eval::evaluate_models(index, entries);
    report.write(out);
    for (const auto& a : report.aggregates) {
        std::printf("%-24s n=%d failed=%d  PSNR %.3f dB (median %.3f)  SSIM %.4f (median %.4f)\n", a.model_id.c_str(),
                    a.count, a.failed, a.psnr_mean, a.psnr_median, a.ssim_mean, a.ssim_median);
    }
    const auto file = grids.empty() ? default_grid(index) : eval::grid_file_from_json(read_json(grids));
    write_grids(index, entries[0], entries[1], file, out / "grids");
    std::cout << "report written to " << out.string() << "\n";
    int failed = 0;
    for (const auto& a : report.aggregates) failed += a.failed;
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Underwater x4 super-resolution toolkit"};
    app.require_subcommand(1);

    auto* dataset = app.add_subcommand("dataset", "Dataset utilities");
    dataset->require_subcommand(1);
    auto* scan = dataset->add_subcommand("scan", "Index an HR/LR dataset and print its manifest");
    fs::path scan_root, scan_out;
    std::string scan_split = "train";
    int scan_scale = 4;
    bool scan_lenient = false;
    scan->add_option("--root", scan_root, "Dataset root")->required();
    scan->add_option("--split", scan_split, "train or test")->capture_default_str();
    scan->add_option("--scale", scan_scale, "LR folder scale")->capture_default_str();
    scan->add_flag("--lenient", scan_lenient, "Skip unpaired files instead of failing");
    scan->add_option("--out", scan_out, "Write the manifest here instead of stdout");

    auto* degrade = app.add_subcommand("degrade", "Materialize degraded LR images from a folder of HR images");
    fs::path deg_in, deg_out, deg_config;
    std::uint64_t deg_seed = 0;
    degrade->add_option("--input-dir", deg_in)->required();
    degrade->add_option("--output-dir", deg_out)->required();
    degrade->add_option("--config", deg_config, "Degradation config (JSON); defaults when omitted");
    degrade->add_option("--seed", deg_seed)->capture_default_str();

    auto* convert = app.add_subcommand("convert-checkpoint", "Convert a PyTorch checkpoint to a named-tensor archive");
    fs::path conv_in, conv_out;
    std::string conv_key = "auto";
    convert->add_option("--input", conv_in)->required();
    convert->add_option("--output", conv_out)->required();
    convert->add_option("--key", conv_key, "State dict to take: auto, params_ema, params, ...")->capture_default_str();

    auto* init = app.add_subcommand("init-checkpoint", "Write a randomly initialized network archive");
    std::string init_arch, init_size = "full";
    std::uint64_t init_seed = 0;
    fs::path init_out;
    init->add_option("--arch", init_arch, "generator, discriminator or vgg")->required();
    init->add_option("--size", init_size, "full or tiny")->capture_default_str();
    init->add_option("--seed", init_seed)->capture_default_str();
    init->add_option("--output", init_out)->required();

    auto* train = app.add_subcommand("train", "Fine-tune the generator and discriminator");
    fs::path train_config;
    std::optional<fs::path> train_resume;
    std::optional<int> train_iters;
    bool train_dry = false;
    int train_every = 10;
    train->add_option("--config", train_config, "Training config (JSON)")->required();
    train->add_option("--resume", train_resume, "State archive to continue from");
    train->add_option("--iterations", train_iters, "Override total_iterations");
    train->add_flag("--dry-run", train_dry, "Print the schedule and exit");
    train->add_option("--print-every", train_every)->capture_default_str();

    infer::TileConfig tiles;
    std::string weights = "ema";
    auto add_tiles = [&](CLI::App* cmd) {
        cmd->add_option("--tile", tiles.tile_size, "Tile size, 0 disables tiling")->capture_default_str();
        cmd->add_option("--tile-pad", tiles.tile_pad)->capture_default_str();
        cmd->add_option("--pre-pad", tiles.pre_pad)->capture_default_str();
        cmd->add_option("--weights", weights, "ema or raw")->capture_default_str();
    };

    auto* up = app.add_subcommand("upscale", "Upscale an image or a folder of images by 4x");
    fs::path up_in, up_out, up_ckpt;
    up->add_option("--input", up_in)->required();
    up->add_option("--output", up_out)->required();
    up->add_option("--checkpoint", up_ckpt, "Generator archive, training output folder or .pth")->required();
    add_tiles(up);

    auto* ev = app.add_subcommand("eval", "Score models on the test split and draw comparison grids");
    fs::path ev_root, ev_grids, ev_out = "eval_out";
    std::vector<fs::path> ev_models;
    ev->add_option("--dataset", ev_root, "Dataset root with a test split")->required();
    ev->add_option("--models", ev_models, "Baseline checkpoint, then the fine-tuned one")->required()->expected(1, 2);
    ev->add_option("--grids", ev_grids, "Grid file (JSON)");
    ev->add_option("--out", ev_out)->capture_default_str();
    add_tiles(ev);

    CLI11_PARSE(app, argc, argv);

    try {
        if (scan->parsed()) return cmd_dataset_scan(scan_root, scan_split, scan_scale, scan_lenient, scan_out);
        if (degrade->parsed()) return cmd_degrade(deg_in, deg_out, deg_config, deg_seed);
        if (convert->parsed()) return cmd_convert(conv_in, conv_out, conv_key);
        if (init->parsed()) return cmd_init(init_arch, init_size, init_seed, init_out);
        if (train->parsed()) return cmd_train(train_config, train_resume, train_iters, train_dry, train_every);
        if (up->parsed()) return cmd_upscale(up_in, up_out, up_ckpt, tiles, weights);
        if (ev->parsed()) return cmd_eval(ev_root, ev_models, ev_grids, ev_out, weights, tiles);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
