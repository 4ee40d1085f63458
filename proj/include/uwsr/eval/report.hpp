#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwsr/data/dataset.hpp"
#include "uwsr/image.hpp"
#include "uwsr/infer/upscale.hpp"

namespace uwsr::eval {

// Anything that maps an LR image to a 4x image.
struct ModelEntry {
    std::string id;
    std::function<ImageF(const ImageF&)> upscale;
    std::string checkpoint;  // empty for non-network baselines
    std::string sha256;
};

ModelEntry checkpoint_model(const std::filesystem::path& checkpoint, infer::WeightsChoice weights = infer::WeightsChoice::Ema,
                            const infer::TileConfig& tiles = {});
// Bicubic x4 resize of the LR input.
ModelEntry bicubic_model(int scale = 4);

struct MetricRow {
    std::string image_id;
    std::string model_id;
    double psnr_db = 0.0;  // NaN when the image failed
    double ssim = 0.0;
    std::string error;
};

struct Aggregate {
    std::string model_id;
    int count = 0;   // rows with finite metrics
    int failed = 0;
    double psnr_mean = 0.0, psnr_median = 0.0, psnr_std = 0.0;  // population std
    double ssim_mean = 0.0, ssim_median = 0.0, ssim_std = 0.0;
    friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

struct MetricReport {
    std::vector<MetricRow> rows;  // sorted by (image_id, model_id)
    std::vector<Aggregate> aggregates;  // sorted by model_id
    nlohmann::json metadata = nlohmann::json::object();

    std::string to_csv() const;
    nlohmann::json to_json() const;
    // report.csv and report.json
    void write(const std::filesystem::path& dir) const;
};

std::vector<Aggregate> aggregate(const std::vector<MetricRow>& rows);

// Upscales every LR of `index` with every model and scores it against the HR.
// Model ids must be unique; per-image failures become NaN rows.
MetricReport evaluate_models(const data::DatasetIndex& index, const std::vector<ModelEntry>& models);

}  // namespace uwsr::eval
