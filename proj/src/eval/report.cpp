#include "uwsr/eval/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <limits>
#include <map>
#include <memory>
#include <set>

#include "uwsr/degradation/resample.hpp"
#include "uwsr/error.hpp"
#include "uwsr/eval/metrics.hpp"
#include "uwsr/fileio.hpp"
#include "uwsr/image_io.hpp"

namespace uwsr::eval {
namespace fs = std::filesystem;
using nlohmann::json;

ModelEntry checkpoint_model(const fs::path& checkpoint, infer::WeightsChoice weights, const infer::TileConfig& tiles) {
    auto loaded = std::make_shared<infer::LoadedGenerator>(infer::load_generator(checkpoint, weights));
    ModelEntry m;
    m.id = checkpoint.stem().string();
    m.checkpoint = loaded->path.string();
    m.sha256 = loaded->sha256;
    m.upscale = [loaded, tiles](const ImageF& lr) { return infer::upscale(lr, *loaded->net, tiles); };
    return m;
}

ModelEntry bicubic_model(int scale) {
    ModelEntry m;
    m.id = "bicubic";
    m.upscale = [scale](const ImageF& lr) {
        ImageF out = degradation::resize(lr, lr.height() * scale, lr.width() * scale, degradation::InterpMode::Bicubic);
        clamp01(out);
        return out;
    };
    return m;
}

namespace {

struct Moments {
    double mean = 0, median = 0, std = 0;
};

Moments moments(std::vector<double> v) {
    Moments m;
    if (v.empty()) {
        m.mean = m.median = m.std = std::numeric_limits<double>::quiet_NaN();
        return m;
    }
    std::sort(v.begin(), v.end());
    double sum = 0;
    for (double x : v) sum += x;
    m.mean = sum / static_cast<double>(v.size());
    const std::size_t n = v.size();
    m.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    double ss = 0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(n));
    return m;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::vector<Aggregate> aggregate(const std::vector<MetricRow>& rows) {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_model;
    std::map<std::string, int> failed;
    for (const auto& r : rows) {
        auto& [p, s] = by_model[r.model_id];
        if (std::isfinite(r.psnr_db) && std::isfinite(r.ssim)) {
            p.push_back(r.psnr_db);
            s.push_back(r.ssim);
        } else {
            ++failed[r.model_id];
        }
    }
    std::vector<Aggregate> out;
    for (const auto& [id, values] : by_model) {
        Aggregate a;
        a.model_id = id;
        a.count = static_cast<int>(values.first.size());
        a.failed = failed[id];
        const auto p = moments(values.first), s = moments(values.second);
        a.psnr_mean = p.mean;
        a.psnr_median = p.median;
        a.psnr_std = p.std;
        a.ssim_mean = s.mean;
        a.ssim_median = s.median;
        a.ssim_std = s.std;
        out.push_back(a);
    }
    return out;
}

std::string MetricReport::to_csv() const {
    std::string s = "image_id,model_id,psnr_db,ssim,error\n";
    for (const auto& r : rows) {
        s += csv_field(r.image_id) + "," + csv_field(r.model_id) + "," + fmt(r.psnr_db) + "," + fmt(r.ssim) + "," +
             csv_field(r.error) + "\n";
    }
    return s;
}

json MetricReport::to_json() const {
    json rj = json::array();
    for (const auto& r : rows) {
        json row = {{"image_id", r.image_id}, {"model_id", r.model_id}, {"psnr_db", number(r.psnr_db)}, {"ssim", number(r.ssim)}};
        if (!r.error.empty()) row["error"] = r.error;
        rj.push_back(std::move(row));
    }
    json aj = json::array();
    for (const auto& a : aggregates) {
        aj.push_back({{"model_id", a.model_id},
                      {"count", a.count},
                      {"failed", a.failed},
                      {"psnr_db", {{"mean", number(a.psnr_mean)}, {"median", number(a.psnr_median)}, {"std", number(a.psnr_std)}}},
                      {"ssim", {{"mean", number(a.ssim_mean)}, {"median", number(a.ssim_median)}, {"std", number(a.ssim_std)}}}});
    }
    return {{"metadata", metadata}, {"rows", rj}, {"aggregates", aj}};
}

void MetricReport::write(const fs::path& dir) const {
    fs::create_directories(dir);
    write_text_atomic(dir / "report.csv", to_csv());
    write_text_atomic(dir / "report.json", to_json().dump(2));
}

MetricReport evaluate_models(const data::DatasetIndex& index, const std::vector<ModelEntry>& models) {
    std::set<std::string> ids;
    for (const auto& m : models) {
        if (!m.upscale) fail(ErrorCode::InvalidConfig, "model " + m.id + " has no upscaler");
        if (!ids.insert(m.id).second) fail(ErrorCode::InvalidConfig, "duplicate model id " + m.id);
    }
    MetricReport report;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& pair : index.pairs) {
        ImageF hr, lr;
        std::string load_error;
        try {
            if (!pair.lr_path) fail(ErrorCode::UnpairedImage, "no LR image for " + pair.stem);
            hr = load_image(pair.hr_path);
            lr = load_image(*pair.lr_path);
        } catch (const std::exception& e) {
            load_error = e.what();
        }
        for (const auto& m : models) {
            MetricRow row{pair.stem, m.id, nan, nan, load_error};
            if (load_error.empty()) {
                try {
                    const ImageF sr = m.upscale(lr);
                    row.psnr_db = psnr(sr, hr);
                    row.ssim = ssim(sr, hr);
                } catch (const std::exception& e) {
                    row.error = e.what();
                    row.psnr_db = row.ssim = nan;
                }
            }
            report.rows.push_back(std::move(row));
        }
    }
    std::sort(report.rows.begin(), report.rows.end(), [](const MetricRow& a, const MetricRow& b) {
        return std::tie(a.image_id, a.model_id) < std::tie(b.image_id, b.model_id);
    });
    report.aggregates = aggregate(report.rows);

    json mj = json::array();
    for (const auto& m : models) mj.push_back({{"id", m.id}, {"checkpoint", m.checkpoint}, {"sha256", m.sha256}});
    report.metadata = {{"dataset", index.root.string()},
                       {"split", std::string(data::to_string(index.split))},
                       {"images", index.size()},
                       {"models", mj},
                       {"timestamp", utc_now()},
                       {"note", "PSNR and SSIM are reported for reference; neither tracks perceived quality reliably"}};
    return report;
}

}  // namespace uwsr::eval
