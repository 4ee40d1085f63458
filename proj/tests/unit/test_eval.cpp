#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "fixtures.hpp"
#include "uwsr/error.hpp"
#include "uwsr/eval/figures.hpp"
#include "uwsr/eval/metrics.hpp"
#include "uwsr/eval/report.hpp"
#include "uwsr/fileio.hpp"
#include "uwsr/image_io.hpp"
#include "uwsr/nn/archive.hpp"

using namespace uwsr;
using namespace uwsr::eval;
using uwsr::testing::TempDir;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

ImageF offset(const ImageF& a, float d) {
    ImageF b = a;
    for (float& v : b.values()) v += d;
    return b;
}

// Direct per-window SSIM with a 2-D Gaussian, no separable filtering.
double brute_ssim(const ImageF& a, const ImageF& b) {
    const ImageF x = a.channels() == 1 ? a : luminance(a), y = b.channels() == 1 ? b : luminance(b);
    double w[11][11], sum = 0;
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) sum += w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
    const double c1 = 1e-4, c2 = 9e-4;
    double total = 0;
    int n = 0;
    for (int r = 0; r + 11 <= x.height(); ++r)
        for (int c = 0; c + 11 <= x.width(); ++c) {
            double mx = 0, my = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    mx += w[i][j] / sum * x.at(0, r + i, c + j);
                    my += w[i][j] / sum * y.at(0, r + i, c + j);
                }
            double vx = 0, vy = 0, cv = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    const double dx = x.at(0, r + i, c + j) - mx, dy = y.at(0, r + i, c + j) - my;
                    vx += w[i][j] / sum * dx * dx;
                    vy += w[i][j] / sum * dy * dy;
                    cv += w[i][j] / sum * dx * dy;
                }
            total += (2 * mx * my + c1) * (2 * cv + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++n;
        }
    return total / n;
}

ImageF transpose(const ImageF& img) {
    ImageF out(img.channels(), img.width(), img.height());
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) out.at(c, x, y) = img.at(c, y, x);
    return out;
}

ImageF flip_h(const ImageF& img) {
    ImageF out = img;
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) out.at(c, y, x) = img.at(c, y, img.width() - 1 - x);
    return out;
}

ImageF from_planar(const std::vector<float>& v, int c, int h, int w) {
    ImageF img(c, h, w);
    std::copy(v.begin(), v.end(), img.data());
    return img;
}

GridRow row_of(const std::string& id, int lr_h, int lr_w, std::uint64_t seed) {
    GridRow r;
    r.image_id = id;
    r.cells[0] = uwsr::testing::random_image(3, lr_h, lr_w, seed);
    for (int c = 1; c < 4; ++c) r.cells[c] = uwsr::testing::random_image(3, 4 * lr_h, 4 * lr_w, seed + c);
    return r;
}

}  // namespace

TEST_CASE("PSNR closed forms, brute force and properties") {
    auto a = uwsr::testing::random_image(3, 32, 40, 1, 0.0f, 250.0f / 255.0f);
    CHECK(psnr(a, a) == kPsnrCap);
    CHECK(std::abs(psnr(a, offset(a, 1.0f / 255.0f)) - 48.1308) < 1e-3);
    CHECK(std::abs(20 * std::log10(255.0) - 48.131) < 1e-3);

    auto b = uwsr::testing::random_image(3, 32, 40, 2);
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::pow(static_cast<double>(a.data()[i]) - b.data()[i], 2);
    const double brute = 10 * std::log10(static_cast<double>(a.size()) / sum);
    CHECK(std::abs(psnr(a, b) - brute) < 1e-6);
    CHECK(std::abs(psnr(a, b) - psnr(b, a)) < 1e-9);

    const double p1 = psnr(a, offset(a, 0.01f)), p2 = psnr(a, offset(a, 0.02f)), p3 = psnr(a, offset(a, 0.04f));
    CHECK(p1 > p2);
    CHECK(p2 > p3);
    CHECK(code_of([&] { psnr(a, ImageF(3, 32, 41)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("SSIM closed forms and oracles") {
    auto a = uwsr::testing::underwater_scene(48, 64, 3);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    const auto lo = uwsr::testing::constant_image(3, 16, 16, 0.25f), hi = uwsr::testing::constant_image(3, 16, 16, 0.75f);
    const double expect = (2 * 0.25 * 0.75 + 1e-4) / (0.25 * 0.25 + 0.75 * 0.75 + 1e-4);
    CHECK(std::abs(ssim(lo, hi) - expect) < 1e-6);
    CHECK(std::abs(expect - 0.6001) < 1e-4);

    auto b = uwsr::testing::random_image(3, 16, 16, 4), c = uwsr::testing::random_image(3, 16, 16, 5);
    CHECK(std::abs(ssim(b, c) - brute_ssim(b, c)) < 1e-9);
    CHECK(std::abs(ssim(b, c) - ssim(c, b)) < 1e-9);
    auto noisy = b;
    for (std::size_t i = 0; i < noisy.size(); ++i) noisy.data()[i] = 0.7f * b.data()[i] + 0.3f * c.data()[i];
    CHECK(std::abs(ssim(b, noisy) - brute_ssim(b, noisy)) < 1e-9);

    // The window is symmetric, so flips and transposes applied to both images leave SSIM unchanged.
    CHECK(std::abs(ssim(transpose(b), transpose(noisy)) - ssim(b, noisy)) < 1e-9);
    CHECK(std::abs(ssim(flip_h(b), flip_h(noisy)) - ssim(b, noisy)) < 1e-9);

    const double s = ssim(b, c);
    CHECK((s >= -1.0 && s <= 1.0));
    CHECK(code_of([&] { ssim(ImageF(3, 10, 20), ImageF(3, 10, 20)); }) == ErrorCode::TooSmall);
    CHECK(code_of([&] { ssim(ImageF(3, 12, 20), ImageF(3, 12, 21)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("SSIM agrees with an independent reference implementation") {
    const char* up = std::getenv("UWSR_UPSTREAM_DIR");
    if (!up || !fs::exists(fs::path(up) / "ssim_reference.safetensors")) {
        MESSAGE("reference SSIM not generated; skipping");
        return;
    }
    const auto ref = nn::TensorArchive::load(fs::path(up) / "ssim_reference.safetensors");
    const auto& sa = ref.at("a").shape;
    const auto a = from_planar(ref.at("a").values<float>(), sa[0], sa[1], sa[2]);
    const auto b = from_planar(ref.at("b").values<float>(), sa[0], sa[1], sa[2]);
    const double expected = ref.at("ssim").values<double>()[0];
    MESSAGE("ssim " << ssim(a, b) << " reference " << expected);
    CHECK(std::abs(ssim(a, b) - expected) < 1e-3);
}

TEST_CASE("evaluate_models report") {
    TempDir dir;
    uwsr::testing::UsrTreeOptions o;
    o.train_count = 2;
    o.test_count = 5;
    uwsr::testing::write_usr_tree(dir / "data", o);
    auto index = data::scan_dataset(dir / "data", data::Split::Test, 4);
    REQUIRE(index.size() == 5);

    // An upscaler that returns the ground truth itself scores the cap.
    std::map<std::string, fs::path> hr_of;
    for (const auto& p : index.pairs) hr_of[p.stem] = p.hr_path;
    ModelEntry oracle;
    oracle.id = "oracle";
    int calls = 0;
    oracle.upscale = [&](const ImageF&) { return load_image(hr_of.at(index.pairs[calls++ % 5].stem)); };

    ModelEntry bicubic = bicubic_model();
    ModelEntry twin = bicubic_model();
    twin.id = "bicubic_copy";
    auto report = evaluate_models(index, {bicubic, twin});
    CHECK(report.rows.size() == 10);
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        const auto& a = report.rows[i - 1];
        const auto& b = report.rows[i];
        CHECK(std::tie(a.image_id, a.model_id) < std::tie(b.image_id, b.model_id));
    }
    REQUIRE(report.aggregates.size() == 2);
    auto a0 = report.aggregates[0], a1 = report.aggregates[1];
    a1.model_id = a0.model_id;
    CHECK(a0 == a1);
    CHECK(std::isfinite(a0.psnr_mean));
    CHECK(a0.psnr_mean < kPsnrCap);
    CHECK(aggregate(report.rows) == report.aggregates);

    // Per-model mean recomputed from rows.
    double sum = 0;
    for (const auto& r : report.rows)
        if (r.model_id == "bicubic") sum += r.psnr_db;
    CHECK(a0.psnr_mean == doctest::Approx(sum / 5).epsilon(1e-12));

    report.write(dir / "report");
    const auto csv = read_text(dir / "report" / "report.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
    const auto j = nlohmann::json::parse(read_text(dir / "report" / "report.json"));
    CHECK(j["rows"].size() == 10);
    CHECK(j["metadata"]["images"] == 5);
    CHECK(j["metadata"].contains("timestamp"));

    // GT-vs-GT caps; a broken LR becomes NaN rows with the error kept.
    auto gt = evaluate_models(index, {oracle});
    for (const auto& r : gt.rows) CHECK(r.psnr_db == kPsnrCap);
    std::ofstream(*index.pairs[2].lr_path, std::ios::trunc) << "garbage";
    auto broken = evaluate_models(index, {bicubic});
    CHECK(broken.rows.size() == 5);
    CHECK(std::isnan(broken.rows[2].psnr_db));
    CHECK_FALSE(broken.rows[2].error.empty());
    CHECK(broken.aggregates[0].count == 4);
    CHECK(broken.aggregates[0].failed == 1);
    CHECK(broken.to_json()["rows"][2]["psnr_db"].is_null());

    CHECK(code_of([&] { evaluate_models(index, {bicubic, bicubic}); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("comparison grid layout") {
    GridSpec one;
    one.rows.push_back(row_of("a", 32, 32, 1));
    const auto l = grid_layout(one);
    CHECK(l.width == 532);
    CHECK(l.height == 136);
    const ImageF canvas = make_comparison_grid(one);
    CHECK(canvas.width() == 532);
    CHECK(canvas.height() == 136);

    GridSpec three;
    for (int r = 0; r < 3; ++r) three.rows.push_back(row_of("r" + std::to_string(r), 12, 16, 10 + r));
    three.cell_width = 40;
    three.cell_height = 30;
    const auto g = make_comparison_grid(three);
    CHECK(g.height() == 3 * 30 + 4 * 4);
    CHECK(g.width() == 4 * 40 + 5 * 4);

    // Gutters are white, GT passes through, LR is shown nearest x4.
    for (int x = 0; x < canvas.width(); ++x) CHECK(canvas.at(1, 1, x) == 1.0f);
    const auto& row = one.rows[0];
    const auto [gx, gy] = l.origin(one, 0, 3);
    CHECK(gx == 4 + 3 * 132);
    CHECK(gy == 4);
    bool gt_same = true, lr_nearest = true;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 128; ++y)
            for (int x = 0; x < 128; ++x) {
                gt_same &= canvas.at(c, gy + y, gx + x) == row.cells[3].at(c, y, x);
                lr_nearest &= canvas.at(c, 4 + y, 4 + x) == row.cells[0].at(c, y / 4, x / 4);
            }
    CHECK(gt_same);
    CHECK(lr_nearest);

    GridSpec labelled = one;
    labelled.labels = true;
    const auto lab = make_comparison_grid(labelled);
    CHECK(lab.height() == 136 + kGlyphHeight + 8);
    float darkest = 1.0f;
    for (int y = 0; y < kGlyphHeight + 8; ++y)
        for (int x = 0; x < lab.width(); ++x) darkest = std::min(darkest, lab.at(0, y, x));
    CHECK(darkest == 0.0f);

    GridSpec missing = one;
    missing.rows[0].cells[2] = ImageF();
    CHECK(code_of([&] { make_comparison_grid(missing); }) == ErrorCode::MissingCell);
    CHECK(code_of([] { make_comparison_grid(GridSpec{}); }) == ErrorCode::MissingCell);
}

TEST_CASE("magnified region panel") {
    const auto img = uwsr::testing::underwater_scene(96, 128, 7);
    auto m = magnify_region(img, {0, 0, 32, 32}, 4);
    CHECK(m.zoomed.width() == 128);
    CHECK(m.zoomed.height() == 128);
    bool nearest = true;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 128; ++i)
            for (int j = 0; j < 128; ++j) nearest &= m.zoomed.at(c, i, j) == img.at(c, i / 4, j / 4);
    CHECK(nearest);
    CHECK(m.panel.width() == 128 + 4 + 128);
    CHECK(m.panel.height() == 128);
    CHECK(m.annotated.at(0, 0, 0) == 1.0f);
    CHECK(m.annotated.at(1, 0, 0) == 0.0f);
    CHECK(m.annotated.at(1, 10, 10) == img.at(1, 10, 10));

    CHECK_NOTHROW(magnify_region(img, {96, 10, 32, 20}, 2));
    CHECK(code_of([&] { magnify_region(img, {97, 10, 32, 20}, 2); }) == ErrorCode::OutOfBounds);
    CHECK(code_of([&] { magnify_region(img, {-1, 0, 8, 8}, 2); }) == ErrorCode::OutOfBounds);
    CHECK(code_of([&] { magnify_region(img, {0, 0, 8, 8}, 1); }) == ErrorCode::InvalidRange);
}

TEST_CASE("bitmap text and grid files") {
    ImageF img(3, 12, 40, 1.0f);
    draw_text(img, 1, 1, "Ab-1", {0, 0, 0});
    int dark = 0;
    for (float v : img.plane(0)) dark += v == 0.0f;
    CHECK(dark > 10);
    CHECK(text_width("Ab-1") == 23);
    CHECK(text_width("") == 0);

    auto g = grid_file_from_json(nlohmann::json::parse(
        R"({"cell": [128, 96], "rows": ["x", "y"], "boxes": [{"x": 1, "y": 2, "w": 30, "h": 20, "zoom": 3}]})"));
    CHECK(g.cell_width == 128);
    CHECK(g.rows.size() == 2);
    CHECK(g.boxes[0].second == 3);
    CHECK(g.boxes[0].first.width == 30);
    CHECK(code_of([] { grid_file_from_json(nlohmann::json::parse(R"({"cell": "big"})")); }) == ErrorCode::ParseError);
}
