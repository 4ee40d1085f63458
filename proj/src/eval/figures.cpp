#include "uwsr/eval/figures.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>

#include "uwsr/degradation/resample.hpp"
#include "uwsr/error.hpp"

namespace uwsr::eval {

namespace {

using Glyph = std::array<std::uint8_t, 7>;

const std::map<char, Glyph>& font() {
    static const std::map<char, Glyph> glyphs = {
        {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
        {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
        {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
        {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
        {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
        {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
        {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
        {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
        {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
        {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
        {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
        {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
        {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
        {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
        {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
        {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
        {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
        {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}}, {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
        {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}}, {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
        {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}}, {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
        {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}}, {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
    };
    return glyphs;
}

void put(ImageF& img, int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
    img.at(0, y, x) = c.r;
    if (img.channels() >= 3) {
        img.at(1, y, x) = c.g;
        img.at(2, y, x) = c.b;
    }
}

void blit(ImageF& dst, const ImageF& src, int x0, int y0) {
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < src.height(); ++y)
            for (int x = 0; x < src.width(); ++x) dst.at(c, y0 + y, x0 + x) = src.at(c, y, x);
}

ImageF fit_cell(const ImageF& img, int h, int w, bool nearest) {
    if (img.height() == h && img.width() == w) return img;
    if (nearest) return resize_nearest(img, h, w);
    ImageF out = degradation::resize(img, h, w, degradation::InterpMode::Bicubic);
    clamp01(out);
    return out;
}

}  // namespace

ImageF resize_nearest(const ImageF& img, int height, int width) {
    if (height <= 0 || width <= 0) fail(ErrorCode::InvalidRange, "resize target must be positive");
    ImageF out(img.channels(), height, width);
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < height; ++y) {
            const int sy = static_cast<int>(static_cast<std::int64_t>(y) * img.height() / height);
            for (int x = 0; x < width; ++x) {
                const int sx = static_cast<int>(static_cast<std::int64_t>(x) * img.width() / width);
                out.at(c, y, x) = img.at(c, sy, sx);
            }
        }
    return out;
}

void draw_rectangle(ImageF& img, const Box& box, Rgb color, int thickness) {
    for (int t = 0; t < thickness; ++t) {
        const int x0 = box.x + t, y0 = box.y + t, x1 = box.x + box.width - 1 - t, y1 = box.y + box.height - 1 - t;
        if (x0 > x1 || y0 > y1) break;
        for (int x = x0; x <= x1; ++x) {
            put(img, x, y0, color);
            put(img, x, y1, color);
        }
        for (int y = y0; y <= y1; ++y) {
            put(img, x0, y, color);
            put(img, x1, y, color);
        }
    }
}

int text_width(const std::string& text, int scale) {
    return text.empty() ? 0 : static_cast<int>(text.size()) * 6 * scale - scale;
}

void draw_text(ImageF& img, int x, int y, const std::string& text, Rgb color, int scale) {
    const auto& glyphs = font();
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto it = glyphs.find(static_cast<char>(std::toupper(static_cast<unsigned char>(text[i]))));
        if (it == glyphs.end()) continue;
        const int gx = x + static_cast<int>(i) * 6 * scale;
        for (int row = 0; row < kGlyphHeight; ++row)
            for (int col = 0; col < 5; ++col) {
                if (!(it->second[row] & (0x10 >> col))) continue;
                for (int dy = 0; dy < scale; ++dy)
                    for (int dx = 0; dx < scale; ++dx) put(img, gx + col * scale + dx, y + row * scale + dy, color);
            }
    }
}

std::pair<int, int> GridLayout::origin(const GridSpec& spec, int row, int column) const {
    const int cw = (width - 5 * spec.gutter) / 4;
    const int ch = spec.rows.empty() ? 0 : (height - label_height - (static_cast<int>(spec.rows.size()) + 1) * spec.gutter) /
                                               static_cast<int>(spec.rows.size());
    return {spec.gutter + column * (cw + spec.gutter), label_height + spec.gutter + row * (ch + spec.gutter)};
}

GridLayout grid_layout(const GridSpec& spec) {
    if (spec.rows.empty()) fail(ErrorCode::MissingCell, "grid has no rows");
    if (spec.gutter < 0) fail(ErrorCode::InvalidConfig, "gutter must be non-negative");
    int cw = spec.cell_width, ch = spec.cell_height;
    if (cw == 0 || ch == 0) {
        const ImageF& gt = spec.rows.front().cells[3];
        if (gt.empty()) fail(ErrorCode::MissingCell, "row " + spec.rows.front().image_id + " lacks the ground truth");
        if (cw == 0) cw = gt.width();
        if (ch == 0) ch = gt.height();
    }
    if (cw < 1 || ch < 1) fail(ErrorCode::InvalidConfig, "cell size must be positive");
    GridLayout l;
    l.label_height = spec.labels ? kGlyphHeight + 2 * spec.gutter : 0;
    l.width = 4 * cw + 5 * spec.gutter;
    l.height = l.label_height + static_cast<int>(spec.rows.size()) * ch + (static_cast<int>(spec.rows.size()) + 1) * spec.gutter;
    return l;
}

ImageF make_comparison_grid(const GridSpec& spec) {
    const GridLayout layout = grid_layout(spec);
    const int cw = (layout.width - 5 * spec.gutter) / 4;
    const int n = static_cast<int>(spec.rows.size());
    const int ch = (layout.height - layout.label_height - (n + 1) * spec.gutter) / n;
    for (const auto& row : spec.rows)
        for (int c = 0; c < 4; ++c) {
            if (row.cells[c].empty()) {
                fail(ErrorCode::MissingCell, "row " + row.image_id + " lacks column " + std::to_string(c + 1));
            }
            if (row.cells[c].channels() != 3) fail(ErrorCode::UnsupportedChannelCount, "grid cells must be RGB");
        }

    ImageF canvas(3, layout.height, layout.width, 1.0f);
    if (spec.labels) {
        for (int c = 0; c < 4; ++c) {
            const int x = layout.origin(spec, 0, c).first;
            const std::string& text = spec.column_labels[c];
            draw_text(canvas, x + (cw - text_width(text)) / 2, spec.gutter, text);
        }
    }
    for (int r = 0; r < n; ++r) {
        const auto& row = spec.rows[r];
        const ImageF& gt = row.cells[3];
        for (int c = 0; c < 4; ++c) {
            ImageF cell = fit_cell(row.cells[c], ch, cw, c == 0);
            for (const Box& b : spec.boxes) {
                // Box coordinates live on the ground-truth grid.
                const double sx = static_cast<double>(cw) / gt.width(), sy = static_cast<double>(ch) / gt.height();
                draw_rectangle(cell,
                               {static_cast<int>(b.x * sx), static_cast<int>(b.y * sy), std::max(1, static_cast<int>(b.width * sx)),
                                std::max(1, static_cast<int>(b.height * sy))},
                               {1.0f, 0.0f, 0.0f});
            }
            const auto [x, y] = layout.origin(spec, r, c);
            blit(canvas, cell, x, y);
        }
    }
    return canvas;
}

MagnifyResult magnify_region(const ImageF& img, const Box& box, int zoom, int gutter, Rgb color) {
    if (zoom < 2) fail(ErrorCode::InvalidRange, "zoom must be at least 2");
    if (img.channels() != 3) fail(ErrorCode::UnsupportedChannelCount, "magnify needs an RGB image");
    if (box.width < 1 || box.height < 1 || box.x < 0 || box.y < 0 || box.x + box.width > img.width() ||
        box.y + box.height > img.height()) {
        fail(ErrorCode::OutOfBounds, "box (" + std::to_string(box.x) + ", " + std::to_string(box.y) + ", " +
                                         std::to_string(box.width) + ", " + std::to_string(box.height) +
                                         ") leaves the " + std::to_string(img.width()) + "x" +
                                         std::to_string(img.height()) + " image");
    }
    MagnifyResult r;
    r.zoomed = resize_nearest(crop(img, box.y, box.x, box.height, box.width), box.height * zoom, box.width * zoom);
    r.annotated = img;
    draw_rectangle(r.annotated, box, color);
    r.panel = ImageF(3, std::max(img.height(), r.zoomed.height()), img.width() + gutter + r.zoomed.width(), 1.0f);
    blit(r.panel, r.annotated, 0, 0);
    blit(r.panel, r.zoomed, img.width() + gutter, 0);
    return r;
}

GridFile grid_file_from_json(const nlohmann::json& j) {
    GridFile g;
    try {
        if (j.contains("cell")) {
            const auto cell = j.at("cell").get<std::array<int, 2>>();
            g.cell_width = cell[0];
            g.cell_height = cell[1];
        }
        g.gutter = j.value("gutter", g.gutter);
        g.labels = j.value("labels", g.labels);
        g.rows = j.value("rows", std::vector<std::string>{});
        for (const auto& b : j.value("boxes", nlohmann::json::array())) {
            g.boxes.push_back({{b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(), b.at("h").get<int>()},
                               b.value("zoom", 4)});
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("grid spec: ") + e.what());
    }
    if (g.cell_width < 0 || g.cell_height < 0 || g.gutter < 0) fail(ErrorCode::InvalidConfig, "grid sizes must be non-negative");
    return g;
}

}  // namespace uwsr::eval
