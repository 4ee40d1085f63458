#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwsr/image.hpp"

namespace uwsr::eval {

struct Box {
    int x = 0, y = 0, width = 0, height = 0;
};

struct Rgb {
    float r = 1.0f, g = 1.0f, b = 1.0f;
};

// One grid row: LR input, baseline output, fine-tuned output, ground truth.
struct GridRow {
    std::string image_id;
    std::array<ImageF, 4> cells;
};

struct GridSpec {
    std::vector<GridRow> rows;
    int cell_width = 0;   // 0: ground-truth width of the first row
    int cell_height = 0;
    int gutter = 4;
    bool labels = false;  // a caption band above the first row
    std::array<std::string, 4> column_labels{"Input", "Real-ESRGAN", "Fine-tuned", "Original"};
    std::vector<Box> boxes;  // outlined on every cell, in ground-truth pixel coordinates
};

struct GridLayout {
    int width = 0, height = 0;
    int label_height = 0;
    // Top-left corner of cell (row, column).
    std::pair<int, int> origin(const GridSpec& spec, int row, int column) const;
};

GridLayout grid_layout(const GridSpec& spec);

// White canvas with 4 columns x N rows. Column 0 is resized nearest-neighbor
// so the degradation stays visible; the others bicubic unless already cell
// sized. Empty cells throw MissingCell.
ImageF make_comparison_grid(const GridSpec& spec);

struct MagnifyResult {
    ImageF annotated;  // source with the box outlined
    ImageF zoomed;     // crop scaled by `zoom`, nearest neighbor
    ImageF panel;      // annotated | gutter | zoomed, top aligned on white
};

MagnifyResult magnify_region(const ImageF& img, const Box& box, int zoom, int gutter = 4,
                             Rgb color = {1.0f, 0.0f, 0.0f});

// Integer-factor nearest-neighbor and general nearest resize.
ImageF resize_nearest(const ImageF& img, int height, int width);

// Outline `thickness` pixels wide, drawn inside the box and clipped to the image.
void draw_rectangle(ImageF& img, const Box& box, Rgb color, int thickness = 2);

// 5x7 bitmap text; lowercase renders as uppercase, unknown glyphs as blanks.
void draw_text(ImageF& img, int x, int y, const std::string& text, Rgb color = {0, 0, 0}, int scale = 1);
int text_width(const std::string& text, int scale = 1);
inline constexpr int kGlyphHeight = 7;

// GridSpec text file: {"cell": [w, h], "gutter": 4, "labels": true,
// "rows": ["id", ...], "boxes": [{"x":, "y":, "w":, "h":, "zoom":}]}.
struct GridFile {
    int cell_width = 0, cell_height = 0, gutter = 4;
    bool labels = true;
    std::vector<std::string> rows;
    std::vector<std::pair<Box, int>> boxes;  // box, zoom
};

GridFile grid_file_from_json(const nlohmann::json& j);

}  // namespace uwsr::eval
