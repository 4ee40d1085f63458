#include <doctest.h>
#include <zlib.h>

#include <cmath>
#include <fstream>
#include <functional>

#include "fixtures.hpp"
#include "uwsr/error.hpp"
#include "uwsr/fileio.hpp"
#include "uwsr/image.hpp"
#include "uwsr/image_io.hpp"

using namespace uwsr;
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

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& body) {
    put_u32(out, static_cast<std::uint32_t>(body.size()));
    std::vector<std::uint8_t> typed(type, type + 4);
    typed.insert(typed.end(), body.begin(), body.end());
    out.insert(out.end(), typed.begin(), typed.end());
    put_u32(out, static_cast<std::uint32_t>(crc32(0, typed.data(), static_cast<uInt>(typed.size()))));
}

// Minimal PNG writer: filter type 0 rows, samples given big-endian already.
std::vector<std::uint8_t> encode_png(int w, int h, int depth, int color_type, const std::vector<std::uint8_t>& samples) {
    const int ch = color_type == 0 ? 1 : color_type == 4 ? 2 : color_type == 2 ? 3 : 4;
    const std::size_t row = static_cast<std::size_t>(w) * ch * depth / 8;
    std::vector<std::uint8_t> raw;
    for (int y = 0; y < h; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), samples.begin() + y * row, samples.begin() + (y + 1) * row);
    }
    uLongf zsize = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> z(zsize);
    REQUIRE(compress(z.data(), &zsize, raw.data(), static_cast<uLong>(raw.size())) == Z_OK);
    z.resize(zsize);

    std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    std::vector<std::uint8_t> ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(w));
    put_u32(ihdr, static_cast<std::uint32_t>(h));
    ihdr.insert(ihdr.end(), {static_cast<std::uint8_t>(depth), static_cast<std::uint8_t>(color_type), 0, 0, 0});
    chunk(out, "IHDR", ihdr);
    chunk(out, "IDAT", z);
    chunk(out, "IEND", {});
    return out;
}

}  // namespace

TEST_CASE("8-bit values map to v / 255") {
    std::vector<std::uint8_t> px;
    for (int v = 0; v < 256; ++v) px.insert(px.end(), {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(255 - v), 7});
    const auto bytes = encode_png(16, 16, 8, 2, px);
    const auto img = decode_image(bytes);
    CHECK(img.channels() == 3);
    CHECK(img.at(0, 0, 0) == 0.0f);
    CHECK(img.at(1, 0, 0) == 1.0f);
    CHECK(img.at(0, 15, 15) == 1.0f);
    bool exact = true;
    for (int i = 0; i < 256; ++i) exact &= img.plane(0)[i] == static_cast<float>(i) / 255.0f;
    CHECK(exact);
}

TEST_CASE("grayscale, alpha and 16-bit inputs") {
    std::vector<std::uint8_t> gray{0, 128, 255, 64};
    const auto g = decode_image(encode_png(2, 2, 8, 0, gray));
    CHECK(g.channels() == 3);
    for (int c = 0; c < 3; ++c) {
        CHECK(g.at(c, 0, 1) == 128.0f / 255.0f);
        CHECK(g.at(c, 1, 1) == 64.0f / 255.0f);
    }

    std::vector<std::uint8_t> ga{10, 0, 200, 255};
    const auto a = decode_image(encode_png(2, 1, 8, 4, ga));
    CHECK(a.channels() == 3);
    CHECK(a.at(2, 0, 0) == 10.0f / 255.0f);
    CHECK(a.at(0, 0, 1) == 200.0f / 255.0f);

    std::vector<std::uint8_t> rgba{1, 2, 3, 0, 4, 5, 6, 9};
    const auto r = decode_image(encode_png(2, 1, 8, 6, rgba));
    CHECK(r.channels() == 3);
    CHECK(r.at(2, 0, 1) == 6.0f / 255.0f);

    std::vector<std::uint8_t> deep{0xff, 0xff, 0x00, 0x00, 0x80, 0x00};  // big-endian 65535, 0, 32768
    const auto d = decode_image(encode_png(1, 1, 16, 2, deep));
    CHECK(d.at(0, 0, 0) == 1.0f);
    CHECK(d.at(1, 0, 0) == 0.0f);
    CHECK(d.at(2, 0, 0) == 32768.0f / 65535.0f);

    TempDir dir;
    const auto path = dir / "g16.png";
    const auto b = encode_png(3, 2, 16, 0, std::vector<std::uint8_t>(12, 0x40));
    write_file_atomic(path, b.data(), b.size());
    const auto info = probe_image(path);
    CHECK(info.width == 3);
    CHECK(info.height == 2);
    CHECK(info.channels == 1);
    CHECK(info.bit_depth == 16);
}

TEST_CASE("PNG round trip is lossless on the 8-bit grid") {
    TempDir dir;
    auto img = uwsr::testing::random_image(3, 37, 53, 1);
    quantize8(img);
    save_png(img, dir / "a.png");
    const auto back = load_image(dir / "a.png");
    CHECK(back == img);

    // Out-of-range values are clipped and rounded half away from zero.
    ImageF edge(3, 1, 4);
    edge.at(0, 0, 0) = -0.3f;
    edge.at(0, 0, 1) = 1.7f;
    edge.at(0, 0, 2) = 0.5f / 255.0f;
    edge.at(0, 0, 3) = 2.5f / 255.0f;
    save_png(edge, dir / "e.png");
    const auto e = load_image(dir / "e.png");
    CHECK(e.at(0, 0, 0) == 0.0f);
    CHECK(e.at(0, 0, 1) == 1.0f);
    CHECK(e.at(0, 0, 2) == 1.0f / 255.0f);
    CHECK(e.at(0, 0, 3) == 3.0f / 255.0f);
    CHECK(to_u8(0.5f / 255.0f) == 1);
    CHECK(to_u8(0.5f) == 128);
    CHECK(to_u8(NAN) == 0);
}

TEST_CASE("JPEG decode and codec fidelity") {
    const auto img = uwsr::testing::underwater_scene(48, 64, 2);
    const auto q100 = decode_image(encode_jpeg(img, 100, ChromaSubsampling::k444));
    CHECK(q100.same_shape(img));
    double worst = 0;
    for (std::size_t i = 0; i < img.size(); ++i) worst = std::max(worst, std::abs(double(q100.data()[i]) - img.data()[i]));
    CHECK(worst < 8.0 / 255.0);

    TempDir dir;
    const auto bytes = encode_jpeg(img, 90);
    write_file_atomic(dir / "x.jpg", bytes.data(), bytes.size());
    CHECK(load_image(dir / "x.jpg") == decode_jpeg(bytes));
    CHECK(probe_image(dir / "x.jpg").width == 64);
    CHECK(probe_image(dir / "x.jpg").channels == 3);
}

TEST_CASE("decode failures") {
    TempDir dir;
    std::ofstream(dir / "junk.png") << "not an image";
    CHECK(code_of([&] { load_image(dir / "junk.png"); }) == ErrorCode::DecodeError);
    CHECK(code_of([&] { load_image(dir / "absent.png"); }) == ErrorCode::DecodeError);
    auto png = encode_png(4, 4, 8, 2, std::vector<std::uint8_t>(48, 9));
    png.resize(png.size() - 20);
    CHECK(code_of([&] { decode_image(png); }) == ErrorCode::DecodeError);
    CHECK(is_image_file("a.PNG"));
    CHECK(is_image_file("a.jpeg"));
    CHECK_FALSE(is_image_file("a.txt"));
}

TEST_CASE("image helpers") {
    auto img = uwsr::testing::random_image(3, 10, 12, 3);
    const auto c = crop(img, 2, 3, 4, 5);
    CHECK(c.height() == 4);
    CHECK(c.width() == 5);
    CHECK(c.at(1, 0, 0) == img.at(1, 2, 3));
    CHECK(c.at(2, 3, 4) == img.at(2, 5, 7));

    const auto y = luminance(img);
    CHECK(y.channels() == 1);
    CHECK(y.at(0, 4, 4) == doctest::Approx(0.299 * img.at(0, 4, 4) + 0.587 * img.at(1, 4, 4) + 0.114 * img.at(2, 4, 4)));

    CHECK(all_finite(img));
    img.at(0, 0, 0) = NAN;
    CHECK_FALSE(all_finite(img));
    ImageF q(1, 1, 3);
    q.at(0, 0, 0) = -1.0f;
    q.at(0, 0, 1) = 0.2f;
    q.at(0, 0, 2) = 3.0f;
    clamp01(q);
    CHECK(q.at(0, 0, 0) == 0.0f);
    CHECK(q.at(0, 0, 1) == 0.2f);
    CHECK(q.at(0, 0, 2) == 1.0f);
}
