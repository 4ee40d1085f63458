#include "uwsr/image_io.hpp"

#include <algorithm>
#include <array>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "uwsr/error.hpp"

namespace uwsr {
namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::DecodeError, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool has_png_signature(std::span<const std::uint8_t> bytes) {
    static constexpr std::array<std::uint8_t, 8> sig = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    return bytes.size() >= sig.size() && std::equal(sig.begin(), sig.end(), bytes.begin());
}

bool has_jpeg_signature(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

// Maps interleaved samples with `channels` components onto a 3-channel image.
template <typename Sample>
ImageF planarize(const std::vector<Sample>& samples, int width, int height, int channels, float max_value) {
    if (channels > 4 || channels < 1) {
        fail(ErrorCode::UnsupportedChannelCount, std::to_string(channels) + " channels");
    }
    ImageF img(3, height, width);
    const bool gray = channels <= 2;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Sample* px = &samples[(static_cast<std::size_t>(y) * width + x) * channels];
            for (int c = 0; c < 3; ++c) {
                img.at(c, y, x) = static_cast<float>(px[gray ? 0 : c]) / max_value;
            }
        }
    }
    return img;
}

// ---- PNG -------------------------------------------------------------------

struct PngReadSource {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t count) {
    auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
    if (src->offset + count > src->bytes.size()) png_error(png, "truncated PNG stream");
    std::memcpy(out, src->bytes.data() + src->offset, count);
    src->offset += count;
}

void png_error_to_jmp(png_structp png, png_const_charp) { longjmp(png_jmpbuf(png), 1); }
void png_warning_silent(png_structp, png_const_charp) {}

ImageF decode_png(std::span<const std::uint8_t> bytes) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_to_jmp, png_warning_silent);
    if (png == nullptr) fail(ErrorCode::DecodeError, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    PngReadSource source{bytes, 0};
    std::vector<std::uint8_t> raw;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0, height = 0;
    int channels = 0, bit_depth = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::DecodeError, "corrupt PNG data");
    }
    png_set_read_fn(png, &source, png_read_from_span);
    png_read_info(png, info);
    const int color_type = png_get_color_type(png, info);
    bit_depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (bit_depth == 16) png_set_swap(png);
    png_read_update_info(png, info);
    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    channels = png_get_channels(png, info);
    bit_depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    raw.resize(row_bytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (bit_depth == 16) {
        std::vector<std::uint16_t> samples(raw.size() / 2);
        std::memcpy(samples.data(), raw.data(), samples.size() * 2);
        return planarize(samples, static_cast<int>(width), static_cast<int>(height), channels, 65535.0f);
    }
    return planarize(raw, static_cast<int>(width), static_cast<int>(height), channels, 255.0f);
}

// ---- JPEG ------------------------------------------------------------------

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_to_jmp(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

void jpeg_silent(j_common_ptr, int) {}

}  // namespace

ImageF decode_jpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_to_jmp;
    err.base.emit_message = jpeg_silent;
    std::vector<std::uint8_t> samples;
    int width = 0, height = 0, channels = 0;
    bool cmyk = false;

    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        fail(ErrorCode::DecodeError, std::string("corrupt JPEG data: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cmyk = cinfo.jpeg_color_space == JCS_CMYK || cinfo.jpeg_color_space == JCS_YCCK;
    if (cmyk) {
        cinfo.out_color_space = JCS_CMYK;
    } else if (cinfo.num_components != 1) {
        cinfo.out_color_space = JCS_RGB;
    }
    cinfo.dct_method = JDCT_ISLOW;
    jpeg_start_decompress(&cinfo);
    width = static_cast<int>(cinfo.output_width);
    height = static_cast<int>(cinfo.output_height);
    channels = cinfo.output_components;
    samples.resize(static_cast<std::size_t>(width) * height * channels);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = samples.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * channels;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    if (cmyk) {
        // Adobe-style inverted CMYK: R = C * K / 255 on the stored values.
        std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width) * height * 3);
        for (std::size_t i = 0; i < rgb.size() / 3; ++i) {
            const unsigned k = samples[i * 4 + 3];
            for (int c = 0; c < 3; ++c) rgb[i * 3 + c] = static_cast<std::uint8_t>(samples[i * 4 + c] * k / 255);
        }
        return planarize(rgb, width, height, 3, 255.0f);
    }
    return planarize(samples, width, height, channels, 255.0f);
}

std::vector<std::uint8_t> encode_jpeg(const ImageF& img, int quality, ChromaSubsampling subsampling) {
    if (quality < 1 || quality > 100) fail(ErrorCode::EncodeError, "JPEG quality must be in 1..100");
    if (img.channels() != 3) fail(ErrorCode::EncodeError, "JPEG encoding expects 3 channels");
    std::vector<std::uint8_t> interleaved(static_cast<std::size_t>(img.width()) * img.height() * 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                interleaved[(static_cast<std::size_t>(y) * img.width() + x) * 3 + c] = to_u8(img.at(c, y, x));
            }
        }
    }

    jpeg_compress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_to_jmp;
    err.base.emit_message = jpeg_silent;
    unsigned char* buffer = nullptr;
    unsigned long buffer_size = 0;

    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        std::free(buffer);
        fail(ErrorCode::EncodeError, std::string("JPEG encode failed: ") + err.message);
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &buffer_size);
    cinfo.image_width = static_cast<JDIMENSION>(img.width());
    cinfo.image_height = static_cast<JDIMENSION>(img.height());
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    cinfo.dct_method = JDCT_ISLOW;
    const int h_factor = subsampling == ChromaSubsampling::k420 ? 2 : 1;
    cinfo.comp_info[0].h_samp_factor = h_factor;
    cinfo.comp_info[0].v_samp_factor = h_factor;
    for (int c = 1; c < 3; ++c) {
        cinfo.comp_info[c].h_samp_factor = 1;
        cinfo.comp_info[c].v_samp_factor = 1;
    }
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = interleaved.data() + static_cast<std::size_t>(cinfo.next_scanline) * img.width() * 3;
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);

    std::vector<std::uint8_t> out(buffer, buffer + buffer_size);
    std::free(buffer);
    return out;
}

ImageF decode_image(std::span<const std::uint8_t> bytes) {
    if (has_png_signature(bytes)) return decode_png(bytes);
    if (has_jpeg_signature(bytes)) return decode_jpeg(bytes);
    fail(ErrorCode::DecodeError, "unrecognized image format");
}

ImageF load_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_image(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

namespace {

struct PngWriteSink {
    std::FILE* file = nullptr;
};

}  // namespace

void save_png(const ImageF& img, const std::filesystem::path& path) {
    if (img.channels() != 3 && img.channels() != 1) {
        fail(ErrorCode::EncodeError, "PNG writer expects 1 or 3 channels");
    }
    const int width = img.width(), height = img.height(), channels = img.channels();
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(width) * height * channels);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < channels; ++c) {
                raw[(static_cast<std::size_t>(y) * width + x) * channels + c] = to_u8(img.at(c, y, x));
            }
        }
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * width * channels;

    PngWriteSink sink{std::fopen(path.string().c_str(), "wb")};
    if (sink.file == nullptr) fail(ErrorCode::IoError, "cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_to_jmp, png_warning_silent);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(sink.file);
        fail(ErrorCode::EncodeError, "PNG encode failed for " + path.string());
    }
    png_init_io(png, sink.file);
    png_set_compression_level(png, 3);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fclose(sink.file) != 0) fail(ErrorCode::IoError, "cannot finish " + path.string());
}

ImageInfo probe_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::DecodeError, "cannot open " + path.string());
    std::array<std::uint8_t, 33> head{};
    in.read(reinterpret_cast<char*>(head.data()), head.size());
    const auto got = static_cast<std::size_t>(in.gcount());
    auto be32 = [](const std::uint8_t* p) {
        return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
    };

    if (has_png_signature({head.data(), got})) {
        if (got < 26 || std::memcmp(head.data() + 12, "IHDR", 4) != 0) {
            fail(ErrorCode::DecodeError, "missing IHDR in " + path.string());
        }
        ImageInfo info;
        info.width = static_cast<int>(be32(head.data() + 16));
        info.height = static_cast<int>(be32(head.data() + 20));
        info.bit_depth = head[24];
        switch (head[25]) {
            case 0: info.channels = 1; break;
            case 2: info.channels = 3; break;
            case 3: info.channels = 3; info.bit_depth = 8; break;
            case 4: info.channels = 2; break;
            case 6: info.channels = 4; break;
            default: fail(ErrorCode::DecodeError, "bad PNG color type in " + path.string());
        }
        return info;
    }

    if (!has_jpeg_signature({head.data(), got})) {
        fail(ErrorCode::DecodeError, "unrecognized image format: " + path.string());
    }
    // Walk the marker segments until a start-of-frame marker.
    in.clear();
    in.seekg(2);
    auto get = [&in, &path]() {
        const int ch = in.get();
        if (ch == EOF) fail(ErrorCode::DecodeError, "truncated JPEG header in " + path.string());
        return static_cast<std::uint8_t>(ch);
    };
    for (;;) {
        std::uint8_t byte = get();
        if (byte != 0xFF) continue;
        std::uint8_t marker = get();
        while (marker == 0xFF) marker = get();
        if (marker == 0x01 || (marker >= 0xD0 && marker <= 0xD8)) continue;
        const int length = (get() << 8) | get();
        const bool sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 && marker != 0xCC;
        if (sof) {
            ImageInfo info;
            info.bit_depth = get();
            info.height = (get() << 8) | get();
            info.width = (get() << 8) | get();
            info.channels = get();
            return info;
        }
        in.seekg(length - 2, std::ios::cur);
    }
}

bool is_image_file(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace uwsr
