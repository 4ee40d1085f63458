#include "uwsr/degradation/jpeg.hpp"

#include "uwsr/error.hpp"

namespace uwsr::degradation {

ImageF jpeg_roundtrip(const ImageF& img, int quality, ChromaSubsampling subsampling) {
    if (quality < 1 || quality > 100) fail(ErrorCode::EncodeError, "JPEG quality must be in 1..100");
    const auto bytes = encode_jpeg(img, quality, subsampling);
    ImageF out = decode_jpeg(bytes);
    if (!out.same_shape(img)) fail(ErrorCode::EncodeError, "JPEG round-trip changed the image shape");
    return out;
}

}  // namespace uwsr::degradation
