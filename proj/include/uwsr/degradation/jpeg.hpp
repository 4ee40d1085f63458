#pragma once

#include "uwsr/image.hpp"
#include "uwsr/image_io.hpp"

namespace uwsr::degradation {

// Clamp, encode at `quality` in memory, decode. Dimensions are preserved.
// Full-resolution chroma unless told otherwise; the pipeline passes its own.
ImageF jpeg_roundtrip(const ImageF& img, int quality, ChromaSubsampling subsampling = ChromaSubsampling::k444);

}  // namespace uwsr::degradation
