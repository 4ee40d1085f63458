#pragma once

#include <vector>

#include "uwsr/image.hpp"
#include "uwsr/nn/tensor.hpp"

namespace uwsr::nn {

// Stacks equally sized images into an N x C x H x W tensor.
template <typename T>
Tensor<T> images_to_tensor(const std::vector<ImageF>& images);
template <typename T>
Tensor<T> image_to_tensor(const ImageF& image);

// Sample `index` of an N x C x H x W tensor, values copied as they are.
template <typename T>
ImageF tensor_to_image(const Tensor<T>& tensor, int index = 0);

}  // namespace uwsr::nn
