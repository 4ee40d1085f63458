#include "uwsr/nn/image_tensor.hpp"

#include <algorithm>

#include "uwsr/error.hpp"

namespace uwsr::nn {

template <typename T>
Tensor<T> images_to_tensor(const std::vector<ImageF>& images) {
    if (images.empty()) fail(ErrorCode::ShapeMismatch, "cannot stack an empty image list");
    const ImageF& first = images.front();
    for (const auto& img : images) {
        if (!img.same_shape(first)) fail(ErrorCode::ShapeMismatch, "images in a batch must share one shape");
    }
    std::vector<T> data;
    data.reserve(images.size() * first.size());
    for (const auto& img : images) {
        for (float v : img.values()) data.push_back(static_cast<T>(v));
    }
    return Tensor<T>({static_cast<int>(images.size()), first.channels(), first.height(), first.width()},
                     std::move(data));
}

template <typename T>
Tensor<T> image_to_tensor(const ImageF& image) {
    return images_to_tensor<T>({image});
}

template <typename T>
ImageF tensor_to_image(const Tensor<T>& tensor, int index) {
    if (tensor.rank() != 4 || index < 0 || index >= tensor.dim(0)) {
        fail(ErrorCode::ShapeMismatch, "expected an N x C x H x W tensor, got " + shape_string(tensor.shape()));
    }
    ImageF img(tensor.dim(1), tensor.dim(2), tensor.dim(3));
    const T* src = tensor.data() + static_cast<std::size_t>(index) * img.size();
    std::transform(src, src + img.size(), img.data(), [](T v) { return static_cast<float>(v); });
    return img;
}

template Tensor<float> images_to_tensor(const std::vector<ImageF>&);
template Tensor<double> images_to_tensor(const std::vector<ImageF>&);
template Tensor<float> image_to_tensor(const ImageF&);
template Tensor<double> image_to_tensor(const ImageF&);
template ImageF tensor_to_image(const Tensor<float>&, int);
template ImageF tensor_to_image(const Tensor<double>&, int);

}  // namespace uwsr::nn
