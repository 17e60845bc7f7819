#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "facet/errors.hpp"

namespace facet {

struct Shape {
    std::vector<int> dims;

    int64_t numel() const {
        int64_t n = 1;
        for (int d : dims) n *= d;
        return n;
    }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

// Dense rank-3 image tensor, 32-bit reals, row-major (y, then x, then channel).
// The universal currency for images, gradients and mean images.
struct ImageTensor {
    int h = 0, w = 0, c = 0;
    std::vector<float> data;

    ImageTensor() = default;
    ImageTensor(int height, int width, int channels, float value = 0.0f)
        : h(height), w(width), c(channels),
          data(static_cast<size_t>(height) * width * channels, value) {
        if (height < 1 || width < 1 || channels < 1)
            throw ShapeError("ImageTensor extents must be >= 1, got " + Shape{{height, width, channels}}.str());
    }

    float& at(int y, int x, int ch) { return data[(static_cast<size_t>(y) * w + x) * c + ch]; }
    float at(int y, int x, int ch) const { return data[(static_cast<size_t>(y) * w + x) * c + ch]; }

    size_t size() const { return data.size(); }
    Shape shape() const { return Shape{{h, w, c}}; }
    bool same_shape(const ImageTensor& o) const { return h == o.h && w == o.w && c == o.c; }
    bool all_finite() const;
};

// Rank-4 convolution weights, row-major (ky, kx, in channel, out channel).
struct Tensor4 {
    int kh = 0, kw = 0, in_c = 0, out_c = 0;
    std::vector<float> data;

    Tensor4() = default;
    Tensor4(int a, int b, int ci, int co, float value = 0.0f)
        : kh(a), kw(b), in_c(ci), out_c(co),
          data(static_cast<size_t>(a) * b * ci * co, value) {}

    float& at(int ky, int kx, int ci, int co) {
        return data[((static_cast<size_t>(ky) * kw + kx) * in_c + ci) * out_c + co];
    }
    float at(int ky, int kx, int ci, int co) const {
        return data[((static_cast<size_t>(ky) * kw + kx) * in_c + ci) * out_c + co];
    }
    Shape shape() const { return Shape{{kh, kw, in_c, out_c}}; }
};

// Rank-2 weights, row-major.
struct Mat {
    int rows = 0, cols = 0;
    std::vector<float> data;

    Mat() = default;
    Mat(int r, int c, float value = 0.0f)
        : rows(r), cols(c), data(static_cast<size_t>(r) * c, value) {}

    float& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    float at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    Shape shape() const { return Shape{{rows, cols}}; }
};

ImageTensor center_crop(const ImageTensor& img, int out_h, int out_w);

// Raw tensor file format "FLT1": 8-byte magic FACETFL1, rank (u32 LE),
// extents (u32 LE each), then elements as 32-bit LE IEEE-754 reals,
// row-major. Used for weights, codes and seed images.
void write_flt1(const std::filesystem::path& path, const std::vector<int>& dims,
                const std::vector<float>& data);
std::pair<std::vector<int>, std::vector<float>> read_flt1(const std::filesystem::path& path);

void write_flt1(const std::filesystem::path& path, const ImageTensor& img);
ImageTensor read_flt1_image(const std::filesystem::path& path);

// In-memory FLT1 blobs, shared by the weight-file container.
void append_flt1(std::vector<uint8_t>& out, const std::vector<int>& dims,
                 const std::vector<float>& data);
std::pair<std::vector<int>, std::vector<float>> parse_flt1(const uint8_t* bytes, size_t len,
                                                           size_t& offset, const std::string& what);

}  // namespace facet
