#include "facet/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace facet {

void write_png(const std::filesystem::path& path, const ImageTensor& img01) {
    if (img01.c != 1 && img01.c != 3)
        throw IoError("write_png: only 1- or 3-channel images supported, got " +
                      std::to_string(img01.c));
    std::vector<uint8_t> pixels(img01.size());
    for (size_t i = 0; i < img01.size(); ++i) {
        const float v = std::clamp(img01.data[i], 0.0f, 1.0f);
        pixels[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img01.w);
    image.height = static_cast<png_uint_32>(img01.h);
    image.format = img01.c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, pixels.data(),
                                 static_cast<png_int_32>(img01.w * img01.c), nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("write_png: " + path.string() + ": " + msg);
    }
}

ImageTensor read_png(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DataError("cannot decode " + path.string() + ": " + msg);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<uint8_t> pixels(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DataError("cannot decode " + path.string() + ": " + msg);
    }
    ImageTensor img(static_cast<int>(image.height), static_cast<int>(image.width), 3);
    for (size_t i = 0; i < img.size(); ++i)
        img.data[i] = static_cast<float>(pixels[i]) / 255.0f;
    return img;
}

}  // namespace facet
