#include "facet/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace facet {

std::string Shape::str() const {
    std::string s = "(";
    for (size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(dims[i]);
    }
    return s + ")";
}

bool ImageTensor::all_finite() const {
    for (float v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

ImageTensor center_crop(const ImageTensor& img, int out_h, int out_w) {
    if (out_h > img.h || out_w > img.w)
        throw ShapeError("center_crop: crop " + Shape{{out_h, out_w}}.str() +
                         " exceeds image " + img.shape().str());
    const int y0 = (img.h - out_h) / 2;
    const int x0 = (img.w - out_w) / 2;
    ImageTensor out(out_h, out_w, img.c);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x)
            for (int ch = 0; ch < img.c; ++ch)
                out.at(y, x, ch) = img.at(y0 + y, x0 + x, ch);
    return out;
}

namespace {

constexpr char kMagic[8] = {'F', 'A', 'C', 'E', 'T', 'F', 'L', '1'};

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xFF));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<uint8_t>((v >> 24) & 0xFF));
}

uint32_t get_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

void append_flt1(std::vector<uint8_t>& out, const std::vector<int>& dims,
                 const std::vector<float>& data) {
    int64_t n = 1;
    for (int d : dims) {
        if (d < 1) throw ShapeError("FLT1 extents must be >= 1, got " + Shape{dims}.str());
        n *= d;
    }
    if (n != static_cast<int64_t>(data.size()))
        throw ShapeError("FLT1 payload size " + std::to_string(data.size()) +
                         " does not match shape " + Shape{dims}.str());
    out.insert(out.end(), kMagic, kMagic + 8);
    put_u32(out, static_cast<uint32_t>(dims.size()));
    for (int d : dims) put_u32(out, static_cast<uint32_t>(d));
    for (float v : data) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(out, bits);
    }
}

std::pair<std::vector<int>, std::vector<float>> parse_flt1(const uint8_t* bytes, size_t len,
                                                           size_t& offset, const std::string& what) {
    auto need = [&](size_t n, const char* part) {
        if (offset + n > len)
            throw IoError("FLT1 payload for " + what + " truncated: need " + std::to_string(n) +
                          " bytes for " + part + ", have " + std::to_string(len - offset));
    };
    need(8, "magic");
    if (std::memcmp(bytes + offset, kMagic, 8) != 0)
        throw IoError("FLT1 payload for " + what + " has bad magic");
    offset += 8;
    need(4, "rank");
    const uint32_t rank = get_u32(bytes + offset);
    offset += 4;
    if (rank == 0 || rank > 8)
        throw IoError("FLT1 payload for " + what + " has implausible rank " + std::to_string(rank));
    std::vector<int> dims(rank);
    need(4 * rank, "extents");
    int64_t n = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        dims[i] = static_cast<int>(get_u32(bytes + offset));
        offset += 4;
        if (dims[i] < 1) throw IoError("FLT1 payload for " + what + " has zero extent");
        n *= dims[i];
    }
    need(4 * static_cast<size_t>(n), "elements");
    std::vector<float> data(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        const uint32_t bits = get_u32(bytes + offset);
        offset += 4;
        std::memcpy(&data[i], &bits, 4);
    }
    return {dims, data};
}

void write_flt1(const std::filesystem::path& path, const std::vector<int>& dims,
                const std::vector<float>& data) {
    std::vector<uint8_t> buf;
    buf.reserve(16 + 4 * dims.size() + 4 * data.size());
    append_flt1(buf, dims, data);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("short write to " + path.string());
}

std::pair<std::vector<int>, std::vector<float>> read_flt1(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    size_t offset = 0;
    auto result = parse_flt1(buf.data(), buf.size(), offset, path.filename().string());
    if (offset != buf.size())
        throw IoError(path.string() + " has " + std::to_string(buf.size() - offset) +
                      " trailing bytes after FLT1 payload");
    return result;
}

void write_flt1(const std::filesystem::path& path, const ImageTensor& img) {
    write_flt1(path, {img.h, img.w, img.c}, img.data);
}

ImageTensor read_flt1_image(const std::filesystem::path& path) {
    auto [dims, data] = read_flt1(path);
    if (dims.size() != 3)
        throw IoError(path.string() + ": expected rank-3 image tensor, got rank " +
                      std::to_string(dims.size()));
    ImageTensor img(dims[0], dims[1], dims[2]);
    img.data = std::move(data);
    return img;
}

}  // namespace facet
