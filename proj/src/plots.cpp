#include "facet/plots.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "facet/png_io.hpp"

namespace facet {

namespace {

constexpr const char* kPalette[10] = {"#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00",
                                      "#a65628", "#f781bf", "#999999", "#66c2a5", "#ffd92f"};

// 5x7 column bitmaps (bit 0 = top row) for the label strip
struct Glyph {
    char ch;
    uint8_t cols[5];
};

constexpr Glyph kFont[] = {
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00}}, {'-', {0x08, 0x08, 0x08, 0x08, 0x08}},
    {'_', {0x40, 0x40, 0x40, 0x40, 0x40}}, {'.', {0x00, 0x60, 0x60, 0x00, 0x00}},
    {':', {0x00, 0x36, 0x36, 0x00, 0x00}}, {'+', {0x08, 0x08, 0x3e, 0x08, 0x08}},
    {'=', {0x14, 0x14, 0x14, 0x14, 0x14}}, {'/', {0x20, 0x10, 0x08, 0x04, 0x02}},
    {'0', {0x3e, 0x51, 0x49, 0x45, 0x3e}}, {'1', {0x00, 0x42, 0x7f, 0x40, 0x00}},
    {'2', {0x42, 0x61, 0x51, 0x49, 0x46}}, {'3', {0x21, 0x41, 0x45, 0x4b, 0x31}},
    {'4', {0x18, 0x14, 0x12, 0x7f, 0x10}}, {'5', {0x27, 0x45, 0x45, 0x45, 0x39}},
    {'6', {0x3c, 0x4a, 0x49, 0x49, 0x30}}, {'7', {0x01, 0x71, 0x09, 0x05, 0x03}},
    {'8', {0x36, 0x49, 0x49, 0x49, 0x36}}, {'9', {0x06, 0x49, 0x49, 0x29, 0x1e}},
    {'A', {0x7e, 0x11, 0x11, 0x11, 0x7e}}, {'B', {0x7f, 0x49, 0x49, 0x49, 0x36}},
    {'C', {0x3e, 0x41, 0x41, 0x41, 0x22}}, {'D', {0x7f, 0x41, 0x41, 0x22, 0x1c}},
    {'E', {0x7f, 0x49, 0x49, 0x49, 0x41}}, {'F', {0x7f, 0x09, 0x09, 0x09, 0x01}},
    {'G', {0x3e, 0x41, 0x49, 0x49, 0x7a}}, {'H', {0x7f, 0x08, 0x08, 0x08, 0x7f}},
    {'I', {0x00, 0x41, 0x7f, 0x41, 0x00}}, {'J', {0x20, 0x40, 0x41, 0x3f, 0x01}},
    {'K', {0x7f, 0x08, 0x14, 0x22, 0x41}}, {'L', {0x7f, 0x40, 0x40, 0x40, 0x40}},
    {'M', {0x7f, 0x02, 0x0c, 0x02, 0x7f}}, {'N', {0x7f, 0x04, 0x08, 0x10, 0x7f}},
    {'O', {0x3e, 0x41, 0x41, 0x41, 0x3e}}, {'P', {0x7f, 0x09, 0x09, 0x09, 0x06}},
    {'Q', {0x3e, 0x41, 0x51, 0x21, 0x5e}}, {'R', {0x7f, 0x09, 0x19, 0x29, 0x46}},
    {'S', {0x46, 0x49, 0x49, 0x49, 0x31}}, {'T', {0x01, 0x01, 0x7f, 0x01, 0x01}},
    {'U', {0x3f, 0x40, 0x40, 0x40, 0x3f}}, {'V', {0x1f, 0x20, 0x40, 0x20, 0x1f}},
    {'W', {0x3f, 0x40, 0x38, 0x40, 0x3f}}, {'X', {0x63, 0x14, 0x08, 0x14, 0x63}},
    {'Y', {0x07, 0x08, 0x70, 0x08, 0x07}}, {'Z', {0x61, 0x51, 0x49, 0x45, 0x43}},
};

const uint8_t* glyph_for(char c) {
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const auto& g : kFont)
        if (g.ch == up) return g.cols;
    return kFont[0].cols;  // unknown -> space
}

void draw_text(ImageTensor& img, int y0, int x0, const std::string& text, float value) {
    for (size_t i = 0; i < text.size(); ++i) {
        const uint8_t* cols = glyph_for(text[i]);
        const int gx = x0 + static_cast<int>(i) * 6;
        for (int cx = 0; cx < 5; ++cx)
            for (int cy = 0; cy < 7; ++cy) {
                if (!(cols[cx] >> cy & 1)) continue;
                const int y = y0 + cy, x = gx + cx;
                if (y < 0 || y >= img.h || x < 0 || x >= img.w) continue;
                for (int ch = 0; ch < img.c; ++ch) img.at(y, x, ch) = value;
            }
    }
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void emit_scatter_svg(const Embedding2D& embedding, const Clustering& clustering,
                      const std::filesystem::path& out_path) {
    const int n = embedding.points.rows;
    if (n != static_cast<int>(clustering.assignments.size()) && n > 0)
        throw ShapeError("emit_scatter_svg: point/assignment counts differ");

    constexpr int kSize = 480;
    constexpr double kMargin = 32.0;
    double min_x = 0, max_x = 1, min_y = 0, max_y = 1;
    if (n > 0) {
        min_x = max_x = embedding.points.at(0, 0);
        min_y = max_y = embedding.points.at(0, 1);
        for (int i = 1; i < n; ++i) {
            min_x = std::min(min_x, embedding.points.at(i, 0));
            max_x = std::max(max_x, embedding.points.at(i, 0));
            min_y = std::min(min_y, embedding.points.at(i, 1));
            max_y = std::max(max_y, embedding.points.at(i, 1));
        }
    }
    const double span_x = std::max(max_x - min_x, 1e-12);
    const double span_y = std::max(max_y - min_y, 1e-12);
    auto sx = [&](double x) { return kMargin + (x - min_x) / span_x * (kSize - 2 * kMargin); };
    auto sy = [&](double y) { return kMargin + (y - min_y) / span_y * (kSize - 2 * kMargin); };

    std::ofstream f(out_path);
    if (!f) throw IoError("cannot write " + out_path.string());
    f << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize
      << "\" viewBox=\"0 0 " << kSize << " " << kSize << "\">\n";
    f << "  <rect width=\"" << kSize << "\" height=\"" << kSize << "\" fill=\"white\"/>\n";
    for (int i = 0; i < n; ++i) {
        const int cluster = clustering.assignments[i];
        f << "  <circle cx=\"" << sx(embedding.points.at(i, 0)) << "\" cy=\""
          << sy(embedding.points.at(i, 1)) << "\" r=\"3\" fill=\""
          << kPalette[((cluster % 10) + 10) % 10] << "\" fill-opacity=\"0.8\"/>\n";
    }
    for (int c = 0; c < clustering.centroids.rows; ++c) {
        bool nonempty = false;
        for (int a : clustering.assignments)
            if (a == c) nonempty = true;
        if (!nonempty) continue;
        f << "  <text x=\"" << sx(clustering.centroids.at(c, 0)) << "\" y=\""
          << sy(clustering.centroids.at(c, 1))
          << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">"
          << xml_escape(std::to_string(c)) << "</text>\n";
    }
    f << "</svg>\n";
}

MontageGeometry montage_geometry(int n_images, int img_h, int img_w, int columns) {
    if (n_images < 1) throw ConfigError("montage: need at least one image");
    if (columns < 1) throw ConfigError("montage: columns must be >= 1");
    MontageGeometry g;
    g.cols = std::min(columns, n_images);
    g.rows = (n_images + g.cols - 1) / g.cols;
    g.label_h = 10;
    g.tile_w = img_w;
    g.tile_h = img_h + g.label_h;
    g.width = g.cols * g.tile_w + (g.cols - 1) * 2;
    g.height = g.rows * g.tile_h + (g.rows - 1) * 2;
    return g;
}

void emit_montage(const std::vector<ImageTensor>& images, const std::vector<std::string>& labels,
                  int columns, const std::filesystem::path& out_path) {
    if (images.empty()) throw ConfigError("montage: need at least one image");
    for (const auto& img : images)
        if (!img.same_shape(images.front()))
            throw ShapeError("montage: images must share one shape");
    const MontageGeometry g =
        montage_geometry(static_cast<int>(images.size()), images[0].h, images[0].w, columns);

    ImageTensor canvas(g.height, g.width, images[0].c, 1.0f);
    for (size_t i = 0; i < images.size(); ++i) {
        const int row = static_cast<int>(i) / g.cols;
        const int col = static_cast<int>(i) % g.cols;
        const int y0 = row * (g.tile_h + 2);
        const int x0 = col * (g.tile_w + 2);
        const ImageTensor& img = images[i];
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                for (int ch = 0; ch < img.c; ++ch)
                    canvas.at(y0 + y, x0 + x, ch) = std::clamp(img.at(y, x, ch), 0.0f, 1.0f);
        // label strip: dark text on white
        for (int y = 0; y < g.label_h; ++y)
            for (int x = 0; x < g.tile_w; ++x)
                for (int ch = 0; ch < img.c; ++ch) canvas.at(y0 + img.h + y, x0 + x, ch) = 1.0f;
        if (i < labels.size() && !labels[i].empty())
            draw_text(canvas, y0 + img.h + 2, x0 + 1, labels[i], 0.0f);
    }
    write_png(out_path, canvas);
}

}  // namespace facet
