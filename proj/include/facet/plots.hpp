#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "facet/embedding.hpp"
#include "facet/tensor.hpp"

namespace facet {

// One SVG marker per embedded point, fill keyed by cluster from a fixed
// 10-color palette, cluster index labels at the centroids.
void emit_scatter_svg(const Embedding2D& embedding, const Clustering& clustering,
                      const std::filesystem::path& out_path);

struct MontageGeometry {
    int cols = 0, rows = 0;
    int tile_w = 0, tile_h = 0;  // tile_h includes the label strip
    int label_h = 0;
    int width = 0, height = 0;  // full canvas, 2-pixel separators
};

MontageGeometry montage_geometry(int n_images, int img_h, int img_w, int columns);

// Row-major grid PNG with 2-pixel separators and a label strip under each
// tile. Images must share one shape and are treated as [0,1] display values.
void emit_montage(const std::vector<ImageTensor>& images, const std::vector<std::string>& labels,
                  int columns, const std::filesystem::path& out_path);

}  // namespace facet
