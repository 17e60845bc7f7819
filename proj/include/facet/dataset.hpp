#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "facet/tensor.hpp"

namespace facet {

enum class ShapeKind { square, circle, triangle, cross };

const char* shape_kind_name(ShapeKind k);
ShapeKind shape_kind_from_name(const std::string& name);

// One planted facet: a rendering style shared by a slice of a class.
struct FacetStyle {
    std::array<float, 3> fill{1.0f, 0.2f, 0.2f};
    std::array<float, 3> background{0.1f, 0.1f, 0.12f};
    int object_count = 1;       // 1..3
    float position_jitter = 1.5f;  // stddev of object-center noise, pixels
};

struct ClassSpec {
    ShapeKind shape = ShapeKind::square;
    std::vector<FacetStyle> facets;
};

struct ShapesSpec {
    std::vector<ClassSpec> classes;
    int images_per_class = 150;
    int image_size = 32;
    uint64_t rng_seed = 7;

    void validate() const;
};

// Images are stored mean-subtracted (raw [0,1] value minus the per-channel
// dataset mean); mean_intensity keeps the means so pixels can be mapped back
// for display.
struct LabeledDataset {
    std::vector<ImageTensor> images;
    std::vector<int> labels;
    std::vector<int> facet_labels;  // per-class facet index; empty when unknown
    std::array<float, 3> mean_intensity{0, 0, 0};
    int num_classes = 0;

    size_t size() const { return images.size(); }
    // raw [0,1] pixels for display/export
    ImageTensor denormalize(int id) const;
    ImageTensor denormalize(const ImageTensor& img) const;
};

LabeledDataset generate_shapes(const ShapesSpec& spec);

// Directory layout: class_<i>/img_<j>.png (or a flat directory of PNGs when
// class_subdirs is false) in stable alphabetical order. Pixels are mapped to
// [0,1] and mean-subtracted.
LabeledDataset load_directory(const std::filesystem::path& path, bool class_subdirs);

// class_<i>/img_<j>.png plus facets.csv (image id, class, facet) and meta
// (mean intensity, size, seed).
void export_dataset(const LabeledDataset& ds, const std::filesystem::path& dir,
                    int image_size, uint64_t seed);

// Deterministic stratified split: every round(1/test_fraction)-th image of
// each class goes to the held-out set.
std::pair<LabeledDataset, LabeledDataset> train_test_split(const LabeledDataset& ds,
                                                           double test_fraction);

// 4 classes x 3 facets x 150 images at 32x32; facets vary fill color,
// background and object count.
ShapesSpec default_shapes_spec();

// Two-facet probe: class 0 renders squares in two fill colors (red/green) on
// the same background, class 1 is a distractor.
ShapesSpec two_facet_spec();

}  // namespace facet
