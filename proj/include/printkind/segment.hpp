#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "printkind/image.hpp"

namespace printkind {

struct SegmentConfig {
    std::size_t closing_radius = 5;
    std::size_t min_area = 128 * 128; // bounding-box area
    double min_density = 0.05;
    double max_density = 0.95;
};

struct RegionBox {
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t width = 0;
    std::size_t height = 0;
    double ink_density = 0.0; // dark pixels of the unclosed mask inside the box
    bool operator==(const RegionBox&) const = default;
};

// Otsu threshold over the 256-bin histogram of a gray image. Pixels <= threshold count as ink.
// Returns -1 when the image has a single gray level (nothing to separate).
int otsu_threshold(const Image& gray);

// Binarize (Otsu), close with a square element, label 8-connected components and keep those
// whose bounding box passes the area and density filters. Sorted by (y, x).
std::vector<RegionBox> segment_page(const Image& page, const SegmentConfig& cfg = {});

struct CropWindow {
    std::size_t x = 0; // page coordinates of the top-left corner
    std::size_t y = 0;
    Image pixels;
};

// Grid of size x size windows fully inside the region; no resampling.
std::vector<CropWindow> extract_crops(const Image& page, const RegionBox& region, std::size_t stride = 128,
                                      std::size_t size = 128);

} // namespace printkind
