#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "printkind/manifest.hpp"
#include "printkind/segment.hpp"

namespace printkind {

struct CropConfig {
    SegmentConfig segment;
    std::size_t stride = 128;
    std::size_t channels = 1; // 3 keeps RGB crops (written as PPM)
    // Expert labels; when given every book must be listed and agree with its directory.
    std::optional<std::map<std::string, Label>> book_labels;
};

struct PageRef {
    std::filesystem::path path;
    std::string book_id;
    std::string page_id;
    Label label = Label::wood_engraving;
};

// Finds <root>/<label>/<book_id>/<page_id>.{pgm,ppm,pnm,png}, sorted by (book_id, page_id).
std::vector<PageRef> scan_pages(const std::filesystem::path& root);

// Segments every page (in parallel), writes crops under out_dir/crops/<book_id>/ and returns the
// manifest in (book_id, page_id, region, offset) order. Paths are relative to out_dir.
Manifest crop_pages(const std::filesystem::path& root, const std::filesystem::path& out_dir, const CropConfig& cfg);

} // namespace printkind
