#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace printkind {

// Precomputed feature vectors, one row per crop.
struct FeatureSet {
    std::size_t dim = 0;
    std::vector<float> values; // rows x dim, row-major
    std::vector<int> labels;
    std::vector<std::string> crop_ids; // empty or one per row

    std::size_t rows() const { return labels.size(); }
    std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
    // Both classes present and at least two rows; throws DataError otherwise.
    void require_trainable() const;
};

// CSV with header `label,crop_id,f0,f1,...`. Labels are class names or 0/1; crop_id may be
// empty. Errors name the 1-based line.
FeatureSet parse_feature_csv(std::string_view text);
FeatureSet read_feature_file(const std::filesystem::path& path);
std::string format_feature_csv(const FeatureSet& set);

// Two Gaussian blobs (std sigma per dimension) centred at -/+ (3 sigma + margin / 2) u for a
// random unit vector u. Classes alternate row by row.
struct BlobConfig {
    std::size_t per_class = 200;
    std::size_t dim = 2;
    double sigma = 1.0;
    double margin = 2.0;
    std::uint64_t seed = 0;
};

struct Blobs {
    FeatureSet features;
    std::vector<double> direction; // u
    double offset = 0.0;           // 3 sigma + margin / 2
};

Blobs make_blobs(const BlobConfig& cfg);

// Per-dimension standardization with train statistics; zero spread maps to scale 1.
struct Standardizer {
    std::vector<float> mean;
    std::vector<float> scale;

    static Standardizer fit(const FeatureSet& set);
    std::vector<float> apply(std::span<const float> values) const;
};

} // namespace printkind
