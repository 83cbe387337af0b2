#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "printkind/manifest.hpp"

namespace printkind {

// Index of the largest logit; ties go to the lower class index.
int argmax_low(std::span<const float> logits);

struct Misclassified {
    std::string crop_id;
    int truth = 0;
    int predicted = 0;
};

struct Metrics {
    std::size_t count = 0;
    double accuracy = 0.0;
    std::array<std::array<std::size_t, 2>, 2> confusion{}; // [true][predicted]
    // Zero when the denominator is zero.
    std::array<double, 2> precision{};
    std::array<double, 2> recall{};
    std::vector<Misclassified> misclassified;
    // Majority vote of the crops of each (book, page); vote ties go to class 0.
    std::size_t images = 0;
    double image_accuracy = 0.0;
};

// ids and image keys are optional (empty spans); when present they must match in length.
Metrics compute_metrics(std::span<const int> predicted, std::span<const int> truth,
                        std::span<const std::string> crop_ids = {}, std::span<const std::string> image_keys = {});

std::string metrics_json(const Metrics& m);

// Copies up to `limit` misclassified crops to out_dir as <true>_<pred>_<crop_id>.<ext>, with
// class indices for true/pred, plus index.csv. Returns the number written.
std::size_t export_misclassified(const Metrics& metrics, const Manifest& manifest,
                                 const std::filesystem::path& base_dir, const std::filesystem::path& out_dir,
                                 std::size_t limit);

struct ExportName {
    int truth = 0;
    int predicted = 0;
    std::string crop_id;
    bool operator==(const ExportName&) const = default;
};
std::string export_file_name(const Misclassified& m, std::string_view extension = ".pgm");
ExportName parse_export_file_name(std::string_view file_name);

} // namespace printkind
