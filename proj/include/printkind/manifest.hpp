#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace printkind {

enum class Label { wood_engraving = 0, lithography = 1 };
enum class Split { train, test, unassigned };
enum class SplitLevel { book, image, crop };

inline constexpr Label kLabels[] = {Label::wood_engraving, Label::lithography};

std::string_view to_string(Label label);
std::string_view to_string(Split split);
std::string_view to_string(SplitLevel level);
Label parse_label(std::string_view text);
Split parse_split(std::string_view text);
SplitLevel parse_split_level(std::string_view text);
inline int class_index(Label label) { return static_cast<int>(label); }

struct CropRecord {
    std::string crop_id;
    std::string book_id;
    std::string page_id;
    std::size_t x = 0;
    std::size_t y = 0;
    Label label = Label::wood_engraving;
    Split split = Split::unassigned;
    std::string path; // relative to the manifest's directory
    bool operator==(const CropRecord&) const = default;
};

struct Manifest {
    std::vector<CropRecord> records;

    std::size_t count(Label label) const;
    std::size_t count(Split split) const;
    // Crops per book, per class.
    std::map<std::string, std::size_t> book_counts(Label label) const;
    // Throws DataError on duplicate crop ids or a book carrying two labels.
    void validate() const;
};

inline constexpr std::string_view kManifestHeader = "crop_id,book_id,page_id,x,y,label,split,path";

std::string format_manifest(const Manifest& manifest);
Manifest parse_manifest(std::string_view text);
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

// CSV `book_id,label` with that header.
std::map<std::string, Label> parse_book_labels(std::string_view text);
std::map<std::string, Label> read_book_labels(const std::filesystem::path& path);

// Per-book crop quotas for one class: floor(total / books) each, capped at what a book has; the
// leftover slots go one at a time to the book with the largest remaining surplus (ties to the
// smaller book_id). Throws DataError if the class cannot reach the total.
std::map<std::string, std::size_t> balance_quotas(const std::map<std::string, std::size_t>& available,
                                                  std::size_t total);

// Keeps exactly per_class_total crops in each class, sampled uniformly within each book.
// Surviving records keep their original relative order.
Manifest balance_manifest(const Manifest& manifest, std::size_t per_class_total, std::uint64_t seed);

// Assigns train/test by whole groups (book, page, or single crop). Per class, groups are
// shuffled with the seed and greedily moved to test while that brings the test count strictly
// closer to test_fraction * class_total.
Manifest split_manifest(const Manifest& manifest, double test_fraction, std::uint64_t seed,
                        SplitLevel level = SplitLevel::book);

} // namespace printkind
