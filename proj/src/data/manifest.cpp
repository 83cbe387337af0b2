#include "printkind/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "printkind/errors.hpp"
#include "printkind/hash.hpp"
#include "printkind/io.hpp"

namespace printkind {

std::string_view to_string(Label label) {
    return label == Label::wood_engraving ? "wood_engraving" : "lithography";
}

std::string_view to_string(Split split) {
    switch (split) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
    }
    return "unassigned";
}

std::string_view to_string(SplitLevel level) {
    switch (level) {
    case SplitLevel::book: return "book";
    case SplitLevel::image: return "image";
    case SplitLevel::crop: return "crop";
    }
    return "book";
}

Label parse_label(std::string_view text) {
    if (text == "wood_engraving") return Label::wood_engraving;
    if (text == "lithography") return Label::lithography;
    throw DataError("unknown label '" + std::string(text) + "' (expected wood_engraving or lithography)");
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "test") return Split::test;
    if (text == "unassigned" || text.empty()) return Split::unassigned;
    throw DataError("unknown split '" + std::string(text) + "'");
}

SplitLevel parse_split_level(std::string_view text) {
    if (text == "book") return SplitLevel::book;
    if (text == "image") return SplitLevel::image;
    if (text == "crop") return SplitLevel::crop;
    throw DataError("unknown split level '" + std::string(text) + "' (expected book, image or crop)");
}

std::size_t Manifest::count(Label label) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [&](const CropRecord& r) { return r.label == label; }));
}

std::size_t Manifest::count(Split split) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [&](const CropRecord& r) { return r.split == split; }));
}

std::map<std::string, std::size_t> Manifest::book_counts(Label label) const {
    std::map<std::string, std::size_t> out;
    for (const auto& r : records)
        if (r.label == label) ++out[r.book_id];
    return out;
}

void Manifest::validate() const {
    std::set<std::string_view> ids;
    std::map<std::string_view, Label> book_label;
    for (const auto& r : records) {
        if (!ids.insert(r.crop_id).second) throw DataError("duplicate crop_id '" + r.crop_id + "'");
        auto [it, inserted] = book_label.emplace(r.book_id, r.label);
        if (!inserted && it->second != r.label) throw DataError("book '" + r.book_id + "' carries both labels");
    }
}

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::size_t parse_size(std::string_view s, std::size_t line) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw DataError("line " + std::to_string(line) + ": '" + std::string(s) + "' is not a non-negative integer");
    }
    return v;
}

void check_field(std::string_view value, std::string_view what) {
    if (value.find_first_of(",\n\r") != std::string_view::npos) {
        throw DataError(std::string(what) + " '" + std::string(value) + "' contains a comma or newline");
    }
}

} // namespace

std::string format_manifest(const Manifest& manifest) {
    std::ostringstream out;
    out << kManifestHeader << '\n';
    for (const auto& r : manifest.records) {
        check_field(r.crop_id, "crop_id");
        check_field(r.book_id, "book_id");
        check_field(r.page_id, "page_id");
        check_field(r.path, "path");
        out << r.crop_id << ',' << r.book_id << ',' << r.page_id << ',' << r.x << ',' << r.y << ','
            << to_string(r.label) << ',' << to_string(r.split) << ',' << r.path << '\n';
    }
    return out.str();
}

Manifest parse_manifest(std::string_view text) {
    const auto lines = lines_of(text);
    if (lines.empty() || lines[0] != kManifestHeader) {
        throw DataError("manifest header must be '" + std::string(kManifestHeader) + "'");
    }
    Manifest m;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto f = split_csv_line(lines[i]);
        if (f.size() != 8) {
            throw DataError("manifest line " + std::to_string(i + 1) + ": expected 8 fields, got " +
                            std::to_string(f.size()));
        }
        CropRecord r;
        r.crop_id = f[0];
        r.book_id = f[1];
        r.page_id = f[2];
        r.x = parse_size(f[3], i + 1);
        r.y = parse_size(f[4], i + 1);
        r.label = parse_label(f[5]);
        r.split = parse_split(f[6]);
        r.path = f[7];
        if (r.crop_id.empty() || r.book_id.empty()) {
            throw DataError("manifest line " + std::to_string(i + 1) + ": empty crop_id or book_id");
        }
        m.records.push_back(std::move(r));
    }
    m.validate();
    return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
    try {
        return parse_manifest(read_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    write_file_atomic(path, format_manifest(manifest));
}

std::map<std::string, Label> parse_book_labels(std::string_view text) {
    const auto lines = lines_of(text);
    if (lines.empty() || lines[0] != "book_id,label") throw DataError("book label file header must be 'book_id,label'");
    std::map<std::string, Label> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto f = split_csv_line(lines[i]);
        if (f.size() != 2) throw DataError("book label line " + std::to_string(i + 1) + ": expected 2 fields");
        if (!out.emplace(std::string(f[0]), parse_label(f[1])).second) {
            throw DataError("book label line " + std::to_string(i + 1) + ": duplicate book '" + std::string(f[0]) + "'");
        }
    }
    return out;
}

std::map<std::string, Label> read_book_labels(const std::filesystem::path& path) {
    return parse_book_labels(read_file(path));
}

std::map<std::string, std::size_t> balance_quotas(const std::map<std::string, std::size_t>& available,
                                                  std::size_t total) {
    if (available.empty()) {
        if (total == 0) return {};
        throw DataError("class has no books but needs " + std::to_string(total) + " crops");
    }
    std::map<std::string, std::size_t> quota;
    const std::size_t base = total / available.size();
    std::size_t assigned = 0;
    for (const auto& [book, n] : available) {
        quota[book] = std::min(n, base);
        assigned += quota[book];
    }
    // One slot at a time to the largest current surplus; std::map iteration order breaks ties by book_id.
    for (; assigned < total; ++assigned) {
        const std::string* best = nullptr;
        std::size_t best_surplus = 0;
        for (const auto& [book, n] : available) {
            const std::size_t surplus = n - quota[book];
            if (surplus > best_surplus) {
                best_surplus = surplus;
                best = &book;
            }
        }
        if (!best) {
            throw DataError("class has only " + std::to_string(assigned) + " crops, cannot balance to " +
                            std::to_string(total));
        }
        ++quota[*best];
    }
    return quota;
}

Manifest balance_manifest(const Manifest& manifest, std::size_t per_class_total, std::uint64_t seed) {
    std::vector<bool> keep(manifest.records.size(), false);
    for (Label label : kLabels) {
        const auto quota = balance_quotas(manifest.book_counts(label), per_class_total);
        for (const auto& [book, q] : quota) {
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < manifest.records.size(); ++i) {
                const auto& r = manifest.records[i];
                if (r.label == label && r.book_id == book) rows.push_back(i);
            }
            // Per-book stream so a book's draw does not depend on the other books.
            std::mt19937_64 rng(derive_seed(seed, book));
            std::vector<std::size_t> chosen;
            std::sample(rows.begin(), rows.end(), std::back_inserter(chosen), q, rng);
            for (std::size_t i : chosen) keep[i] = true;
        }
    }
    Manifest out;
    for (std::size_t i = 0; i < manifest.records.size(); ++i)
        if (keep[i]) out.records.push_back(manifest.records[i]);
    return out;
}

Manifest split_manifest(const Manifest& manifest, double test_fraction, std::uint64_t seed, SplitLevel level) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw DataError("test fraction must lie in [0, 1)");
    auto group_of = [level](const CropRecord& r) {
        switch (level) {
        case SplitLevel::book: return r.book_id;
        case SplitLevel::image: return r.book_id + '\x1f' + r.page_id;
        case SplitLevel::crop: return r.crop_id;
        }
        return r.book_id;
    };
    Manifest out = manifest;
    for (auto& r : out.records) r.split = Split::train;
    std::mt19937_64 rng(seed);
    for (Label label : kLabels) {
        const auto books = manifest.book_counts(label);
        if (books.empty()) continue;
        if (books.size() < 2 && level == SplitLevel::book) {
            throw DataError("class " + std::string(to_string(label)) + " has a single book; a book-level split needs two");
        }
        std::map<std::string, std::size_t> groups;
        for (const auto& r : manifest.records)
            if (r.label == label) ++groups[group_of(r)];
        if (groups.size() < 2) {
            throw DataError("class " + std::string(to_string(label)) + " has a single " +
                            std::string(to_string(level)) + " group");
        }
        std::vector<std::pair<std::string, std::size_t>> order(groups.begin(), groups.end());
        std::shuffle(order.begin(), order.end(), rng);
        std::size_t class_total = 0;
        for (const auto& g : order) class_total += g.second;
        const double target = test_fraction * static_cast<double>(class_total);
        std::set<std::string> test;
        double current = 0;
        for (const auto& [name, size] : order) {
            const double next = current + static_cast<double>(size);
            if (std::abs(next - target) < std::abs(current - target)) {
                current = next;
                test.insert(name);
            }
        }
        for (auto& r : out.records)
            if (r.label == label && test.count(group_of(r))) r.split = Split::test;
    }
    return out;
}

} // namespace printkind
