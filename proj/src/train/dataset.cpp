#include "printkind/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>

#include "printkind/errors.hpp"
#include "printkind/image.hpp"

namespace printkind {

namespace {

// Channel-planar copy of an interleaved image, converted to the requested channel count.
void store_planar(const Image& src, std::size_t channels, std::uint8_t* out) {
    Image img = (channels == 1 && src.channels == 3) ? to_grayscale(src) : src;
    if (img.channels != channels) {
        throw ShapeError("crop has " + std::to_string(img.channels) + " channels, expected " +
                         std::to_string(channels));
    }
    const std::size_t plane = img.width * img.height;
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = img.pixels[i * channels + c];
    }
}

} // namespace

CropSet load_crops(const Manifest& manifest, const std::filesystem::path& base_dir, std::optional<Split> split,
                   std::size_t channels, std::size_t size) {
    if (channels != 1 && channels != 3) throw DataError("channels must be 1 or 3");
    CropSet set;
    set.channels = channels;
    set.size = size;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        if (!split || manifest.records[i].split == *split) set.rows.push_back(i);
    }
    const std::size_t n = set.rows.size();
    set.labels.resize(n);
    set.pixels.resize(n * set.image_bytes());

    std::exception_ptr failure;
    std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
        const auto& rec = manifest.records[set.rows[static_cast<std::size_t>(k)]];
        try {
            const Image img = read_image(base_dir / rec.path);
            if (img.width != size || img.height != size) {
                throw ShapeError(rec.path + ": crop is " + std::to_string(img.width) + "x" +
                                 std::to_string(img.height) + ", expected " + std::to_string(size) + "x" +
                                 std::to_string(size));
            }
            store_planar(img, channels, set.pixels.data() + static_cast<std::size_t>(k) * set.image_bytes());
            set.labels[static_cast<std::size_t>(k)] = class_index(rec.label);
        } catch (const ShapeError& e) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::make_exception_ptr(ShapeError(rec.crop_id + ": " + e.what()));
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return set;
}

CropSet take_per_class(const CropSet& set, std::size_t n) {
    CropSet out;
    out.channels = set.channels;
    out.size = set.size;
    std::size_t taken[2] = {0, 0};
    for (std::size_t i = 0; i < set.count(); ++i) {
        const int label = set.labels[i];
        if (taken[label] >= n) continue;
        ++taken[label];
        const auto img = set.image(i);
        out.pixels.insert(out.pixels.end(), img.begin(), img.end());
        out.labels.push_back(label);
        out.rows.push_back(set.rows[i]);
    }
    return out;
}

InputNormalization compute_normalization(const CropSet& set) {
    InputNormalization norm;
    const std::size_t plane = set.size * set.size;
    for (std::size_t c = 0; c < set.channels; ++c) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < set.count(); ++i) {
            const std::uint8_t* p = set.pixels.data() + i * set.image_bytes() + c * plane;
            std::uint64_t s = 0, s2 = 0;
            for (std::size_t j = 0; j < plane; ++j) {
                s += p[j];
                s2 += std::uint64_t(p[j]) * p[j];
            }
            sum += double(s);
            sq += double(s2);
        }
        const double count = double(set.count() * plane);
        const double mean = count > 0 ? sum / count / 255.0 : 0.0;
        const double var = count > 0 ? sq / count / (255.0 * 255.0) - mean * mean : 1.0;
        double sd = std::sqrt(std::max(var, 0.0));
        if (sd < 1e-6) sd = 1.0; // flat data; leave the scale alone
        norm.mean.push_back(static_cast<float>(mean));
        norm.stddev.push_back(static_cast<float>(sd));
    }
    return norm;
}

} // namespace printkind
