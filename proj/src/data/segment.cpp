#include "printkind/segment.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "printkind/errors.hpp"

namespace printkind {
namespace {

using Mask = std::vector<std::uint8_t>;

// Summed-area table with a zero border row/column.
std::vector<std::uint32_t> integral(const Mask& mask, std::size_t w, std::size_t h) {
    std::vector<std::uint32_t> sat((w + 1) * (h + 1), 0);
    for (std::size_t y = 0; y < h; ++y) {
        std::uint32_t row = 0;
        for (std::size_t x = 0; x < w; ++x) {
            row += mask[y * w + x];
            sat[(y + 1) * (w + 1) + x + 1] = sat[y * (w + 1) + x + 1] + row;
        }
    }
    return sat;
}

// Dilation marks any set pixel in the clipped window; erosion requires the whole clipped window set.
Mask morph(const Mask& mask, std::size_t w, std::size_t h, std::size_t r, bool dilate) {
    const auto sat = integral(mask, w, h);
    Mask out(mask.size());
    for (std::size_t y = 0; y < h; ++y) {
        const std::size_t y0 = y >= r ? y - r : 0, y1 = std::min(h, y + r + 1);
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t x0 = x >= r ? x - r : 0, x1 = std::min(w, x + r + 1);
            const std::uint32_t sum = sat[y1 * (w + 1) + x1] - sat[y0 * (w + 1) + x1] - sat[y1 * (w + 1) + x0] +
                                      sat[y0 * (w + 1) + x0];
            const auto area = static_cast<std::uint32_t>((y1 - y0) * (x1 - x0));
            out[y * w + x] = dilate ? sum > 0 : sum == area;
        }
    }
    return out;
}

} // namespace

int otsu_threshold(const Image& gray) {
    std::array<std::uint64_t, 256> hist{};
    for (auto v : gray.pixels) ++hist[v];
    const double total = static_cast<double>(gray.pixels.size());
    double sum_all = 0;
    for (int i = 0; i < 256; ++i) sum_all += i * static_cast<double>(hist[static_cast<std::size_t>(i)]);

    double best = -1.0;
    int threshold = -1;
    double w0 = 0, sum0 = 0;
    for (int t = 0; t < 255; ++t) {
        w0 += static_cast<double>(hist[static_cast<std::size_t>(t)]);
        sum0 += t * static_cast<double>(hist[static_cast<std::size_t>(t)]);
        const double w1 = total - w0;
        if (w0 == 0 || w1 == 0) continue;
        const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            threshold = t;
        }
    }
    return threshold;
}

std::vector<RegionBox> segment_page(const Image& page, const SegmentConfig& cfg) {
    if (!(cfg.min_density <= cfg.max_density)) throw DataError("segment: min_density exceeds max_density");
    const Image gray = to_grayscale(page);
    const std::size_t w = gray.width, h = gray.height;
    const int t = otsu_threshold(gray);
    if (t < 0) return {};

    Mask ink(w * h);
    for (std::size_t i = 0; i < ink.size(); ++i) ink[i] = gray.pixels[i] <= t;
    Mask closed = cfg.closing_radius > 0
                      ? morph(morph(ink, w, h, cfg.closing_radius, true), w, h, cfg.closing_radius, false)
                      : ink;
    const auto ink_sat = integral(ink, w, h);

    std::vector<RegionBox> boxes;
    std::vector<std::uint8_t> seen(w * h, 0);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < w * h; ++start) {
        if (!closed[start] || seen[start]) continue;
        std::size_t x0 = w, y0 = h, x1 = 0, y1 = 0;
        seen[start] = 1;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            const std::size_t px = p % w, py = p / w;
            x0 = std::min(x0, px), x1 = std::max(x1, px);
            y0 = std::min(y0, py), y1 = std::max(y1, py);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const auto nx = static_cast<std::ptrdiff_t>(px) + dx, ny = static_cast<std::ptrdiff_t>(py) + dy;
                    if (nx < 0 || ny < 0 || nx >= static_cast<std::ptrdiff_t>(w) || ny >= static_cast<std::ptrdiff_t>(h))
                        continue;
                    const std::size_t q = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
                    if (closed[q] && !seen[q]) {
                        seen[q] = 1;
                        stack.push_back(q);
                    }
                }
            }
        }
        RegionBox box{x0, y0, x1 - x0 + 1, y1 - y0 + 1, 0.0};
        if (box.width * box.height < cfg.min_area) continue;
        const std::uint32_t dark = ink_sat[(y1 + 1) * (w + 1) + x1 + 1] - ink_sat[y0 * (w + 1) + x1 + 1] -
                                   ink_sat[(y1 + 1) * (w + 1) + x0] + ink_sat[y0 * (w + 1) + x0];
        box.ink_density = static_cast<double>(dark) / static_cast<double>(box.width * box.height);
        if (box.ink_density < cfg.min_density || box.ink_density > cfg.max_density) continue;
        boxes.push_back(box);
    }
    std::sort(boxes.begin(), boxes.end(),
              [](const RegionBox& a, const RegionBox& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
    return boxes;
}

std::vector<CropWindow> extract_crops(const Image& page, const RegionBox& region, std::size_t stride,
                                      std::size_t size) {
    if (stride == 0) throw DataError("crop stride must be at least 1");
    if (region.x + region.width > page.width || region.y + region.height > page.height) {
        throw DataError("region leaves the page");
    }
    std::vector<CropWindow> out;
    if (region.width < size || region.height < size) return out;
    for (std::size_t dy = 0; dy + size <= region.height; dy += stride) {
        for (std::size_t dx = 0; dx + size <= region.width; dx += stride) {
            const std::size_t x = region.x + dx, y = region.y + dy;
            out.push_back({x, y, crop(page, x, y, size, size)});
        }
    }
    return out;
}

} // namespace printkind
