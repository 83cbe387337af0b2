#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace printkind {

// 8-bit raster, row-major, channels interleaved (1 = gray, 3 = RGB).
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(std::size_t w, std::size_t h, std::size_t c = 1, std::uint8_t fill = 0);

    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0) { return pixels[(y * width + x) * channels + c]; }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const {
        return pixels[(y * width + x) * channels + c];
    }
    bool operator==(const Image&) const = default;
};

// Rec.601 luma: 0.299 R + 0.587 G + 0.114 B, rounded. Gray input is returned unchanged.
Image to_grayscale(const Image& image);

// Verbatim window copy; throws DataError if the window leaves the image.
Image crop(const Image& image, std::size_t x, std::size_t y, std::size_t w, std::size_t h);

// Binary PNM: P5 (gray) or P6 (RGB), maxval 255.
Image decode_pnm(std::string_view bytes);
std::string encode_pnm(const Image& image);

bool png_supported();

// Dispatches on extension: .pgm/.ppm/.pnm always, .png when built with libpng.
Image read_image(const std::filesystem::path& path);
// Writes P5/P6 atomically.
void write_pnm(const std::filesystem::path& path, const Image& image);

} // namespace printkind
