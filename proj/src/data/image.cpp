#include "printkind/image.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

#ifdef PRINTKIND_HAVE_PNG
#include <png.h>
#endif

#include "printkind/errors.hpp"
#include "printkind/io.hpp"

namespace printkind {

Image::Image(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill)
    : width(w), height(h), channels(c), pixels(w * h * c, fill) {
    if (c != 1 && c != 3) throw DataError("images must have 1 or 3 channels, got " + std::to_string(c));
}

Image to_grayscale(const Image& image) {
    if (image.channels == 1) return image;
    Image out(image.width, image.height, 1);
    for (std::size_t i = 0; i < image.width * image.height; ++i) {
        const double y = 0.299 * image.pixels[3 * i] + 0.587 * image.pixels[3 * i + 1] + 0.114 * image.pixels[3 * i + 2];
        out.pixels[i] = static_cast<std::uint8_t>(std::lround(std::min(255.0, y)));
    }
    return out;
}

Image crop(const Image& image, std::size_t x, std::size_t y, std::size_t w, std::size_t h) {
    if (x + w > image.width || y + h > image.height) {
        throw DataError("crop window " + std::to_string(w) + "x" + std::to_string(h) + "+" + std::to_string(x) + "+" +
                        std::to_string(y) + " leaves a " + std::to_string(image.width) + "x" +
                        std::to_string(image.height) + " image");
    }
    Image out(w, h, image.channels);
    const std::size_t row = w * image.channels;
    for (std::size_t r = 0; r < h; ++r) {
        const auto* src = image.pixels.data() + ((y + r) * image.width + x) * image.channels;
        std::copy(src, src + row, out.pixels.data() + r * row);
    }
    return out;
}

namespace {

class PnmReader {
public:
    explicit PnmReader(std::string_view bytes) : bytes_(bytes) {}

    std::size_t number() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            throw DataError("malformed PNM header");
        }
        std::size_t v = 0;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            v = v * 10 + static_cast<std::size_t>(bytes_[pos_++] - '0');
            if (v > (1u << 30)) throw DataError("PNM dimension too large");
        }
        return v;
    }

    std::size_t pos() const { return pos_; }
    void advance() { ++pos_; }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view bytes_;
    std::size_t pos_ = 2;
};

#ifdef PRINTKIND_HAVE_PNG
Image decode_png(const std::filesystem::path& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str())) {
        throw DataError("cannot decode PNG '" + path.string() + "': " + png.message);
    }
    const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
    png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    Image out(png.width, png.height, color ? 3 : 1);
    if (!png_image_finish_read(&png, nullptr, out.pixels.data(), 0, nullptr)) {
        png_image_free(&png);
        throw DataError("cannot decode PNG '" + path.string() + "': " + png.message);
    }
    return out;
}
#endif

} // namespace

Image decode_pnm(std::string_view bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
        throw DataError("not a binary PGM/PPM file");
    }
    const std::size_t channels = bytes[1] == '5' ? 1 : 3;
    PnmReader reader(bytes);
    const std::size_t w = reader.number();
    const std::size_t h = reader.number();
    const std::size_t maxval = reader.number();
    if (w == 0 || h == 0) throw DataError("PNM image has zero size");
    if (maxval != 255) throw DataError("only 8-bit PNM (maxval 255) is supported, got " + std::to_string(maxval));
    reader.advance(); // single whitespace byte before the raster
    const std::size_t need = w * h * channels;
    if (bytes.size() < reader.pos() + need) throw DataError("PNM raster is truncated");
    Image out(w, h, channels);
    std::copy_n(bytes.data() + reader.pos(), need, out.pixels.data());
    return out;
}

std::string encode_pnm(const Image& image) {
    std::string out = (image.channels == 1 ? "P5\n" : "P6\n") + std::to_string(image.width) + " " +
                      std::to_string(image.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
    return out;
}

bool png_supported() {
#ifdef PRINTKIND_HAVE_PNG
    return true;
#else
    return false;
#endif
}

Image read_image(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return decode_pnm(read_file(path));
    if (ext == ".png") {
#ifdef PRINTKIND_HAVE_PNG
        return decode_png(path);
#else
        throw DataError("'" + path.string() + "': this build has no PNG decoder");
#endif
    }
    throw DataError("unsupported image type '" + ext + "' for '" + path.string() + "'");
}

void write_pnm(const std::filesystem::path& path, const Image& image) { write_file_atomic(path, encode_pnm(image)); }

} // namespace printkind
