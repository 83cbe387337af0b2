#include "printkind/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "json.hpp"
#include "printkind/errors.hpp"
#include "printkind/hash.hpp"
#include "printkind/io.hpp"

namespace printkind {
namespace {

constexpr double kPi = std::numbers::pi;

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0))); }

double uniform01(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Value noise on a rotated, offset lattice; lattice values come from a hash so the plane is unbounded.
struct NoiseOctave {
    double scale, cos_a, sin_a, off_u, off_v, amplitude;
    std::uint64_t seed;

    double lattice(long long i, long long j) const {
        return uniform01(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL ^
                                                      static_cast<std::uint64_t>(j))));
    }

    double operator()(double x, double y) const {
        const double u = (cos_a * x - sin_a * y) / scale + off_u;
        const double v = (sin_a * x + cos_a * y) / scale + off_v;
        const double fu = std::floor(u), fv = std::floor(v);
        const auto i = static_cast<long long>(fu), j = static_cast<long long>(fv);
        const double su = smooth(u - fu), sv = smooth(v - fv);
        const double top = lattice(i, j) + su * (lattice(i + 1, j) - lattice(i, j));
        const double bottom = lattice(i, j + 1) + su * (lattice(i + 1, j + 1) - lattice(i, j + 1));
        return amplitude * (top + sv * (bottom - top));
    }
};

double draw(std::mt19937_64& rng, Range r) {
    if (r.hi < r.lo) throw DataError("parameter range has hi < lo");
    return r.lo + (r.hi - r.lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

} // namespace

void TextureParams::validate_engraving() const {
    if (!(width >= 1.0) || !(spacing > width)) throw DataError("engraving needs spacing > width >= 1");
    if (!(waviness >= 0.0) || !(wave_period > 0.0) || !(orientation_jitter >= 0.0)) {
        throw DataError("engraving waviness/jitter must be non-negative and the wave period positive");
    }
    if (!(tone_mean > 0.0 && tone_mean < 255.0) || !(contrast >= 0.0)) {
        throw DataError("tone mean must lie in (0, 255) and contrast be non-negative");
    }
}

void TextureParams::validate_litho() const {
    if (!(grain > 0.0)) throw DataError("lithography grain must be positive");
    if (!(density >= 0.0 && density < 1.0)) throw DataError("lithography density must lie in [0, 1)");
    if (!(tone_mean > 0.0 && tone_mean < 255.0) || !(contrast >= 0.0)) {
        throw DataError("tone mean must lie in (0, 255) and contrast be non-negative");
    }
}

void NoiseParams::validate() const {
    if (!(blur_sigma >= 0) || !(gradient_amplitude >= 0) || !(salt_pepper >= 0 && salt_pepper <= 1) ||
        !(bleed_through_opacity >= 0 && bleed_through_opacity <= 1)) {
        throw DataError("noise parameters must be non-negative, opacity and salt-pepper rate at most 1");
    }
}

Image gen_engraving_tile(const TextureParams& p, std::uint64_t seed, std::size_t size) {
    p.validate_engraving();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double theta = p.orientation + p.orientation_jitter * (2.0 * unit(rng) - 1.0);
    const double offset = p.spacing * unit(rng);
    const double phase = 2.0 * kPi * unit(rng);
    const double dx = std::cos(theta), dy = std::sin(theta);
    const double paper = p.tone_mean + p.contrast * p.width / p.spacing;

    Image out(size, size);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double along = dx * static_cast<double>(x) + dy * static_cast<double>(y);
            double across = -dy * static_cast<double>(x) + dx * static_cast<double>(y) + offset;
            if (p.waviness > 0) across += p.waviness * std::sin(2.0 * kPi * along / p.wave_period + phase);
            const double d = std::abs(across - p.spacing * std::round(across / p.spacing));
            const double coverage = std::clamp(p.width / 2.0 + 0.5 - d, 0.0, 1.0);
            out.at(x, y) = to_byte(paper - p.contrast * coverage);
        }
    }
    return out;
}

Image gen_litho_tile(const TextureParams& p, std::uint64_t seed, std::size_t size) {
    p.validate_litho();
    if (p.density == 0.0) return Image(size, size, 1, to_byte(p.tone_mean));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    // Each octave sums three lattices turned 60 degrees apart, which cancels most of the
    // axis-aligned bias of bilinear value noise.
    std::vector<NoiseOctave> octaves;
    double scale = p.grain, amplitude = 1.0;
    for (int o = 0; o < 3; ++o) {
        const double angle = 2.0 * kPi * unit(rng);
        for (int r = 0; r < 3; ++r) {
            const double a = angle + r * kPi / 3.0;
            octaves.push_back(
                {scale, std::cos(a), std::sin(a), 1000.0 * unit(rng), 1000.0 * unit(rng), amplitude, rng()});
        }
        scale *= 2.0;
        amplitude *= 0.6;
    }
    const std::size_t n = size * size;
    std::vector<double> field(n);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            double v = 0;
            for (const auto& o : octaves) v += o(static_cast<double>(x), static_cast<double>(y));
            field[y * size + x] = v;
        }
    }
    // Exact (1 - density) quantile: the top round(density * n) values are ink.
    std::vector<double> sorted = field;
    const auto ink = static_cast<std::size_t>(std::lround(p.density * static_cast<double>(n)));
    const std::size_t k = n - std::min(n, std::max<std::size_t>(ink, 1));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
    const double q = sorted[k];
    // Anti-aliased dot edges: coverage ramps over 1.5 px of distance to the threshold
    // contour (value offset divided by the local gradient), so outlines are not pixel-aligned.
    constexpr double kEdge = 1.5;
    auto at = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
        const auto last = static_cast<std::ptrdiff_t>(size) - 1;
        return field[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(y, 0, last)) * size +
                     static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(x, 0, last))];
    };
    std::vector<double> coverage(n);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const auto sx = static_cast<std::ptrdiff_t>(x), sy = static_cast<std::ptrdiff_t>(y);
            const double gx = 0.5 * (at(sx + 1, sy) - at(sx - 1, sy));
            const double gy = 0.5 * (at(sx, sy + 1) - at(sx, sy - 1));
            const double distance = (field[y * size + x] - q) / std::max(std::hypot(gx, gy), 1e-9);
            coverage[y * size + x] = std::clamp(0.5 + distance / kEdge, 0.0, 1.0);
        }
    }

    const double paper = p.tone_mean + p.density * p.contrast;
    Image out(size, size);
    for (std::size_t i = 0; i < n; ++i) {
        out.pixels[i] = to_byte(paper - p.contrast * coverage[i]);
    }
    return out;
}

void gaussian_blur(std::vector<float>& plane, std::size_t width, std::size_t height, double sigma) {
    if (sigma <= 0) return;
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = v;
        total += v;
    }
    for (double& v : kernel) v /= total;

    const auto w = static_cast<std::ptrdiff_t>(width), h = static_cast<std::ptrdiff_t>(height);
    std::vector<float> tmp(plane.size());
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            double s = 0;
            for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
                const std::ptrdiff_t xx = std::clamp<std::ptrdiff_t>(x + i, 0, w - 1);
                s += kernel[static_cast<std::size_t>(i + radius)] * plane[static_cast<std::size_t>(y * w + xx)];
            }
            tmp[static_cast<std::size_t>(y * w + x)] = static_cast<float>(s);
        }
    }
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            double s = 0;
            for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
                const std::ptrdiff_t yy = std::clamp<std::ptrdiff_t>(y + i, 0, h - 1);
                s += kernel[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(yy * w + x)];
            }
            plane[static_cast<std::size_t>(y * w + x)] = static_cast<float>(s);
        }
    }
}

Image apply_scan_noise(const Image& tile, const NoiseParams& noise, std::uint64_t seed) {
    noise.validate();
    if (tile.channels != 1) throw DataError("scan noise expects a gray tile");
    if (noise.is_identity()) return tile;
    const std::size_t w = tile.width, h = tile.height;
    std::vector<float> v(tile.pixels.begin(), tile.pixels.end());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    gaussian_blur(v, w, h, noise.blur_sigma);

    if (noise.gradient_amplitude > 0) {
        const double phi = 2.0 * kPi * unit(rng);
        const double c = std::cos(phi), s = std::sin(phi);
        const double half = 0.5 * (std::abs(c) * static_cast<double>(w) + std::abs(s) * static_cast<double>(h));
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                const double t = (c * (static_cast<double>(x) - 0.5 * static_cast<double>(w)) +
                                  s * (static_cast<double>(y) - 0.5 * static_cast<double>(h))) /
                                 half;
                v[y * w + x] += static_cast<float>(noise.gradient_amplitude * t);
            }
        }
    }

    if (noise.bleed_through_opacity > 0) {
        // Text lines from the reverse side: word-length bars, mirrored left to right, softened.
        std::vector<float> mask(w * h, 0.0f);
        const auto line_pitch = static_cast<std::size_t>(16 + rng() % 9);
        const auto bar_height = static_cast<std::size_t>(5 + rng() % 4);
        for (std::size_t top = rng() % line_pitch; top < h; top += line_pitch) {
            std::size_t x = rng() % 12;
            while (x < w) {
                const std::size_t len = 8 + rng() % 33;
                for (std::size_t yy = top; yy < std::min(h, top + bar_height); ++yy)
                    for (std::size_t xx = x; xx < std::min(w, x + len); ++xx) mask[yy * w + (w - 1 - xx)] = 1.0f;
                x += len + 4 + rng() % 6;
            }
        }
        gaussian_blur(mask, w, h, 1.5);
        const auto alpha = static_cast<float>(noise.bleed_through_opacity);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= 1.0f - alpha * mask[i];
    }

    if (noise.salt_pepper > 0) {
        std::bernoulli_distribution hit(noise.salt_pepper), coin(0.5);
        for (float& x : v)
            if (hit(rng)) x = coin(rng) ? 255.0f : 0.0f;
    }

    Image out(w, h);
    for (std::size_t i = 0; i < v.size(); ++i) out.pixels[i] = to_byte(v[i]);
    return out;
}

SynthPreset reference_preset() {
    SynthPreset p;
    p.name = "reference";
    p.engraving.spacing = {5.0, 9.0};
    p.engraving.width = {1.5, 2.8};
    p.engraving.orientation = {0.0, kPi};
    p.engraving.orientation_jitter = {0.2, 0.4};
    p.engraving.waviness = {0.0, 0.6};
    p.engraving.wave_period = {48.0, 80.0};
    p.engraving.grain = {2.0, 2.0};
    p.engraving.density = {0.3, 0.3};
    p.engraving.tone_mean = {120.0, 170.0};
    p.engraving.contrast = {110.0, 170.0};

    p.lithography = p.engraving;
    p.lithography.grain = {1.8, 3.0};
    p.lithography.density = {0.2, 0.45};

    p.noise.blur_sigma = {0.0, 0.8};
    p.noise.bleed_through_opacity = {0.0, 0.15};
    p.noise.gradient_amplitude = {0.0, 20.0};
    p.noise.salt_pepper = {0.0, 0.002};
    return p;
}

SynthPreset hard_preset() {
    SynthPreset p = reference_preset();
    p.name = "hard";
    // Fine, wobbly, jittered strokes against coarse grain under heavy blur.
    p.engraving.spacing = {3.0, 5.0};
    p.engraving.width = {1.0, 1.8};
    p.engraving.orientation_jitter = {0.4, 0.8};
    p.engraving.waviness = {1.0, 3.0};
    p.engraving.wave_period = {10.0, 24.0};
    p.lithography.grain = {2.5, 5.0};
    p.lithography.density = {0.25, 0.5};
    p.noise.blur_sigma = {0.8, 1.8};
    p.noise.bleed_through_opacity = {0.1, 0.35};
    p.noise.gradient_amplitude = {10.0, 40.0};
    p.noise.salt_pepper = {0.0, 0.01};
    return p;
}

const SynthPreset& synth_preset(std::string_view name) {
    static const SynthPreset reference = reference_preset();
    static const SynthPreset hard = hard_preset();
    if (name == "reference") return reference;
    if (name == "hard") return hard;
    throw DataError("unknown synthetic preset '" + std::string(name) + "' (expected reference or hard)");
}

CorpusPlan plan_corpus(const SynthPreset& preset, std::size_t engraving_books, std::size_t litho_books,
                       std::size_t crops_per_book, std::uint64_t seed) {
    if (engraving_books == 0 || litho_books == 0 || crops_per_book == 0) {
        throw DataError("corpus needs at least one book per class and one crop per book");
    }
    CorpusPlan plan;
    plan.preset = preset;
    plan.seed = seed;
    plan.crops_per_book = crops_per_book;
    auto add_books = [&](Label label, std::size_t count, const char* prefix, const TextureRanges& r) {
        const std::size_t digits = std::max<std::size_t>(2, std::to_string(count - 1).size());
        for (std::size_t b = 0; b < count; ++b) {
            std::string num = std::to_string(b);
            SynthBook book{prefix + std::string(digits - num.size(), '0') + num, label, {}};
            std::mt19937_64 rng(derive_seed(seed, "book:" + book.book_id));
            TextureParams& t = book.params;
            t.spacing = draw(rng, r.spacing);
            t.width = draw(rng, r.width);
            t.orientation = draw(rng, r.orientation);
            t.orientation_jitter = draw(rng, r.orientation_jitter);
            t.waviness = draw(rng, r.waviness);
            t.wave_period = draw(rng, r.wave_period);
            t.grain = draw(rng, r.grain);
            t.density = draw(rng, r.density);
            t.tone_mean = draw(rng, r.tone_mean);
            t.contrast = draw(rng, r.contrast);
            if (label == Label::wood_engraving) {
                t.validate_engraving();
            } else {
                t.validate_litho();
            }
            plan.books.push_back(std::move(book));
        }
    };
    add_books(Label::wood_engraving, engraving_books, "engr", preset.engraving);
    add_books(Label::lithography, litho_books, "litho", preset.lithography);
    return plan;
}

Image CorpusPlan::tile(std::size_t book, std::size_t index) const {
    const SynthBook& b = books.at(book);
    std::mt19937_64 rng(derive_seed(seed, b.book_id, index));
    NoiseParams noise;
    noise.blur_sigma = draw(rng, preset.noise.blur_sigma);
    noise.bleed_through_opacity = draw(rng, preset.noise.bleed_through_opacity);
    noise.gradient_amplitude = draw(rng, preset.noise.gradient_amplitude);
    noise.salt_pepper = draw(rng, preset.noise.salt_pepper);
    const std::uint64_t texture_seed = rng();
    const std::uint64_t noise_seed = rng();
    const Image clean = b.label == Label::wood_engraving ? gen_engraving_tile(b.params, texture_seed)
                                                         : gen_litho_tile(b.params, texture_seed);
    return apply_scan_noise(clean, noise, noise_seed);
}

CropRecord CorpusPlan::record(std::size_t book, std::size_t index) const {
    const SynthBook& b = books.at(book);
    std::string num = std::to_string(index);
    if (num.size() < 4) num.insert(0, 4 - num.size(), '0');
    std::string page = std::to_string(index / crops_per_page);
    if (page.size() < 3) page.insert(0, 3 - page.size(), '0');
    CropRecord r;
    r.crop_id = b.book_id + "_t" + num;
    r.book_id = b.book_id;
    r.page_id = "p" + page;
    r.x = (index % crops_per_page) * kTileSize;
    r.y = 0;
    r.label = b.label;
    r.path = "crops/" + b.book_id + "/" + r.crop_id + ".pgm";
    return r;
}

Manifest CorpusPlan::manifest() const {
    Manifest m;
    for (std::size_t b = 0; b < books.size(); ++b)
        for (std::size_t i = 0; i < crops_per_book; ++i) m.records.push_back(record(b, i));
    return m;
}

std::string corpus_params_json(const CorpusPlan& plan) {
    using json = nlohmann::ordered_json;
    auto range = [](Range r) { return json::array({r.lo, r.hi}); };
    auto ranges = [&](const TextureRanges& t) {
        return json{{"spacing", range(t.spacing)},     {"width", range(t.width)},
                    {"orientation", range(t.orientation)}, {"orientation_jitter", range(t.orientation_jitter)},
                    {"waviness", range(t.waviness)},   {"wave_period", range(t.wave_period)},
                    {"grain", range(t.grain)},         {"density", range(t.density)},
                    {"tone_mean", range(t.tone_mean)}, {"contrast", range(t.contrast)}};
    };
    json doc;
    doc["preset"] = plan.preset.name;
    doc["seed"] = plan.seed;
    doc["crops_per_book"] = plan.crops_per_book;
    doc["crops_per_page"] = plan.crops_per_page;
    doc["ranges"] = {{"wood_engraving", ranges(plan.preset.engraving)},
                     {"lithography", ranges(plan.preset.lithography)},
                     {"noise",
                      {{"blur_sigma", range(plan.preset.noise.blur_sigma)},
                       {"bleed_through_opacity", range(plan.preset.noise.bleed_through_opacity)},
                       {"gradient_amplitude", range(plan.preset.noise.gradient_amplitude)},
                       {"salt_pepper", range(plan.preset.noise.salt_pepper)}}}};
    json books = json::array();
    for (const auto& b : plan.books) {
        const TextureParams& t = b.params;
        json params = b.label == Label::wood_engraving
                          ? json{{"spacing", t.spacing},         {"width", t.width},
                                 {"orientation", t.orientation}, {"orientation_jitter", t.orientation_jitter},
                                 {"waviness", t.waviness},       {"wave_period", t.wave_period}}
                          : json{{"grain", t.grain}, {"density", t.density}};
        params["tone_mean"] = t.tone_mean;
        params["contrast"] = t.contrast;
        books.push_back({{"book_id", b.book_id}, {"label", std::string(to_string(b.label))}, {"params", params}});
    }
    doc["books"] = books;
    return doc.dump(2) + "\n";
}

Manifest gen_corpus(const CorpusPlan& plan, const std::filesystem::path& out_dir) {
    const std::size_t total = plan.books.size() * plan.crops_per_book;
    std::vector<std::exception_ptr> errors(total);
    const long long count = static_cast<long long>(total);
#pragma omp parallel for schedule(dynamic, 8)
    for (long long t = 0; t < count; ++t) {
        const std::size_t book = static_cast<std::size_t>(t) / plan.crops_per_book;
        const std::size_t index = static_cast<std::size_t>(t) % plan.crops_per_book;
        try {
            write_pnm(out_dir / plan.record(book, index).path, plan.tile(book, index));
        } catch (...) {
            errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    Manifest m = plan.manifest();
    write_manifest(out_dir / "manifest.csv", m);
    write_file_atomic(out_dir / "params.json", corpus_params_json(plan));
    return m;
}

} // namespace printkind
