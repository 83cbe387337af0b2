#include "printkind/features.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>

#include "printkind/errors.hpp"
#include "printkind/hash.hpp"
#include "printkind/io.hpp"
#include "printkind/manifest.hpp"

namespace printkind {

void FeatureSet::require_trainable() const {
    if (rows() < 2) throw DataError("a feature set needs at least two rows to train");
    std::size_t ones = 0;
    for (int l : labels) ones += l == 1;
    if (ones == 0 || ones == rows()) throw DataError("the training features contain a single class");
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

int parse_class(std::string_view text, std::size_t line_no) {
    if (text == "0") return 0;
    if (text == "1") return 1;
    try {
        return class_index(parse_label(text));
    } catch (const DataError&) {
        throw DataError("line " + std::to_string(line_no) + ": unknown label '" + std::string(text) + "'");
    }
}

} // namespace

FeatureSet parse_feature_csv(std::string_view text) {
    FeatureSet set;
    std::size_t line_no = 0;
    bool header = true;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (header) {
            if (fields.size() < 3 || fields[0] != "label" || fields[1] != "crop_id") {
                throw DataError("line 1: feature header must start with label,crop_id,f0");
            }
            for (std::size_t i = 2; i < fields.size(); ++i) {
                if (fields[i] != "f" + std::to_string(i - 2)) {
                    throw DataError("line 1: expected column f" + std::to_string(i - 2) + ", found '" +
                                    std::string(fields[i]) + "'");
                }
            }
            set.dim = fields.size() - 2;
            header = false;
            continue;
        }
        if (fields.size() != set.dim + 2) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(set.dim + 2) +
                            " fields, found " + std::to_string(fields.size()));
        }
        set.labels.push_back(parse_class(fields[0], line_no));
        set.crop_ids.emplace_back(fields[1]);
        for (std::size_t i = 2; i < fields.size(); ++i) {
            float v = 0.0f;
            const auto f = fields[i];
            const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
            if (r.ec != std::errc{} || r.ptr != f.data() + f.size() || !std::isfinite(v)) {
                throw DataError("line " + std::to_string(line_no) + ": feature f" + std::to_string(i - 2) +
                                " is not a finite number: '" + std::string(f) + "'");
            }
            set.values.push_back(v);
        }
    }
    if (header) throw DataError("feature file is empty");
    return set;
}

FeatureSet read_feature_file(const std::filesystem::path& path) {
    try {
        return parse_feature_csv(read_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string format_feature_csv(const FeatureSet& set) {
    std::string out = "label,crop_id";
    for (std::size_t i = 0; i < set.dim; ++i) out += ",f" + std::to_string(i);
    out += '\n';
    char buf[32];
    for (std::size_t r = 0; r < set.rows(); ++r) {
        out += std::to_string(set.labels[r]) + ",";
        if (!set.crop_ids.empty()) out += set.crop_ids[r];
        for (float v : set.row(r)) {
            std::snprintf(buf, sizeof buf, ",%.9g", double(v));
            out += buf;
        }
        out += '\n';
    }
    return out;
}

Blobs make_blobs(const BlobConfig& cfg) {
    if (cfg.dim == 0 || cfg.per_class == 0) throw DataError("blobs need a positive dimension and row count");
    if (!(cfg.sigma > 0.0) || cfg.margin < 0.0) throw DataError("blob sigma must be positive and margin non-negative");
    Blobs out;
    std::mt19937_64 rng(derive_seed(cfg.seed, "blobs"));
    std::normal_distribution<double> normal;
    double norm = 0.0;
    out.direction.resize(cfg.dim);
    while (norm < 1e-6) {
        norm = 0.0;
        for (double& v : out.direction) {
            v = normal(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
    }
    for (double& v : out.direction) v /= norm;
    out.offset = 3.0 * cfg.sigma + cfg.margin / 2.0;

    auto& f = out.features;
    f.dim = cfg.dim;
    for (std::size_t i = 0; i < 2 * cfg.per_class; ++i) {
        const int label = static_cast<int>(i % 2);
        const double sign = label == 1 ? 1.0 : -1.0;
        for (std::size_t d = 0; d < cfg.dim; ++d) {
            f.values.push_back(static_cast<float>(sign * out.offset * out.direction[d] + cfg.sigma * normal(rng)));
        }
        f.labels.push_back(label);
        f.crop_ids.push_back("blob" + std::to_string(i));
    }
    return out;
}

Standardizer Standardizer::fit(const FeatureSet& set) {
    Standardizer s;
    s.mean.assign(set.dim, 0.0f);
    s.scale.assign(set.dim, 1.0f);
    const double n = double(set.rows());
    for (std::size_t d = 0; d < set.dim; ++d) {
        double sum = 0.0;
        for (std::size_t r = 0; r < set.rows(); ++r) sum += set.values[r * set.dim + d];
        const double mean = n > 0 ? sum / n : 0.0;
        double sq = 0.0;
        for (std::size_t r = 0; r < set.rows(); ++r) {
            const double dv = set.values[r * set.dim + d] - mean;
            sq += dv * dv;
        }
        const double sd = n > 0 ? std::sqrt(sq / n) : 0.0;
        s.mean[d] = static_cast<float>(mean);
        s.scale[d] = sd > 1e-12 ? static_cast<float>(sd) : 1.0f;
    }
    return s;
}

std::vector<float> Standardizer::apply(std::span<const float> values) const {
    const std::size_t dim = mean.size();
    if (dim == 0 || values.size() % dim != 0) throw ShapeError("feature width does not match the standardizer");
    std::vector<float> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean[i % dim]) / scale[i % dim];
    return out;
}

} // namespace printkind
