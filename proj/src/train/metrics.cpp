#include "printkind/metrics.hpp"

#include <charconv>
#include <filesystem>
#include <map>

#include "json.hpp"
#include "printkind/errors.hpp"
#include "printkind/io.hpp"

namespace printkind {

int argmax_low(std::span<const float> logits) {
    int best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

Metrics compute_metrics(std::span<const int> predicted, std::span<const int> truth,
                        std::span<const std::string> crop_ids, std::span<const std::string> image_keys) {
    if (predicted.size() != truth.size()) throw DataError("prediction and label counts differ");
    if (!crop_ids.empty() && crop_ids.size() != truth.size()) throw DataError("crop id count differs from labels");
    if (!image_keys.empty() && image_keys.size() != truth.size()) throw DataError("image key count differs from labels");
    if (truth.empty()) throw DataError("cannot evaluate an empty split");

    Metrics m;
    m.count = truth.size();
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i], p = predicted[i];
        if (t < 0 || t > 1 || p < 0 || p > 1) throw DataError("class index out of range");
        ++m.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
        if (t != p) m.misclassified.push_back({crop_ids.empty() ? std::to_string(i) : crop_ids[i], t, p});
    }
    m.accuracy = double(m.confusion[0][0] + m.confusion[1][1]) / double(m.count);
    for (std::size_t c = 0; c < 2; ++c) {
        const std::size_t tp = m.confusion[c][c];
        const std::size_t predicted_c = m.confusion[0][c] + m.confusion[1][c];
        const std::size_t actual_c = m.confusion[c][0] + m.confusion[c][1];
        m.precision[c] = predicted_c ? double(tp) / double(predicted_c) : 0.0;
        m.recall[c] = actual_c ? double(tp) / double(actual_c) : 0.0;
    }

    if (!image_keys.empty()) {
        struct Votes {
            int truth = 0;
            std::size_t votes[2] = {0, 0};
        };
        std::map<std::string, Votes> images;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            auto& v = images[image_keys[i]];
            v.truth = truth[i];
            ++v.votes[predicted[i]];
        }
        std::size_t correct = 0;
        for (const auto& [key, v] : images) {
            const int vote = v.votes[1] > v.votes[0] ? 1 : 0;
            correct += vote == v.truth;
        }
        m.images = images.size();
        m.image_accuracy = double(correct) / double(images.size());
    }
    return m;
}

std::string metrics_json(const Metrics& m) {
    nlohmann::ordered_json j;
    j["count"] = m.count;
    j["accuracy"] = m.accuracy;
    j["confusion"] = {{m.confusion[0][0], m.confusion[0][1]}, {m.confusion[1][0], m.confusion[1][1]}};
    j["precision"] = {m.precision[0], m.precision[1]};
    j["recall"] = {m.recall[0], m.recall[1]};
    j["images"] = m.images;
    j["image_accuracy"] = m.image_accuracy;
    auto& mis = j["misclassified"] = nlohmann::ordered_json::array();
    for (const auto& e : m.misclassified) {
        mis.push_back({{"crop_id", e.crop_id}, {"true", e.truth}, {"predicted", e.predicted}});
    }
    return j.dump(2) + "\n";
}

std::string export_file_name(const Misclassified& m, std::string_view extension) {
    return std::to_string(m.truth) + "_" + std::to_string(m.predicted) + "_" + m.crop_id + std::string(extension);
}

ExportName parse_export_file_name(std::string_view name) {
    const auto bad = [&] { return DataError("not an exported crop name: " + std::string(name)); };
    const auto dot = name.rfind('.');
    if (dot != std::string_view::npos) name = name.substr(0, dot);
    ExportName out;
    const char* p = name.data();
    const char* end = name.data() + name.size();
    for (int* field : {&out.truth, &out.predicted}) {
        const auto r = std::from_chars(p, end, *field);
        if (r.ec != std::errc{} || r.ptr == end || *r.ptr != '_') throw bad();
        p = r.ptr + 1;
    }
    if (p == end) throw bad();
    out.crop_id.assign(p, end);
    return out;
}

std::size_t export_misclassified(const Metrics& metrics, const Manifest& manifest,
                                 const std::filesystem::path& base_dir, const std::filesystem::path& out_dir,
                                 std::size_t limit) {
    std::map<std::string, const CropRecord*> by_id;
    for (const auto& r : manifest.records) by_id[r.crop_id] = &r;

    std::filesystem::create_directories(out_dir);
    std::string index = "file,crop_id,true,predicted\n";
    std::size_t written = 0;
    for (const auto& m : metrics.misclassified) {
        if (written >= limit) break;
        const auto it = by_id.find(m.crop_id);
        if (it == by_id.end()) throw DataError("misclassified crop " + m.crop_id + " is not in the manifest");
        const std::filesystem::path src = base_dir / it->second->path;
        const std::string file = export_file_name(m, src.extension().string());
        write_file_atomic(out_dir / file, read_file(src));
        index += file + "," + m.crop_id + "," + std::to_string(m.truth) + "," + std::to_string(m.predicted) + "\n";
        ++written;
    }
    write_file_atomic(out_dir / "index.csv", index);
    return written;
}

} // namespace printkind
