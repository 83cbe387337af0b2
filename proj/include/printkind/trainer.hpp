#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "printkind/dataset.hpp"
#include "printkind/manifest.hpp"
#include "printkind/metrics.hpp"
#include "printkind/model.hpp"

namespace printkind {

struct TrainConfig {
    std::string arch = "Big-Filters"; // preset name or DSL text
    std::vector<std::size_t> channels; // empty: default plan for the arch
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    bool deterministic = true;

    void validate() const;
    ChannelPlan plan_for(const ArchSpec& arch, std::size_t input_channels) const;
};

struct EpochLog {
    std::size_t epoch = 0; // 1-based
    double train_loss = 0.0;
    double train_acc = 0.0;
    std::optional<double> test_acc;
};

// Called after every epoch; return false to stop early.
using EpochCallback = std::function<bool(const EpochLog&, Model&)>;

struct TrainResult {
    Model model;
    std::vector<EpochLog> log;
};

// Standardization statistics come from `train_set` and are stored on the model. Each epoch
// visits the crops in an order shuffled with seed + epoch.
TrainResult train(const CropSet& train_set, const CropSet* test_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

// Loads the train (and, if present, test) split of a manifest and trains.
TrainResult train(const Manifest& manifest, const std::filesystem::path& base_dir, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {}, std::size_t channels = 1);

// CSV `epoch,train_loss,train_acc,test_acc`; test_acc is empty when there is no test split.
std::string format_train_log(const std::vector<EpochLog>& log);

std::vector<int> predict(Model& model, const CropSet& set, std::size_t batch_size = 64);

// Metrics for one split of a manifest.
Metrics evaluate(Model& model, const Manifest& manifest, const std::filesystem::path& base_dir, Split split,
                 std::size_t batch_size = 64);
Metrics evaluate(Model& model, const CropSet& set, const Manifest& manifest, std::size_t batch_size = 64);

} // namespace printkind
