#include "printkind/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "printkind/errors.hpp"
#include "printkind/optim.hpp"

namespace printkind {

void TrainConfig::validate() const {
    if (batch_size < 1) throw DataError("batch size must be at least 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw DataError("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw DataError("momentum must be in [0, 1)");
}

ChannelPlan TrainConfig::plan_for(const ArchSpec& a, std::size_t input_channels) const {
    ChannelPlan plan = default_channel_plan(a, input_channels);
    if (!channels.empty()) plan.conv_channels = channels;
    return plan;
}

namespace {

std::vector<std::uint8_t> gather(const CropSet& set, std::span<const std::size_t> idx) {
    std::vector<std::uint8_t> out(idx.size() * set.image_bytes());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto img = set.image(idx[i]);
        std::copy(img.begin(), img.end(), out.begin() + static_cast<std::ptrdiff_t>(i * set.image_bytes()));
    }
    return out;
}

double accuracy_of(const std::vector<int>& pred, const std::vector<int>& truth) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == truth[i];
    return pred.empty() ? 0.0 : double(ok) / double(pred.size());
}

} // namespace

TrainResult train(const CropSet& train_set, const CropSet* test_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_set.count() == 0) throw DataError("the train split is empty");
    if (train_set.size != kCropSize) throw ShapeError("crops must be 128x128");

    const ArchSpec arch = resolve_arch(cfg.arch);
    TrainResult result{Model::instantiate(arch, cfg.plan_for(arch, train_set.channels), cfg.seed), {}};
    Model& model = result.model;
    model.normalization() = compute_normalization(train_set);

    Sgd sgd(cfg.learning_rate, cfg.momentum);
    SoftmaxCrossEntropy<float> loss_fn;
    const std::size_t n = train_set.count();
    std::vector<std::size_t> order(n);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(cfg.seed + epoch);
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0, batch = 0; start < n; start += cfg.batch_size, ++batch) {
            const std::size_t count = std::min(cfg.batch_size, n - start);
            const std::span<const std::size_t> idx(order.data() + start, count);
            std::vector<int> labels(count);
            for (std::size_t i = 0; i < count; ++i) labels[i] = train_set.labels[idx[i]];

            const Tensor logits = model.forward(model.make_batch(gather(train_set, idx), count));
            const float loss = loss_fn.forward(logits, labels);
            if (!std::isfinite(loss)) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batch));
            }
            loss_sum += double(loss) * double(count);
            const auto l = logits.data();
            for (std::size_t i = 0; i < count; ++i) correct += argmax_low(l.subspan(i * 2, 2)) == labels[i];

            model.backward(loss_fn.backward());
            try {
                sgd.step(model.parameters());
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batch));
            }
        }

        EpochLog entry{epoch, loss_sum / double(n), double(correct) / double(n), std::nullopt};
        if (test_set && test_set->count() > 0) entry.test_acc = accuracy_of(predict(model, *test_set), test_set->labels);
        result.log.push_back(entry);
        if (on_epoch && !on_epoch(entry, model)) break;
    }
    return result;
}

TrainResult train(const Manifest& manifest, const std::filesystem::path& base_dir, const TrainConfig& cfg,
                  const EpochCallback& on_epoch, std::size_t channels) {
    const CropSet train_set = load_crops(manifest, base_dir, Split::train, channels);
    if (train_set.count() == 0) throw DataError("the manifest has no train rows");
    const CropSet test_set = load_crops(manifest, base_dir, Split::test, channels);
    return train(train_set, test_set.count() ? &test_set : nullptr, cfg, on_epoch);
}

std::string format_train_log(const std::vector<EpochLog>& log) {
    std::string out = "epoch,train_loss,train_acc,test_acc\n";
    char buf[128];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,", e.epoch, e.train_loss, e.train_acc);
        out += buf;
        if (e.test_acc) {
            std::snprintf(buf, sizeof buf, "%.9g", *e.test_acc);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

std::vector<int> predict(Model& model, const CropSet& set, std::size_t batch_size) {
    if (set.channels != model.input_channels() || set.size != model.input_size()) {
        throw ShapeError("crops are " + std::to_string(set.channels) + "x" + std::to_string(set.size) + "x" +
                         std::to_string(set.size) + " but the model expects " +
                         std::to_string(model.input_channels()) + "x" + std::to_string(model.input_size()) + "x" +
                         std::to_string(model.input_size()));
    }
    batch_size = std::max<std::size_t>(batch_size, 1);
    std::vector<int> out(set.count());
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < set.count(); start += batch_size) {
        const std::size_t count = std::min(batch_size, set.count() - start);
        idx.resize(count);
        std::iota(idx.begin(), idx.end(), start);
        const Tensor logits = model.forward(model.make_batch(gather(set, idx), count));
        const std::size_t classes = logits.shape()[1];
        for (std::size_t i = 0; i < count; ++i) out[start + i] = argmax_low(logits.data().subspan(i * classes, classes));
    }
    return out;
}

Metrics evaluate(Model& model, const CropSet& set, const Manifest& manifest, std::size_t batch_size) {
    if (set.count() == 0) throw DataError("cannot evaluate an empty split");
    const std::vector<int> pred = predict(model, set, batch_size);
    std::vector<std::string> ids, images;
    for (std::size_t row : set.rows) {
        const auto& r = manifest.records.at(row);
        ids.push_back(r.crop_id);
        images.push_back(r.book_id + "/" + r.page_id);
    }
    return compute_metrics(pred, set.labels, ids, images);
}

Metrics evaluate(Model& model, const Manifest& manifest, const std::filesystem::path& base_dir, Split split,
                 std::size_t batch_size) {
    const CropSet set = load_crops(manifest, base_dir, split, model.input_channels(), model.input_size());
    if (set.count() == 0) throw DataError("the " + std::string(to_string(split)) + " split is empty");
    return evaluate(model, set, manifest, batch_size);
}

} // namespace printkind
