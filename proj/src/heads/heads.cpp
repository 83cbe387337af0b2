#include "printkind/heads.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "printkind/errors.hpp"
#include "printkind/model.hpp"
#include "printkind/optim.hpp"

namespace printkind {

namespace {

void check_dim(std::size_t head_dim, const FeatureSet& set) {
    if (set.dim != head_dim) {
        throw ShapeError("features have dimension " + std::to_string(set.dim) + " but the head expects " +
                         std::to_string(head_dim));
    }
}

Tensor rows_tensor(const std::vector<float>& z, std::span<const std::size_t> idx, std::size_t dim) {
    Tensor t({idx.size(), dim});
    auto out = t.data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::copy_n(z.begin() + static_cast<std::ptrdiff_t>(idx[i] * dim), dim, out.begin() + static_cast<std::ptrdiff_t>(i * dim));
    }
    return t;
}

} // namespace

FcnHead::FcnHead(std::size_t dim, std::size_t hidden, std::uint64_t seed) : dim_(dim) {
    if (dim == 0 || hidden == 0) throw ShapeError("FCN head needs positive input and hidden widths");
    standardizer_.mean.assign(dim, 0.0f);
    standardizer_.scale.assign(dim, 1.0f);
    auto& first = net_.emplace<FullyConnected<float>>(dim, hidden, "fc0");
    first.set_input_grad_needed(false);
    net_.emplace<Relu<float>>();
    net_.emplace<FullyConnected<float>>(hidden, hidden, "fc1");
    net_.emplace<Relu<float>>();
    auto& head = net_.emplace<FullyConnected<float>>(hidden, 2, "head");
    head.weight().init_gain = kHeadInitGain;
    init_params(net_.parameters(), seed);
}

Tensor FcnHead::logits(const FeatureSet& set) {
    check_dim(dim_, set);
    const std::vector<float> z = standardizer_.apply(set.values);
    return net_.forward(Tensor({set.rows(), dim_}, z));
}

std::vector<int> FcnHead::predict(const FeatureSet& set) {
    if (set.rows() == 0) return {};
    const Tensor l = logits(set);
    std::vector<int> out(set.rows());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = argmax_low(l.data().subspan(i * 2, 2));
    return out;
}

FcnResult train_fcn_head(const FeatureSet& train, const FcnConfig& cfg) {
    train.require_trainable();
    if (cfg.batch_size < 1) throw DataError("batch size must be at least 1");
    FcnResult result{FcnHead(train.dim, cfg.hidden, cfg.seed), {}};
    FcnHead& head = result.head;
    head.standardizer() = Standardizer::fit(train);
    const std::vector<float> z = head.standardizer().apply(train.values);

    Sgd sgd(cfg.learning_rate, cfg.momentum);
    SoftmaxCrossEntropy<float> loss_fn;
    const std::size_t n = train.rows();
    std::vector<std::size_t> order(n);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(cfg.seed + epoch);
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, n - start);
            const std::span<const std::size_t> idx(order.data() + start, count);
            std::vector<int> labels(count);
            for (std::size_t i = 0; i < count; ++i) labels[i] = train.labels[idx[i]];
            const Tensor logits = head.network().forward(rows_tensor(z, idx, train.dim));
            const float loss = loss_fn.forward(logits, labels);
            if (!std::isfinite(loss)) throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
            total += double(loss) * double(count);
            head.network().backward(loss_fn.backward());
            sgd.step(head.network().parameters());
        }
        result.epoch_loss.push_back(total / double(n));
    }
    return result;
}

double LinearSvm::decision(std::span<const float> raw_row) const {
    if (raw_row.size() != weights.size()) throw ShapeError("feature width does not match the SVM");
    double s = bias;
    for (std::size_t d = 0; d < weights.size(); ++d) {
        s += weights[d] * ((double(raw_row[d]) - standardizer.mean[d]) / standardizer.scale[d]);
    }
    return s;
}

std::vector<int> LinearSvm::predict(const FeatureSet& set) const {
    check_dim(dim(), set);
    std::vector<int> out(set.rows());
    for (std::size_t i = 0; i < set.rows(); ++i) out[i] = decision(set.row(i)) > 0.0 ? 1 : 0;
    return out;
}

double svm_objective(const std::vector<double>& w, double b, double lambda, const std::vector<float>& z,
                     const std::vector<int>& labels) {
    const std::size_t dim = w.size();
    double hinge = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        double s = b;
        for (std::size_t d = 0; d < dim; ++d) s += w[d] * z[i * dim + d];
        const double y = labels[i] == 1 ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - y * s);
    }
    double sq = 0.0;
    for (double v : w) sq += v * v;
    return 0.5 * lambda * sq + hinge / double(labels.size());
}

SvmResult train_linear_svm(const FeatureSet& train, const SvmConfig& cfg) {
    if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) throw DataError("SVM lambda must be positive");
    train.require_trainable();
    SvmResult result;
    LinearSvm& svm = result.svm;
    svm.standardizer = Standardizer::fit(train);
    svm.weights.assign(train.dim, 0.0);
    const std::vector<float> z = svm.standardizer.apply(train.values);
    const std::size_t n = train.rows(), dim = train.dim;
    const double radius = 1.0 / std::sqrt(cfg.lambda);

    std::vector<std::size_t> order(n);
    std::size_t t = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(cfg.seed + epoch);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (cfg.lambda * double(t));
            const float* x = z.data() + i * dim;
            const double y = train.labels[i] == 1 ? 1.0 : -1.0;
            double s = svm.bias;
            for (std::size_t d = 0; d < dim; ++d) s += svm.weights[d] * x[d];
            const double shrink = 1.0 - eta * cfg.lambda;
            for (double& w : svm.weights) w *= shrink;
            if (y * s < 1.0) {
                for (std::size_t d = 0; d < dim; ++d) svm.weights[d] += eta * y * x[d];
                svm.bias += eta * y;
            }
            double sq = 0.0;
            for (double w : svm.weights) sq += w * w;
            if (sq > radius * radius) {
                const double k = radius / std::sqrt(sq);
                for (double& w : svm.weights) w *= k;
            }
        }
        const double obj = svm_objective(svm.weights, svm.bias, cfg.lambda, z, train.labels);
        if (!std::isfinite(obj)) throw NumericError("non-finite SVM objective at epoch " + std::to_string(epoch));
        result.epoch_objective.push_back(obj);
    }
    return result;
}

Metrics eval_head(FcnHead& head, const FeatureSet& set) {
    check_dim(head.dim(), set);
    return compute_metrics(head.predict(set), set.labels, set.crop_ids);
}

Metrics eval_head(const LinearSvm& svm, const FeatureSet& set) {
    check_dim(svm.dim(), set);
    return compute_metrics(svm.predict(set), set.labels, set.crop_ids);
}

} // namespace printkind
