#pragma once

#include <cstdint>
#include <vector>

#include "printkind/features.hpp"
#include "printkind/layers.hpp"
#include "printkind/metrics.hpp"

namespace printkind {

struct FcnConfig {
    std::size_t hidden = 512;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 0;
};

// d -> hidden -> hidden -> 2 with ReLU, on standardized features.
class FcnHead {
public:
    FcnHead(std::size_t dim, std::size_t hidden, std::uint64_t seed);

    std::size_t dim() const { return dim_; }
    Standardizer& standardizer() { return standardizer_; }
    Sequential<float>& network() { return net_; }

    Tensor logits(const FeatureSet& set);
    std::vector<int> predict(const FeatureSet& set);

private:
    std::size_t dim_;
    Standardizer standardizer_;
    Sequential<float> net_;
};

struct FcnResult {
    FcnHead head;
    std::vector<double> epoch_loss;
};

FcnResult train_fcn_head(const FeatureSet& train, const FcnConfig& cfg);

struct SvmConfig {
    double lambda = 0.01;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;
};

// Linear SVM on standardized features; class 1 is the positive side, and a zero decision
// value predicts class 0.
struct LinearSvm {
    std::vector<double> weights;
    double bias = 0.0;
    Standardizer standardizer;

    std::size_t dim() const { return weights.size(); }
    double decision(std::span<const float> raw_row) const;
    std::vector<int> predict(const FeatureSet& set) const;
};

// Regularized hinge objective lambda/2 |w|^2 + mean(max(0, 1 - y (w.z + b))) over the
// standardized rows z, with y in {-1, +1}.
double svm_objective(const std::vector<double>& w, double b, double lambda, const std::vector<float>& z,
                     const std::vector<int>& labels);

struct SvmResult {
    LinearSvm svm;
    std::vector<double> epoch_objective; // after each epoch
};

// Pegasos: one shuffled pass per epoch, step 1/(lambda t), w projected onto the ball of radius
// 1/sqrt(lambda); the bias is not regularized.
SvmResult train_linear_svm(const FeatureSet& train, const SvmConfig& cfg);

// Throws ShapeError on a dimension mismatch.
Metrics eval_head(FcnHead& head, const FeatureSet& set);
Metrics eval_head(const LinearSvm& svm, const FeatureSet& set);

} // namespace printkind
