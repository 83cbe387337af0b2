#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "printkind/layers.hpp"

namespace printkind {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_entry;  // e.g. "input[17]" or "conv.weight[3]"
    bool passed = false;
};

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

// Compares the layer's analytic gradients against central differences of the scalar loss
// L = sum(r * forward(x)), with r a fixed random probe drawn from `probe_seed`. Covers every
// input entry and every parameter entry. The layer must be deterministic.
GradCheckResult grad_check(Layer<double>& layer, const TensorD& input, double eps, double tol,
                           std::uint64_t probe_seed = 0);

// Runs grad_check on a 64-bit shadow copy of a 32-bit layer.
GradCheckResult grad_check(const Layer<float>& layer, const Tensor& input, double eps, double tol,
                           std::uint64_t probe_seed = 0);

// Checks d(mean cross-entropy)/d(logits).
GradCheckResult grad_check_softmax_xent(const TensorD& logits, std::span<const int> labels, double eps, double tol);

struct GradSuiteEntry {
    std::string kind;
    double max_rel_error = 0.0;
    std::size_t cases = 0;
};

// Every layer kind over `seeds` random cases: conv for kernel sizes {2,3,4,6,10,11}, avgpool,
// relu with inputs bounded away from the kink, fully-connected and softmax cross-entropy.
std::vector<GradSuiteEntry> run_grad_suite(std::size_t seeds = 20, double eps = 1e-3);

} // namespace printkind
