#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "uwsr/nn/tensor.hpp"

namespace uwsr::testing {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst;  // "<input>[<index>] analytic=... numeric=..."
    int checked = 0;
};

// Central differences against the autograd gradient of a scalar-valued f.
// Entries per input are sampled when the input is larger than `per_input`.
// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheckResult grad_check(const std::function<nn::Tensor<double>()>& f,
                                  std::vector<std::pair<std::string, nn::Tensor<double>>> inputs, int per_input = 24,
                                  double h = 1e-6, double floor = 1e-6, std::uint64_t seed = 7) {
    for (auto& [name, t] : inputs) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    f().backward();
    std::vector<std::vector<double>> analytic;
    for (auto& [name, t] : inputs) {
        auto g = t.grad();
        if (g.empty()) g.assign(t.size(), 0.0);
        analytic.push_back(std::move(g));
    }

    nn::NoGradGuard no_grad;
    std::mt19937_64 rng(seed);
    GradCheckResult result;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        auto& t = inputs[k].second;
        std::vector<std::size_t> idx(t.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        if (static_cast<int>(idx.size()) > per_input) {
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(static_cast<std::size_t>(per_input));
        }
        for (std::size_t i : idx) {
            const double saved = t.data()[i];
            t.data()[i] = saved + h;
            const double up = f().item();
            t.data()[i] = saved - h;
            const double down = f().item();
            t.data()[i] = saved;
            const double numeric = (up - down) / (2 * h);
            const double a = analytic[k][i];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
            ++result.checked;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst = inputs[k].first + "[" + std::to_string(i) + "] analytic=" + std::to_string(a) +
                               " numeric=" + std::to_string(numeric);
            }
        }
    }
    return result;
}

}  // namespace uwsr::testing
