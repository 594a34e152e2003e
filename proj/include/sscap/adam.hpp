#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sscap/array.hpp"

namespace sscap {

using GradMap = std::unordered_map<std::string, Array2>;

// Bias-corrected Adam. One AdamState serves one player (one parameter
// subset); moment arrays are keyed by parameter name and created lazily.
struct AdamState {
    double lr = 5e-4;
    double b1 = 0.9;
    double b2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    std::unordered_map<std::string, Array2> m;
    std::unordered_map<std::string, Array2> v;
};

// Applies one Adam step in place to every listed parameter. grads must hold
// an entry of matching shape for each name; t increments once per call.
void adam_update(const std::vector<std::pair<std::string, Array2*>>& params, const GradMap& grads,
                 AdamState& state);

}  // namespace sscap
