#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>

#include "morphgrasp/layers.hpp"

namespace mg::nn {

struct AdamConfig {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;
};

// First/second moment estimates keyed by parameter name. Frozen parameters
// carry no state; unfreezing later starts them fresh.
struct AdamState {
    std::int64_t step = 0;
    std::unordered_map<std::string, Tensor> m;
    std::unordered_map<std::string, Tensor> v;
};

// One update from the gradients currently held in each parameter. Iterates in
// ParamStore insertion order, skips frozen parameters, does not clear grads.
void adam_step(ParamStore& ps, AdamState& st, const AdamConfig& cfg);

}  // namespace mg::nn
