#pragma once

#include <functional>
#include <string>

#include "morphgrasp/layers.hpp"
#include "morphgrasp/rng.hpp"

namespace mg::nn {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    int checked = 0;
};

// Central-difference check of analytic gradients. `loss` evaluates the loss at
// the current parameter values; `grad` must zero grads, run forward+backward
// and leave d loss/d theta in each parameter's grad.
//
// Checks min(numel, samples_per_param) entries per trainable parameter; the
// relative error denominator is max(|analytic|, |numeric|, 1e-6).
GradCheckReport check_gradients(ParamStore& ps, const std::function<double()>& loss,
                                const std::function<void()>& grad, double h, Rng& rng,
                                int samples_per_param);

}  // namespace mg::nn
