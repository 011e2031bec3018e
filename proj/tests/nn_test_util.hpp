#pragma once

#include <functional>

#include "morphgrasp/gradcheck.hpp"
#include "morphgrasp/layers.hpp"

namespace mgtest {

inline mg::nn::Tensor random_tensor(std::vector<int> shape, mg::Rng& rng, double lo = -1.0,
                                    double hi = 1.0) {
    mg::nn::Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// Reduces [s, d] to a scalar with fixed random projections so every output
// entry gets a distinct weight; uniform reductions would hide transposition
// bugs.
inline mg::nn::Var project_scalar(mg::nn::Tape&, mg::nn::Var x, const mg::nn::Tensor& right,
                                  const mg::nn::Tensor& left) {
    using namespace mg::nn;
    Var v = matmul_const_right(x, right);   // [s, 1]
    Var w = matmul_const_left(left, v);     // [1, 1]
    return sum_all(w);
}

// Finite-difference check of `build` (tape -> scalar Var) against backprop.
inline mg::nn::GradCheckReport fd_check(mg::nn::ParamStore& ps,
                                        const std::function<mg::nn::Var(mg::nn::Tape&)>& build,
                                        double h = 1e-6, int samples = 25) {
    auto loss = [&]() {
        mg::nn::Tape t;
        return t.value(build(t)).scalar_value();
    };
    auto grad = [&]() {
        ps.zero_grads();
        mg::nn::Tape t;
        t.backward(build(t));
    };
    mg::Rng rng(977);
    return mg::nn::check_gradients(ps, loss, grad, h, rng, samples);
}

}  // namespace mgtest
