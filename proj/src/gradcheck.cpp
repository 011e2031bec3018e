#include "morphgrasp/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mg::nn {

GradCheckReport check_gradients(ParamStore& ps, const std::function<double()>& loss,
                                const std::function<void()>& grad, double h, Rng& rng,
                                int samples_per_param) {
    grad();
    // Snapshot analytic grads before finite differencing nudges anything.
    std::vector<Tensor> analytic;
    for (Parameter* p : ps.all()) analytic.push_back(p->grad);

    GradCheckReport rep;
    auto params = ps.all();
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter* p = params[pi];
        if (!p->trainable) continue;
        std::size_t n = p->value.numel();
        std::vector<std::size_t> idx;
        if (n <= static_cast<std::size_t>(samples_per_param)) {
            for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
        } else {
            for (int i = 0; i < samples_per_param; ++i)
                idx.push_back(rng.uniform_int(n));
        }
        for (std::size_t i : idx) {
            double saved = p->value[i];
            p->value[i] = saved + h;
            double lp = loss();
            p->value[i] = saved - h;
            double lm = loss();
            p->value[i] = saved;
            double numeric = (lp - lm) / (2.0 * h);
            double a = analytic[pi][i];
            double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
            double rel = std::abs(a - numeric) / denom;
            ++rep.checked;
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_param = p->name;
                rep.worst_index = i;
                rep.worst_analytic = a;
                rep.worst_numeric = numeric;
            }
        }
    }
    return rep;
}

}  // namespace mg::nn
