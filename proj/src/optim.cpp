#include "morphgrasp/optim.hpp"

#include <cmath>

namespace mg::nn {

void adam_step(ParamStore& ps, AdamState& st, const AdamConfig& cfg) {
    st.step += 1;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    for (Parameter* p : ps.all()) {
        if (!p->trainable) continue;
        auto [mi, fresh_m] = st.m.try_emplace(p->name, Tensor::zeros(p->value.shape()));
        auto [vi, fresh_v] = st.v.try_emplace(p->name, Tensor::zeros(p->value.shape()));
        (void)fresh_m;
        (void)fresh_v;
        Tensor& m = mi->second;
        Tensor& v = vi->second;
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            double g = p->grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            p->value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

}  // namespace mg::nn
