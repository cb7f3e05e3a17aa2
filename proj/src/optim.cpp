#include "noisegen/optim.hpp"

#include <cmath>

namespace ng {

std::pair<ParamSetF, AdamState> sgd_adam_update(const ParamSetF& params,
                                                const ParamSetF& grads,
                                                AdamState state, const AdamConfig& cfg) {
    if (!params.same_names_and_shapes(grads) || !params.same_names_and_shapes(state.m)) {
        throw ValidationError("sgd_adam_update: parameter/gradient/state tables disagree");
    }
    ParamSetF out = params;
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t p = 0; p < params.items.size(); ++p) {
        const auto& g = grads.items[p].second.data;
        auto& m = state.m.items[p].second.data;
        auto& v = state.v.items[p].second.data;
        auto& w = out.items[p].second.data;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = g[i];
            const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            w[i] = static_cast<float>(w[i] - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
    return {std::move(out), std::move(state)};
}

ParamSetF ema_update(const ParamSetF& ema, const ParamSetF& params, double decay) {
    if (!ema.same_names_and_shapes(params)) {
        throw ValidationError("ema_update: shape mismatch between EMA and parameters");
    }
    if (decay < 0.0 || decay > 1.0) {
        throw ValidationError("ema_update: decay must lie in [0, 1]");
    }
    ParamSetF out = ema;
    for (std::size_t p = 0; p < out.items.size(); ++p) {
        auto& e = out.items[p].second.data;
        const auto& w = params.items[p].second.data;
        for (std::size_t i = 0; i < e.size(); ++i) {
            e[i] = static_cast<float>(decay * e[i] + (1.0 - decay) * w[i]);
        }
    }
    return out;
}

}  // namespace ng
