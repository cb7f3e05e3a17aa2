#pragma once

// Adam with bias correction, and the EMA shadow used for sampling. Both are
// pure: they return fresh parameter/state values.

#include <cstdint>

#include "noisegen/params.hpp"

namespace ng {

struct AdamConfig {
    double lr = 8e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::int64_t t = 0;  // completed update count
    ParamSetF m;
    ParamSetF v;

    static AdamState init(const ParamSetF& params) {
        return AdamState{0, params.zeros_like(), params.zeros_like()};
    }
};

std::pair<ParamSetF, AdamState> sgd_adam_update(const ParamSetF& params,
                                                const ParamSetF& grads,
                                                AdamState state, const AdamConfig& cfg);

// ema' = decay * ema + (1 - decay) * params
ParamSetF ema_update(const ParamSetF& ema, const ParamSetF& params, double decay);

}  // namespace ng
