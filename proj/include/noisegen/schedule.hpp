#pragma once

// Forward-process tables: beta_t, alpha_t = 1 - beta_t, the cumulative
// product alpha_bar_t with alpha_bar_0 = 1, and the posterior variances
// beta_tilde_t = (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t.
// Tables are indexed by step t in [0, T]; index 0 is the convention row.

#include <span>
#include <vector>

#include "noisegen/tensor.hpp"

namespace ng {

struct DiffusionSchedule {
    int T = 0;
    std::vector<double> beta;           // beta[0] unused (= 0)
    std::vector<double> alpha;          // alpha[0] = 1
    std::vector<double> alpha_bar;      // alpha_bar[0] = 1
    std::vector<double> posterior_var;  // posterior_var[1] = 0
};

// kind is "linear": beta interpolates beta_start..beta_end inclusive.
DiffusionSchedule make_beta_schedule(const std::string& kind, int T,
                                     double beta_start, double beta_end);

// x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps
template <typename T>
Tensor<T> q_sample(const Tensor<T>& x0, int t, const Tensor<T>& eps,
                   const DiffusionSchedule& sched) {
    if (t < 1 || t > sched.T) {
        throw ValidationError("q_sample: step " + std::to_string(t) +
                              " outside [1, " + std::to_string(sched.T) + "]");
    }
    check_same_shape(x0, eps, "q_sample");
    const T a = static_cast<T>(std::sqrt(sched.alpha_bar[static_cast<std::size_t>(t)]));
    const T b = static_cast<T>(std::sqrt(1.0 - sched.alpha_bar[static_cast<std::size_t>(t)]));
    Tensor<T> out(x0.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = a * x0.data[i] + b * eps.data[i];
    }
    return out;
}

// Batched variant with one step index per item.
TensorF q_sample_batch(const TensorF& x0, std::span<const int> t, const TensorF& eps,
                       const DiffusionSchedule& sched);

}  // namespace ng
