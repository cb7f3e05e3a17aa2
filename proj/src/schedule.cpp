#include "noisegen/schedule.hpp"

namespace ng {

DiffusionSchedule make_beta_schedule(const std::string& kind, int T,
                                     double beta_start, double beta_end) {
    if (kind != "linear") {
        throw ValidationError("make_beta_schedule: unknown kind '" + kind + "'");
    }
    if (T < 1) {
        throw ValidationError("make_beta_schedule: T must be >= 1");
    }
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
        throw ValidationError("make_beta_schedule: need 0 < beta_start <= beta_end < 1");
    }
    DiffusionSchedule s;
    s.T = T;
    s.beta.assign(static_cast<std::size_t>(T) + 1, 0.0);
    s.alpha.assign(static_cast<std::size_t>(T) + 1, 1.0);
    s.alpha_bar.assign(static_cast<std::size_t>(T) + 1, 1.0);
    s.posterior_var.assign(static_cast<std::size_t>(T) + 1, 0.0);
    for (int t = 1; t <= T; ++t) {
        const double frac = (T == 1) ? 0.0 : static_cast<double>(t - 1) / (T - 1);
        const std::size_t i = static_cast<std::size_t>(t);
        s.beta[i] = beta_start + (beta_end - beta_start) * frac;
        s.alpha[i] = 1.0 - s.beta[i];
        s.alpha_bar[i] = s.alpha_bar[i - 1] * s.alpha[i];
        s.posterior_var[i] = (1.0 - s.alpha_bar[i - 1]) / (1.0 - s.alpha_bar[i]) * s.beta[i];
    }
    return s;
}

TensorF q_sample_batch(const TensorF& x0, std::span<const int> t, const TensorF& eps,
                       const DiffusionSchedule& sched) {
    check_same_shape(x0, eps, "q_sample");
    if (static_cast<int>(t.size()) != x0.shape.n) {
        throw ValidationError("q_sample_batch: need one step per batch item");
    }
    TensorF out(x0.shape);
    const std::int64_t item = static_cast<std::int64_t>(x0.shape.c) * x0.shape.h * x0.shape.w;
    for (int b = 0; b < x0.shape.n; ++b) {
        if (t[b] < 1 || t[b] > sched.T) {
            throw ValidationError("q_sample_batch: step " + std::to_string(t[b]) +
                                  " outside [1, " + std::to_string(sched.T) + "]");
        }
        const float a = static_cast<float>(std::sqrt(sched.alpha_bar[static_cast<std::size_t>(t[b])]));
        const float c = static_cast<float>(std::sqrt(1.0 - sched.alpha_bar[static_cast<std::size_t>(t[b])]));
        const float* px = x0.ptr() + b * item;
        const float* pe = eps.ptr() + b * item;
        float* po = out.ptr() + b * item;
        for (std::int64_t i = 0; i < item; ++i) po[i] = a * px[i] + c * pe[i];
    }
    return out;
}

}  // namespace ng
