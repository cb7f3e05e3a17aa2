#include "noisegen/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "noisegen/parallel.hpp"

namespace ng {

std::string to_string(SamplerKind k) {
    switch (k) {
        case SamplerKind::ancestral: return "ancestral";
        case SamplerKind::uniform: return "uniform";
        case SamplerKind::dips_basic: return "dips-basic";
        case SamplerKind::dips_advanced: return "dips-advanced";
    }
    return "ancestral";
}

SamplerKind sampler_from_string(const std::string& s) {
    if (s == "ancestral") return SamplerKind::ancestral;
    if (s == "uniform") return SamplerKind::uniform;
    if (s == "dips-basic") return SamplerKind::dips_basic;
    if (s == "dips-advanced") return SamplerKind::dips_advanced;
    throw ValidationError("unknown sampler kind '" + s + "'");
}

void SamplerPlan::validate() const {
    if (steps.size() < 2 || steps.back() != 0) {
        throw ValidationError("sampler plan: steps must end in 0");
    }
    if (steps.front() != N) {
        throw ValidationError("sampler plan: first step must equal the start step");
    }
    for (std::size_t i = 1; i < steps.size(); ++i) {
        if (steps[i] >= steps[i - 1]) {
            throw ValidationError("sampler plan: steps must be strictly decreasing");
        }
    }
    if (steps.front() > T) {
        throw ValidationError("sampler plan: start step exceeds trained T");
    }
    if (kind == SamplerKind::dips_basic || kind == SamplerKind::dips_advanced) {
        if (steps[steps.size() - 2] != t_last) {
            throw ValidationError("sampler plan: last nonzero step must equal t_last");
        }
    }
}

SamplerPlan dips_schedule(int start, int S, double r) {
    if (S < 2) throw ValidationError("dips_schedule: S must be >= 2");
    if (!(r > 0.0)) throw ValidationError("dips_schedule: r must be > 0");
    const double tl = 10.0 / std::log(static_cast<double>(S));
    if (static_cast<double>(start) <= tl) {
        throw ValidationError("dips_schedule: start step " + std::to_string(start) +
                              " must exceed t_last = 10/ln(S)");
    }
    SamplerPlan plan;
    plan.kind = SamplerKind::dips_basic;
    plan.T = start;
    plan.N = start;
    plan.S = S;
    plan.r = r;
    plan.t_last = static_cast<int>(std::floor(tl));
    const double denom = std::exp(r) - 1.0;
    for (int i = S; i >= 1; --i) {
        const double frac = static_cast<double>(i - 1) / (S - 1);
        // r -> 0 limit is linear spacing
        const double ratio = (r < 1e-9) ? frac : (std::exp(r * frac) - 1.0) / denom;
        const int t = static_cast<int>(std::floor(tl + (start - tl) * ratio));
        if (plan.steps.empty() || t < plan.steps.back()) plan.steps.push_back(t);
    }
    plan.steps.push_back(0);
    plan.validate();
    return plan;
}

SamplerPlan dips_advanced_plan(int T, int N, int S, double r) {
    if (N >= T) throw ValidationError("dips_advanced_plan: need N < T");
    SamplerPlan plan = dips_schedule(N, S, r);
    plan.kind = SamplerKind::dips_advanced;
    plan.T = T;
    return plan;
}

SamplerPlan uniform_schedule(int T, int S) {
    if (S < 1) throw ValidationError("uniform_schedule: S must be >= 1");
    if (S > T) throw ValidationError("uniform_schedule: S must not exceed T");
    SamplerPlan plan;
    plan.kind = SamplerKind::uniform;
    plan.T = T;
    plan.N = T;
    plan.S = S;
    for (int i = S; i >= 1; --i) {
        const int t = static_cast<int>(std::llround(static_cast<double>(T) * i / S));
        if (plan.steps.empty() || t < plan.steps.back()) plan.steps.push_back(t);
    }
    plan.steps.push_back(0);
    plan.validate();
    return plan;
}

SamplerPlan ancestral_plan(int T) {
    if (T < 1) throw ValidationError("ancestral_plan: T must be >= 1");
    SamplerPlan plan;
    plan.kind = SamplerKind::ancestral;
    plan.T = T;
    plan.N = T;
    plan.S = T;
    plan.steps.resize(static_cast<std::size_t>(T) + 1);
    for (int i = 0; i <= T; ++i) plan.steps[static_cast<std::size_t>(i)] = T - i;
    return plan;
}

TensorF predict_x0(const TensorF& x_t, int t, const TensorF& eps_hat,
                   const DiffusionSchedule& sched) {
    if (t < 1 || t > sched.T) {
        throw ValidationError("predict_x0: step " + std::to_string(t) + " outside [1, T]");
    }
    check_same_shape(x_t, eps_hat, "predict_x0");
    const double ab = sched.alpha_bar[static_cast<std::size_t>(t)];
    const float inv = static_cast<float>(1.0 / std::sqrt(ab));
    const float k = static_cast<float>(std::sqrt(1.0 - ab));
    TensorF out(x_t.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = (x_t.data[i] - k * eps_hat.data[i]) * inv;
    }
    return out;
}

TensorF deterministic_jump(const TensorF& x_t, int t, int t_next, const TensorF& eps_hat,
                           const DiffusionSchedule& sched) {
    if (t_next < 0 || t_next > t) {
        throw ValidationError("deterministic_jump: need 0 <= t_next <= t");
    }
    if (t_next == t) return x_t;
    const TensorF x0 = predict_x0(x_t, t, eps_hat, sched);
    const double ab = sched.alpha_bar[static_cast<std::size_t>(t_next)];
    const float a = static_cast<float>(std::sqrt(ab));
    const float b = static_cast<float>(std::sqrt(1.0 - ab));
    TensorF out(x_t.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = a * x0.data[i] + b * eps_hat.data[i];
    }
    return out;
}

TensorF ancestral_step(const TensorF& x_t, int t, const TensorF& eps_hat,
                       const DiffusionSchedule& sched, Rng& rng) {
    if (t < 1 || t > sched.T) {
        throw ValidationError("ancestral_step: step " + std::to_string(t) + " outside [1, T]");
    }
    check_same_shape(x_t, eps_hat, "ancestral_step");
    const std::size_t ti = static_cast<std::size_t>(t);
    const double beta = sched.beta[ti];
    const float inv_sqrt_alpha = static_cast<float>(1.0 / std::sqrt(sched.alpha[ti]));
    const float k = static_cast<float>(beta / std::sqrt(1.0 - sched.alpha_bar[ti]));
    const float sigma = static_cast<float>(std::sqrt(sched.posterior_var[ti]));
    TensorF out(x_t.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = inv_sqrt_alpha * (x_t.data[i] - k * eps_hat.data[i]);
    }
    if (t > 1) {
        for (float& v : out.data) v += sigma * static_cast<float>(rng.normal());
    }
    return out;
}

Predictor make_predictor(const ModelConfig& cfg, const ParamSetF& params) {
    return [cfg, params](const TensorF& x, int t, const TensorF& s,
                         const CameraSettings& cs) {
        return eps_theta(x, t, s, cs, params, cfg);
    };
}

TensorF sample(const Predictor& eps_model, const SamplerPlan& plan, const TensorF& s,
               const CameraSettings& cs, const DiffusionSchedule& sched, Rng& rng,
               const Predictor* psi) {
    plan.validate();
    if (plan.T > sched.T) {
        throw ValidationError("sample: plan T exceeds the schedule's step count");
    }
    TensorF x(s.shape);
    rng.fill_normal<float>(x.data);

    if (plan.kind == SamplerKind::dips_advanced) {
        if (!psi) throw ValidationError("sample: dips-advanced requires the one-step table");
        const TensorF eps_psi = (*psi)(x, plan.N, s, cs);
        x = deterministic_jump(x, plan.T, plan.N, eps_psi, sched);
    }

    if (plan.kind == SamplerKind::ancestral) {
        for (std::size_t i = 0; i + 1 < plan.steps.size(); ++i) {
            const int t = plan.steps[i];
            const TensorF eps_hat = eps_model(x, t, s, cs);
            x = ancestral_step(x, t, eps_hat, sched, rng);
        }
    } else {
        for (std::size_t i = 0; i + 1 < plan.steps.size(); ++i) {
            const int t = plan.steps[i];
            const int t_next = plan.steps[i + 1];
            const TensorF eps_hat = eps_model(x, t, s, cs);
            x = deterministic_jump(x, t, t_next, eps_hat, sched);
        }
    }
    for (float& v : x.data) v = std::clamp(v, 0.0f, 1.0f);
    return x;
}

DistillResult distill_one_step(const ModelConfig& cfg, const ParamSetF& teacher,
                               const DiffusionSchedule& sched, int N,
                               const BatchProvider& data, Rng& rng, int iters,
                               const AdamConfig& adam) {
    if (N < 1 || N >= sched.T) {
        throw ValidationError("distill_one_step: need 1 <= N < T");
    }
    DistillResult out;
    out.psi = teacher;
    AdamState opt = AdamState::init(out.psi);
    for (int it = 0; it < iters; ++it) {
        const TrainBatch batch = data(rng);
        const int B = batch.x0.shape.n;
        TensorF eps(batch.x0.shape);
        rng.fill_normal<float>(eps.data);
        const std::vector<int> tT(static_cast<std::size_t>(B), sched.T);
        const std::vector<int> tN(static_cast<std::size_t>(B), N);
        const TensorF x_T = q_sample_batch(batch.x0, tT, eps, sched);
        const TensorF x_N = q_sample_batch(batch.x0, tN, eps, sched);
        const TensorF target = eps_theta(x_N, tN, batch.clean, batch.settings, teacher, cfg);

        TapeF tape;
        const ParamVars pv = register_params(tape, out.psi, true);
        const Var vx = tape.leaf(x_T);
        const Var vs = tape.leaf(batch.clean);
        const Var vt = tape.leaf(time_embed_batch<float>(tN, cfg.time_embed_dim));
        const Var vc = tape.leaf(camera_raw_batch<float>(batch.settings, cfg.sensor_vocab));
        const Var pred = graph::eps_theta(tape, pv, cfg, vx, vs, vt, vc);
        const Var loss = tape.mse_loss(pred, tape.leaf(target));
        tape.backward(loss);
        out.losses.push_back(tape.value(loss).data[0]);

        ParamSetF grads;
        for (const auto& [name, tensor] : out.psi.items) {
            const TensorF& g = tape.grad(pv(name));
            grads.add(name, g.size() == 0 ? TensorF::zeros(tensor.shape) : g);
        }
        auto [next, nextOpt] = sgd_adam_update(out.psi, grads, std::move(opt), adam);
        out.psi = std::move(next);
        opt = std::move(nextOpt);
    }
    return out;
}

std::vector<std::pair<int, double>> akld_trajectory(const Predictor& eps_model,
                                                    const DiffusionSchedule& sched,
                                                    std::span<const EvalItem> eval_set,
                                                    std::span<const int> probe_steps,
                                                    const AkldConfig& cfg,
                                                    std::uint64_t seed) {
    for (std::size_t i = 1; i < probe_steps.size(); ++i) {
        if (probe_steps[i] >= probe_steps[i - 1]) {
            throw ValidationError("akld_trajectory: probe steps must be descending");
        }
    }
    const int n_items = static_cast<int>(eval_set.size());
    const int n_probes = static_cast<int>(probe_steps.size());
    // snapshots[item][probe]
    std::vector<std::vector<TensorF>> snapshots(static_cast<std::size_t>(n_items));

    parallel_for(n_items, [&](int idx) {
        const EvalItem& item = eval_set[static_cast<std::size_t>(idx)];
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(idx)));
        TensorF x(item.clean.shape);
        rng.fill_normal<float>(x.data);
        auto& snaps = snapshots[static_cast<std::size_t>(idx)];
        snaps.resize(static_cast<std::size_t>(n_probes));
        auto clamp01 = [](TensorF t) {
            for (float& v : t.data) v = std::clamp(v, 0.0f, 1.0f);
            return t;
        };
        for (int t = sched.T; t >= 1; --t) {
            const TensorF eps_hat = eps_model(x, t, item.clean, item.settings);
            for (int p = 0; p < n_probes; ++p) {
                if (probe_steps[static_cast<std::size_t>(p)] == t) {
                    snaps[static_cast<std::size_t>(p)] =
                        clamp01(predict_x0(x, t, eps_hat, sched));
                }
            }
            x = ancestral_step(x, t, eps_hat, sched, rng);
        }
        for (int p = 0; p < n_probes; ++p) {
            if (probe_steps[static_cast<std::size_t>(p)] == 0) {
                snaps[static_cast<std::size_t>(p)] = clamp01(x);
            }
        }
    });

    AkldConfig one = cfg;
    one.samples_per_image = 1;
    std::vector<std::pair<int, double>> out;
    for (int p = 0; p < n_probes; ++p) {
        double acc = 0.0;
        for (int idx = 0; idx < n_items; ++idx) {
            const EvalItem& item = eval_set[static_cast<std::size_t>(idx)];
            const TensorF& snap = snapshots[static_cast<std::size_t>(idx)][static_cast<std::size_t>(p)];
            acc += akld(item.clean, item.real_noisy, [&](int) { return snap; }, one);
        }
        out.emplace_back(probe_steps[static_cast<std::size_t>(p)], acc / n_items);
    }
    return out;
}

}  // namespace ng
