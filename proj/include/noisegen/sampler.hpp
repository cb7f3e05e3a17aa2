#pragma once

// Reverse-process samplers: ancestral, uniform deterministic jumps, and the
// exponential-decay step schedule (optionally started from a distilled
// one-step model at a truncation step N instead of T).

#include <functional>
#include <optional>
#include <span>

#include "noisegen/metrics.hpp"
#include "noisegen/model.hpp"
#include "noisegen/schedule.hpp"
#include "noisegen/train.hpp"

namespace ng {

enum class SamplerKind { ancestral, uniform, dips_basic, dips_advanced };

std::string to_string(SamplerKind k);
SamplerKind sampler_from_string(const std::string& s);

struct SamplerPlan {
    SamplerKind kind = SamplerKind::ancestral;
    std::vector<int> steps;  // strictly descending, last element 0
    int T = 0;               // trained step count
    int S = 0;               // accelerated step count
    double r = 0.0;          // density parameter
    int N = 0;               // start step (== steps.front())
    int t_last = 0;          // floor(10 / ln S) for the decay schedules

    void validate() const;
};

// steps_i = floor(tl + (start - tl) * (e^{r(i-1)/(S-1)} - 1) / (e^r - 1)),
// i = S..1, with tl = 10 / ln S; a terminal 0 is appended. The floor is
// applied to the emitted entries only; tl enters the formula unrounded.
SamplerPlan dips_schedule(int start, int S, double r);

// dips_schedule from truncation step N, tagged advanced, remembering the full
// trained T for the initial one-step jump.
SamplerPlan dips_advanced_plan(int T, int N, int S, double r);

// S evenly spaced steps from T down, terminal 0.
SamplerPlan uniform_schedule(int T, int S);

// T, T-1, ..., 1, 0.
SamplerPlan ancestral_plan(int T);

// (x_t - sqrt(1 - ab_t) eps_hat) / sqrt(ab_t)
TensorF predict_x0(const TensorF& x_t, int t, const TensorF& eps_hat,
                   const DiffusionSchedule& sched);

// sqrt(ab_next) * predict_x0 + sqrt(1 - ab_next) * eps_hat
TensorF deterministic_jump(const TensorF& x_t, int t, int t_next, const TensorF& eps_hat,
                           const DiffusionSchedule& sched);

// posterior mean plus sqrt(posterior_var) noise; no noise at t = 1.
TensorF ancestral_step(const TensorF& x_t, int t, const TensorF& eps_hat,
                       const DiffusionSchedule& sched, Rng& rng);

using Predictor = std::function<TensorF(const TensorF& x, int t, const TensorF& s,
                                        const CameraSettings& cs)>;

Predictor make_predictor(const ModelConfig& cfg, const ParamSetF& params);

// Runs the plan from x ~ N(0, I). For dips_advanced the one-step model maps
// x_T to x_N first; the result is clamped to [0,1] at the very end only.
TensorF sample(const Predictor& eps_model, const SamplerPlan& plan, const TensorF& s,
               const CameraSettings& cs, const DiffusionSchedule& sched, Rng& rng,
               const Predictor* psi = nullptr);

struct DistillResult {
    ParamSetF psi;
    std::vector<float> losses;
};

using BatchProvider = std::function<TrainBatch(Rng&)>;

// One-step distillation: psi starts as a copy of the teacher and regresses
// psi(x_T, N, s, cs) onto the frozen teacher's eps(x_N, N, s, cs), where x_T
// and x_N share the same forward draw of eps.
DistillResult distill_one_step(const ModelConfig& cfg, const ParamSetF& teacher,
                               const DiffusionSchedule& sched, int N,
                               const BatchProvider& data, Rng& rng, int iters,
                               const AdamConfig& adam = {});

struct EvalItem {
    TensorF clean;
    TensorF real_noisy;
    CameraSettings settings;
};

// Ancestral chain per eval item (seeded by item index); snapshots
// clamp(predict_x0) at each probe step and scores it against the item's real
// noise. Returns (step, mean akld) in probe order.
std::vector<std::pair<int, double>> akld_trajectory(const Predictor& eps_model,
                                                    const DiffusionSchedule& sched,
                                                    std::span<const EvalItem> eval_set,
                                                    std::span<const int> probe_steps,
                                                    const AkldConfig& cfg,
                                                    std::uint64_t seed);

}  // namespace ng
