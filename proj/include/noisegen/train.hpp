#pragma once

// Denoiser training: draw (t, eps) per item, form x_t, regress the predicted
// noise onto eps, and descend with Adam + gradient accumulation + EMA.

#include <functional>
#include <span>

#include "noisegen/model.hpp"
#include "noisegen/optim.hpp"
#include "noisegen/schedule.hpp"

namespace ng {

struct TrainBatch {
    TensorF x0;     // noisy targets, in [0,1]
    TensorF clean;  // paired clean images, same shape
    std::vector<CameraSettings> settings;

    void validate() const;
};

enum class LossObjective {
    mse,  // mean squared error (default)
    rms,  // sqrt of the mean squared error; the unsquared-norm variant
};

struct StepResult {
    double loss = 0.0;
    ParamSetF grads;
};

// Alternative forward used by tests; receives the same tape/param handles as
// the real model graph and must return the eps prediction.
using ForwardGraphFn = std::function<Var(TapeF&, const ParamVars&, Var x_t,
                                         std::span<const int> t,
                                         std::span<const CameraSettings> cs, Var s)>;

// Draw order, one rng: t_1..t_B (uniform in [1, T]), then the eps tensor in
// item-major order. Deterministic given the rng state.
StepResult training_step(const TrainBatch& batch, const ModelConfig& cfg,
                         const ParamSetF& params, const DiffusionSchedule& sched, Rng& rng,
                         LossObjective objective = LossObjective::mse,
                         const ForwardGraphFn* forward_override = nullptr);

struct TrainScene {
    TensorF clean;  // (1, C, H, W)
    std::vector<TensorF> noisy;
    CameraSettings settings;
};

struct TrainSet {
    std::vector<TrainScene> scenes;
};

struct TrainOptions {
    int iters = 3000;
    int batch_size = 16;
    int grad_accum = 2;
    int crop = 16;  // 0 = full image
    AdamConfig adam{};
    double ema_decay = 0.995;
    LossObjective objective = LossObjective::mse;
    std::function<void(std::int64_t step, double loss)> on_step;
};

struct TrainerState {
    ModelConfig cfg;
    ParamSetF params;
    ParamSetF ema;
    AdamState opt;
    std::int64_t step = 0;
    std::uint64_t seed = 0;
};

TrainerState make_trainer(const ModelConfig& cfg, std::uint64_t seed);

struct TrainLog {
    std::vector<float> losses;  // one entry per optimizer update
};

// Runs opt.iters optimizer updates. Each update draws from an rng derived
// from (seed, step), so an interrupted run resumed from a checkpoint replays
// the identical stream.
TrainLog train_loop(TrainerState& state, const TrainSet& data,
                    const DiffusionSchedule& sched, const TrainOptions& opt);

// Uniform scene/variant/crop sampling used by the loop, exposed for reuse.
TrainBatch assemble_batch(const TrainSet& data, int batch_size, int crop, Rng& rng);

}  // namespace ng
