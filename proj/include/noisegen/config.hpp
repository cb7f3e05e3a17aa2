#pragma once

// Run configuration: schedule, model, optimizer, sampler defaults and metric
// settings, loadable from JSON with every field optional.

#include <string>

#include "noisegen/checkpoint.hpp"
#include "noisegen/metrics.hpp"
#include "noisegen/train.hpp"

namespace ng {

struct RunConfig {
    ScheduleSpec schedule;  // linear, T=200, 1e-4..0.02
    ModelConfig model;

    // optimizer
    double lr = 8e-5;
    int batch_size = 16;
    int grad_accum = 2;
    int iters = 3000;
    int crop = 16;
    double ema_decay = 0.995;
    std::string objective = "mse";  // or "rms"

    // sampler defaults
    std::string sampler = "dips-basic";
    int sample_steps = 30;
    double dips_r = 5.0;
    int truncation_n = 60;

    AkldConfig akld;
    std::uint64_t seed = 1234;

    void validate() const;
    LossObjective loss_objective() const;
};

RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);

}  // namespace ng
