#pragma once

// Binary checkpoint: "NGCK" magic, config echo as a JSON chunk, then named
// f32 tensor tables (parameters, optional EMA / one-step / Adam moments).
// Save then load is bit-identical, and carrying the optimizer moments is
// what makes a resumed run equal an uninterrupted one.

#include <optional>
#include <string>

#include "noisegen/model.hpp"
#include "noisegen/optim.hpp"
#include "noisegen/schedule.hpp"

namespace ng {

struct ScheduleSpec {
    std::string kind = "linear";
    int T = 200;
    double beta_start = 1e-4;
    double beta_end = 0.02;

    DiffusionSchedule build() const { return make_beta_schedule(kind, T, beta_start, beta_end); }
    bool operator==(const ScheduleSpec&) const = default;
};

struct Checkpoint {
    ModelConfig cfg;
    ScheduleSpec sched;
    std::int64_t step = 0;
    std::uint64_t seed = 0;
    ParamSetF params;
    std::optional<ParamSetF> ema;
    std::optional<ParamSetF> psi;
    std::optional<AdamState> opt;
};

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

// Fails loudly when the stored config (notably the sensor vocabulary) does
// not match what the caller expects.
void check_checkpoint_config(const Checkpoint& c, const ModelConfig& expected);

}  // namespace ng
