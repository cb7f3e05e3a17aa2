#pragma once

// CLI command implementations. Flag parsing lives in the tool binary; these
// take resolved argument structs, throw ValidationError / IoError on failure
// and are called directly by the tests.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "noisegen/camera.hpp"
#include "noisegen/config.hpp"

namespace ng {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

struct ScheduleArgs {
    std::string kind = "dips-basic";
    int T = 1000;
    int S = 10;
    double r = 5.0;
};
// Prints the resolved step sequence, space separated.
void cmd_schedule(const ScheduleArgs& a, std::ostream& out);

struct MakeCleansArgs {
    int count = 16;
    int size = 32;
    std::string out_dir;
    std::uint64_t seed = 1234;
};
void cmd_make_cleans(const MakeCleansArgs& a);

struct SimulateArgs {
    std::string config_path;
    std::vector<std::string> profiles;  // built-in names or JSON paths; empty = both built-ins
    std::string clean_dir;
    std::vector<double> isos = {100.0, 800.0, 3200.0};
    std::vector<double> shutters = {0.01};
    double color_temp = 5500.0;
    int noisy_per_setting = 1;
    double train_fraction = 0.75;  // split by clean image
    std::string out_dir;
    std::uint64_t seed = 0;  // 0 = take the config seed
};
void cmd_simulate(const SimulateArgs& a);

struct TrainArgs {
    std::string config_path;
    std::string manifest_path;
    std::string out_ckpt;
    std::string resume_ckpt;
    int iters_override = -1;
    int ckpt_every = 0;  // 0 = final write only
    std::uint64_t seed = 0;
};
void cmd_train(const TrainArgs& a, std::ostream& log);

struct DistillArgs {
    std::string config_path;
    std::string ckpt_path;
    std::string manifest_path;
    std::string out_ckpt;
    int n_override = -1;
    int iters = 1000;
    std::uint64_t seed = 0;
};
void cmd_distill(const DistillArgs& a, std::ostream& log);

struct SampleArgs {
    std::string config_path;
    std::string ckpt_path;
    std::string clean_path;
    std::string out_path;  // .f32; a .png preview is written alongside
    CameraSettings settings;
    std::string sampler;  // empty = config default
    int steps = -1;
    double r = -1.0;
    int n = -1;
    bool raw_weights = false;
    std::uint64_t seed = 0;
};
void cmd_sample(const SampleArgs& a, std::ostream& log);

struct EvalArgs {
    std::string config_path;
    std::string ckpt_path;
    std::string manifest_path;
    std::string out_path;  // JSONL report
    std::string split = "val";
    std::string metric = "all";  // akld | psnr | all
    std::string sampler;
    int steps = -1;
    bool raw_weights = false;
    std::uint64_t seed = 0;
};
void cmd_eval(const EvalArgs& a, std::ostream& log);

struct AugmentArgs {
    std::string config_path;
    std::string ckpt_path;
    std::string clean_dir;
    std::vector<double> isos = {100.0, 800.0, 3200.0};
    std::vector<double> shutters = {0.01};
    std::vector<std::string> sensors;  // empty = config vocabulary
    double color_temp = 5500.0;
    int per_setting = 1;
    bool raw_weights = false;
    std::string out_dir;
    std::uint64_t seed = 0;
};
void cmd_augment(const AugmentArgs& a, std::ostream& log);

}  // namespace ng
