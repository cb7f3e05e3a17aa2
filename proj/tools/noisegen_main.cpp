// noisegen: camera-conditioned noise synthesis via a small conditional
// diffusion model, trained against a built-in sensor/ISP noise simulator.

#include <iostream>

#include "CLI11.hpp"
#include "../src/commands.hpp"

using namespace ng;

namespace {

void add_settings_flags(CLI::App* app, CameraSettings& cs, std::string& bm) {
    app->add_option("--iso", cs.iso, "ISO value");
    app->add_option("--shutter", cs.shutter_speed, "shutter speed in seconds");
    app->add_option("--sensor", cs.sensor_type, "sensor type identifier");
    app->add_option("--ct", cs.color_temp, "color temperature in Kelvin");
    app->add_option("--bm", bm, "brightness mode: low|normal|high");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"camera-conditioned noise synthesis"};
    app.require_subcommand(1);

    ScheduleArgs sched_args;
    auto* sc_schedule = app.add_subcommand("schedule", "print a sampling step sequence");
    sc_schedule->add_option("--kind", sched_args.kind, "ancestral|uniform|dips-basic|dips-advanced");
    sc_schedule->add_option("--t", sched_args.T, "start step")->required();
    sc_schedule->add_option("--s", sched_args.S, "accelerated step count");
    sc_schedule->add_option("--r", sched_args.r, "density parameter");

    MakeCleansArgs mk_args;
    auto* sc_mk = app.add_subcommand("make-cleans", "generate procedural clean patches");
    sc_mk->add_option("--n", mk_args.count, "patch count");
    sc_mk->add_option("--size", mk_args.size, "patch side length (multiple of 4)");
    sc_mk->add_option("--out", mk_args.out_dir, "output directory")->required();
    sc_mk->add_option("--seed", mk_args.seed, "rng seed");

    SimulateArgs sim_args;
    auto* sc_sim = app.add_subcommand("simulate", "emit noisy pairs from the sensor simulator");
    sc_sim->add_option("--config", sim_args.config_path, "run config JSON");
    sc_sim->add_option("--profile", sim_args.profiles, "built-in profile name or JSON path");
    sc_sim->add_option("--cleans", sim_args.clean_dir, "directory of clean .f32 tensors")->required();
    sc_sim->add_option("--iso", sim_args.isos, "ISO grid");
    sc_sim->add_option("--shutter", sim_args.shutters, "shutter grid (seconds)");
    sc_sim->add_option("--ct", sim_args.color_temp, "color temperature");
    sc_sim->add_option("--variants", sim_args.noisy_per_setting, "noisy draws per setting");
    sc_sim->add_option("--train-fraction", sim_args.train_fraction, "train split fraction");
    sc_sim->add_option("--out", sim_args.out_dir, "output directory")->required();
    sc_sim->add_option("--seed", sim_args.seed, "rng seed (0 = config seed)");

    TrainArgs train_args;
    auto* sc_train = app.add_subcommand("train", "train the noise model");
    sc_train->add_option("--config", train_args.config_path, "run config JSON");
    sc_train->add_option("--manifest", train_args.manifest_path, "dataset manifest")->required();
    sc_train->add_option("--out", train_args.out_ckpt, "checkpoint path")->required();
    sc_train->add_option("--resume", train_args.resume_ckpt, "resume from checkpoint");
    sc_train->add_option("--iters", train_args.iters_override, "override iteration count");
    sc_train->add_option("--ckpt-every", train_args.ckpt_every, "periodic checkpoint interval");
    sc_train->add_option("--seed", train_args.seed, "rng seed (0 = config seed)");

    DistillArgs dist_args;
    auto* sc_dist = app.add_subcommand("distill", "distill the one-step start model");
    sc_dist->add_option("--config", dist_args.config_path, "run config JSON");
    sc_dist->add_option("--ckpt", dist_args.ckpt_path, "teacher checkpoint")->required();
    sc_dist->add_option("--manifest", dist_args.manifest_path, "dataset manifest")->required();
    sc_dist->add_option("--out", dist_args.out_ckpt, "output checkpoint")->required();
    sc_dist->add_option("--n", dist_args.n_override, "truncation step N");
    sc_dist->add_option("--iters", dist_args.iters, "distillation iterations");
    sc_dist->add_option("--seed", dist_args.seed, "rng seed (0 = config seed)");

    SampleArgs sample_args;
    std::string sample_bm = "normal";
    auto* sc_sample = app.add_subcommand("sample", "synthesize one noisy image");
    sc_sample->add_option("--config", sample_args.config_path, "run config JSON");
    sc_sample->add_option("--ckpt", sample_args.ckpt_path, "checkpoint")->required();
    sc_sample->add_option("--clean", sample_args.clean_path, "clean .f32 tensor")->required();
    sc_sample->add_option("--out", sample_args.out_path, "output .f32 path")->required();
    add_settings_flags(sc_sample, sample_args.settings, sample_bm);
    sc_sample->add_option("--sampler", sample_args.sampler, "sampler kind");
    sc_sample->add_option("--steps", sample_args.steps, "accelerated step count");
    sc_sample->add_option("--r", sample_args.r, "density parameter");
    sc_sample->add_option("--n", sample_args.n, "truncation step");
    sc_sample->add_flag("--raw-weights", sample_args.raw_weights, "use raw instead of EMA weights");
    sc_sample->add_option("--seed", sample_args.seed, "rng seed (0 = config seed)");

    EvalArgs eval_args;
    auto* sc_eval = app.add_subcommand("eval", "score generated noise against a split");
    sc_eval->add_option("--config", eval_args.config_path, "run config JSON");
    sc_eval->add_option("--ckpt", eval_args.ckpt_path, "checkpoint")->required();
    sc_eval->add_option("--manifest", eval_args.manifest_path, "dataset manifest")->required();
    sc_eval->add_option("--out", eval_args.out_path, "JSONL report path")->required();
    sc_eval->add_option("--split", eval_args.split, "manifest split to score");
    sc_eval->add_option("--metric", eval_args.metric, "akld|psnr|all");
    sc_eval->add_option("--sampler", eval_args.sampler, "sampler kind");
    sc_eval->add_option("--steps", eval_args.steps, "accelerated step count");
    sc_eval->add_flag("--raw-weights", eval_args.raw_weights, "use raw instead of EMA weights");
    sc_eval->add_option("--seed", eval_args.seed, "rng seed (0 = config seed)");

    AugmentArgs aug_args;
    auto* sc_aug = app.add_subcommand("augment", "synthesize noisy variants for a clean set");
    sc_aug->add_option("--config", aug_args.config_path, "run config JSON");
    sc_aug->add_option("--ckpt", aug_args.ckpt_path, "checkpoint")->required();
    sc_aug->add_option("--cleans", aug_args.clean_dir, "directory of clean .f32 tensors")->required();
    sc_aug->add_option("--iso", aug_args.isos, "ISO grid");
    sc_aug->add_option("--shutter", aug_args.shutters, "shutter grid");
    sc_aug->add_option("--sensor", aug_args.sensors, "sensor types (default: config vocabulary)");
    sc_aug->add_option("--ct", aug_args.color_temp, "color temperature");
    sc_aug->add_option("--variants", aug_args.per_setting, "samples per setting");
    sc_aug->add_flag("--raw-weights", aug_args.raw_weights, "use raw instead of EMA weights");
    sc_aug->add_option("--out", aug_args.out_dir, "output directory")->required();
    sc_aug->add_option("--seed", aug_args.seed, "rng seed (0 = config seed)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (*sc_schedule) {
            cmd_schedule(sched_args, std::cout);
        } else if (*sc_mk) {
            cmd_make_cleans(mk_args);
        } else if (*sc_sim) {
            cmd_simulate(sim_args);
        } else if (*sc_train) {
            cmd_train(train_args, std::cout);
        } else if (*sc_dist) {
            cmd_distill(dist_args, std::cout);
        } else if (*sc_sample) {
            sample_args.settings.brightness_mode = brightness_from_string(sample_bm);
            cmd_sample(sample_args, std::cout);
        } else if (*sc_eval) {
            cmd_eval(eval_args, std::cout);
        } else if (*sc_aug) {
            cmd_augment(aug_args, std::cout);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
