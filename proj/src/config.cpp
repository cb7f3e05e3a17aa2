#include "noisegen/config.hpp"

#include <fstream>

#include "json.hpp"
#include "noisegen/sampler.hpp"

namespace ng {

void RunConfig::validate() const {
    schedule.build();  // throws on bad bounds
    model.validate();
    if (!(lr > 0.0)) throw ValidationError("run config: lr must be > 0");
    if (batch_size < 1 || grad_accum < 1 || iters < 0) {
        throw ValidationError("run config: counts must be positive");
    }
    if (crop < 0 || (crop > 0 && crop % 4 != 0)) {
        throw ValidationError("run config: crop must be 0 or a multiple of 4");
    }
    if (ema_decay < 0.0 || ema_decay > 1.0) {
        throw ValidationError("run config: ema_decay must lie in [0, 1]");
    }
    if (objective != "mse" && objective != "rms") {
        throw ValidationError("run config: objective must be mse or rms");
    }
    if (sample_steps < 1) throw ValidationError("run config: sample_steps must be >= 1");
    if ((sampler == "dips-basic" || sampler == "dips-advanced") && sample_steps < 2) {
        throw ValidationError("run config: decay schedules need sample_steps >= 2");
    }
    if (!(dips_r > 0.0)) throw ValidationError("run config: dips_r must be > 0");
    if (truncation_n < 1 || truncation_n >= schedule.T) {
        throw ValidationError("run config: truncation_n must lie in [1, T)");
    }
    sampler_from_string(sampler);
    akld.validate();
}

LossObjective RunConfig::loss_objective() const {
    return objective == "rms" ? LossObjective::rms : LossObjective::mse;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    nlohmann::json j;
    RunConfig cfg;
    try {
        in >> j;
        if (j.contains("schedule")) {
            const auto& s = j["schedule"];
            cfg.schedule.kind = s.value("kind", cfg.schedule.kind);
            cfg.schedule.T = s.value("T", cfg.schedule.T);
            cfg.schedule.beta_start = s.value("beta_start", cfg.schedule.beta_start);
            cfg.schedule.beta_end = s.value("beta_end", cfg.schedule.beta_end);
        }
        if (j.contains("model")) {
            const auto& m = j["model"];
            cfg.model.base_channels = m.value("base_channels", cfg.model.base_channels);
            cfg.model.time_embed_dim = m.value("time_embed_dim", cfg.model.time_embed_dim);
            cfg.model.cs_embed_dim = m.value("cs_embed_dim", cfg.model.cs_embed_dim);
            cfg.model.mlp_hidden = m.value("mlp_hidden", cfg.model.mlp_hidden);
            if (m.contains("sensor_vocab")) {
                cfg.model.sensor_vocab = m["sensor_vocab"].get<std::vector<std::string>>();
            }
        }
        if (j.contains("optimizer")) {
            const auto& o = j["optimizer"];
            cfg.lr = o.value("lr", cfg.lr);
            cfg.batch_size = o.value("batch_size", cfg.batch_size);
            cfg.grad_accum = o.value("grad_accum", cfg.grad_accum);
            cfg.iters = o.value("iters", cfg.iters);
            cfg.crop = o.value("crop", cfg.crop);
            cfg.ema_decay = o.value("ema_decay", cfg.ema_decay);
            cfg.objective = o.value("objective", cfg.objective);
        }
        if (j.contains("sampler")) {
            const auto& s = j["sampler"];
            cfg.sampler = s.value("kind", cfg.sampler);
            cfg.sample_steps = s.value("steps", cfg.sample_steps);
            cfg.dips_r = s.value("r", cfg.dips_r);
            cfg.truncation_n = s.value("N", cfg.truncation_n);
        }
        if (j.contains("metrics")) {
            const auto& m = j["metrics"];
            cfg.akld.window = m.value("window", cfg.akld.window);
            cfg.akld.samples_per_image = m.value("samples_per_image", cfg.akld.samples_per_image);
            cfg.akld.variance_floor = m.value("variance_floor", cfg.akld.variance_floor);
        }
        cfg.seed = j.value("seed", cfg.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed config '" + path + "': " + e.what());
    }
    cfg.validate();
    return cfg;
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
    nlohmann::json j;
    j["schedule"] = {{"kind", cfg.schedule.kind},
                     {"T", cfg.schedule.T},
                     {"beta_start", cfg.schedule.beta_start},
                     {"beta_end", cfg.schedule.beta_end}};
    j["model"] = {{"base_channels", cfg.model.base_channels},
                  {"time_embed_dim", cfg.model.time_embed_dim},
                  {"cs_embed_dim", cfg.model.cs_embed_dim},
                  {"mlp_hidden", cfg.model.mlp_hidden},
                  {"sensor_vocab", cfg.model.sensor_vocab}};
    j["optimizer"] = {{"lr", cfg.lr},
                      {"batch_size", cfg.batch_size},
                      {"grad_accum", cfg.grad_accum},
                      {"iters", cfg.iters},
                      {"crop", cfg.crop},
                      {"ema_decay", cfg.ema_decay},
                      {"objective", cfg.objective}};
    j["sampler"] = {{"kind", cfg.sampler},
                    {"steps", cfg.sample_steps},
                    {"r", cfg.dips_r},
                    {"N", cfg.truncation_n}};
    j["metrics"] = {{"window", cfg.akld.window},
                    {"samples_per_image", cfg.akld.samples_per_image},
                    {"variance_floor", cfg.akld.variance_floor}};
    j["seed"] = cfg.seed;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config '" + path + "'");
    out << j.dump(2) << "\n";
}

}  // namespace ng
