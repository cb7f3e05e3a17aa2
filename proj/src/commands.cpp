#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "noisegen/image_io.hpp"
#include "noisegen/isp.hpp"
#include "noisegen/manifest.hpp"
#include "noisegen/parallel.hpp"
#include "noisegen/sampler.hpp"
#include "noisegen/synth.hpp"

namespace fs = std::filesystem;

namespace ng {

namespace {

RunConfig resolve_config(const std::string& path, std::uint64_t seed_flag) {
    RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
    if (seed_flag != 0) cfg.seed = seed_flag;
    cfg.validate();
    return cfg;
}

SensorProfile resolve_profile(const std::string& name_or_path) {
    for (const std::string& b : builtin_profile_names()) {
        if (name_or_path == b) return builtin_profile(b);
    }
    return load_profile(name_or_path);
}

std::vector<std::string> list_f32(const std::string& dir) {
    if (!fs::is_directory(dir)) {
        throw IoError("'" + dir + "' is not a directory");
    }
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".f32") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ValidationError("no .f32 tensors found in '" + dir + "'");
    return files;
}

std::string settings_tag(const CameraSettings& cs, int shutter_idx) {
    std::ostringstream os;
    os << cs.sensor_type << "_iso" << static_cast<int>(cs.iso) << "_ss" << shutter_idx;
    return os.str();
}

SamplerPlan plan_from(const RunConfig& cfg, const std::string& kind_flag, int steps_flag,
                      double r_flag, int n_flag) {
    const std::string kind_s = kind_flag.empty() ? cfg.sampler : kind_flag;
    const SamplerKind kind = sampler_from_string(kind_s);
    const int T = cfg.schedule.T;
    const int S = steps_flag > 0 ? steps_flag : cfg.sample_steps;
    const double r = r_flag > 0.0 ? r_flag : cfg.dips_r;
    const int N = n_flag > 0 ? n_flag : cfg.truncation_n;
    switch (kind) {
        case SamplerKind::ancestral: return ancestral_plan(T);
        case SamplerKind::uniform: return uniform_schedule(T, S);
        case SamplerKind::dips_basic: return dips_schedule(T, S, r);
        case SamplerKind::dips_advanced: return dips_advanced_plan(T, N, S, r);
    }
    throw ValidationError("unreachable sampler kind");
}

struct LoadedModel {
    Checkpoint ckpt;
    RunConfig cfg;
    ParamSetF weights;  // EMA by default
};

LoadedModel load_model(const std::string& ckpt_path, const std::string& config_path,
                       bool raw_weights, std::uint64_t seed_flag) {
    LoadedModel lm;
    lm.ckpt = load_checkpoint(ckpt_path);
    if (!config_path.empty()) {
        lm.cfg = resolve_config(config_path, seed_flag);
        check_checkpoint_config(lm.ckpt, lm.cfg.model);
        lm.cfg.schedule = lm.ckpt.sched;
    } else {
        lm.cfg = RunConfig{};
        lm.cfg.model = lm.ckpt.cfg;
        lm.cfg.schedule = lm.ckpt.sched;
        if (seed_flag != 0) lm.cfg.seed = seed_flag;
    }
    lm.weights = (!raw_weights && lm.ckpt.ema) ? *lm.ckpt.ema : lm.ckpt.params;
    return lm;
}

void announce_seed(std::ostream& log, const char* what, std::uint64_t seed) {
    log << what << " seed=" << seed << "\n";
}

}  // namespace

void cmd_schedule(const ScheduleArgs& a, std::ostream& out) {
    SamplerPlan plan;
    const SamplerKind kind = sampler_from_string(a.kind);
    switch (kind) {
        case SamplerKind::ancestral: plan = ancestral_plan(a.T); break;
        case SamplerKind::uniform: plan = uniform_schedule(a.T, a.S); break;
        case SamplerKind::dips_basic:
        case SamplerKind::dips_advanced: plan = dips_schedule(a.T, a.S, a.r); break;
    }
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        if (i) out << ' ';
        out << plan.steps[i];
    }
    out << '\n';
}

void cmd_make_cleans(const MakeCleansArgs& a) {
    if (a.count < 1 || a.size < 4 || a.size % 4 != 0) {
        throw ValidationError("make-cleans: count >= 1 and size a positive multiple of 4");
    }
    fs::create_directories(a.out_dir);
    for (int i = 0; i < a.count; ++i) {
        Rng rng(mix_seed(a.seed, static_cast<std::uint64_t>(i)));
        const TensorF img = synth_clean_patch(rng, a.size, a.size);
        std::ostringstream name;
        name << "clean_" << std::setw(3) << std::setfill('0') << i;
        save_tensor_f32((fs::path(a.out_dir) / (name.str() + ".f32")).string(), img);
        write_png((fs::path(a.out_dir) / (name.str() + ".png")).string(), img);
    }
}

void cmd_simulate(const SimulateArgs& a) {
    const RunConfig cfg = resolve_config(a.config_path, a.seed);
    if (a.isos.empty() || a.shutters.empty() || a.noisy_per_setting < 1) {
        throw ValidationError("simulate: empty settings grid");
    }
    for (double iso : a.isos) {
        if (!(iso > 0.0)) throw ValidationError("simulate: iso values must be > 0");
    }
    for (double ss : a.shutters) {
        if (!(ss > 0.0)) throw ValidationError("simulate: shutter values must be > 0");
    }
    std::vector<SensorProfile> profiles;
    if (a.profiles.empty()) {
        for (const std::string& b : builtin_profile_names()) profiles.push_back(builtin_profile(b));
    } else {
        for (const std::string& p : a.profiles) profiles.push_back(resolve_profile(p));
    }
    const std::vector<std::string> cleans = list_f32(a.clean_dir);

    fs::create_directories(fs::path(a.out_dir) / "cleans");
    fs::create_directories(fs::path(a.out_dir) / "noisy");

    struct Job {
        int clean_idx;
        SensorProfile profile;
        CameraSettings settings;
        int shutter_idx;
        std::string scene_id;
    };
    std::vector<Job> jobs;
    std::vector<TensorF> clean_imgs;
    std::vector<std::string> clean_rel;
    for (std::size_t ci = 0; ci < cleans.size(); ++ci) {
        TensorF img = load_tensor_f32(cleans[ci]);
        for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
        const std::string stem = fs::path(cleans[ci]).stem().string();
        const std::string rel = "cleans/" + stem + ".f32";
        save_tensor_f32((fs::path(a.out_dir) / rel).string(), img);
        clean_rel.push_back(rel);
        const BrightnessMode bm = brightness_of(img);
        clean_imgs.push_back(std::move(img));
        for (const SensorProfile& prof : profiles) {
            for (double iso : a.isos) {
                for (std::size_t si = 0; si < a.shutters.size(); ++si) {
                    CameraSettings cs;
                    cs.iso = iso;
                    cs.shutter_speed = a.shutters[si];
                    cs.sensor_type = prof.name;
                    cs.color_temp = a.color_temp;
                    cs.brightness_mode = bm;
                    Job job;
                    job.clean_idx = static_cast<int>(ci);
                    job.profile = prof;
                    job.settings = cs;
                    job.shutter_idx = static_cast<int>(si);
                    job.scene_id = stem + "_" + settings_tag(cs, static_cast<int>(si));
                    jobs.push_back(std::move(job));
                }
            }
        }
    }

    DatasetManifest manifest;
    manifest.scenes.resize(jobs.size());
    parallel_for(static_cast<int>(jobs.size()), [&](int j) {
        const Job& job = jobs[static_cast<std::size_t>(j)];
        SceneRecord rec;
        rec.scene_id = job.scene_id;
        rec.clean_path = clean_rel[static_cast<std::size_t>(job.clean_idx)];
        rec.settings = job.settings;
        rec.profile_name = job.profile.name;
        for (int v = 0; v < a.noisy_per_setting; ++v) {
            Rng rng(mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(j)),
                             static_cast<std::uint64_t>(v)));
            const NoisyPair pair = make_noisy_pair(clean_imgs[static_cast<std::size_t>(job.clean_idx)],
                                                   job.settings, job.profile, rng);
            std::ostringstream name;
            name << job.scene_id << "_n" << v;
            const std::string rel = "noisy/" + name.str() + ".f32";
            save_tensor_f32((fs::path(a.out_dir) / rel).string(), pair.noisy);
            write_png((fs::path(a.out_dir) / ("noisy/" + name.str() + ".png")).string(),
                      pair.noisy);
            rec.noisy_paths.push_back(rel);
        }
        manifest.scenes[static_cast<std::size_t>(j)] = std::move(rec);
    });

    // split by clean image so val scenes are unseen content
    const int n_train_cleans = std::max(
        1, std::min(static_cast<int>(cleans.size()) - 1,
                    static_cast<int>(std::lround(a.train_fraction * cleans.size()))));
    std::vector<std::string> train_ids, val_ids;
    for (const Job& job : jobs) {
        (job.clean_idx < n_train_cleans ? train_ids : val_ids).push_back(job.scene_id);
    }
    if (val_ids.empty() && !train_ids.empty()) {
        val_ids.push_back(train_ids.back());
        train_ids.pop_back();
    }
    manifest.splits["train"] = train_ids;
    manifest.splits["val"] = val_ids;
    save_manifest((fs::path(a.out_dir) / "manifest.json").string(), manifest);
}

namespace {

Checkpoint to_checkpoint(const TrainerState& st, const ScheduleSpec& sched,
                         std::optional<ParamSetF> psi) {
    Checkpoint c;
    c.cfg = st.cfg;
    c.sched = sched;
    c.step = st.step;
    c.seed = st.seed;
    c.params = st.params;
    c.ema = st.ema;
    c.psi = std::move(psi);
    c.opt = st.opt;
    return c;
}

TrainerState from_checkpoint(const Checkpoint& c) {
    TrainerState st;
    st.cfg = c.cfg;
    st.params = c.params;
    st.ema = c.ema ? *c.ema : c.params;
    st.opt = c.opt ? *c.opt : AdamState::init(c.params);
    st.step = c.step;
    st.seed = c.seed;
    return st;
}

}  // namespace

void cmd_train(const TrainArgs& a, std::ostream& log) {
    const RunConfig cfg = resolve_config(a.config_path, a.seed);
    const DatasetManifest manifest = load_manifest(a.manifest_path, &cfg.model.sensor_vocab);
    const TrainSet train = load_split(manifest, a.manifest_path, "train");
    if (train.scenes.empty()) throw ValidationError("train: empty train split");

    TrainerState state;
    std::optional<ParamSetF> psi;
    if (!a.resume_ckpt.empty()) {
        const Checkpoint c = load_checkpoint(a.resume_ckpt);
        check_checkpoint_config(c, cfg.model);
        if (!(c.sched == cfg.schedule)) {
            throw ValidationError("train: checkpoint schedule does not match the config");
        }
        state = from_checkpoint(c);
        psi = c.psi;
    } else {
        state = make_trainer(cfg.model, cfg.seed);
    }
    const DiffusionSchedule sched = cfg.schedule.build();

    TrainOptions opt;
    opt.iters = a.iters_override >= 0 ? a.iters_override : cfg.iters;
    opt.batch_size = cfg.batch_size;
    opt.grad_accum = cfg.grad_accum;
    opt.crop = cfg.crop;
    opt.adam.lr = cfg.lr;
    opt.ema_decay = cfg.ema_decay;
    opt.objective = cfg.loss_objective();
    announce_seed(log, "train", state.seed);
    opt.on_step = [&](std::int64_t step, double loss) {
        if (step % 100 == 0 || step == 1) {
            log << "step " << step << " loss " << loss << "\n";
        }
        if (a.ckpt_every > 0 && step % a.ckpt_every == 0) {
            save_checkpoint(a.out_ckpt, to_checkpoint(state, cfg.schedule, psi));
        }
    };
    train_loop(state, train, sched, opt);
    save_checkpoint(a.out_ckpt, to_checkpoint(state, cfg.schedule, psi));
    log << "wrote " << a.out_ckpt << " at step " << state.step << "\n";
}

void cmd_distill(const DistillArgs& a, std::ostream& log) {
    LoadedModel lm = load_model(a.ckpt_path, a.config_path, false, a.seed);
    const DatasetManifest manifest = load_manifest(a.manifest_path, &lm.cfg.model.sensor_vocab);
    const TrainSet train = load_split(manifest, a.manifest_path, "train");
    if (train.scenes.empty()) throw ValidationError("distill: empty train split");
    const DiffusionSchedule sched = lm.cfg.schedule.build();
    const int N = a.n_override > 0 ? a.n_override : lm.cfg.truncation_n;

    const RunConfig& cfg = lm.cfg;
    BatchProvider provider = [&](Rng& rng) {
        return assemble_batch(train, cfg.batch_size, cfg.crop, rng);
    };
    AdamConfig adam;
    adam.lr = cfg.lr;
    Rng rng(mix_seed(cfg.seed, 0xd157));
    announce_seed(log, "distill", cfg.seed);
    const DistillResult result =
        distill_one_step(cfg.model, lm.weights, sched, N, provider, rng, a.iters, adam);
    if (!result.losses.empty()) {
        log << "distill loss " << result.losses.front() << " -> " << result.losses.back()
            << " over " << result.losses.size() << " iters\n";
    }
    Checkpoint out = lm.ckpt;
    out.psi = result.psi;
    save_checkpoint(a.out_ckpt, out);
    log << "wrote " << a.out_ckpt << "\n";
}

void cmd_sample(const SampleArgs& a, std::ostream& log) {
    LoadedModel lm = load_model(a.ckpt_path, a.config_path, a.raw_weights, a.seed);
    const DiffusionSchedule sched = lm.cfg.schedule.build();
    const SamplerPlan plan = plan_from(lm.cfg, a.sampler, a.steps, a.r, a.n);
    if (plan.kind == SamplerKind::dips_advanced && !lm.ckpt.psi) {
        throw ValidationError("sample: checkpoint has no one-step table; run distill first");
    }
    TensorF clean = load_tensor_f32(a.clean_path);
    for (float& v : clean.data) v = std::clamp(v, 0.0f, 1.0f);
    CameraSettings cs = a.settings;
    sensor_index(cs.sensor_type, lm.cfg.model.sensor_vocab);

    const Predictor model = make_predictor(lm.cfg.model, lm.weights);
    std::optional<Predictor> psi;
    if (lm.ckpt.psi) psi = make_predictor(lm.cfg.model, *lm.ckpt.psi);
    Rng rng(mix_seed(lm.cfg.seed, 0x5a3e));
    announce_seed(log, "sample", lm.cfg.seed);
    const TensorF y =
        sample(model, plan, clean, cs, sched, rng, psi ? &*psi : nullptr);
    save_tensor_f32(a.out_path, y);
    const fs::path png = fs::path(a.out_path).replace_extension(".png");
    write_png(png.string(), y);
    log << "wrote " << a.out_path << " (" << to_string(plan.kind) << ", "
        << plan.steps.size() - 1 << " transitions)\n";
}

void cmd_eval(const EvalArgs& a, std::ostream& log) {
    LoadedModel lm = load_model(a.ckpt_path, a.config_path, a.raw_weights, a.seed);
    const DatasetManifest manifest = load_manifest(a.manifest_path, &lm.cfg.model.sensor_vocab);
    const TrainSet eval_scenes = load_split(manifest, a.manifest_path, a.split);
    if (eval_scenes.scenes.empty()) {
        throw ValidationError("eval: split '" + a.split + "' is empty");
    }
    if (a.metric != "akld" && a.metric != "psnr" && a.metric != "all") {
        throw ValidationError("eval: unknown metric '" + a.metric + "'");
    }
    const DiffusionSchedule sched = lm.cfg.schedule.build();
    const SamplerPlan plan = plan_from(lm.cfg, a.sampler, a.steps, -1.0, -1);
    if (plan.kind == SamplerKind::dips_advanced && !lm.ckpt.psi) {
        throw ValidationError("eval: checkpoint has no one-step table; run distill first");
    }
    const Predictor model = make_predictor(lm.cfg.model, lm.weights);
    std::optional<Predictor> psi;
    if (lm.ckpt.psi) psi = make_predictor(lm.cfg.model, *lm.ckpt.psi);

    struct Row {
        std::string scene_id;
        double akld = 0.0, psnr_real = 0.0, psnr_gen = 0.0;
    };
    // one item per (scene, noisy variant)
    struct Item {
        const TrainScene* scene;
        const TensorF* noisy;
        std::string id;
    };
    std::vector<Item> items;
    const auto& split_ids = manifest.splits.at(a.split);
    for (std::size_t s = 0; s < eval_scenes.scenes.size(); ++s) {
        const TrainScene& sc = eval_scenes.scenes[s];
        for (std::size_t v = 0; v < sc.noisy.size(); ++v) {
            items.push_back({&sc, &sc.noisy[v], split_ids[s] + "#" + std::to_string(v)});
        }
    }
    std::vector<Row> rows(items.size());
    const RunConfig& cfg = lm.cfg;
    parallel_for(static_cast<int>(items.size()), [&](int idx) {
        const Item& item = items[static_cast<std::size_t>(idx)];
        Row row;
        row.scene_id = item.id;
        auto generator = [&](int k) {
            Rng rng(mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(idx)),
                             static_cast<std::uint64_t>(k)));
            return sample(model, plan, item.scene->clean, item.scene->settings, sched, rng,
                          psi ? &*psi : nullptr);
        };
        if (a.metric != "psnr") {
            row.akld = akld(item.scene->clean, *item.noisy, generator, cfg.akld);
        }
        if (a.metric != "akld") {
            row.psnr_real = psnr(item.scene->clean, *item.noisy);
            row.psnr_gen = psnr(item.scene->clean, generator(0));
        }
        rows[static_cast<std::size_t>(idx)] = std::move(row);
    });

    std::ofstream out(a.out_path);
    if (!out) throw IoError("cannot write report '" + a.out_path + "'");
    double akld_sum = 0.0, psnr_real_sum = 0.0, psnr_gen_sum = 0.0;
    for (const Row& row : rows) {
        nlohmann::json j{{"scene", row.scene_id}, {"seed", cfg.seed}};
        if (a.metric != "psnr") j["akld"] = row.akld;
        if (a.metric != "akld") {
            j["psnr_real_vs_clean"] = row.psnr_real;
            j["psnr_gen_vs_clean"] = row.psnr_gen;
        }
        out << j.dump() << "\n";
        akld_sum += row.akld;
        psnr_real_sum += row.psnr_real;
        psnr_gen_sum += row.psnr_gen;
    }
    nlohmann::json agg{{"aggregate", true},
                       {"items", rows.size()},
                       {"sampler", to_string(plan.kind)},
                       {"seed", cfg.seed}};
    if (a.metric != "psnr") agg["akld_mean"] = akld_sum / rows.size();
    if (a.metric != "akld") {
        agg["psnr_real_mean"] = psnr_real_sum / rows.size();
        agg["psnr_gen_mean"] = psnr_gen_sum / rows.size();
    }
    out << agg.dump() << "\n";
    log << "wrote " << a.out_path << " (" << rows.size() << " items)\n";
    if (a.metric != "psnr") log << "akld_mean " << akld_sum / rows.size() << "\n";
}

void cmd_augment(const AugmentArgs& a, std::ostream& log) {
    LoadedModel lm = load_model(a.ckpt_path, a.config_path, a.raw_weights, a.seed);
    const DiffusionSchedule sched = lm.cfg.schedule.build();
    const SamplerPlan plan = plan_from(lm.cfg, "", -1, -1.0, -1);
    if (plan.kind == SamplerKind::dips_advanced && !lm.ckpt.psi) {
        throw ValidationError("augment: checkpoint has no one-step table; run distill first");
    }
    if (a.isos.empty() || a.shutters.empty() || a.per_setting < 1) {
        throw ValidationError("augment: empty settings grid");
    }
    const std::vector<std::string> sensors =
        a.sensors.empty() ? lm.cfg.model.sensor_vocab : a.sensors;
    for (const std::string& s : sensors) sensor_index(s, lm.cfg.model.sensor_vocab);

    const std::vector<std::string> cleans = list_f32(a.clean_dir);
    fs::create_directories(fs::path(a.out_dir) / "cleans");
    fs::create_directories(fs::path(a.out_dir) / "noisy");

    const Predictor model = make_predictor(lm.cfg.model, lm.weights);
    std::optional<Predictor> psi;
    if (lm.ckpt.psi) psi = make_predictor(lm.cfg.model, *lm.ckpt.psi);

    struct Job {
        int clean_idx;
        CameraSettings settings;
        int shutter_idx;
        std::string scene_id;
    };
    std::vector<Job> jobs;
    std::vector<TensorF> clean_imgs;
    std::vector<std::string> clean_rel;
    for (std::size_t ci = 0; ci < cleans.size(); ++ci) {
        TensorF img = load_tensor_f32(cleans[ci]);
        for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
        const std::string stem = fs::path(cleans[ci]).stem().string();
        const std::string rel = "cleans/" + stem + ".f32";
        save_tensor_f32((fs::path(a.out_dir) / rel).string(), img);
        clean_rel.push_back(rel);
        const BrightnessMode bm = brightness_of(img);
        clean_imgs.push_back(std::move(img));
        for (const std::string& sensor : sensors) {
            for (double iso : a.isos) {
                for (std::size_t si = 0; si < a.shutters.size(); ++si) {
                    CameraSettings cs;
                    cs.iso = iso;
                    cs.shutter_speed = a.shutters[si];
                    cs.sensor_type = sensor;
                    cs.color_temp = a.color_temp;
                    cs.brightness_mode = bm;
                    jobs.push_back(Job{static_cast<int>(ci), cs, static_cast<int>(si),
                                       stem + "_" + settings_tag(cs, static_cast<int>(si))});
                }
            }
        }
    }

    DatasetManifest manifest;
    manifest.scenes.resize(jobs.size());
    const RunConfig& cfg = lm.cfg;
    parallel_for(static_cast<int>(jobs.size()), [&](int j) {
        const Job& job = jobs[static_cast<std::size_t>(j)];
        SceneRecord rec;
        rec.scene_id = job.scene_id;
        rec.clean_path = clean_rel[static_cast<std::size_t>(job.clean_idx)];
        rec.settings = job.settings;
        rec.profile_name = job.settings.sensor_type;
        for (int v = 0; v < a.per_setting; ++v) {
            Rng rng(mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(j)),
                             static_cast<std::uint64_t>(v)));
            const TensorF y = sample(model, plan, clean_imgs[static_cast<std::size_t>(job.clean_idx)],
                                     job.settings, sched, rng, psi ? &*psi : nullptr);
            std::ostringstream name;
            name << job.scene_id << "_g" << v;
            const std::string rel = "noisy/" + name.str() + ".f32";
            save_tensor_f32((fs::path(a.out_dir) / rel).string(), y);
            write_png((fs::path(a.out_dir) / ("noisy/" + name.str() + ".png")).string(), y);
            rec.noisy_paths.push_back(rel);
        }
        manifest.scenes[static_cast<std::size_t>(j)] = std::move(rec);
    });
    std::vector<std::string> all_ids;
    for (const auto& rec : manifest.scenes) all_ids.push_back(rec.scene_id);
    manifest.splits["train"] = all_ids;
    save_manifest((fs::path(a.out_dir) / "manifest.json").string(), manifest);
    log << "wrote " << jobs.size() * static_cast<std::size_t>(a.per_setting)
        << " synthetic images under " << a.out_dir << "\n";
}

}  // namespace ng
