#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "noisegen/checkpoint.hpp"
#include "noisegen/config.hpp"
#include "noisegen/image_io.hpp"
#include "noisegen/manifest.hpp"
#include "noisegen/synth.hpp"

using namespace ng;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("ng_io_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("tensor file round trip is bit-identical") {
    TempDir dir("tensor");
    Rng rng(1);
    const TensorF t = rng.normal_tensor<float>(Shape{2, 3, 5, 7});
    save_tensor_f32(dir.file("t.f32"), t);
    const TensorF u = load_tensor_f32(dir.file("t.f32"));
    CHECK(u.shape == t.shape);
    CHECK(u.data == t.data);

    CHECK_THROWS_AS(load_tensor_f32(dir.file("missing.f32")), IoError);
    {
        std::ofstream bad(dir.file("bad.f32"), std::ios::binary);
        bad << "XXXXJUNK";
    }
    CHECK_THROWS_AS(load_tensor_f32(dir.file("bad.f32")), IoError);
}

TEST_CASE("png previews are deterministic and carry the PNG signature") {
    TempDir dir("png");
    Rng rng(2);
    TensorF img(Shape{1, 3, 9, 13});
    rng.fill_uniform<float>(img.data, 0.0, 1.0);
    write_png(dir.file("a.png"), img);
    write_png(dir.file("b.png"), img);
    const std::string a = slurp(dir.file("a.png"));
    const std::string b = slurp(dir.file("b.png"));
    CHECK(a == b);
    REQUIRE(a.size() > 8);
    const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    for (int i = 0; i < 8; ++i) CHECK(static_cast<unsigned char>(a[i]) == sig[i]);
    CHECK_THROWS_AS(write_png(dir.file("c.png"), TensorF(Shape{2, 3, 4, 4})), ShapeError);
}

TEST_CASE("checkpoint round trip preserves every byte") {
    TempDir dir("ckpt");
    ModelConfig cfg;
    cfg.base_channels = 8;
    Checkpoint c;
    c.cfg = cfg;
    c.sched = ScheduleSpec{"linear", 100, 2e-4, 0.03};
    c.step = 1234;
    c.seed = 99;
    c.params = init_params(cfg, 7);
    c.ema = init_params(cfg, 8);
    c.psi = init_params(cfg, 9);
    AdamState st = AdamState::init(c.params);
    st.t = 55;
    st.m.items[3].second.data[0] = 0.25f;
    c.opt = st;

    save_checkpoint(dir.file("m.ckpt"), c);
    const Checkpoint d = load_checkpoint(dir.file("m.ckpt"));
    CHECK(d.cfg == c.cfg);
    CHECK(d.sched == c.sched);
    CHECK(d.step == c.step);
    CHECK(d.seed == c.seed);
    REQUIRE(d.ema.has_value());
    REQUIRE(d.psi.has_value());
    REQUIRE(d.opt.has_value());
    for (std::size_t i = 0; i < c.params.items.size(); ++i) {
        CHECK(d.params.items[i].first == c.params.items[i].first);
        CHECK(d.params.items[i].second.data == c.params.items[i].second.data);
        CHECK(d.ema->items[i].second.data == c.ema->items[i].second.data);
        CHECK(d.psi->items[i].second.data == c.psi->items[i].second.data);
        CHECK(d.opt->m.items[i].second.data == c.opt->m.items[i].second.data);
        CHECK(d.opt->v.items[i].second.data == c.opt->v.items[i].second.data);
    }
    CHECK(d.opt->t == 55);

    // saving the loaded copy reproduces the file exactly
    save_checkpoint(dir.file("m2.ckpt"), d);
    CHECK(slurp(dir.file("m.ckpt")) == slurp(dir.file("m2.ckpt")));
}

TEST_CASE("checkpoint config mismatches fail loudly") {
    TempDir dir("ckptcfg");
    ModelConfig cfg;
    cfg.base_channels = 8;
    Checkpoint c;
    c.cfg = cfg;
    c.params = init_params(cfg, 3);
    save_checkpoint(dir.file("m.ckpt"), c);
    const Checkpoint d = load_checkpoint(dir.file("m.ckpt"));

    ModelConfig other = cfg;
    other.sensor_vocab = {"sensorA", "sensorB", "sensorC"};
    CHECK_THROWS_WITH_AS(check_checkpoint_config(d, other),
                         doctest::Contains("vocabulary"), ValidationError);
    CHECK_THROWS_AS(load_checkpoint(dir.file("missing.ckpt")), IoError);
}

TEST_CASE("manifest round trip, splits and validation errors") {
    TempDir dir("manifest");
    Rng rng(3);
    // four scenes, three train + one val
    DatasetManifest m;
    for (int i = 0; i < 4; ++i) {
        const std::string id = "scene" + std::to_string(i);
        const TensorF clean = synth_clean_patch(rng, 16, 16);
        TensorF noisy = clean;
        for (float& v : noisy.data) {
            v = std::clamp(v + static_cast<float>(rng.normal() * 0.02), 0.0f, 1.0f);
        }
        save_tensor_f32(dir.file(id + "_clean.f32"), clean);
        save_tensor_f32(dir.file(id + "_noisy.f32"), noisy);
        SceneRecord rec;
        rec.scene_id = id;
        rec.clean_path = id + "_clean.f32";
        rec.noisy_paths = {id + "_noisy.f32"};
        rec.settings = CameraSettings{};
        rec.profile_name = "sensorA";
        m.scenes.push_back(rec);
    }
    m.splits["train"] = {"scene0", "scene1", "scene2"};
    m.splits["val"] = {"scene3"};
    save_manifest(dir.file("manifest.json"), m);

    const std::vector<std::string> vocab = {"sensorA", "sensorB"};
    const DatasetManifest loaded = load_manifest(dir.file("manifest.json"), &vocab);
    CHECK(loaded.scenes.size() == 4);
    CHECK(loaded.splits.at("train").size() == 3);
    CHECK(loaded.splits.at("val").size() == 1);

    const TrainSet train = load_split(loaded, dir.file("manifest.json"), "train");
    CHECK(train.scenes.size() == 3);
    for (const TrainScene& sc : train.scenes) {
        REQUIRE(sc.noisy.size() == 1);
        for (float v : sc.clean.data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
    CHECK_THROWS_AS(load_split(loaded, dir.file("manifest.json"), "test"), ValidationError);

    // empty scene list is a valid manifest
    DatasetManifest empty;
    save_manifest(dir.file("empty.json"), empty);
    CHECK(load_manifest(dir.file("empty.json")).scenes.empty());

    // missing noisy file
    DatasetManifest broken = m;
    broken.scenes[0].noisy_paths = {"gone.f32"};
    save_manifest(dir.file("broken.json"), broken);
    CHECK_THROWS_WITH_AS(load_manifest(dir.file("broken.json")),
                         doctest::Contains("gone.f32"), ValidationError);

    // duplicate ids
    DatasetManifest dup = m;
    dup.scenes.push_back(m.scenes[0]);
    save_manifest(dir.file("dup.json"), dup);
    CHECK_THROWS_WITH_AS(load_manifest(dir.file("dup.json")),
                         doctest::Contains("duplicate"), ValidationError);

    // overlapping splits
    DatasetManifest overlap = m;
    overlap.splits["val"] = {"scene2", "scene3"};
    save_manifest(dir.file("overlap.json"), overlap);
    CHECK_THROWS_WITH_AS(load_manifest(dir.file("overlap.json")),
                         doctest::Contains("more than one split"), ValidationError);

    // split referencing unknown id
    DatasetManifest unknown = m;
    unknown.splits["val"] = {"sceneX"};
    save_manifest(dir.file("unknown.json"), unknown);
    CHECK_THROWS_AS(load_manifest(dir.file("unknown.json")), ValidationError);

    // sensor vocabulary cross-check
    DatasetManifest alien = m;
    alien.scenes[1].settings.sensor_type = "sensorZ";
    save_manifest(dir.file("alien.json"), alien);
    CHECK_NOTHROW(load_manifest(dir.file("alien.json")));  // no vocab given
    CHECK_THROWS_WITH_AS(load_manifest(dir.file("alien.json"), &vocab),
                         doctest::Contains("sensorZ"), ValidationError);

    CHECK_THROWS_AS(load_manifest(dir.file("missing.json")), IoError);
}

TEST_CASE("run config round trip and validation") {
    TempDir dir("cfg");
    RunConfig cfg;
    cfg.iters = 42;
    cfg.seed = 777;
    cfg.model.sensor_vocab = {"x", "y", "z"};
    cfg.sample_steps = 12;
    save_run_config(dir.file("run.json"), cfg);
    const RunConfig loaded = load_run_config(dir.file("run.json"));
    CHECK(loaded.iters == 42);
    CHECK(loaded.seed == 777);
    CHECK(loaded.model.sensor_vocab == cfg.model.sensor_vocab);
    CHECK(loaded.sample_steps == 12);

    {
        std::ofstream bad(dir.file("bad.json"));
        bad << "{\"optimizer\": {\"lr\": -1}}";
    }
    CHECK_THROWS_AS(load_run_config(dir.file("bad.json")), ValidationError);
    CHECK_THROWS_AS(load_run_config(dir.file("missing.json")), IoError);
}

TEST_SUITE_END();
