#include "noisegen/model.hpp"

#include <cmath>

namespace ng {

void ModelConfig::validate() const {
    if (scales != 3) throw ValidationError("model config: scales is fixed at 3");
    if (base_channels < 1) throw ValidationError("model config: base_channels must be >= 1");
    if (time_embed_dim < 2 || time_embed_dim % 2 != 0) {
        throw ValidationError("model config: time_embed_dim must be even and >= 2");
    }
    if (cs_embed_dim < 1) throw ValidationError("model config: cs_embed_dim must be >= 1");
    if (mlp_hidden < 1) throw ValidationError("model config: mlp_hidden must be >= 1");
    if (in_channels < 1) throw ValidationError("model config: in_channels must be >= 1");
    if (sensor_vocab.empty()) throw ValidationError("model config: sensor vocabulary is empty");
    for (std::size_t i = 0; i < sensor_vocab.size(); ++i) {
        for (std::size_t j = i + 1; j < sensor_vocab.size(); ++j) {
            if (sensor_vocab[i] == sensor_vocab[j]) {
                throw ValidationError("model config: duplicate sensor '" + sensor_vocab[i] + "'");
            }
        }
    }
}

std::vector<FilmLayer> film_layers(const ModelConfig& cfg) {
    const int C = cfg.base_channels;
    return {
        {"xenc.s1", C}, {"xenc.s2", 2 * C}, {"xenc.s3", 4 * C}, {"mid", 4 * C},
        {"dec.s3", 4 * C}, {"dec.s2", 2 * C}, {"dec.s1", C},
    };
}

namespace {

void add_conv(std::vector<ParamSpec>& m, const std::string& name, int out_c, int in_c) {
    m.push_back({name + ".weight", Shape{out_c, in_c, 3, 3}});
    m.push_back({name + ".bias", Shape{out_c, 1, 1, 1}});
}

void add_stage(std::vector<ParamSpec>& m, const std::string& name, int in_c, int out_c) {
    add_conv(m, name + ".conv1", out_c, in_c);
    add_conv(m, name + ".conv2", out_c, out_c);
}

void add_mlp(std::vector<ParamSpec>& m, const std::string& prefix, int in, int hidden, int out) {
    m.push_back({prefix + ".fc1.weight", Shape{hidden, in, 1, 1}});
    m.push_back({prefix + ".fc1.bias", Shape{hidden, 1, 1, 1}});
    m.push_back({prefix + ".fc2.weight", Shape{hidden, hidden, 1, 1}});
    m.push_back({prefix + ".fc2.bias", Shape{hidden, 1, 1, 1}});
    m.push_back({prefix + ".fc3.weight", Shape{out, hidden, 1, 1}});
    m.push_back({prefix + ".fc3.bias", Shape{out, 1, 1, 1}});
}

}  // namespace

std::vector<ParamSpec> param_manifest(const ModelConfig& cfg) {
    cfg.validate();
    const int C = cfg.base_channels;
    const int in = cfg.in_channels;
    std::vector<ParamSpec> m;

    add_stage(m, "xenc.s1", in, C);
    add_stage(m, "xenc.s2", C, 2 * C);
    add_stage(m, "xenc.s3", 2 * C, 4 * C);
    add_stage(m, "cenc.s1", in, C);
    add_stage(m, "cenc.s2", C, 2 * C);
    add_stage(m, "cenc.s3", 2 * C, 4 * C);
    add_stage(m, "mid", 4 * C, 4 * C);
    add_stage(m, "dec.s3", 12 * C, 4 * C);
    add_stage(m, "dec.s2", 8 * C, 2 * C);
    add_stage(m, "dec.s1", 4 * C, C);
    add_conv(m, "head", in, C);

    add_mlp(m, "cond.time", cfg.time_embed_dim, cfg.mlp_hidden, cfg.cs_embed_dim);
    add_mlp(m, "cond.cs", cfg.raw_cs_dim(), cfg.mlp_hidden, cfg.cs_embed_dim);
    for (const FilmLayer& l : film_layers(cfg)) {
        add_mlp(m, "cond.film." + l.name, cfg.cs_embed_dim, cfg.mlp_hidden, 2 * l.channels);
    }
    return m;
}

ParamSetF init_params(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x1417));
    ParamSetF ps;
    for (const ParamSpec& spec : param_manifest(cfg)) {
        TensorF t(spec.shape);
        const bool is_weight = spec.name.ends_with(".weight");
        const bool is_film_head = spec.name.starts_with("cond.film.") &&
                                  (spec.name.ends_with(".fc3.weight") ||
                                   spec.name.ends_with(".fc3.bias"));
        if (is_weight && !is_film_head) {
            const int fan_in = spec.shape.c * spec.shape.h * spec.shape.w;
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            rng.fill_uniform<float>(t.data, -bound, bound);
        }
        ps.add(spec.name, std::move(t));
    }
    return ps;
}

std::vector<double> sinusoidal_embed(double t, int dim) {
    if (dim < 2 || dim % 2 != 0) {
        throw ValidationError("sinusoidal_embed: dim must be even and >= 2");
    }
    if (t < 0.0) throw ValidationError("sinusoidal_embed: t must be >= 0");
    const int half = dim / 2;
    std::vector<double> out(static_cast<std::size_t>(dim));
    for (int j = 0; j < half; ++j) {
        const double expo = (half == 1) ? 0.0 : static_cast<double>(j) / (half - 1);
        const double freq = std::pow(10000.0, -expo);
        out[static_cast<std::size_t>(2 * j)] = std::sin(t * freq);
        out[static_cast<std::size_t>(2 * j + 1)] = std::cos(t * freq);
    }
    return out;
}

TensorF eps_theta(const TensorF& x_t, std::span<const int> t, const TensorF& s,
                  std::span<const CameraSettings> cs, const ParamSetF& params,
                  const ModelConfig& cfg) {
    if (static_cast<int>(t.size()) != x_t.shape.n || cs.size() != t.size()) {
        throw ValidationError("eps_theta: need one step and one settings record per item");
    }
    TapeF tape;
    const ParamVars pv = register_params(tape, params, false);
    const Var vx = tape.leaf(x_t);
    const Var vs = tape.leaf(s);
    const Var vt = tape.leaf(time_embed_batch<float>(t, cfg.time_embed_dim));
    const Var vc = tape.leaf(camera_raw_batch<float>(cs, cfg.sensor_vocab));
    return tape.value(graph::eps_theta(tape, pv, cfg, vx, vs, vt, vc));
}

TensorF eps_theta(const TensorF& x_t, int t, const TensorF& s, const CameraSettings& cs,
                  const ParamSetF& params, const ModelConfig& cfg) {
    const int steps[] = {t};
    const CameraSettings settings[] = {cs};
    return eps_theta(x_t, steps, s, settings, params, cfg);
}

std::vector<float> encode_camera_settings(const CameraSettings& cs, const ModelConfig& cfg,
                                          const ParamSetF& params) {
    TapeF tape;
    const ParamVars pv = register_params(tape, params, false);
    const CameraSettings arr[] = {cs};
    const Var raw = tape.leaf(camera_raw_batch<float>(arr, cfg.sensor_vocab));
    const Var out = graph::mlp(tape, pv, "cond.cs", raw);
    return tape.value(out).data;
}

std::pair<std::vector<float>, std::vector<float>> tccam(int t,
                                                        std::span<const float> cs_vec,
                                                        const std::string& layer,
                                                        const ModelConfig& cfg,
                                                        const ParamSetF& params) {
    int channels = -1;
    for (const FilmLayer& l : film_layers(cfg)) {
        if (l.name == layer) channels = l.channels;
    }
    if (channels < 0) throw ValidationError("tccam: unknown layer '" + layer + "'");
    if (static_cast<int>(cs_vec.size()) != cfg.cs_embed_dim) {
        throw ShapeError("tccam: cs embedding length " + std::to_string(cs_vec.size()) +
                         " does not match cs_embed_dim");
    }
    TapeF tape;
    const ParamVars pv = register_params(tape, params, false);
    const int steps[] = {t};
    const Var temb = tape.leaf(time_embed_batch<float>(steps, cfg.time_embed_dim));
    TensorF csv(Shape{1, cfg.cs_embed_dim, 1, 1});
    std::copy(cs_vec.begin(), cs_vec.end(), csv.data.begin());
    const Var cond = tape.add(graph::mlp(tape, pv, "cond.time", temb), tape.leaf(csv));
    auto [gamma, beta] = graph::film(tape, pv, layer, cond, channels);
    return {tape.value(gamma).data, tape.value(beta).data};
}

TensorF apply_affine(const TensorF& f, std::span<const float> gamma,
                     std::span<const float> beta) {
    if (static_cast<int>(gamma.size()) != f.shape.c || gamma.size() != beta.size()) {
        throw ShapeError("apply_affine: gamma/beta length " + std::to_string(gamma.size()) +
                         " does not match channel axis of " + f.shape.str());
    }
    TensorF g(Shape{1, f.shape.c, 1, 1}, std::vector<float>(gamma.begin(), gamma.end()));
    TensorF b(Shape{1, f.shape.c, 1, 1}, std::vector<float>(beta.begin(), beta.end()));
    return affine_fwd(f, g, b);
}

std::array<TensorF, 3> mcam_features(const TensorF& s, const ParamSetF& params,
                                     const ModelConfig& cfg) {
    if (s.shape.h % 4 != 0 || s.shape.w % 4 != 0) {
        throw ShapeError("mcam_features: spatial extents must be divisible by 4, got " +
                         s.shape.str());
    }
    (void)cfg;
    TapeF tape;
    const ParamVars pv = register_params(tape, params, false);
    const std::array<Var, 3> f = graph::clean_encoder(tape, pv, tape.leaf(s));
    return {tape.value(f[0]), tape.value(f[1]), tape.value(f[2])};
}

}  // namespace ng
