#pragma once

// The conditioned noise predictor: a fixed 3-scale UNet. Every x_t-path
// stage ends in a channel-wise affine whose (gamma, beta) come from the
// step/camera embedding MLPs; the decoder additionally consumes multi-scale
// features of the clean image from a separately weighted encoder.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "noisegen/camera.hpp"
#include "noisegen/params.hpp"
#include "noisegen/rng.hpp"
#include "noisegen/tape.hpp"

namespace ng {

struct ModelConfig {
    int base_channels = 16;
    int scales = 3;  // fixed; the clean-feature injection is specified for 3 stages
    int time_embed_dim = 32;
    int cs_embed_dim = 32;
    int mlp_hidden = 64;
    int in_channels = 3;
    std::vector<std::string> sensor_vocab = {"sensorA", "sensorB"};

    void validate() const;
    int raw_cs_dim() const { return camera_raw_dim(static_cast<int>(sensor_vocab.size())); }
    bool operator==(const ModelConfig&) const = default;
};

struct ParamSpec {
    std::string name;
    Shape shape;
};

// Names and shapes of every parameter, in fixed order.
std::vector<ParamSpec> param_manifest(const ModelConfig& cfg);

// Conditioned stages of the x_t path, with their channel widths.
struct FilmLayer {
    std::string name;
    int channels;
};
std::vector<FilmLayer> film_layers(const ModelConfig& cfg);

// Uniform fan-in init; the affine heads (cond.film.*.fc3) start at zero so a
// fresh model is unconditional: gamma = 1, beta = 0 everywhere.
ParamSetF init_params(const ModelConfig& cfg, std::uint64_t seed);

// Interleaved sin/cos embedding, frequencies laid out geometrically from 1
// down to 1/10000.
std::vector<double> sinusoidal_embed(double t, int dim);

// ---------------------------------------------------------------------------
// Graph construction (templated so the finite-difference oracle can run the
// identical forward in double).

struct ParamVars {
    std::unordered_map<std::string, Var> vars;

    Var operator()(const std::string& name) const {
        auto it = vars.find(name);
        if (it == vars.end()) throw ValidationError("no graph var for parameter '" + name + "'");
        return it->second;
    }
};

template <typename T>
ParamVars register_params(Tape<T>& tape, const ParamSet<T>& ps, bool needs_grad) {
    ParamVars pv;
    for (const auto& [name, tensor] : ps.items) {
        pv.vars[name] = tape.leaf(tensor, needs_grad);
    }
    return pv;
}

template <typename T>
Tensor<T> time_embed_batch(std::span<const int> t, int dim) {
    Tensor<T> out(Shape{static_cast<int>(t.size()), dim, 1, 1});
    for (std::size_t b = 0; b < t.size(); ++b) {
        const std::vector<double> e = sinusoidal_embed(static_cast<double>(t[b]), dim);
        for (int i = 0; i < dim; ++i) {
            out.data[b * static_cast<std::size_t>(dim) + i] = static_cast<T>(e[static_cast<std::size_t>(i)]);
        }
    }
    return out;
}

template <typename T>
Tensor<T> camera_raw_batch(std::span<const CameraSettings> cs,
                           const std::vector<std::string>& vocab) {
    const int dim = camera_raw_dim(static_cast<int>(vocab.size()));
    Tensor<T> out(Shape{static_cast<int>(cs.size()), dim, 1, 1});
    for (std::size_t b = 0; b < cs.size(); ++b) {
        const std::vector<float> f = camera_raw_features(cs[b], vocab);
        for (int i = 0; i < dim; ++i) {
            out.data[b * static_cast<std::size_t>(dim) + i] = static_cast<T>(f[static_cast<std::size_t>(i)]);
        }
    }
    return out;
}

namespace graph {

// fc1 -> silu -> fc2 -> silu -> fc3
template <typename T>
Var mlp(Tape<T>& t, const ParamVars& pv, const std::string& prefix, Var in) {
    Var h = t.linear(in, pv(prefix + ".fc1.weight"), pv(prefix + ".fc1.bias"));
    h = t.activation(h, Act::silu);
    h = t.linear(h, pv(prefix + ".fc2.weight"), pv(prefix + ".fc2.bias"));
    h = t.activation(h, Act::silu);
    return t.linear(h, pv(prefix + ".fc3.weight"), pv(prefix + ".fc3.bias"));
}

// Shared conditioning vector: MLP1(sinu_pos(t)) + MLP2(cs).
template <typename T>
Var conditioning(Tape<T>& t, const ParamVars& pv, Var t_embed, Var cs_raw) {
    return t.add(mlp(t, pv, "cond.time", t_embed), mlp(t, pv, "cond.cs", cs_raw));
}

// Per-layer affine parameters; gamma carries the +1 so zeroed heads are the
// identity.
template <typename T>
std::pair<Var, Var> film(Tape<T>& t, const ParamVars& pv, const std::string& layer,
                         Var cond, int channels) {
    Var gb = mlp(t, pv, "cond.film." + layer, cond);
    Var gamma = t.scale(t.slice_channels(gb, 0, channels), T(1), T(1));
    Var beta = t.slice_channels(gb, channels, channels);
    return {gamma, beta};
}

// conv -> silu -> conv -> silu (-> affine when conditioned)
template <typename T>
Var stage(Tape<T>& t, const ParamVars& pv, const std::string& name, Var x,
          const Var* gamma, const Var* beta) {
    Var h = t.conv2d(x, pv(name + ".conv1.weight"), pv(name + ".conv1.bias"), 1, Pad::same);
    h = t.activation(h, Act::silu);
    h = t.conv2d(h, pv(name + ".conv2.weight"), pv(name + ".conv2.bias"), 1, Pad::same);
    h = t.activation(h, Act::silu);
    if (gamma) h = t.affine_channels(h, *gamma, *beta);
    return h;
}

// Clean-image encoder (separate weights, no step/camera conditioning);
// returns features at full, 1/2 and 1/4 resolution.
template <typename T>
std::array<Var, 3> clean_encoder(Tape<T>& t, const ParamVars& pv, Var s) {
    std::array<Var, 3> f{};
    f[0] = stage(t, pv, "cenc.s1", s, nullptr, nullptr);
    f[1] = stage(t, pv, "cenc.s2", t.resample(f[0], Resample::down2_avg), nullptr, nullptr);
    f[2] = stage(t, pv, "cenc.s3", t.resample(f[1], Resample::down2_avg), nullptr, nullptr);
    return f;
}

template <typename T>
Var eps_theta(Tape<T>& t, const ParamVars& pv, const ModelConfig& cfg, Var x_t, Var s,
              Var t_embed, Var cs_raw) {
    const Shape in = t.value(x_t).shape;
    if (!(in == t.value(s).shape)) {
        throw ShapeError("eps_theta: x_t " + in.str() + " and clean image " +
                         t.value(s).shape.str() + " must match");
    }
    if (in.h % 4 != 0 || in.w % 4 != 0) {
        throw ShapeError("eps_theta: spatial extents must be divisible by 4, got " + in.str());
    }
    const int C = cfg.base_channels;
    const Var cond = conditioning(t, pv, t_embed, cs_raw);
    auto film_for = [&](const std::string& layer, int ch) {
        return film(t, pv, layer, cond, ch);
    };

    auto [g1, b1] = film_for("xenc.s1", C);
    Var x1 = stage(t, pv, "xenc.s1", x_t, &g1, &b1);
    auto [g2, b2] = film_for("xenc.s2", 2 * C);
    Var x2 = stage(t, pv, "xenc.s2", t.resample(x1, Resample::down2_avg), &g2, &b2);
    auto [g3, b3] = film_for("xenc.s3", 4 * C);
    Var x3 = stage(t, pv, "xenc.s3", t.resample(x2, Resample::down2_avg), &g3, &b3);

    const std::array<Var, 3> sf = clean_encoder(t, pv, s);

    auto [gm, bm] = film_for("mid", 4 * C);
    Var m = stage(t, pv, "mid", x3, &gm, &bm);

    auto [gd3, bd3] = film_for("dec.s3", 4 * C);
    Var d3 = stage(t, pv, "dec.s3",
                   t.concat_channels(std::vector<Var>{m, x3, sf[2]}), &gd3, &bd3);
    auto [gd2, bd2] = film_for("dec.s2", 2 * C);
    Var d2 = stage(t, pv, "dec.s2",
                   t.concat_channels(std::vector<Var>{
                       t.resample(d3, Resample::up2_nearest), x2, sf[1]}),
                   &gd2, &bd2);
    auto [gd1, bd1] = film_for("dec.s1", C);
    Var d1 = stage(t, pv, "dec.s1",
                   t.concat_channels(std::vector<Var>{
                       t.resample(d2, Resample::up2_nearest), x1, sf[0]}),
                   &gd1, &bd1);

    return t.conv2d(d1, pv("head.weight"), pv("head.bias"), 1, Pad::same);
}

}  // namespace graph

// ---------------------------------------------------------------------------
// Inference wrappers (float path, throwaway tape).

TensorF eps_theta(const TensorF& x_t, std::span<const int> t, const TensorF& s,
                  std::span<const CameraSettings> cs, const ParamSetF& params,
                  const ModelConfig& cfg);

TensorF eps_theta(const TensorF& x_t, int t, const TensorF& s, const CameraSettings& cs,
                  const ParamSetF& params, const ModelConfig& cfg);

// Raw camera features projected through the settings MLP.
std::vector<float> encode_camera_settings(const CameraSettings& cs, const ModelConfig& cfg,
                                          const ParamSetF& params);

// Per-channel (gamma, beta) for one conditioned layer at (t, cs_embedding).
std::pair<std::vector<float>, std::vector<float>> tccam(int t,
                                                        std::span<const float> cs_vec,
                                                        const std::string& layer,
                                                        const ModelConfig& cfg,
                                                        const ParamSetF& params);

TensorF apply_affine(const TensorF& f, std::span<const float> gamma,
                     std::span<const float> beta);

// Clean-image features at full, 1/2 and 1/4 resolution.
std::array<TensorF, 3> mcam_features(const TensorF& s, const ParamSetF& params,
                                     const ModelConfig& cfg);

}  // namespace ng
