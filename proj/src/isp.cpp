#include "noisegen/isp.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "noisegen/errors.hpp"

namespace ng {

std::string to_string(BlurKind k) {
    switch (k) {
        case BlurKind::none: return "none";
        case BlurKind::box3: return "box3";
        case BlurKind::tent3: return "tent3";
    }
    return "none";
}

BlurKind blur_from_string(const std::string& s) {
    if (s == "none") return BlurKind::none;
    if (s == "box3") return BlurKind::box3;
    if (s == "tent3") return BlurKind::tent3;
    throw ValidationError("unknown blur kind '" + s + "' (expected none|box3|tent3)");
}

void SensorProfile::validate() const {
    if (name.empty()) throw ValidationError("sensor profile: empty name");
    if (read_sigma < 0.0 || shot_k < 0.0) {
        throw ValidationError("sensor profile '" + name + "': negative noise parameter");
    }
    if (read_sigma == 0.0 && shot_k == 0.0) {
        throw ValidationError("sensor profile '" + name + "': read_sigma and shot_k are both 0");
    }
    if (!(gamma > 0.0)) throw ValidationError("sensor profile '" + name + "': gamma must be > 0");
    if (sharpen_amount < 0.0) {
        throw ValidationError("sensor profile '" + name + "': sharpen_amount must be >= 0");
    }
    for (double g : awb) {
        if (!(g > 0.0)) throw ValidationError("sensor profile '" + name + "': awb gains must be > 0");
    }
    for (int r = 0; r < 3; ++r) {
        const double sum = ccm[r][0] + ccm[r][1] + ccm[r][2];
        if (std::abs(sum - 1.0) > 1e-6) {
            throw ValidationError("sensor profile '" + name + "': ccm row " + std::to_string(r) +
                                  " sums to " + std::to_string(sum) + ", expected 1");
        }
    }
}

std::vector<std::string> builtin_profile_names() { return {"sensorA", "sensorB"}; }

SensorProfile builtin_profile(const std::string& name) {
    SensorProfile p;
    p.name = name;
    if (name == "sensorA") {
        p.read_sigma = 1.5e-3;
        p.shot_k = 8e-5;
        p.awb = {1.02, 0.98, 1.04};
        p.ccm = {{{1.06, -0.04, -0.02}, {-0.03, 1.08, -0.05}, {-0.02, -0.06, 1.08}}};
        p.gamma = 2.2;
        p.blur = BlurKind::box3;
        p.sharpen_amount = 0.35;
    } else if (name == "sensorB") {
        p.read_sigma = 2.5e-3;
        p.shot_k = 2.4e-4;
        p.awb = {0.96, 1.0, 1.05};
        p.ccm = {{{1.12, -0.08, -0.04}, {-0.05, 1.10, -0.05}, {-0.03, -0.07, 1.10}}};
        p.gamma = 2.0;
        p.blur = BlurKind::tent3;
        p.sharpen_amount = 0.2;
    } else {
        throw ValidationError("unknown built-in profile '" + name + "'");
    }
    p.validate();
    return p;
}

namespace {

SensorProfile profile_from_json(const nlohmann::json& j) {
    SensorProfile p;
    p.name = j.at("name").get<std::string>();
    p.read_sigma = j.at("read_sigma").get<double>();
    p.shot_k = j.at("shot_k").get<double>();
    const auto& ccm = j.at("ccm");
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) p.ccm[r][c] = ccm.at(r).at(c).get<double>();
    const auto& awb = j.at("awb");
    for (int c = 0; c < 3; ++c) p.awb[c] = awb.at(c).get<double>();
    p.gamma = j.at("gamma").get<double>();
    p.blur = blur_from_string(j.value("blur", "none"));
    p.sharpen_amount = j.value("sharpen_amount", 0.0);
    p.validate();
    return p;
}

nlohmann::json profile_to_json(const SensorProfile& p) {
    nlohmann::json j;
    j["name"] = p.name;
    j["read_sigma"] = p.read_sigma;
    j["shot_k"] = p.shot_k;
    j["ccm"] = p.ccm;
    j["awb"] = p.awb;
    j["gamma"] = p.gamma;
    j["blur"] = to_string(p.blur);
    j["sharpen_amount"] = p.sharpen_amount;
    return j;
}

void check_rgb(const TensorF& t, const char* what) {
    if (t.shape.c != 3) {
        throw ShapeError(std::string(what) + ": expected 3 channels, got " + t.shape.str());
    }
}

// 3x3 blur with replicate-edge padding.
TensorF blur3(const TensorF& x, BlurKind kind) {
    static const double box[3] = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    static const double tent[3] = {0.25, 0.5, 0.25};
    const double* k = kind == BlurKind::box3 ? box : tent;
    const int h = x.shape.h, w = x.shape.w;
    TensorF tmp(x.shape), out(x.shape);
    for (int b = 0; b < x.shape.n; ++b)
        for (int c = 0; c < x.shape.c; ++c) {
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) {
                    double s = 0.0;
                    for (int d = -1; d <= 1; ++d) {
                        const int sx = std::clamp(xx + d, 0, w - 1);
                        s += k[d + 1] * x.at(b, c, y, sx);
                    }
                    tmp.at(b, c, y, xx) = static_cast<float>(s);
                }
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) {
                    double s = 0.0;
                    for (int d = -1; d <= 1; ++d) {
                        const int sy = std::clamp(y + d, 0, h - 1);
                        s += k[d + 1] * tmp.at(b, c, sy, xx);
                    }
                    out.at(b, c, y, xx) = static_cast<float>(s);
                }
        }
    return out;
}

}  // namespace

SensorProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profile file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
        return profile_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed profile '" + path + "': " + e.what());
    }
}

void save_profile(const std::string& path, const SensorProfile& p) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write profile file '" + path + "'");
    out << profile_to_json(p).dump(2) << "\n";
}

TensorF raw_noise(const TensorF& clean_linear, const CameraSettings& cs,
                  const SensorProfile& p, Rng& rng) {
    cs.validate();
    for (float v : clean_linear.data) {
        if (v < -1e-5f || v > 1.0f + 1e-5f) {
            throw ValidationError("raw_noise: linear input outside [0,1]");
        }
    }
    const double g = cs.iso / 100.0;
    const double shutter_scale = 1.0 / std::sqrt(cs.shutter_speed / 0.01);
    TensorF out(clean_linear.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double x = std::max(0.0, static_cast<double>(clean_linear.data[i]));
        const double var = (g * g * p.shot_k * x + g * g * p.read_sigma * p.read_sigma) *
                           shutter_scale;
        out.data[i] = static_cast<float>(clean_linear.data[i] + std::sqrt(var) * rng.normal());
    }
    return out;
}

TensorF isp_pipeline(const TensorF& raw, const SensorProfile& p) {
    check_rgb(raw, "isp_pipeline");
    TensorF x(raw.shape);
    const std::int64_t plane = static_cast<std::int64_t>(raw.shape.h) * raw.shape.w;
    for (int b = 0; b < raw.shape.n; ++b) {
        const float* r0 = raw.ptr() + raw.index(b, 0, 0, 0);
        const float* r1 = raw.ptr() + raw.index(b, 1, 0, 0);
        const float* r2 = raw.ptr() + raw.index(b, 2, 0, 0);
        float* o0 = x.ptr() + x.index(b, 0, 0, 0);
        float* o1 = x.ptr() + x.index(b, 1, 0, 0);
        float* o2 = x.ptr() + x.index(b, 2, 0, 0);
        for (std::int64_t i = 0; i < plane; ++i) {
            const double v0 = p.awb[0] * r0[i];
            const double v1 = p.awb[1] * r1[i];
            const double v2 = p.awb[2] * r2[i];
            o0[i] = static_cast<float>(p.ccm[0][0] * v0 + p.ccm[0][1] * v1 + p.ccm[0][2] * v2);
            o1[i] = static_cast<float>(p.ccm[1][0] * v0 + p.ccm[1][1] * v1 + p.ccm[1][2] * v2);
            o2[i] = static_cast<float>(p.ccm[2][0] * v0 + p.ccm[2][1] * v1 + p.ccm[2][2] * v2);
        }
    }
    if (p.blur != BlurKind::none) {
        const TensorF b1 = blur3(x, p.blur);
        if (p.sharpen_amount > 0.0) {
            const TensorF b2 = blur3(b1, p.blur);
            const float a = static_cast<float>(p.sharpen_amount);
            for (std::size_t i = 0; i < x.data.size(); ++i) {
                x.data[i] = b1.data[i] + a * (b1.data[i] - b2.data[i]);
            }
        } else {
            x = b1;
        }
    }
    const double inv_gamma = 1.0 / p.gamma;
    for (float& v : x.data) {
        const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
        v = static_cast<float>(std::pow(c, inv_gamma));
    }
    return x;
}

NoisyPair make_noisy_pair(const TensorF& clean_srgb, const CameraSettings& cs,
                          const SensorProfile& p, Rng& rng) {
    check_rgb(clean_srgb, "make_noisy_pair");
    TensorF linear(clean_srgb.shape);
    for (std::size_t i = 0; i < linear.data.size(); ++i) {
        const double c = std::clamp(static_cast<double>(clean_srgb.data[i]), 0.0, 1.0);
        linear.data[i] = static_cast<float>(std::pow(c, p.gamma));
    }
    const TensorF raw = raw_noise(linear, cs, p, rng);
    NoisyPair pair;
    pair.clean = clean_srgb;
    pair.noisy = isp_pipeline(raw, p);
    pair.settings = cs;
    pair.profile_name = p.name;
    return pair;
}

}  // namespace ng
