#pragma once

// Ground-truth noise oracle: heteroscedastic Gaussian sensor noise (shot +
// read, both scaled by the ISO gain) pushed through a small ISP — white
// balance, color matrix, blur + unsharp masking, clamp, gamma encode. The
// spatial filter is what correlates neighbouring noise samples.

#include <array>
#include <string>

#include "noisegen/camera.hpp"
#include "noisegen/rng.hpp"
#include "noisegen/tensor.hpp"

namespace ng {

enum class BlurKind { none, box3, tent3 };

std::string to_string(BlurKind k);
BlurKind blur_from_string(const std::string& s);

struct SensorProfile {
    std::string name;
    double read_sigma = 0.0;  // read-noise std in linear units at ISO 100
    double shot_k = 0.0;      // shot-noise variance per unit signal at ISO 100
    std::array<std::array<double, 3>, 3> ccm{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    std::array<double, 3> awb{1.0, 1.0, 1.0};
    double gamma = 1.0;
    BlurKind blur = BlurKind::none;
    double sharpen_amount = 0.0;

    void validate() const;
};

std::vector<std::string> builtin_profile_names();
SensorProfile builtin_profile(const std::string& name);

SensorProfile load_profile(const std::string& path);
void save_profile(const std::string& path, const SensorProfile& p);

// clean_linear + n with n ~ N(0, sigma^2(x)) per pixel,
// sigma^2(x) = (g^2 shot_k x + g^2 read_sigma^2) / sqrt(ss / 0.01), g = iso/100.
TensorF raw_noise(const TensorF& clean_linear, const CameraSettings& cs,
                  const SensorProfile& p, Rng& rng);

// awb -> ccm -> blur + unsharp -> clamp [0,1] -> gamma encode x^(1/gamma)
TensorF isp_pipeline(const TensorF& raw, const SensorProfile& p);

struct NoisyPair {
    TensorF clean;
    TensorF noisy;
    CameraSettings settings;
    std::string profile_name;
};

NoisyPair make_noisy_pair(const TensorF& clean_srgb, const CameraSettings& cs,
                          const SensorProfile& p, Rng& rng);

}  // namespace ng
