#include "noisegen/camera.hpp"

#include <algorithm>
#include <cmath>

namespace ng {

std::string to_string(BrightnessMode bm) {
    switch (bm) {
        case BrightnessMode::low: return "low";
        case BrightnessMode::normal: return "normal";
        case BrightnessMode::high: return "high";
    }
    return "normal";
}

BrightnessMode brightness_from_string(const std::string& s) {
    if (s == "low") return BrightnessMode::low;
    if (s == "normal") return BrightnessMode::normal;
    if (s == "high") return BrightnessMode::high;
    throw ValidationError("unknown brightness mode '" + s + "' (expected low|normal|high)");
}

int sensor_index(const std::string& sensor, const std::vector<std::string>& vocab) {
    auto it = std::find(vocab.begin(), vocab.end(), sensor);
    if (it == vocab.end()) {
        std::string known;
        for (const auto& v : vocab) {
            if (!known.empty()) known += ", ";
            known += v;
        }
        throw ValidationError("unknown sensor_type '" + sensor + "'; known sensors: [" +
                              known + "]");
    }
    return static_cast<int>(it - vocab.begin());
}

std::vector<float> camera_raw_features(const CameraSettings& cs,
                                       const std::vector<std::string>& vocab) {
    cs.validate();
    const int si = sensor_index(cs.sensor_type, vocab);
    std::vector<float> f;
    f.reserve(static_cast<std::size_t>(camera_raw_dim(static_cast<int>(vocab.size()))));
    f.push_back(static_cast<float>(std::log2(cs.iso / 100.0)));
    f.push_back(static_cast<float>(std::log2(cs.shutter_speed * 1000.0)));
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        f.push_back(i == static_cast<std::size_t>(si) ? 1.0f : 0.0f);
    }
    const double ct = std::clamp(cs.color_temp, 2000.0, 10000.0);
    f.push_back(static_cast<float>((ct - 2000.0) / 8000.0));
    for (int i = 0; i < kBrightnessModes; ++i) {
        f.push_back(i == static_cast<int>(cs.brightness_mode) ? 1.0f : 0.0f);
    }
    return f;
}

}  // namespace ng
