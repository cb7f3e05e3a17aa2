#pragma once

// Camera-settings conditioning: the five capture factors and their raw
// feature encoding (log ISO, log shutter, one-hot sensor, normalized color
// temperature, one-hot brightness mode).

#include <string>
#include <vector>

#include "noisegen/errors.hpp"

namespace ng {

enum class BrightnessMode { low, normal, high };

std::string to_string(BrightnessMode bm);
BrightnessMode brightness_from_string(const std::string& s);

struct CameraSettings {
    double iso = 100.0;
    double shutter_speed = 0.01;  // seconds
    std::string sensor_type = "sensorA";
    double color_temp = 5500.0;  // Kelvin, clamped to [2000, 10000]
    BrightnessMode brightness_mode = BrightnessMode::normal;

    void validate() const {
        if (!(iso > 0.0)) throw ValidationError("camera settings: iso must be > 0");
        if (!(shutter_speed > 0.0)) {
            throw ValidationError("camera settings: shutter_speed must be > 0");
        }
    }
};

constexpr int kBrightnessModes = 3;

inline int camera_raw_dim(int vocab_size) { return 2 + vocab_size + 1 + kBrightnessModes; }

// Index of the sensor in the vocabulary; throws listing the known sensors.
int sensor_index(const std::string& sensor, const std::vector<std::string>& vocab);

std::vector<float> camera_raw_features(const CameraSettings& cs,
                                       const std::vector<std::string>& vocab);

}  // namespace ng
