#pragma once

// Dataset manifests: scene records pairing a clean tensor file with one or
// more noisy variants plus the capture settings, and named train/val splits.
// Tensor paths are stored relative to the manifest file.

#include <map>
#include <string>
#include <vector>

#include "noisegen/camera.hpp"
#include "noisegen/train.hpp"

namespace ng {

struct SceneRecord {
    std::string scene_id;
    std::string clean_path;
    std::vector<std::string> noisy_paths;
    CameraSettings settings;
    std::string profile_name;
};

struct DatasetManifest {
    int version = 1;
    std::vector<SceneRecord> scenes;
    std::map<std::string, std::vector<std::string>> splits;
};

// Validates structure, unique scene ids, disjoint splits over known ids and
// the existence of every referenced file. When a sensor vocabulary is given
// each scene's sensor_type is checked against it.
DatasetManifest load_manifest(const std::string& path,
                              const std::vector<std::string>* sensor_vocab = nullptr);

void save_manifest(const std::string& path, const DatasetManifest& m);

// Decodes the tensors of one split (clamped to [0,1]).
TrainSet load_split(const DatasetManifest& m, const std::string& manifest_path,
                    const std::string& split);

// All scenes regardless of split.
TrainSet load_all_scenes(const DatasetManifest& m, const std::string& manifest_path);

}  // namespace ng
