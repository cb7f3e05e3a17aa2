#include "noisegen/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"
#include "noisegen/image_io.hpp"

namespace fs = std::filesystem;

namespace ng {

namespace {

nlohmann::json settings_to_json(const CameraSettings& cs) {
    return {{"iso", cs.iso},
            {"shutter_speed", cs.shutter_speed},
            {"sensor_type", cs.sensor_type},
            {"color_temp", cs.color_temp},
            {"brightness_mode", to_string(cs.brightness_mode)}};
}

CameraSettings settings_from_json(const nlohmann::json& j) {
    CameraSettings cs;
    cs.iso = j.at("iso").get<double>();
    cs.shutter_speed = j.at("shutter_speed").get<double>();
    cs.sensor_type = j.at("sensor_type").get<std::string>();
    cs.color_temp = j.at("color_temp").get<double>();
    cs.brightness_mode = brightness_from_string(j.at("brightness_mode").get<std::string>());
    cs.validate();
    return cs;
}

std::string resolve(const std::string& manifest_path, const std::string& rel) {
    const fs::path p(rel);
    if (p.is_absolute()) return rel;
    return (fs::path(manifest_path).parent_path() / p).string();
}

}  // namespace

DatasetManifest load_manifest(const std::string& path,
                              const std::vector<std::string>* sensor_vocab) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path + "'");
    nlohmann::json j;
    DatasetManifest m;
    try {
        in >> j;
        m.version = j.at("version").get<int>();
        for (const auto& js : j.at("scenes")) {
            SceneRecord rec;
            rec.scene_id = js.at("scene_id").get<std::string>();
            rec.clean_path = js.at("clean_path").get<std::string>();
            rec.noisy_paths = js.at("noisy_paths").get<std::vector<std::string>>();
            rec.settings = settings_from_json(js.at("settings"));
            rec.profile_name = js.at("profile_name").get<std::string>();
            m.scenes.push_back(std::move(rec));
        }
        if (j.contains("splits")) {
            for (const auto& [name, ids] : j.at("splits").items()) {
                m.splits[name] = ids.get<std::vector<std::string>>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed manifest '" + path + "': " + e.what());
    }

    std::set<std::string> ids;
    for (const SceneRecord& rec : m.scenes) {
        if (!ids.insert(rec.scene_id).second) {
            throw ValidationError("manifest '" + path + "': duplicate scene_id '" +
                                  rec.scene_id + "'");
        }
        if (!fs::exists(resolve(path, rec.clean_path))) {
            throw ValidationError("manifest '" + path + "': missing clean file '" +
                                  rec.clean_path + "'");
        }
        for (const std::string& np : rec.noisy_paths) {
            if (!fs::exists(resolve(path, np))) {
                throw ValidationError("manifest '" + path + "': missing noisy file '" + np + "'");
            }
        }
        if (sensor_vocab) {
            sensor_index(rec.settings.sensor_type, *sensor_vocab);
        }
    }
    std::set<std::string> seen;
    for (const auto& [split, members] : m.splits) {
        for (const std::string& id : members) {
            if (!ids.count(id)) {
                throw ValidationError("manifest '" + path + "': split '" + split +
                                      "' references unknown scene '" + id + "'");
            }
            if (!seen.insert(id).second) {
                throw ValidationError("manifest '" + path + "': scene '" + id +
                                      "' appears in more than one split");
            }
        }
    }
    return m;
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
    nlohmann::json j;
    j["version"] = m.version;
    j["scenes"] = nlohmann::json::array();
    for (const SceneRecord& rec : m.scenes) {
        j["scenes"].push_back({{"scene_id", rec.scene_id},
                               {"clean_path", rec.clean_path},
                               {"noisy_paths", rec.noisy_paths},
                               {"settings", settings_to_json(rec.settings)},
                               {"profile_name", rec.profile_name}});
    }
    nlohmann::json splits = nlohmann::json::object();
    for (const auto& [name, ids] : m.splits) splits[name] = ids;
    j["splits"] = splits;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest '" + path + "'");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("short write on manifest '" + path + "'");
}

namespace {

TensorF load_pixels(const std::string& path) {
    TensorF t = load_tensor_f32(path);
    for (float& v : t.data) v = std::clamp(v, 0.0f, 1.0f);
    return t;
}

TrainSet load_scenes(const DatasetManifest& m, const std::string& manifest_path,
                     const std::vector<const SceneRecord*>& records) {
    TrainSet set;
    for (const SceneRecord* rec : records) {
        TrainScene sc;
        sc.clean = load_pixels(resolve(manifest_path, rec->clean_path));
        for (const std::string& np : rec->noisy_paths) {
            sc.noisy.push_back(load_pixels(resolve(manifest_path, np)));
        }
        sc.settings = rec->settings;
        set.scenes.push_back(std::move(sc));
    }
    return set;
}

}  // namespace

TrainSet load_split(const DatasetManifest& m, const std::string& manifest_path,
                    const std::string& split) {
    auto it = m.splits.find(split);
    if (it == m.splits.end()) {
        throw ValidationError("manifest has no split named '" + split + "'");
    }
    std::vector<const SceneRecord*> records;
    for (const std::string& id : it->second) {
        for (const SceneRecord& rec : m.scenes) {
            if (rec.scene_id == id) records.push_back(&rec);
        }
    }
    return load_scenes(m, manifest_path, records);
}

TrainSet load_all_scenes(const DatasetManifest& m, const std::string& manifest_path) {
    std::vector<const SceneRecord*> records;
    records.reserve(m.scenes.size());
    for (const SceneRecord& rec : m.scenes) records.push_back(&rec);
    return load_scenes(m, manifest_path, records);
}

}  // namespace ng
