#include "noisegen/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace ng {

namespace {

constexpr char kMagic[4] = {'N', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kHasEma = 1u << 0;
constexpr std::uint32_t kHasPsi = 1u << 1;
constexpr std::uint32_t kHasOpt = 1u << 2;

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const std::string& path) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("truncated checkpoint '" + path + "'");
    return v;
}

void write_table(std::ostream& os, const ParamSetF& ps) {
    write_raw(os, static_cast<std::uint32_t>(ps.items.size()));
    for (const auto& [name, t] : ps.items) {
        write_raw(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        const std::uint32_t dims[4] = {
            static_cast<std::uint32_t>(t.shape.n), static_cast<std::uint32_t>(t.shape.c),
            static_cast<std::uint32_t>(t.shape.h), static_cast<std::uint32_t>(t.shape.w)};
        os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
        os.write(reinterpret_cast<const char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    }
}

ParamSetF read_table(std::istream& is, const std::string& path) {
    ParamSetF ps;
    const auto count = read_raw<std::uint32_t>(is, path);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = read_raw<std::uint32_t>(is, path);
        std::string name(len, '\0');
        is.read(name.data(), len);
        Shape s;
        s.n = static_cast<int>(read_raw<std::uint32_t>(is, path));
        s.c = static_cast<int>(read_raw<std::uint32_t>(is, path));
        s.h = static_cast<int>(read_raw<std::uint32_t>(is, path));
        s.w = static_cast<int>(read_raw<std::uint32_t>(is, path));
        TensorF t(s);
        is.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!is) throw IoError("truncated checkpoint '" + path + "'");
        ps.add(name, std::move(t));
    }
    return ps;
}

nlohmann::json config_json(const Checkpoint& c) {
    nlohmann::json j;
    j["model"] = {{"base_channels", c.cfg.base_channels},
                  {"scales", c.cfg.scales},
                  {"time_embed_dim", c.cfg.time_embed_dim},
                  {"cs_embed_dim", c.cfg.cs_embed_dim},
                  {"mlp_hidden", c.cfg.mlp_hidden},
                  {"in_channels", c.cfg.in_channels},
                  {"sensor_vocab", c.cfg.sensor_vocab}};
    j["schedule"] = {{"kind", c.sched.kind},
                     {"T", c.sched.T},
                     {"beta_start", c.sched.beta_start},
                     {"beta_end", c.sched.beta_end}};
    return j;
}

void parse_config_json(const nlohmann::json& j, Checkpoint& c) {
    const auto& m = j.at("model");
    c.cfg.base_channels = m.at("base_channels").get<int>();
    c.cfg.scales = m.at("scales").get<int>();
    c.cfg.time_embed_dim = m.at("time_embed_dim").get<int>();
    c.cfg.cs_embed_dim = m.at("cs_embed_dim").get<int>();
    c.cfg.mlp_hidden = m.at("mlp_hidden").get<int>();
    c.cfg.in_channels = m.at("in_channels").get<int>();
    c.cfg.sensor_vocab = m.at("sensor_vocab").get<std::vector<std::string>>();
    const auto& s = j.at("schedule");
    c.sched.kind = s.at("kind").get<std::string>();
    c.sched.T = s.at("T").get<int>();
    c.sched.beta_start = s.at("beta_start").get<double>();
    c.sched.beta_end = s.at("beta_end").get<double>();
}

void check_names(const ParamSetF& ps, const ModelConfig& cfg, const std::string& what) {
    const auto manifest = param_manifest(cfg);
    if (ps.size() != manifest.size()) {
        throw ValidationError("checkpoint " + what + " table has " + std::to_string(ps.size()) +
                              " entries, the architecture manifest has " +
                              std::to_string(manifest.size()));
    }
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        if (ps.items[i].first != manifest[i].name) {
            throw ValidationError("checkpoint " + what + " entry '" + ps.items[i].first +
                                  "' does not match manifest entry '" + manifest[i].name + "'");
        }
        if (!(ps.items[i].second.shape == manifest[i].shape)) {
            throw ValidationError("checkpoint " + what + " entry '" + ps.items[i].first +
                                  "' has shape " + ps.items[i].second.shape.str() +
                                  ", manifest expects " + manifest[i].shape.str());
        }
    }
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& c) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write checkpoint '" + path + "'");
    os.write(kMagic, 4);
    write_raw(os, kVersion);
    std::uint32_t flags = 0;
    if (c.ema) flags |= kHasEma;
    if (c.psi) flags |= kHasPsi;
    if (c.opt) flags |= kHasOpt;
    write_raw(os, flags);
    write_raw(os, static_cast<std::int64_t>(c.step));
    write_raw(os, static_cast<std::uint64_t>(c.seed));
    const std::string cfg = config_json(c).dump();
    write_raw(os, static_cast<std::uint64_t>(cfg.size()));
    os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    write_table(os, c.params);
    if (c.ema) write_table(os, *c.ema);
    if (c.psi) write_table(os, *c.psi);
    if (c.opt) {
        write_raw(os, static_cast<std::int64_t>(c.opt->t));
        write_table(os, c.opt->m);
        write_table(os, c.opt->v);
    }
    if (!os) throw IoError("short write on checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("'" + path + "' is not an NGCK checkpoint");
    }
    const auto version = read_raw<std::uint32_t>(is, path);
    if (version != kVersion) {
        throw IoError("unsupported checkpoint version in '" + path + "'");
    }
    const auto flags = read_raw<std::uint32_t>(is, path);
    Checkpoint c;
    c.step = read_raw<std::int64_t>(is, path);
    c.seed = read_raw<std::uint64_t>(is, path);
    const auto cfg_len = read_raw<std::uint64_t>(is, path);
    std::string cfg(cfg_len, '\0');
    is.read(cfg.data(), static_cast<std::streamsize>(cfg_len));
    if (!is) throw IoError("truncated checkpoint '" + path + "'");
    try {
        parse_config_json(nlohmann::json::parse(cfg), c);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed config chunk in '" + path + "': " + e.what());
    }
    c.cfg.validate();
    c.params = read_table(is, path);
    check_names(c.params, c.cfg, "parameter");
    if (flags & kHasEma) {
        c.ema = read_table(is, path);
        check_names(*c.ema, c.cfg, "EMA");
    }
    if (flags & kHasPsi) {
        c.psi = read_table(is, path);
        check_names(*c.psi, c.cfg, "one-step");
    }
    if (flags & kHasOpt) {
        AdamState st;
        st.t = read_raw<std::int64_t>(is, path);
        st.m = read_table(is, path);
        st.v = read_table(is, path);
        c.opt = std::move(st);
    }
    return c;
}

void check_checkpoint_config(const Checkpoint& c, const ModelConfig& expected) {
    if (!(c.cfg == expected)) {
        std::string detail;
        if (c.cfg.sensor_vocab != expected.sensor_vocab) detail = " (sensor vocabulary differs)";
        throw ValidationError("checkpoint config does not match the run config" + detail);
    }
}

}  // namespace ng
