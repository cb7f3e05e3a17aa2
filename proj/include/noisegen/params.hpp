#pragma once

// Named parameter table. Order follows the architecture manifest, so
// iteration, serialization and optimizer traversal are all deterministic.

#include <string>
#include <unordered_map>
#include <vector>

#include "noisegen/tensor.hpp"

namespace ng {

template <typename T>
struct ParamSet {
    std::vector<std::pair<std::string, Tensor<T>>> items;
    std::unordered_map<std::string, std::size_t> index;

    void add(const std::string& name, Tensor<T> t) {
        if (index.count(name)) {
            throw ValidationError("duplicate parameter name '" + name + "'");
        }
        index[name] = items.size();
        items.emplace_back(name, std::move(t));
    }

    bool has(const std::string& name) const { return index.count(name) != 0; }

    const Tensor<T>& get(const std::string& name) const {
        auto it = index.find(name);
        if (it == index.end()) {
            throw ValidationError("unknown parameter '" + name + "'");
        }
        return items[it->second].second;
    }

    Tensor<T>& get(const std::string& name) {
        auto it = index.find(name);
        if (it == index.end()) {
            throw ValidationError("unknown parameter '" + name + "'");
        }
        return items[it->second].second;
    }

    std::size_t size() const { return items.size(); }

    std::int64_t total_values() const {
        std::int64_t n = 0;
        for (const auto& [name, t] : items) n += t.size();
        return n;
    }

    bool same_names_and_shapes(const ParamSet& other) const {
        if (items.size() != other.items.size()) return false;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (items[i].first != other.items[i].first) return false;
            if (!(items[i].second.shape == other.items[i].second.shape)) return false;
        }
        return true;
    }

    ParamSet zeros_like() const {
        ParamSet out;
        for (const auto& [name, t] : items) out.add(name, Tensor<T>::zeros(t.shape));
        return out;
    }
};

using ParamSetF = ParamSet<float>;

}  // namespace ng
