#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "noisegen/tensor.hpp"

namespace ng {

// splitmix64 step, used to derive independent substream seeds from
// (seed, stream id) pairs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// mt19937_64 engine with hand-rolled distributions so draws are
// reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive bounds.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    // Box-Muller; second value cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // Strictly inside (0,1) so the log is finite.
        double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
        double u2 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    template <typename T>
    void fill_normal(std::span<T> out, double sigma = 1.0, double mean = 0.0) {
        for (T& v : out) v = static_cast<T>(mean + sigma * normal());
    }

    template <typename T>
    void fill_uniform(std::span<T> out, double lo, double hi) {
        for (T& v : out) v = static_cast<T>(uniform(lo, hi));
    }

    template <typename T>
    Tensor<T> normal_tensor(Shape s, double sigma = 1.0, double mean = 0.0) {
        Tensor<T> t(s);
        fill_normal<T>(t.data, sigma, mean);
        return t;
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ng
