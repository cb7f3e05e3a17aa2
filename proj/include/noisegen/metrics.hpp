#pragma once

// Noise-distribution metrics. akld models the noise map n = noisy - clean as
// a per-pixel Gaussian with window-estimated moments and averages
// KL(real || generated) over pixels, channels and K generated samples.

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "noisegen/tensor.hpp"

namespace ng {

struct AkldConfig {
    int window = 7;
    int samples_per_image = 8;
    double variance_floor = 1e-6;

    void validate() const {
        if (window < 3 || window % 2 == 0) {
            throw ValidationError("akld: window must be odd and >= 3");
        }
        if (samples_per_image < 1) throw ValidationError("akld: need K >= 1 samples");
        if (!(variance_floor > 0.0)) throw ValidationError("akld: variance floor must be > 0");
    }
};

// generator(k) must return the k-th generated noisy image, same shape as
// real_noisy.
double akld(const TensorF& clean, const TensorF& real_noisy,
            const std::function<TensorF(int)>& generator, const AkldConfig& cfg);

// 10*log10(peak^2 / mse), capped at 99 dB for mse < 1e-12.
double psnr(const TensorF& a, const TensorF& b, double peak = 1.0);

// (bin_center, std of noisy-clean) per occupied clean-intensity bin.
std::vector<std::pair<double, double>> noise_std_curve(const TensorF& clean,
                                                       const TensorF& noisy, int bins);

// Mean-removed normalized autocorrelation at the given (dy,dx) lags,
// averaged over channels (and batch items).
std::vector<double> spatial_autocorr(const TensorF& noise,
                                     std::span<const std::pair<int, int>> lags);

// Discrete KL(hist_a || hist_b) over [lo, hi]; out-of-range values clamp to
// the edge bins and every bin gets a smoothing epsilon.
double histogram_kl(const TensorF& a, const TensorF& b, int bins, double lo, double hi);

}  // namespace ng
