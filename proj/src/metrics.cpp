#include "noisegen/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace ng {

namespace {

// Window mean/variance per pixel with clipped windows at the borders.
// Variance uses the MLE normalization (divide by the window count).
void local_moments(const float* plane, int h, int w, int window, std::vector<double>& mu,
                   std::vector<double>& var) {
    const int r = window / 2;
    mu.assign(static_cast<std::size_t>(h) * w, 0.0);
    var.assign(static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
            double s = 0.0, sq = 0.0;
            for (int yy = y0; yy <= y1; ++yy) {
                const float* row = plane + static_cast<std::size_t>(yy) * w;
                for (int xx = x0; xx <= x1; ++xx) {
                    s += row[xx];
                    sq += static_cast<double>(row[xx]) * row[xx];
                }
            }
            const double n = static_cast<double>((y1 - y0 + 1) * (x1 - x0 + 1));
            const double m = s / n;
            mu[static_cast<std::size_t>(y) * w + x] = m;
            var[static_cast<std::size_t>(y) * w + x] = std::max(sq / n - m * m, 0.0);
        }
    }
}

}  // namespace

double akld(const TensorF& clean, const TensorF& real_noisy,
            const std::function<TensorF(int)>& generator, const AkldConfig& cfg) {
    cfg.validate();
    check_same_shape(clean, real_noisy, "akld clean/real");
    const int h = clean.shape.h, w = clean.shape.w;
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;

    // real noise moments, one plane per (item, channel)
    TensorF real_noise(clean.shape);
    for (std::size_t i = 0; i < real_noise.data.size(); ++i) {
        real_noise.data[i] = real_noisy.data[i] - clean.data[i];
    }
    const int planes = clean.shape.n * clean.shape.c;
    std::vector<std::vector<double>> mu_r(static_cast<std::size_t>(planes));
    std::vector<std::vector<double>> var_r(static_cast<std::size_t>(planes));
    for (int p = 0; p < planes; ++p) {
        local_moments(real_noise.ptr() + p * plane, h, w, cfg.window,
                      mu_r[static_cast<std::size_t>(p)], var_r[static_cast<std::size_t>(p)]);
    }

    double total = 0.0;
    std::vector<double> mu_g, var_g;
    for (int k = 0; k < cfg.samples_per_image; ++k) {
        const TensorF gen = generator(k);
        check_same_shape(clean, gen, "akld generated");
        double acc = 0.0;
        for (int p = 0; p < planes; ++p) {
            // generated noise plane
            std::vector<float> gnoise(static_cast<std::size_t>(plane));
            const float* gp = gen.ptr() + p * plane;
            const float* cp = clean.ptr() + p * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
                gnoise[static_cast<std::size_t>(i)] = gp[i] - cp[i];
            }
            local_moments(gnoise.data(), h, w, cfg.window, mu_g, var_g);
            const auto& mr = mu_r[static_cast<std::size_t>(p)];
            const auto& vr = var_r[static_cast<std::size_t>(p)];
            for (std::int64_t i = 0; i < plane; ++i) {
                const double sr2 = std::max(vr[static_cast<std::size_t>(i)], cfg.variance_floor);
                const double sg2 = std::max(var_g[static_cast<std::size_t>(i)], cfg.variance_floor);
                const double dmu = mr[static_cast<std::size_t>(i)] - mu_g[static_cast<std::size_t>(i)];
                acc += 0.5 * std::log(sg2 / sr2) + (sr2 + dmu * dmu) / (2.0 * sg2) - 0.5;
            }
        }
        total += acc / (static_cast<double>(planes) * plane);
    }
    return total / cfg.samples_per_image;
}

double psnr(const TensorF& a, const TensorF& b, double peak) {
    check_same_shape(a, b, "psnr");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    const double scaled = mse / (peak * peak);
    if (scaled < 1e-12) return 99.0;
    return -10.0 * std::log10(scaled);
}

std::vector<std::pair<double, double>> noise_std_curve(const TensorF& clean,
                                                       const TensorF& noisy, int bins) {
    check_same_shape(clean, noisy, "noise_std_curve");
    if (bins < 2) throw ValidationError("noise_std_curve: bins must be >= 2");
    std::vector<double> sum(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> sq(static_cast<std::size_t>(bins), 0.0);
    std::vector<std::int64_t> cnt(static_cast<std::size_t>(bins), 0);
    for (std::size_t i = 0; i < clean.data.size(); ++i) {
        const double c = std::clamp(static_cast<double>(clean.data[i]), 0.0, 1.0);
        int b = static_cast<int>(c * bins);
        if (b == bins) b = bins - 1;
        const double n = static_cast<double>(noisy.data[i]) - clean.data[i];
        sum[static_cast<std::size_t>(b)] += n;
        sq[static_cast<std::size_t>(b)] += n * n;
        cnt[static_cast<std::size_t>(b)] += 1;
    }
    std::vector<std::pair<double, double>> out;
    for (int b = 0; b < bins; ++b) {
        if (cnt[static_cast<std::size_t>(b)] == 0) continue;
        const double n = static_cast<double>(cnt[static_cast<std::size_t>(b)]);
        const double m = sum[static_cast<std::size_t>(b)] / n;
        const double v = std::max(sq[static_cast<std::size_t>(b)] / n - m * m, 0.0);
        out.emplace_back((b + 0.5) / bins, std::sqrt(v));
    }
    return out;
}

std::vector<double> spatial_autocorr(const TensorF& noise,
                                     std::span<const std::pair<int, int>> lags) {
    const int h = noise.shape.h, w = noise.shape.w;
    for (const auto& [dy, dx] : lags) {
        if (std::abs(dy) >= h || std::abs(dx) >= w) {
            throw ValidationError("spatial_autocorr: lag (" + std::to_string(dy) + "," +
                                  std::to_string(dx) + ") outside image extents");
        }
    }
    std::vector<double> out;
    out.reserve(lags.size());
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    for (const auto& [dy, dx] : lags) {
        double acc = 0.0;
        int used = 0;
        for (int p = 0; p < noise.shape.n * noise.shape.c; ++p) {
            const float* pl = noise.ptr() + p * plane;
            double s = 0.0;
            for (std::int64_t i = 0; i < plane; ++i) s += pl[i];
            const double mean = s / static_cast<double>(plane);
            double var = 0.0;
            for (std::int64_t i = 0; i < plane; ++i) {
                const double d = pl[i] - mean;
                var += d * d;
            }
            var /= static_cast<double>(plane);
            if (var <= 0.0) continue;
            double cov = 0.0;
            std::int64_t cnt = 0;
            const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
            const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    cov += (pl[static_cast<std::size_t>(y) * w + x] - mean) *
                           (pl[static_cast<std::size_t>(y + dy) * w + (x + dx)] - mean);
                    ++cnt;
                }
            }
            acc += cov / (static_cast<double>(cnt) * var);
            ++used;
        }
        out.push_back(used == 0 ? 0.0 : acc / used);
    }
    return out;
}

double histogram_kl(const TensorF& a, const TensorF& b, int bins, double lo, double hi) {
    if (bins < 2) throw ValidationError("histogram_kl: bins must be >= 2");
    if (!(hi > lo)) throw ValidationError("histogram_kl: degenerate range");
    const double eps = 1e-8;
    auto hist = [&](const TensorF& t) {
        std::vector<double> h(static_cast<std::size_t>(bins), eps);
        for (float v : t.data) {
            const double u = (static_cast<double>(v) - lo) / (hi - lo);
            int bin = static_cast<int>(u * bins);
            bin = std::clamp(bin, 0, bins - 1);
            h[static_cast<std::size_t>(bin)] += 1.0;
        }
        double total = 0.0;
        for (double v : h) total += v;
        for (double& v : h) v /= total;
        return h;
    };
    const std::vector<double> pa = hist(a), pb = hist(b);
    double kl = 0.0;
    for (int i = 0; i < bins; ++i) {
        kl += pa[static_cast<std::size_t>(i)] *
              std::log(pa[static_cast<std::size_t>(i)] / pb[static_cast<std::size_t>(i)]);
    }
    return std::max(kl, 0.0);
}

}  // namespace ng
