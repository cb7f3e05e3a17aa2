#include "noisegen/synth.hpp"

#include <algorithm>
#include <cmath>

namespace ng {

TensorF synth_clean_patch(Rng& rng, int h, int w) {
    TensorF img(Shape{1, 3, h, w});
    const double base[3] = {rng.uniform(0.15, 0.8), rng.uniform(0.15, 0.8),
                            rng.uniform(0.15, 0.8)};
    const double gx = rng.uniform(-1.0, 1.0), gy = rng.uniform(-1.0, 1.0);
    const double gamp = rng.uniform(0.0, 0.45);
    const double wfx = rng.uniform(0.5, 2.5) * 2.0 * M_PI / w;
    const double wfy = rng.uniform(0.5, 2.5) * 2.0 * M_PI / h;
    const double wphase = rng.uniform(0.0, 2.0 * M_PI);
    const double wamp[3] = {rng.uniform(0.0, 0.12), rng.uniform(0.0, 0.12),
                            rng.uniform(0.0, 0.12)};
    const int blobs = rng.uniform_int(1, 3);
    double bx[3], by[3], br[3], bd[3];
    for (int i = 0; i < blobs; ++i) {
        bx[i] = rng.uniform(0.0, w);
        by[i] = rng.uniform(0.0, h);
        br[i] = rng.uniform(0.15, 0.45) * std::min(h, w);
        bd[i] = rng.uniform(-0.3, 0.3);
    }
    const bool edge = rng.uniform() < 0.5;
    const double ex = rng.uniform(0.2, 0.8) * w, ey = rng.uniform(0.2, 0.8) * h;
    const double ea = rng.uniform(0.0, M_PI);
    const double edelta = rng.uniform(-0.25, 0.25);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double shared = gamp * (gx * x / w + gy * y / h);
            const double wave = std::sin(wfx * x + wfy * y + wphase);
            double blob = 0.0;
            for (int i = 0; i < blobs; ++i) {
                const double dx = x - bx[i], dy = y - by[i];
                blob += bd[i] * std::exp(-(dx * dx + dy * dy) / (2.0 * br[i] * br[i]));
            }
            const double step =
                (edge && (x - ex) * std::cos(ea) + (y - ey) * std::sin(ea) > 0.0) ? edelta : 0.0;
            for (int c = 0; c < 3; ++c) {
                const double v = base[c] + shared + wamp[c] * wave + blob + step;
                img.at(0, c, y, x) = static_cast<float>(std::clamp(v, 0.02, 0.98));
            }
        }
    }
    return img;
}

BrightnessMode brightness_of(const TensorF& img) {
    double sum = 0.0;
    for (float v : img.data) sum += v;
    const double mean = sum / static_cast<double>(img.data.size());
    if (mean < 0.35) return BrightnessMode::low;
    if (mean > 0.65) return BrightnessMode::high;
    return BrightnessMode::normal;
}

}  // namespace ng
