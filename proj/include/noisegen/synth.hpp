#pragma once

// Procedural clean patches: smooth gradients, soft blobs and an occasional
// hard edge, spanning dark-to-bright intensities so signal-dependent noise is
// observable.

#include "noisegen/camera.hpp"
#include "noisegen/rng.hpp"
#include "noisegen/tensor.hpp"

namespace ng {

TensorF synth_clean_patch(Rng& rng, int h, int w);

// low / normal / high from the mean intensity.
BrightnessMode brightness_of(const TensorF& img);

}  // namespace ng
