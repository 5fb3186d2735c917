// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>

#include "vidcus/rng.hpp"
#include "vidcus/tensor.hpp"

namespace vidcus::flow {

// Linear path between noise x0 and data x1:
//   xt = t*x1 + (1-t)*x0,   v = x1 - x0.
struct FlowPair {
  Video x0;
  Video x1;
  Video xt;
  Video v;
  double t = 0.0;
};

// Draws x0 ~ N(0, I) and builds the pair.
FlowPair make_training_pair(const Video& x1, double t, Rng& rng);
FlowPair make_training_pair(const Video& x1, const Video& x0, double t);

// Mean squared error over all elements.
double fm_loss(std::span<const float> pred, std::span<const float> target);
double fm_loss(const Video& pred, const Video& target);

using VelocityField = std::function<Video(const Video& x, double t)>;

// Forward Euler on the uniform grid t_k = k/steps, k = 0..steps-1.
Video euler_sample(const VelocityField& model, Video x0, int steps);
// Same, starting from x0 ~ N(0, I) of the given shape.
Video euler_sample(const VelocityField& model, int frames, int height, int width, int channels, int steps,
                   Rng& rng);

Video standard_normal(int frames, int height, int width, int channels, Rng& rng);

}  // namespace vidcus::flow
