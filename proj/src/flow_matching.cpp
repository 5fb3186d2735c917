// Copyright 2026 The vidcus Authors
// SPDX-License-Identifier: Apache-2.0

#include "vidcus/flow_matching.hpp"

#include <cmath>
#include <string>

namespace vidcus::flow {

Video standard_normal(int frames, int height, int width, int channels, Rng& rng) {
  Video v(frames, height, width, channels);
  for (auto& x : v.data) x = static_cast<float>(rng.normal());
  return v;
}

FlowPair make_training_pair(const Video& x1, const Video& x0, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("flow pair needs t in [0, 1], got " + std::to_string(t));
  if (!x1.same_shape(x0)) throw ShapeError("x0 and x1 shapes differ");
  FlowPair p;
  p.t = t;
  p.x0 = x0;
  p.x1 = x1;
  p.xt = x1;
  p.v = x1;
  for (std::size_t i = 0; i < x1.size(); ++i) {
    p.xt.data[i] = static_cast<float>(t * x1.data[i] + (1.0 - t) * x0.data[i]);
    p.v.data[i] = x1.data[i] - x0.data[i];
  }
  return p;
}

FlowPair make_training_pair(const Video& x1, double t, Rng& rng) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("flow pair needs t in [0, 1], got " + std::to_string(t));
  return make_training_pair(x1, standard_normal(x1.frames, x1.height, x1.width, x1.channels, rng), t);
}

double fm_loss(std::span<const float> pred, std::span<const float> target) {
  if (pred.size() != target.size()) throw ShapeError("fm_loss: prediction and target sizes differ");
  if (pred.empty()) throw ShapeError("fm_loss: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

double fm_loss(const Video& pred, const Video& target) {
  if (!pred.same_shape(target)) throw ShapeError("fm_loss: " + pred.shape_string() + " vs " + target.shape_string());
  return fm_loss(std::span<const float>(pred.data), std::span<const float>(target.data));
}

Video euler_sample(const VelocityField& model, Video x, int steps) {
  if (steps < 1) throw InvalidArgument("euler_sample needs steps >= 1");
  const double dt = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    const Video v = model(x, k * dt);
    if (!v.same_shape(x)) throw ShapeError("velocity shape differs from state at step " + std::to_string(k));
    for (std::size_t i = 0; i < x.size(); ++i) {
      x.data[i] = static_cast<float>(x.data[i] + dt * v.data[i]);
      if (!std::isfinite(x.data[i])) throw NumericError("non-finite state during Euler step " + std::to_string(k));
    }
  }
  return x;
}

Video euler_sample(const VelocityField& model, int frames, int height, int width, int channels, int steps,
                   Rng& rng) {
  return euler_sample(model, standard_normal(frames, height, width, channels, rng), steps);
}

}  // namespace vidcus::flow
